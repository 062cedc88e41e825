//! Point-set geometry and the CHSH-like phase-space functionals.
//!
//! The four-point functional is
//! `J = Σ_{j,k∈{0,1}} (-1)^{jk} (π/2) W(x̃_jk, ỹ_jk)`, with the minus sign on
//! vertex `(1, 1)`. Mixtures of coherent states satisfy `-1 ≤ J ≤ 2`; mixtures
//! of Gaussian states satisfy `J ≤ 8·3^{-9/8}` on any parallelogram obtained
//! from a rectangle by a squeeze map. The three-point functional
//! `J' = (π/2)[W(x1,y0) + W(x0,y1) - W(x1,y1)]` has classical bound 1 and
//! Gaussian bound 2.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::states::StateSpec;

/// Lower classical bound of `J`.
pub const CLASSICAL_LOWER: f64 = -1.0;
/// Upper classical bound of `J`.
pub const CLASSICAL_UPPER: f64 = 2.0;
/// Largest `J` reachable by a Gaussian state or Gaussian mixture,
/// `8·3^{-9/8}` (quoted as ≈ 2.32).
pub const GAUSSIAN_BOUND: f64 = 2.324_494_780_991_295_3;
/// Classical bound of the triangle functional `J'`.
pub const TRIANGLE_CLASSICAL: f64 = 1.0;
/// Gaussian bound of the triangle functional `J'`.
pub const TRIANGLE_GAUSSIAN: f64 = 2.0;
/// The Cirelson bound `2√2` of the two-party CHSH operator. Not a bound on
/// `J`, whose quantum maximum approaches 4; kept for comparison only.
pub const CIRELSON: f64 = 2.828_427_124_746_190_3;

/// Rectangle with sides along the axes of the frame rotated by `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleSpec {
    #[serde(default)]
    pub theta: f64,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl RectangleSpec {
    pub fn new(theta: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let rect = Self { theta, x0, x1, y0, y1 };
        rect.validate()?;
        Ok(rect)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("rectangle", &[self.theta, self.x0, self.x1, self.y0, self.y1])
    }

    pub fn vertex(&self, j: usize, k: usize) -> (f64, f64) {
        (if j == 0 { self.x0 } else { self.x1 }, if k == 0 { self.y0 } else { self.y1 })
    }

    pub fn area(&self) -> f64 {
        ((self.x1 - self.x0) * (self.y1 - self.y0)).abs()
    }
}

/// Phase-space image of the squeezing operator,
/// `S(r, φ) = cosh r I + sinh r cos 2φ σ_z + sinh r sin 2φ σ_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeMap {
    pub r: f64,
    #[serde(default)]
    pub phi: f64,
}

impl SqueezeMap {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        ensure_finite("squeeze map", &[r, phi])?;
        if r < 0.0 {
            return Err(Error::Validation(format!("squeeze strength must be >= 0, got {r}")));
        }
        Ok(Self { r, phi })
    }

    pub const fn identity() -> Self {
        Self { r: 0.0, phi: 0.0 }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (ch, sh) = (self.r.cosh(), self.r.sinh());
        let (s2, c2) = (2.0 * self.phi).sin_cos();
        [[ch + sh * c2, sh * s2], [sh * s2, ch - sh * c2]]
    }

    /// `S(r, φ)^{-1} = S(-r, φ)`.
    pub fn inverse_matrix(&self) -> [[f64; 2]; 2] {
        Self { r: -self.r, phi: self.phi }.matrix()
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = self.matrix();
        (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y)
    }
}

/// Four evaluation points `p_jk`, the squeeze-map image of a rectangle, in
/// the rectangle's frame. Vertex `(1, 1)` carries the minus sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSet4 {
    rectangle: RectangleSpec,
    squeeze: SqueezeMap,
    vertices: [[(f64, f64); 2]; 2],
}

impl PointSet4 {
    /// Plain rectangle test (identity squeeze).
    pub fn rectangle(rect: RectangleSpec) -> Result<Self> {
        squeeze_points(&rect, &SqueezeMap::identity())
    }

    pub fn theta(&self) -> f64 {
        self.rectangle.theta
    }

    pub fn rectangle_spec(&self) -> &RectangleSpec {
        &self.rectangle
    }

    pub fn squeeze(&self) -> &SqueezeMap {
        &self.squeeze
    }

    /// Vertex `p_jk` in the rotated frame.
    pub fn vertex(&self, j: usize, k: usize) -> (f64, f64) {
        self.vertices[j][k]
    }

    pub fn kind(&self) -> TestKind {
        if self.squeeze.r == 0.0 {
            TestKind::Rectangle
        } else {
            TestKind::Parallelogram
        }
    }

    /// Recover (rectangle, squeeze map, frame) from four parallelogram
    /// vertices given in `(q, p)` coordinates, ordered `p00, p01, p10, p11`.
    ///
    /// The linear part is split by polar decomposition into a rotation
    /// (the frame angle) and a symmetric unimodular squeeze.
    pub fn from_vertices(points: [(f64, f64); 4]) -> Result<Self> {
        let flat: Vec<f64> = points.iter().flat_map(|&(a, b)| [a, b]).collect();
        ensure_finite("vertices", &flat)?;
        let [p00, p01, p10, p11] = points;
        let u = (p10.0 - p00.0, p10.1 - p00.1);
        let v = (p01.0 - p00.0, p01.1 - p00.1);
        let scale = flat.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let gap = ((p00.0 + u.0 + v.0 - p11.0).abs()).max((p00.1 + u.1 + v.1 - p11.1).abs());
        if gap > 1e-9 * scale {
            return Err(Error::Validation(format!("points do not form a parallelogram (mismatch {gap:.3e})")));
        }
        let cross = u.0 * v.1 - u.1 * v.0;
        if cross.abs() < 1e-300 {
            return Err(Error::Validation("degenerate parallelogram; use a rectangle spec instead".into()));
        }
        let dx = cross.abs().sqrt();
        let dy = cross / dx;
        // columns u/dx and v/dy, det = 1
        let m = [[u.0 / dx, v.0 / dy], [u.1 / dx, v.1 / dy]];
        let theta = (m[1][0] - m[0][1]).atan2(m[0][0] + m[1][1]);
        let (s, c) = theta.sin_cos();
        // P = Uᵀ M with U = [[c, -s], [s, c]]
        let p = [
            [c * m[0][0] + s * m[1][0], c * m[0][1] + s * m[1][1]],
            [-s * m[0][0] + c * m[1][0], -s * m[0][1] + c * m[1][1]],
        ];
        let half_trace = (0.5 * (p[0][0] + p[1][1])).max(1.0);
        let r = half_trace.acosh();
        let phi = if r == 0.0 { 0.0 } else { 0.5 * (0.5 * (p[0][1] + p[1][0])).atan2(0.5 * (p[0][0] - p[1][1])) };
        // (x0, y0) = M^{-1} p00
        let x0 = m[1][1] * p00.0 - m[0][1] * p00.1;
        let y0 = -m[1][0] * p00.0 + m[0][0] * p00.1;
        let rect = RectangleSpec::new(theta, x0, x0 + dx, y0, y0 + dy)?;
        squeeze_points(&rect, &SqueezeMap::new(r, phi)?)
    }
}

/// Map every rectangle vertex through `S(r, φ)`; `r = 0` leaves them fixed.
pub fn squeeze_points(rect: &RectangleSpec, map: &SqueezeMap) -> Result<PointSet4> {
    rect.validate()?;
    ensure_finite("squeeze map", &[map.r, map.phi])?;
    let mut vertices = [[(0.0, 0.0); 2]; 2];
    for (j, row) in vertices.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            let (x, y) = rect.vertex(j, k);
            *v = if map.r == 0.0 { (x, y) } else { map.apply(x, y) };
        }
    }
    Ok(PointSet4 { rectangle: *rect, squeeze: *map, vertices })
}

/// Right triangle: points `(x1, y0)`, `(x0, y1)` with `+` and `(x1, y1)` with `-`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleSpec {
    #[serde(default)]
    pub theta: f64,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl TriangleSpec {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("triangle", &[self.theta, self.x0, self.x1, self.y0, self.y1])
    }

    /// The three signed points, in frame coordinates.
    pub fn points(&self) -> [((f64, f64), f64); 3] {
        [((self.x1, self.y0), 1.0), ((self.x0, self.y1), 1.0), ((self.x1, self.y1), -1.0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Rectangle,
    Parallelogram,
    Triangle,
}

/// Verdict flags. Comparisons are strict with no slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Verdicts {
    pub violates_lower_bound: bool,
    pub exceeds_classical: bool,
    pub exceeds_gaussian: bool,
}

impl Verdicts {
    pub fn classify(kind: TestKind, value: f64) -> Self {
        match kind {
            TestKind::Rectangle | TestKind::Parallelogram => Self {
                violates_lower_bound: value < CLASSICAL_LOWER,
                exceeds_classical: value > CLASSICAL_UPPER,
                exceeds_gaussian: value > GAUSSIAN_BOUND,
            },
            TestKind::Triangle => Self {
                violates_lower_bound: false,
                exceeds_classical: value > TRIANGLE_CLASSICAL,
                exceeds_gaussian: value > TRIANGLE_GAUSSIAN,
            },
        }
    }
}

/// Parity at one evaluation point, kept for audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointParity {
    pub x: f64,
    pub y: f64,
    pub sign: f64,
    pub parity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub value: f64,
    pub kind: TestKind,
    pub theta: f64,
    pub verdicts: Verdicts,
    pub parities: Vec<PointParity>,
}

#[inline]
fn sign_of(j: usize, k: usize) -> f64 {
    if j == 1 && k == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Unvalidated `J` for hot loops.
#[inline]
pub(crate) fn j_value(state: &StateSpec, theta: f64, vertices: &[[(f64, f64); 2]; 2]) -> f64 {
    let mut total = 0.0;
    for (j, row) in vertices.iter().enumerate() {
        for (k, &(x, y)) in row.iter().enumerate() {
            total += sign_of(j, k) * state.parity_frame(x, y, theta);
        }
    }
    total
}

#[inline]
pub(crate) fn j_prime_value(state: &StateSpec, theta: f64, points: &[((f64, f64), f64); 3]) -> f64 {
    points.iter().map(|&((x, y), s)| s * state.parity_frame(x, y, theta)).sum()
}

/// Rectangle or parallelogram functional `J`.
pub fn eval_j(state: &StateSpec, points: &PointSet4) -> Result<TestResult> {
    state.validate()?;
    let theta = points.theta();
    let mut parities = Vec::with_capacity(4);
    let mut value = 0.0;
    for j in 0..2 {
        for k in 0..2 {
            let (x, y) = points.vertex(j, k);
            let parity = state.parity_frame(x, y, theta);
            let sign = sign_of(j, k);
            value += sign * parity;
            parities.push(PointParity { x, y, sign, parity });
        }
    }
    let kind = points.kind();
    Ok(TestResult { value, kind, theta, verdicts: Verdicts::classify(kind, value), parities })
}

/// Triangle functional `J'`.
pub fn eval_j_prime(state: &StateSpec, tri: &TriangleSpec) -> Result<TestResult> {
    tri.validate()?;
    triangle_result(state, tri.theta, tri.points())
}

/// Triangle functional on the squeeze-map image of the three points.
pub fn eval_j_prime_squeezed(state: &StateSpec, tri: &TriangleSpec, map: &SqueezeMap) -> Result<TestResult> {
    tri.validate()?;
    ensure_finite("squeeze map", &[map.r, map.phi])?;
    let points = tri.points().map(|((x, y), s)| (map.apply(x, y), s));
    triangle_result(state, tri.theta, points)
}

fn triangle_result(state: &StateSpec, theta: f64, points: [((f64, f64), f64); 3]) -> Result<TestResult> {
    state.validate()?;
    let parities: Vec<PointParity> = points
        .iter()
        .map(|&((x, y), sign)| PointParity { x, y, sign, parity: state.parity_frame(x, y, theta) })
        .collect();
    let value = parities.iter().map(|p| p.sign * p.parity).sum();
    let kind = TestKind::Triangle;
    Ok(TestResult { value, kind, theta, verdicts: Verdicts::classify(kind, value), parities })
}

/// Non-Gaussianity witness `W' = J' - 2`; positive values certify genuine
/// quantum non-Gaussianity.
pub fn witness_prime(value: f64) -> f64 {
    value - TRIANGLE_GAUSSIAN
}

/// File-level description of an evaluation point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PointSetSpec {
    Rectangle(RectangleSpec),
    Parallelogram { rectangle: RectangleSpec, squeeze: SqueezeMap },
    /// Four `(q, p)` points ordered `p00, p01, p10, p11`; must form a parallelogram.
    Vertices { points: [[f64; 2]; 4] },
    Triangle(TriangleSpec),
}

impl PointSetSpec {
    pub fn evaluate(&self, state: &StateSpec) -> Result<TestResult> {
        match self {
            PointSetSpec::Rectangle(rect) => eval_j(state, &PointSet4::rectangle(*rect)?),
            PointSetSpec::Parallelogram { rectangle, squeeze } => {
                eval_j(state, &squeeze_points(rectangle, &SqueezeMap::new(squeeze.r, squeeze.phi)?)?)
            }
            PointSetSpec::Vertices { points } => {
                eval_j(state, &PointSet4::from_vertices(points.map(|[a, b]| (a, b)))?)
            }
            PointSetSpec::Triangle(tri) => eval_j_prime(state, tri),
        }
    }
}

/// Serialized audit form of a four-point set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSet4Record {
    pub theta: f64,
    pub rectangle: RectangleSpec,
    pub squeeze: SqueezeMap,
    pub points: Vec<PointParity>,
}

impl From<&PointSet4> for PointSet4Record {
    fn from(ps: &PointSet4) -> Self {
        let mut points = Vec::with_capacity(4);
        for j in 0..2 {
            for k in 0..2 {
                let (x, y) = ps.vertex(j, k);
                points.push(PointParity { x, y, sign: sign_of(j, k), parity: f64::NAN });
            }
        }
        Self { theta: ps.theta(), rectangle: ps.rectangle, squeeze: ps.squeeze, points }
    }
}
