//! Multistart pattern search over rectangle, parallelogram and triangle
//! tests, and threshold scans over one-parameter state families.
//!
//! The search vector is `(θ, x0, x1, y0, y1, r, φ)`. Each start runs a
//! Hooke–Jeeves pattern search inside the box given by the config axes; the
//! starts are the best grid point, a seed placed from the sign structure of
//! the Wigner function, and seeded random points. Starts run in parallel and
//! the winner is chosen in start order, so results do not depend on the
//! thread count.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::states::StateSpec;
use crate::witness::{
    eval_j, eval_j_prime, j_prime_value, j_value, squeeze_points, RectangleSpec, SqueezeMap, TestResult,
    TriangleSpec,
};

const DIM: usize = 7;
const SHRINK: f64 = 0.5;
const POLISH_ROUNDS: usize = 3;
const PROBE_STEPS: usize = 41;
/// Values this close to a bound are rounding noise, not detection.
pub const DETECTION_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rectangle,
    Parallelogram,
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Max,
    Min,
}

impl Objective {
    fn sign(self) -> f64 {
        match self {
            Objective::Max => 1.0,
            Objective::Min => -1.0,
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        self.sign() * a > self.sign() * b
    }
}

/// A point in the search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub theta: f64,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub r: f64,
    pub phi: f64,
}

impl TestParams {
    fn to_array(self) -> [f64; DIM] {
        [self.theta, self.x0, self.x1, self.y0, self.y1, self.r, self.phi]
    }

    fn from_array(a: [f64; DIM]) -> Self {
        Self { theta: a[0], x0: a[1], x1: a[2], y0: a[3], y1: a[4], r: a[5], phi: a[6] }
    }

    pub fn rectangle(&self) -> RectangleSpec {
        RectangleSpec { theta: self.theta, x0: self.x0, x1: self.x1, y0: self.y0, y1: self.y1 }
    }

    pub fn triangle(&self) -> TriangleSpec {
        TriangleSpec { theta: self.theta, x0: self.x0, x1: self.x1, y0: self.y0, y1: self.y1 }
    }

    pub fn squeeze(&self) -> SqueezeMap {
        SqueezeMap { r: self.r, phi: self.phi }
    }
}

/// Search configuration. Each axis bounds one search dimension and sets its
/// grid resolution; frozen axes stay at their value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub mode: Mode,
    pub objective: Objective,
    /// Frame angle. A quarter turn maps the set of tests onto itself, so
    /// `[0, π/2]` covers everything. Ignored for phase-symmetric states.
    pub theta: Axis,
    /// Shared axis for `x0, x1, y0, y1`.
    pub coords: Axis,
    /// Squeeze strength; its upper end is `r_max`. Parallelogram mode only.
    pub r: Axis,
    /// Squeeze angle. Parallelogram mode only.
    pub phi: Axis,
    /// Final pattern-search step size.
    pub tolerance: f64,
    /// Total number of starts: grid best, heuristic seed, random.
    pub multistart: usize,
    pub seed: u64,
    /// Evaluation budget per start.
    pub max_evals: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Rectangle,
            objective: Objective::Max,
            theta: Axis { min: 0.0, max: FRAC_PI_2, steps: 4 },
            coords: Axis { min: -3.0, max: 3.0, steps: 7 },
            r: Axis { min: 0.0, max: 1.5, steps: 3 },
            phi: Axis { min: 0.0, max: std::f64::consts::PI, steps: 4 },
            tolerance: 1e-10,
            multistart: 16,
            seed: 0,
            max_evals: 200_000,
        }
    }
}

impl OptimConfig {
    pub fn new(mode: Mode, objective: Objective) -> Self {
        Self { mode, objective, ..Self::default() }
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r.max = r_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for axis in [&self.theta, &self.coords, &self.r, &self.phi] {
            axis.validate()?;
        }
        if self.r.min < 0.0 {
            return Err(Error::Config(format!("squeeze axis must start at r >= 0, got {}", self.r.min)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.multistart == 0 || self.max_evals == 0 {
            return Err(Error::Config("multistart and max_evals must be positive".into()));
        }
        Ok(())
    }

    /// Axes actually searched, after freezing what the mode or state makes
    /// irrelevant.
    fn effective_axes(&self, state: &StateSpec) -> [Axis; DIM] {
        let theta = if state.is_phase_symmetric() { Axis::fixed(0.0) } else { self.theta };
        let (r, phi) = match self.mode {
            Mode::Parallelogram => (self.r, self.phi),
            _ => (Axis::fixed(0.0), Axis::fixed(0.0)),
        };
        [theta, self.coords, self.coords, self.coords, self.coords, r, phi]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartKind {
    Grid,
    Heuristic,
    Hint,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub index: usize,
    pub kind: StartKind,
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimReport {
    pub mode: Mode,
    pub objective: Objective,
    pub value: f64,
    pub params: TestParams,
    /// Full evaluation at the optimum, with per-point parities.
    pub result: TestResult,
    pub evaluations: usize,
    pub starts: Vec<StartSummary>,
}

fn objective_value(state: &StateSpec, mode: Mode, p: &[f64; DIM]) -> f64 {
    let theta = p[0];
    match mode {
        Mode::Rectangle => j_value(state, theta, &[[(p[1], p[3]), (p[1], p[4])], [(p[2], p[3]), (p[2], p[4])]]),
        Mode::Parallelogram => {
            let m = SqueezeMap { r: p[5], phi: p[6] }.matrix();
            let apply = |x: f64, y: f64| (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y);
            j_value(
                state,
                theta,
                &[[apply(p[1], p[3]), apply(p[1], p[4])], [apply(p[2], p[3]), apply(p[2], p[4])]],
            )
        }
        Mode::Triangle => j_prime_value(state, theta, &[((p[2], p[3]), 1.0), ((p[1], p[4]), 1.0), ((p[2], p[4]), -1.0)]),
    }
}

/// Evaluate the functional at explicit parameters.
pub fn evaluate(state: &StateSpec, mode: Mode, params: &TestParams) -> Result<TestResult> {
    match mode {
        Mode::Rectangle => eval_j(state, &squeeze_points(&params.rectangle(), &SqueezeMap::identity())?),
        Mode::Parallelogram => eval_j(state, &squeeze_points(&params.rectangle(), &params.squeeze())?),
        Mode::Triangle => eval_j_prime(state, &params.triangle()),
    }
}

struct Search<'a> {
    state: &'a StateSpec,
    mode: Mode,
    sign: f64,
    axes: [Axis; DIM],
    tolerance: f64,
    max_evals: usize,
}

impl Search<'_> {
    /// Cost to minimize.
    fn cost(&self, p: &[f64; DIM]) -> f64 {
        let v = -self.sign * objective_value(self.state, self.mode, p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn clamp(&self, p: &mut [f64; DIM]) {
        for (v, a) in p.iter_mut().zip(&self.axes) {
            *v = a.clamp(*v);
        }
    }

    fn explore(&self, base: [f64; DIM], f_base: f64, steps: &[f64; DIM], evals: &mut usize) -> ([f64; DIM], f64) {
        let mut x = base;
        let mut fx = f_base;
        for i in 0..DIM {
            if steps[i] == 0.0 {
                continue;
            }
            for dir in [1.0, -1.0] {
                let mut trial = x;
                trial[i] = self.axes[i].clamp(x[i] + dir * steps[i]);
                if trial[i] == x[i] {
                    continue;
                }
                *evals += 1;
                let ft = self.cost(&trial);
                if ft < fx {
                    x = trial;
                    fx = ft;
                    break;
                }
            }
        }
        (x, fx)
    }

    fn initial_steps(&self) -> [f64; DIM] {
        let mut steps = [0.0; DIM];
        for (s, a) in steps.iter_mut().zip(&self.axes) {
            *s = if a.is_frozen() { 0.0 } else { 0.1 * a.width() };
        }
        steps
    }

    /// Hooke–Jeeves from `start`, restarted from the result with fresh
    /// steps until a round brings no improvement.
    fn run(&self, start: [f64; DIM]) -> ([f64; DIM], f64, usize) {
        let mut evals = 1;
        let mut best = start;
        self.clamp(&mut best);
        let mut f_best = self.cost(&best);
        for _ in 0..POLISH_ROUNDS {
            let before = f_best;
            let (x, fx) = self.hooke_jeeves(best, f_best, &mut evals);
            best = x;
            f_best = fx;
            if before - f_best <= self.tolerance || evals >= self.max_evals {
                break;
            }
        }
        (best, f_best, evals)
    }

    fn hooke_jeeves(&self, start: [f64; DIM], f_start: f64, evals: &mut usize) -> ([f64; DIM], f64) {
        let mut steps = self.initial_steps();
        let mut base = start;
        let mut f_base = f_start;
        while steps.iter().cloned().fold(0.0, f64::max) >= self.tolerance && *evals < self.max_evals {
            let (mut x, mut fx) = self.explore(base, f_base, &steps, evals);
            if fx < f_base {
                loop {
                    let mut pattern = [0.0; DIM];
                    for i in 0..DIM {
                        pattern[i] = 2.0 * x[i] - base[i];
                    }
                    self.clamp(&mut pattern);
                    base = x;
                    f_base = fx;
                    *evals += 1;
                    let fp = self.cost(&pattern);
                    let (xp, fxp) = self.explore(pattern, fp, &steps, evals);
                    if fxp < f_base && *evals < self.max_evals {
                        x = xp;
                        fx = fxp;
                    } else {
                        break;
                    }
                }
            } else {
                for s in steps.iter_mut() {
                    *s *= SHRINK;
                }
            }
        }
        (base, f_base)
    }

    fn grid_best(&self) -> [f64; DIM] {
        let values: Vec<Vec<f64>> = self.axes.iter().map(|a| if a.is_frozen() { vec![a.min] } else { a.values() }).collect();
        let total: usize = values.iter().map(Vec::len).product();
        let point = |mut idx: usize| {
            let mut p = [0.0; DIM];
            for (d, vals) in values.iter().enumerate() {
                p[d] = vals[idx % vals.len()];
                idx /= vals.len();
            }
            p
        };
        let (best, _) = (0..total)
            .into_par_iter()
            .map(|i| (i, self.cost(&point(i))))
            .reduce(|| (usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
        point(if best == usize::MAX { 0 } else { best })
    }

    /// Put the negative vertex where the signed Wigner function is smallest
    /// and the positive vertices where the remaining sum is largest, on a
    /// probe grid in the `θ = 0` frame. Without negativity, a degenerate
    /// rectangle sits on the maximum.
    fn heuristic_seed(&self) -> [f64; DIM] {
        let coords = &self.axes[1];
        let xs = if coords.is_frozen() { vec![coords.min] } else { Axis { steps: PROBE_STEPS, ..*coords }.values() };
        let n = xs.len();
        let h: Vec<f64> = (0..n * n).map(|i| self.sign * self.state.parity_frame(xs[i / n], xs[i % n], 0.0)).collect();
        let at = |i: usize, j: usize| h[i * n + j];
        let (mut ni, mut nj) = (0, 0);
        let (mut mi, mut mj) = (0, 0);
        for i in 0..n {
            for j in 0..n {
                if at(i, j) < at(ni, nj) {
                    (ni, nj) = (i, j);
                }
                if at(i, j) > at(mi, mj) {
                    (mi, mj) = (i, j);
                }
            }
        }
        let mut p = [0.0; DIM];
        if at(ni, nj) >= 0.0 {
            let (x, y) = (xs[mi], xs[mj]);
            p[1..5].copy_from_slice(&[x, x, y, y]);
        } else {
            let (x1, y1) = (xs[ni], xs[nj]);
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for i in 0..n {
                for j in 0..n {
                    let s = match self.mode {
                        Mode::Triangle => at(ni, j) + at(i, nj),
                        _ => at(i, j) + at(ni, j) + at(i, nj),
                    };
                    if s > best.0 {
                        best = (s, i, j);
                    }
                }
            }
            p[1..5].copy_from_slice(&[xs[best.1], x1, xs[best.2], y1]);
        }
        p[0] = self.axes[0].min;
        p[5] = self.axes[5].min;
        p[6] = self.axes[6].min;
        p
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> [f64; DIM] {
        let mut p = [0.0; DIM];
        for (d, a) in self.axes.iter().enumerate() {
            p[d] = if a.is_frozen() {
                a.min
            } else if (1..5).contains(&d) {
                // optima often sit far inside the box, so sample magnitudes log-uniformly
                let top = a.min.abs().max(a.max.abs()).max(1e-3);
                let mag = (rng.random_range(1e-3f64.ln()..=top.ln())).exp();
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                a.clamp(sign * mag)
            } else {
                rng.random_range(a.min..=a.max)
            };
        }
        p
    }
}

/// Optimize the configured functional for `state`.
pub fn optimize(state: &StateSpec, config: &OptimConfig) -> Result<OptimReport> {
    optimize_with_hints(state, config, &[])
}

/// As [`optimize`], with extra starting points tried after the grid and
/// heuristic starts (used by scans to warm-start from a neighbour).
pub fn optimize_with_hints(state: &StateSpec, config: &OptimConfig, hints: &[TestParams]) -> Result<OptimReport> {
    config.validate()?;
    state.validate()?;
    let search = Search {
        state,
        mode: config.mode,
        sign: config.objective.sign(),
        axes: config.effective_axes(state),
        tolerance: config.tolerance,
        max_evals: config.max_evals,
    };

    let mut starts: Vec<(StartKind, [f64; DIM])> = vec![(StartKind::Grid, search.grid_best())];
    if config.multistart > 1 {
        starts.push((StartKind::Heuristic, search.heuristic_seed()));
    }
    starts.extend(hints.iter().map(|h| (StartKind::Hint, h.to_array())));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    while starts.len() < config.multistart + hints.len() {
        starts.push((StartKind::Random, search.random_start(&mut rng)));
    }

    let runs: Vec<([f64; DIM], f64, usize)> = starts.par_iter().map(|(_, p)| search.run(*p)).collect();
    let mut best_idx = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 < runs[best_idx].1 {
            best_idx = i;
        }
    }
    let (p, cost, _) = runs[best_idx];
    if !cost.is_finite() {
        return Err(Error::Numeric("optimizer found no finite objective value".into()));
    }
    let params = TestParams::from_array(p);
    let result = evaluate(state, config.mode, &params)?;
    let starts: Vec<StartSummary> = starts
        .iter()
        .zip(&runs)
        .enumerate()
        .map(|(index, ((kind, _), run))| StartSummary { index, kind: *kind, value: -search.sign * run.1, evaluations: run.2 })
        .collect();
    Ok(OptimReport {
        mode: config.mode,
        objective: config.objective,
        value: result.value,
        params,
        result,
        evaluations: starts.iter().map(|s| s.evaluations).sum(),
        starts,
    })
}

/// One sampled point of a threshold scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub param: f64,
    pub value: f64,
    pub detected: bool,
}

/// A bracketed crossing of the bound, refined by bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub param: f64,
    pub lower: f64,
    pub upper: f64,
    /// Whether detection holds below the crossing.
    pub detected_below: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub bound: f64,
    pub objective: Objective,
    pub points: Vec<ScanPoint>,
    /// Empty when the bound is never crossed on the scanned range.
    pub crossings: Vec<Crossing>,
}

/// Scan a one-parameter family of states, recording the optimized value at
/// every grid parameter and bisecting each change of the detection verdict
/// down to `param_tolerance`.
///
/// Detection means the optimum lies beyond `bound` by more than
/// [`DETECTION_MARGIN`] in the objective's direction (above for `Max`, below for `Min`).
pub fn threshold_scan<F>(
    family: F,
    param: Axis,
    bound: f64,
    param_tolerance: f64,
    config: &OptimConfig,
) -> Result<ScanReport>
where
    F: Fn(f64) -> Result<StateSpec>,
{
    param.validate()?;
    if !(param_tolerance.is_finite() && param_tolerance > 0.0) {
        return Err(Error::Config(format!("parameter tolerance must be positive, got {param_tolerance}")));
    }
    let detect = |v: f64| config.objective.better(v, bound + config.objective.sign() * DETECTION_MARGIN);
    let mut points = Vec::with_capacity(param.steps);
    let mut optima: Vec<TestParams> = Vec::with_capacity(param.steps);
    for &t in &param.values() {
        let hints: Vec<TestParams> = optima.last().copied().into_iter().collect();
        let rep = optimize_with_hints(&family(t)?, config, &hints)?;
        log::debug!("scan param {t:.6}: value {:.8}", rep.value);
        points.push(ScanPoint { param: t, value: rep.value, detected: detect(rep.value) });
        optima.push(rep.params);
    }
    let mut crossings = Vec::new();
    for i in 1..points.len() {
        if points[i - 1].detected == points[i].detected {
            continue;
        }
        let (mut lo, mut hi) = (points[i - 1].param, points[i].param);
        let lo_detected = points[i - 1].detected;
        let mut hints = vec![optima[i - 1], optima[i]];
        while hi - lo > param_tolerance {
            let mid = 0.5 * (lo + hi);
            let rep = optimize_with_hints(&family(mid)?, config, &hints)?;
            hints.push(rep.params);
            if detect(rep.value) == lo_detected {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        crossings.push(Crossing { param: 0.5 * (lo + hi), lower: lo, upper: hi, detected_below: lo_detected });
    }
    Ok(ScanReport { bound, objective: config.objective, points, crossings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::GAUSSIAN_BOUND;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_rectangle_max_is_two() {
        let rep = optimize(&StateSpec::vacuum(), &OptimConfig::default()).unwrap();
        assert_abs_diff_eq!(rep.value, 2.0, epsilon = 1e-9);
        assert!(rep.value <= 2.0 + 1e-12);
        assert_eq!(rep.starts.len(), 16);
    }

    #[test]
    fn fock_one_rectangle_minimum() {
        let cfg = OptimConfig::new(Mode::Rectangle, Objective::Min);
        let rep = optimize(&StateSpec::fock(1), &cfg).unwrap();
        // all four vertices collapse onto the origin, where the parity is -1
        assert_abs_diff_eq!(rep.value, -2.0, epsilon = 1e-9);
    }

    #[test]
    fn fock_two_parallelogram_beats_gaussian_bound() {
        let cfg = OptimConfig::new(Mode::Parallelogram, Objective::Max);
        let rep = optimize(&StateSpec::fock(2), &cfg).unwrap();
        assert!(rep.value > GAUSSIAN_BOUND, "{}", rep.value);
        let again = evaluate(&StateSpec::fock(2), Mode::Parallelogram, &rep.params).unwrap();
        assert_eq!(again.value, rep.value);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = OptimConfig { multistart: 6, ..OptimConfig::new(Mode::Parallelogram, Objective::Max) };
        let state = StateSpec::fock_mixture(&[(0.7, 0), (0.3, 2)]).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| optimize(&state, &cfg).unwrap());
        let b = four.install(|| optimize(&state, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn scan_without_crossing_is_not_an_error() {
        let cfg = OptimConfig { multistart: 2, ..OptimConfig::default() };
        let rep = threshold_scan(
            |a| Ok(StateSpec::from(crate::states::GaussianSpec::coherent(num_complex::Complex64::new(a, 0.0)))),
            Axis::new(0.0, 1.0, 3).unwrap(),
            GAUSSIAN_BOUND,
            1e-3,
            &cfg,
        )
        .unwrap();
        assert!(rep.crossings.is_empty());
        assert!(!rep.points[0].detected);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = OptimConfig { tolerance: 0.0, ..OptimConfig::default() };
        assert!(matches!(optimize(&StateSpec::vacuum(), &cfg), Err(Error::Config(_))));
        let cfg: std::result::Result<OptimConfig, _> = serde_json::from_str(r#"{"mode": "rectangle", "bogus": 1}"#);
        assert!(cfg.is_err());
        let cfg: OptimConfig = serde_json::from_str(r#"{"mode": "parallelogram", "r": {"min": 0, "max": 3, "steps": 3}}"#).unwrap();
        assert_eq!(cfg.r.max, 3.0);
        assert_eq!(cfg.multistart, 16);
    }
}
