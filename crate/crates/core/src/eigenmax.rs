//! Lattice construction of states with `J` close to 4.
//!
//! Superpositions of coherent states on the grid `2d(n + i m)`,
//! `|n|, |m| ≤ N`, turn the eigenvalue problem for the rectangle operator on
//! `(0, 0, d, d)` into a linear recurrence on the coefficients `C_{n,m}`.
//! Truncating the lattice gives a finite matrix whose leading eigenvector is
//! a good state; its exact value `μ_N` is then computed as a Rayleigh
//! quotient through the coherent-state overlaps.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{CoherentSuperpositionSpec, StateSpec, SuperpositionTerm};
use crate::witness::{eval_j, PointSet4, RectangleSpec};

/// Largest truncation accepted; the matrix dimension is `(2N+1)²`.
pub const MAX_N: u32 = 40;
/// Largest truncation solved with a dense eigendecomposition.
pub const DENSE_MAX_N: u32 = 20;

const HERMITIAN_TOL: f64 = 1e-12;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeProblem {
    /// Truncation, `|n|, |m| ≤ N`.
    pub n: u32,
    /// Half lattice spacing.
    pub d: f64,
}

impl LatticeProblem {
    pub fn new(n: u32, d: f64) -> Result<Self> {
        let p = Self { n, d };
        p.validate()?;
        Ok(p)
    }

    /// `d² = Rπ/2 + π/4`, the spacings for which the boundary phases line up.
    pub fn from_r(n: u32, r: u32) -> Result<Self> {
        Self::new(n, (f64::from(r) * FRAC_PI_2 + FRAC_PI_4).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Validation("lattice truncation N must be at least 1".into()));
        }
        if self.n > MAX_N {
            return Err(Error::Validation(format!("lattice truncation N = {} exceeds the limit {MAX_N}", self.n)));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::Domain(format!("lattice spacing d must be positive and finite, got {}", self.d)));
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        2 * self.n as usize + 1
    }

    pub fn dimension(&self) -> usize {
        self.side() * self.side()
    }

    pub fn d_squared(&self) -> f64 {
        self.d * self.d
    }

    /// Flat index of lattice site `(n, m)`, or `None` outside the truncation.
    pub fn index(&self, n: i64, m: i64) -> Option<usize> {
        let big = i64::from(self.n);
        if n.abs() > big || m.abs() > big {
            return None;
        }
        Some(((n + big) as usize) * self.side() + (m + big) as usize)
    }

    /// Lattice site of a flat index.
    pub fn site(&self, index: usize) -> (i64, i64) {
        let big = i64::from(self.n);
        ((index / self.side()) as i64 - big, (index % self.side()) as i64 - big)
    }

    /// Coherent amplitude `2d(n + i m)` of a site.
    pub fn amplitude(&self, n: i64, m: i64) -> Complex64 {
        Complex64::new(2.0 * self.d * n as f64, 2.0 * self.d * m as f64)
    }
}

/// Truncated recurrence matrix. Row `(n, m)` couples to `(-n, -m)` with 1,
/// `(-n+1, -m)` with `e^{-4id²m}`, `(-n, -m+1)` with `e^{4id²n}` and
/// `(-n+1, -m+1)` with `-e^{-4id²(m-n)}`; couplings leaving the lattice are
/// dropped.
pub fn build_matrix(p: &LatticeProblem) -> Result<DMatrix<Complex64>> {
    p.validate()?;
    let dim = p.dimension();
    let d2 = p.d_squared();
    let rows: Vec<Vec<(usize, Complex64)>> = (0..dim)
        .into_par_iter()
        .map(|row| {
            let (n, m) = p.site(row);
            let (nf, mf) = (n as f64, m as f64);
            [
                (-n, -m, Complex64::new(1.0, 0.0)),
                (-n + 1, -m, Complex64::from_polar(1.0, -4.0 * d2 * mf)),
                (-n, -m + 1, Complex64::from_polar(1.0, 4.0 * d2 * nf)),
                (-n + 1, -m + 1, -Complex64::from_polar(1.0, -4.0 * d2 * (mf - nf))),
            ]
            .into_iter()
            .filter_map(|(a, b, v)| p.index(a, b).map(|col| (col, v)))
            .collect()
        })
        .collect();
    let mut mat = DMatrix::zeros(dim, dim);
    for (row, entries) in rows.into_iter().enumerate() {
        for (col, v) in entries {
            mat[(row, col)] += v;
        }
    }
    Ok(mat)
}

/// Lattice superposition `Σ C_{n,m} |2d(n + i m)⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    pub problem: LatticeProblem,
    /// Coefficients in flat index order.
    pub coeffs: Vec<Complex64>,
}

impl LatticeState {
    pub fn new(problem: LatticeProblem, coeffs: Vec<Complex64>) -> Result<Self> {
        problem.validate()?;
        if coeffs.len() != problem.dimension() {
            return Err(Error::Validation(format!(
                "expected {} lattice coefficients, got {}",
                problem.dimension(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("lattice coefficients must be finite".into()));
        }
        if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(Error::Domain("lattice state is identically zero".into()));
        }
        Ok(Self { problem, coeffs })
    }

    pub fn coefficient(&self, n: i64, m: i64) -> Option<Complex64> {
        self.problem.index(n, m).map(|i| self.coeffs[i])
    }

    /// Copy into a larger lattice with zeros on the new sites.
    pub fn embed(&self, n: u32) -> Result<Self> {
        if n < self.problem.n {
            return Err(Error::Validation(format!("cannot embed N = {} into N = {n}", self.problem.n)));
        }
        let target = LatticeProblem::new(n, self.problem.d)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); target.dimension()];
        for (i, &c) in self.coeffs.iter().enumerate() {
            let (a, b) = self.problem.site(i);
            coeffs[target.index(a, b).expect("smaller lattice fits")] = c;
        }
        Self::new(target, coeffs)
    }

    /// The normalized coherent-state superposition.
    pub fn to_superposition(&self) -> Result<CoherentSuperpositionSpec> {
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, &coefficient)| {
                let (n, m) = self.problem.site(i);
                SuperpositionTerm { coefficient, amplitude: self.problem.amplitude(n, m) }
            })
            .collect();
        CoherentSuperpositionSpec::new(terms)
    }

    pub fn to_state(&self) -> Result<StateSpec> {
        Ok(self.to_superposition()?.into())
    }

    /// The test rectangle `(x0, x1, y0, y1) = (0, d, 0, d)` at `θ = 0`.
    pub fn rectangle(&self) -> RectangleSpec {
        RectangleSpec { theta: 0.0, x0: 0.0, x1: self.problem.d, y0: 0.0, y1: self.problem.d }
    }

    /// Plain-text listing with one `n m re im` line per site.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# N = {}, d = {:.17e}", self.problem.n, self.problem.d)?;
        writeln!(w, "n m re im")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (n, m) = self.problem.site(i);
            writeln!(w, "{n} {m} {:.17e} {:.17e}", c.re, c.im)?;
        }
        Ok(())
    }
}

/// `μ_N = ⟨ψ|J|ψ⟩ / ⟨ψ|ψ⟩`, evaluated exactly through coherent overlaps.
pub fn rayleigh_j(state: &LatticeState) -> Result<f64> {
    let spec = state.to_state()?;
    Ok(eval_j(&spec, &PointSet4::rectangle(state.rectangle())?)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Hermitian,
    Schur,
    PowerIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Eigenvalue with the largest real part.
    pub lambda: Complex64,
    /// Eigenvalue of largest modulus, when the full spectrum was computed.
    pub largest_modulus: Option<Complex64>,
    pub state: LatticeState,
    /// Exact `J` of the eigenvector state.
    pub mu: f64,
    /// `|Re λ - μ|`; shrinks as `N` grows.
    pub discrepancy: f64,
    pub method: EigenMethod,
}

/// Leading eigenpair of the truncated matrix, with the exact value `μ_N` of
/// the resulting state.
pub fn max_eigen(p: &LatticeProblem) -> Result<EigenResult> {
    let mat = build_matrix(p)?;
    let (lambda, largest_modulus, vector, method) = if p.n > DENSE_MAX_N {
        let (lambda, v) = shifted_power_iteration(&mat)?;
        (lambda, None, v, EigenMethod::PowerIteration)
    } else if is_hermitian(&mat) {
        hermitian_eigen(mat)?
    } else {
        schur_eigen(mat)?
    };
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Numeric(format!("non-finite leading eigenvalue {lambda} for N = {}", p.n)));
    }
    let state = LatticeState::new(*p, vector.iter().copied().collect())?;
    let mu = rayleigh_j(&state)?;
    Ok(EigenResult { lambda, largest_modulus, state, mu, discrepancy: (lambda.re - mu).abs(), method })
}

fn is_hermitian(mat: &DMatrix<Complex64>) -> bool {
    let n = mat.nrows();
    (0..n).all(|i| (i..n).all(|j| (mat[(i, j)] - mat[(j, i)].conj()).norm() <= HERMITIAN_TOL))
}

type Eigenpair = (Complex64, Option<Complex64>, DVector<Complex64>, EigenMethod);

fn hermitian_eigen(mat: DMatrix<Complex64>) -> Result<Eigenpair> {
    let eig = nalgebra::SymmetricEigen::try_new(mat, 1e-14, 0)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    let (imax, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let largest = eig.eigenvalues.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    let vector = eig.eigenvectors.column(imax).into_owned();
    Ok((Complex64::new(lambda, 0.0), Some(Complex64::new(largest, 0.0)), vector, EigenMethod::Hermitian))
}

fn schur_eigen(mat: DMatrix<Complex64>) -> Result<Eigenpair> {
    let norm = mat.norm();
    let schur = nalgebra::Schur::try_new(mat.clone(), 1e-14, 0)
        .ok_or_else(|| Error::Numeric(format!("Schur decomposition did not converge (Frobenius norm {norm:.3e})")))?;
    let values = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numeric(format!("Schur form not triangular (Frobenius norm {norm:.3e})")))?;
    let lambda = values.iter().copied().fold(Complex64::new(f64::NEG_INFINITY, 0.0), |a, v| if v.re > a.re { v } else { a });
    let largest = values.iter().copied().fold(Complex64::new(0.0, 0.0), |a, v| if v.norm() > a.norm() { v } else { a });
    let vector = inverse_iteration(&mat, lambda)?;
    Ok((lambda, Some(largest), vector, EigenMethod::Schur))
}

/// Eigenvector for a known eigenvalue by a few LU-backed inverse iterations.
fn inverse_iteration(mat: &DMatrix<Complex64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = mat.nrows();
    let shift = lambda + Complex64::new(1e-10 * (1.0 + lambda.norm()), 0.0);
    let shifted = mat - DMatrix::from_diagonal_element(n, n, shift);
    let lu = shifted.lu();
    let mut v = DVector::from_element(n, Complex64::new(1.0, 0.3) / (n as f64).sqrt());
    for _ in 0..8 {
        let next = lu
            .solve(&v)
            .ok_or_else(|| Error::Numeric(format!("singular shifted matrix in inverse iteration at λ = {lambda}")))?;
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Numeric(format!("inverse iteration diverged at λ = {lambda}")));
        }
        v = next / Complex64::new(norm, 0.0);
    }
    Ok(v)
}

/// Power iteration on `A + 4I`, which singles out the eigenvalue with the
/// largest real part when the spectrum lies in the disc of radius 4.
fn shifted_power_iteration(mat: &DMatrix<Complex64>) -> Result<(Complex64, DVector<Complex64>)> {
    let n = mat.nrows();
    let shift = Complex64::new(4.0, 0.0);
    let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0) / (n as f64).sqrt());
    let mut lambda = Complex64::new(0.0, 0.0);
    for _ in 0..POWER_MAX_ITER {
        let w = mat * &v + &v * shift;
        let next_lambda = v.dotc(&w) - shift;
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Numeric("power iteration collapsed".into()));
        }
        v = w / Complex64::new(norm, 0.0);
        if (next_lambda - lambda).norm() < POWER_TOL * (1.0 + next_lambda.norm()) {
            return Ok((next_lambda, v));
        }
        lambda = next_lambda;
    }
    Err(Error::Numeric(format!(
        "power iteration did not converge in {POWER_MAX_ITER} steps (last estimate {lambda}, dimension {n})"
    )))
}

/// Row of the `N` scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NScanRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub d_squared: f64,
    #[serde(rename = "lambda_N")]
    pub lambda_n: f64,
    #[serde(rename = "mu_N")]
    pub mu_n: f64,
}

/// Solve `N = 1..=n_max` at fixed spacing; problems run concurrently.
pub fn n_scan(n_max: u32, d: f64) -> Result<Vec<NScanRow>> {
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let p = LatticeProblem::new(n, d)?;
            let res = max_eigen(&p)?;
            Ok(NScanRow { n, d_squared: p.d_squared(), lambda_n: res.lambda.re, mu_n: res.mu })
        })
        .collect()
}
