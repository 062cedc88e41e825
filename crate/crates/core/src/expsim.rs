//! Simulation and analysis of the trapped-ion parity measurement.
//!
//! After a displacement, the phonon populations `Q_n` are read out from the
//! blue-sideband signal
//! `P↑(t) = ½ Σ_n Q_n (1 - A_b e^{-λ_b t} cos(√(n+1) ηΩ t))`.
//! This module synthesizes that signal with binomial shot noise, fits `Q_n`
//! back by constrained least squares, and propagates the result to parities
//! and to `J`.
//!
//! The only noise modelled is projection noise. `A_b = 1` and
//! `λ_b = 5000 s⁻¹` are illustrative defaults, not measured values.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::states::{assoc_laguerre, frame_to_qp, StateSpec};
use crate::witness::PointSet4;

/// Extra Fock levels required above the highest populated level.
pub const DEFAULT_MARGIN: u32 = 10;
/// Default fit truncation.
pub const DEFAULT_FIT_N_MAX: usize = 10;
const SUM_TOLERANCE: f64 = 1e-9;
const TAIL_WARN: f64 = 1e-6;
const CONDITION_LIMIT: f64 = 1e10;

/// Phonon populations `Q_0 ..= Q_{n_max}`. Mass beyond `n_max` is allowed
/// and shows up as [`PhononDistribution::tail`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhononDistribution {
    pub q: Vec<f64>,
}

impl PhononDistribution {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        ensure_finite("populations", &q)?;
        if q.is_empty() {
            return Err(Error::Validation("empty phonon distribution".into()));
        }
        if let Some(v) = q.iter().find(|&&v| v < 0.0) {
            return Err(Error::Validation(format!("populations must be >= 0, got {v}")));
        }
        let total: f64 = q.iter().sum();
        if total > 1.0 + SUM_TOLERANCE {
            return Err(Error::Validation(format!("populations sum to {total} > 1")));
        }
        Ok(Self { q })
    }

    pub fn n_max(&self) -> usize {
        self.q.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Missing probability mass, `1 - Σ Q_n`.
    pub fn tail(&self) -> f64 {
        1.0 - self.total()
    }

    /// `Σ (-1)^n Q_n`.
    pub fn parity(&self) -> f64 {
        self.q.iter().enumerate().map(|(n, q)| if n % 2 == 0 { *q } else { -q }).sum()
    }
}

/// `|⟨n|D(α)|m⟩|²` with `x = |α|²`.
pub fn displaced_fock_probability(n: u32, m: u32, x: f64) -> f64 {
    let (big, small) = if n >= m { (n, m) } else { (m, n) };
    if x == 0.0 {
        return if n == m { 1.0 } else { 0.0 };
    }
    let k = big - small;
    // (small!/big!) x^k e^{-x}, in logs
    let log_ratio: f64 = (small + 1..=big).map(|j| -f64::from(j).ln()).sum();
    let l = assoc_laguerre(small, f64::from(k), x);
    (log_ratio + f64::from(k) * x.ln() - x).exp() * l * l
}

/// Fock weights of a Fock state or a mixture of Fock states.
pub fn fock_weights(state: &StateSpec) -> Result<Vec<(f64, u32)>> {
    match state {
        StateSpec::Fock(f) => Ok(vec![(1.0, f.n)]),
        StateSpec::Mixture(m) => m
            .components()
            .iter()
            .map(|c| match &c.spec {
                StateSpec::Fock(f) => Ok((c.weight, f.n)),
                _ => Err(Error::Validation("only Fock states and their mixtures have phonon distributions".into())),
            })
            .collect(),
        _ => Err(Error::Validation("only Fock states and their mixtures have phonon distributions".into())),
    }
}

/// `Q_n(α) = Σ_m w_m |⟨n|D(α)|m⟩|²` for `n ≤ n_max`.
///
/// Requires `n_max` at least `margin` above the highest populated level.
/// Logs a warning with the tail estimate when more than `1e-6` of the
/// probability falls outside.
pub fn displaced_distribution_with_margin(
    state: &StateSpec,
    alpha: Complex64,
    n_max: u32,
    margin: u32,
) -> Result<PhononDistribution> {
    state.validate()?;
    ensure_finite("displacement", &[alpha.re, alpha.im])?;
    let weights = fock_weights(state)?;
    let top = weights.iter().map(|w| w.1).max().unwrap_or(0);
    if n_max < top.saturating_add(margin) {
        return Err(Error::Validation(format!(
            "n_max = {n_max} is below the highest Fock level {top} plus margin {margin}"
        )));
    }
    let x = alpha.norm_sqr();
    let q: Vec<f64> = (0..=n_max)
        .map(|n| weights.iter().map(|&(w, m)| w * displaced_fock_probability(n, m, x)).sum())
        .collect();
    let dist = PhononDistribution { q };
    if dist.tail() > TAIL_WARN {
        log::warn!("phonon distribution truncated at n_max = {n_max}: tail mass {:.3e}", dist.tail());
    }
    Ok(dist)
}

pub fn displaced_distribution(state: &StateSpec, alpha: Complex64, n_max: u32) -> Result<PhononDistribution> {
    displaced_distribution_with_margin(state, alpha, n_max, DEFAULT_MARGIN)
}

/// Sideband signal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiModel {
    /// Base rate `ηΩ` in rad/s; `Ω_{n,n+1} = √(n+1) ηΩ`.
    pub eta_omega: f64,
    pub a_b: f64,
    /// Decay rate in 1/s.
    pub lambda_b: f64,
}

impl Default for RabiModel {
    /// `π` pulse on `|0⟩ → |1⟩` of 7.5 µs, `A_b = 1`, `λ_b = 5000 s⁻¹`.
    /// The two imperfection values are placeholders, not measured numbers.
    fn default() -> Self {
        Self { eta_omega: PI / 7.5e-6, a_b: 1.0, lambda_b: 5000.0 }
    }
}

impl RabiModel {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("Rabi model", &[self.eta_omega, self.a_b, self.lambda_b])?;
        if self.eta_omega <= 0.0 || self.lambda_b < 0.0 || !(0.0..=1.0).contains(&self.a_b) {
            return Err(Error::Validation(format!(
                "Rabi model needs eta_omega > 0, lambda_b >= 0 and 0 <= A_b <= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn rate(&self, n: usize) -> f64 {
        ((n + 1) as f64).sqrt() * self.eta_omega
    }

    /// Contribution of level `n` to `P↑(t)` per unit population.
    pub fn basis(&self, n: usize, t: f64) -> f64 {
        0.5 * (1.0 - self.a_b * (-self.lambda_b * t).exp() * (self.rate(n) * t).cos())
    }

    pub fn p_up(&self, q: &PhononDistribution, t: f64) -> f64 {
        q.q.iter().enumerate().map(|(n, qn)| qn * self.basis(n, t)).sum()
    }
}

/// Sampled sideband signal. `shots = 0` marks an ideal (noise-free) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Times in seconds.
    pub times: Vec<f64>,
    pub p_up: Vec<f64>,
    pub shots: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TimeSeriesRow {
    t_us: f64,
    p_up: f64,
    shots: u32,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, p_up: Vec<f64>, shots: Vec<u32>) -> Result<Self> {
        let ts = Self { times, p_up, shots };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.p_up.len() || self.times.len() != self.shots.len() {
            return Err(Error::Validation("time series columns differ in length".into()));
        }
        ensure_finite("times", &self.times)?;
        ensure_finite("p_up", &self.p_up)?;
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("times must be strictly increasing".into()));
        }
        if self.p_up.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Validation("p_up must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t_us, p_up, shots`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for i in 0..self.len() {
            w.serialize(TimeSeriesRow { t_us: self.times[i] * 1e6, p_up: self.p_up[i], shots: self.shots[i] })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut ts = Self { times: Vec::new(), p_up: Vec::new(), shots: Vec::new() };
        for row in r.deserialize() {
            let row: TimeSeriesRow = row?;
            ts.times.push(row.t_us * 1e-6);
            ts.p_up.push(row.p_up);
            ts.shots.push(row.shots);
        }
        ts.validate()?;
        Ok(ts)
    }
}

/// Evenly spaced times `step, 2·step, …, count·step` in seconds.
pub fn uniform_times(step: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 * step).collect()
}

/// 150 points at 1 µs spacing.
pub fn default_times() -> Vec<f64> {
    uniform_times(1e-6, 150)
}

/// Ideal signal when `shots == 0`, otherwise binomial counts over `shots`
/// repetitions at every time.
pub fn simulate_signal(
    q: &PhononDistribution,
    model: &RabiModel,
    times: &[f64],
    shots: u32,
    rng: &mut ChaCha8Rng,
) -> Result<TimeSeries> {
    model.validate()?;
    let mut p_up = Vec::with_capacity(times.len());
    for &t in times {
        let p = model.p_up(q, t).clamp(0.0, 1.0);
        p_up.push(if shots == 0 {
            p
        } else {
            let k = Binomial::new(u64::from(shots), p)
                .map_err(|e| Error::Numeric(format!("binomial sampler: {e}")))?
                .sample(rng);
            k as f64 / f64::from(shots)
        });
    }
    TimeSeries::new(times.to_vec(), p_up, vec![shots; times.len()])
}

/// Fit options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub n_max: usize,
    /// Also fit `A_b` and `λ_b` by an outer search.
    pub refine_nuisance: bool,
    /// Fitted mass below `1 - mass_tolerance` raises `mass_deficient`.
    pub mass_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { n_max: DEFAULT_FIT_N_MAX, refine_nuisance: false, mass_tolerance: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Constrained fit, `Q_n ≥ 0` and `Σ Q_n ≤ 1`.
    pub distribution: PhononDistribution,
    /// Model used for the final fit (refined when requested).
    pub model: RabiModel,
    pub residual_norm: f64,
    /// Covariance of the constrained `Q_n`; rows and columns of levels
    /// pinned at zero are zero.
    pub covariance: Vec<Vec<f64>>,
    /// Parity from the unconstrained linear least-squares fit. Unbiased, but
    /// its populations may be slightly negative.
    pub parity: f64,
    pub parity_sigma: f64,
    /// `Σ (-1)^n Q_n` of the constrained distribution. Clipping at zero
    /// biases it at low shot counts.
    pub constrained_parity: f64,
    pub constrained_parity_sigma: f64,
    /// True when the sum constraint was active.
    pub sum_constrained: bool,
    pub mass_deficient: bool,
    pub condition_number: f64,
}

impl FitReport {
    /// Plain-text summary: `Q_n` with standard errors, then diagnostics.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n Q_n sigma")?;
        for (n, q) in self.distribution.q.iter().enumerate() {
            writeln!(w, "{n} {q:.8} {:.8}", self.covariance[n][n].max(0.0).sqrt())?;
        }
        writeln!(w, "parity {:.8} {:.8}", self.parity, self.parity_sigma)?;
        writeln!(w, "constrained_parity {:.8} {:.8}", self.constrained_parity, self.constrained_parity_sigma)?;
        writeln!(w, "residual_norm {:.8e}", self.residual_norm)?;
        writeln!(w, "sum {:.8}", self.distribution.total())?;
        writeln!(w, "mass_deficient {}", self.mass_deficient)?;
        writeln!(w, "condition_number {:.3e}", self.condition_number)?;
        Ok(())
    }
}

fn design(ts: &TimeSeries, model: &RabiModel, n_max: usize) -> DMatrix<f64> {
    DMatrix::from_fn(ts.len(), n_max + 1, |i, n| model.basis(n, ts.times[i]))
}

/// Recover `Q_n` from a sideband signal: non-negative least squares, with
/// `Σ Q_n = 1` imposed whenever the unconstrained sum exceeds 1.
pub fn fit_distribution(ts: &TimeSeries, model: &RabiModel, options: &FitOptions) -> Result<FitReport> {
    ts.validate()?;
    model.validate()?;
    let cols = options.n_max + 1;
    if ts.len() < cols {
        return Err(Error::Numeric(format!(
            "{} samples cannot identify {cols} populations; lengthen the series or lower n_max",
            ts.len()
        )));
    }
    let model = if options.refine_nuisance { refine_nuisance(ts, model, options)? } else { *model };
    let x = design(ts, &model, options.n_max);
    let sv = x.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition_number > CONDITION_LIMIT {
        return Err(Error::Numeric(format!(
            "populations not identifiable: design condition number {condition_number:.3e} over {} samples",
            ts.len()
        )));
    }
    let y = DVector::from_column_slice(&ts.p_up);
    let (q, sum_constrained) = constrained_nnls(&x, &y)?;
    let resid = &y - &x * &q;
    let residual_norm = resid.norm();

    // covariance on the free set, σ̂² (X_Fᵀ X_F)^{-1}
    let free: Vec<usize> = (0..cols).filter(|&i| q[i] > 0.0).collect();
    let mut covariance = vec![vec![0.0; cols]; cols];
    let dof = ts.len().saturating_sub(free.len()).max(1);
    let sigma2 = resid.norm_squared() / dof as f64;
    if !free.is_empty() {
        let xf = DMatrix::from_fn(ts.len(), free.len(), |i, j| x[(i, free[j])]);
        if let Some(inv) = (xf.transpose() * &xf).try_inverse() {
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    covariance[i][j] = sigma2 * inv[(a, b)];
                }
            }
        }
    }
    let signs = DVector::from_fn(cols, |n, _| if n % 2 == 0 { 1.0 } else { -1.0 });
    let constrained_var: f64 =
        (0..cols).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| signs[i] * signs[j] * covariance[i][j]).sum();

    // linear estimator: parity = sᵀ X⁺ y, variance σ̂² sᵀ (XᵀX)^{-1} s
    let svd = x.clone().svd(true, true);
    let q_ls = svd.solve(&y, 1e-14).map_err(|e| Error::Numeric(format!("least-squares fit failed: {e}")))?;
    let resid_ls = &y - &x * &q_ls;
    let sigma2_ls = resid_ls.norm_squared() / ts.len().saturating_sub(cols).max(1) as f64;
    let xtx_inv = (x.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| Error::Numeric("normal matrix is singular".into()))?;
    let parity_var = sigma2_ls * signs.dot(&(&xtx_inv * &signs));

    let distribution = PhononDistribution { q: q.iter().map(|v| v.max(0.0)).collect() };
    Ok(FitReport {
        parity: signs.dot(&q_ls),
        parity_sigma: parity_var.max(0.0).sqrt(),
        constrained_parity: distribution.parity(),
        constrained_parity_sigma: constrained_var.max(0.0).sqrt(),
        mass_deficient: distribution.total() < 1.0 - options.mass_tolerance,
        distribution,
        model,
        residual_norm,
        covariance,
        sum_constrained,
        condition_number,
    })
}

fn constrained_nnls(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let q = nnls(x, y)?;
    if q.sum() <= 1.0 + SUM_TOLERANCE {
        return Ok((q, false));
    }
    // append a heavily weighted row enforcing Σ Q_n = 1
    let weight = 1e4 * x.norm().max(1.0);
    let (rows, cols) = x.shape();
    let xa = DMatrix::from_fn(rows + 1, cols, |i, j| if i < rows { x[(i, j)] } else { weight });
    let ya = DVector::from_fn(rows + 1, |i, _| if i < rows { y[i] } else { weight });
    let mut q = nnls(&xa, &ya)?;
    let s = q.sum();
    if s > 1.0 {
        q /= s;
    }
    Ok((q, true))
}

/// Lawson–Hanson active-set solver for `min ‖Ax - b‖` subject to `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let tol = 1e-12 * (a.transpose() * b).amax().max(1e-300);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    // candidates whose subproblem rejected them since the last accepted step
    let mut blocked = vec![false; n];
    let max_outer = 10 * n + 10;
    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n).filter(|&j| !passive[j] && !blocked[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let entering = match candidate {
            Some(j) if w[j] > tol => j,
            _ => return Ok(x),
        };
        passive[entering] = true;
        let mut first = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let ap = DMatrix::from_fn(a.nrows(), idx.len(), |i, k| a[(i, idx[k])]);
            let z = ap
                .svd(true, true)
                .solve(b, 1e-14)
                .map_err(|e| Error::Numeric(format!("least-squares subproblem failed: {e}")))?;
            if z.iter().all(|&v| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z[k];
                }
                blocked.iter_mut().for_each(|v| *v = false);
                break;
            }
            let pos = idx.iter().position(|&j| j == entering);
            if first && pos.is_some_and(|k| z[k] <= 0.0) {
                passive[entering] = false;
                blocked[entering] = true;
                break;
            }
            first = false;
            // step back to the boundary of the feasible region
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z[k] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[k]));
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z[k] - x[j]);
                if x[j] <= 1e-14 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Err(Error::Numeric(format!("NNLS did not converge in {max_outer} outer iterations")))
}

/// Pattern search over `(A_b, λ_b)` minimizing the NNLS residual.
fn refine_nuisance(ts: &TimeSeries, model: &RabiModel, options: &FitOptions) -> Result<RabiModel> {
    let y = DVector::from_column_slice(&ts.p_up);
    let cost = |a: f64, l: f64| -> Result<f64> {
        let m = RabiModel { a_b: a, lambda_b: l, ..*model };
        let x = design(ts, &m, options.n_max);
        let (q, _) = constrained_nnls(&x, &y)?;
        Ok((&y - &x * q).norm_squared())
    };
    let (mut a, mut l) = (model.a_b, model.lambda_b);
    let mut best = cost(a, l)?;
    let (mut da, mut dl) = (0.1, 0.25 * model.lambda_b.max(1000.0));
    while da > 1e-6 {
        let mut moved = false;
        for (ta, tl) in [(a + da, l), (a - da, l), (a, l + dl), (a, (l - dl).max(0.0))] {
            let ta = ta.clamp(0.0, 1.0);
            let c = cost(ta, tl)?;
            if c < best {
                best = c;
                a = ta;
                l = tl;
                moved = true;
            }
        }
        if !moved {
            da *= 0.5;
            dl *= 0.5;
        }
    }
    Ok(RabiModel { a_b: a, lambda_b: l, ..*model })
}

/// `J` with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JEstimate {
    pub value: f64,
    /// Quadrature sum of the four parity uncertainties.
    pub sigma: f64,
    /// `sigma / √repeats`.
    pub std_error: f64,
}

/// Combine four `(mean, sigma)` parity estimates ordered `p00, p01, p10, p11`
/// into `J`; the last enters with a minus sign.
pub fn estimate_j(parities: [(f64, f64); 4], repeats: usize) -> Result<JEstimate> {
    if repeats == 0 {
        return Err(Error::Validation("repeats must be positive".into()));
    }
    let flat: Vec<f64> = parities.iter().flat_map(|&(m, s)| [m, s]).collect();
    ensure_finite("parities", &flat)?;
    let value = parities[0].0 + parities[1].0 + parities[2].0 - parities[3].0;
    let sigma = parities.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
    Ok(JEstimate { value, sigma, std_error: sigma / (repeats as f64).sqrt() })
}

/// `f·J_a + (1-f)·J_b` with weighted-quadrature uncertainty.
pub fn mixture_j(a: (f64, f64), b: (f64, f64), f: f64) -> Result<(f64, f64)> {
    ensure_finite("mixture inputs", &[a.0, a.1, b.0, b.1, f])?;
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Domain(format!("mixing weight must lie in [0, 1], got {f}")));
    }
    let g = 1.0 - f;
    Ok((f * a.0 + g * b.0, ((f * a.1).powi(2) + (g * b.1).powi(2)).sqrt()))
}

/// Which parity estimate the pipeline propagates to `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityEstimator {
    /// Unconstrained least squares (unbiased).
    #[default]
    Linear,
    /// Parity of the constrained populations.
    Constrained,
}

/// Monte Carlo configuration for the full measurement pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: RabiModel,
    /// Sample times in seconds.
    pub times: Vec<f64>,
    pub shots: u32,
    pub repeats: usize,
    /// Truncation used to simulate the populations.
    pub sim_n_max: u32,
    pub fit: FitOptions,
    pub estimator: ParityEstimator,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: RabiModel::default(),
            times: default_times(),
            shots: 100,
            repeats: 10,
            sim_n_max: 30,
            fit: FitOptions::default(),
            estimator: ParityEstimator::Linear,
            seed: 0,
        }
    }
}

/// One simulated experiment: four displaced parities and the resulting `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub index: usize,
    /// `(parity, fit sigma)` at `p00, p01, p10, p11`.
    pub parities: [(f64, f64); 4],
    pub j: f64,
    pub j_fit_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    /// Exact `J` of the input state at the same points.
    pub truth: f64,
    pub repeats: Vec<RepeatResult>,
    /// Mean of the per-repeat `J`.
    pub mean: f64,
    /// Sample standard deviation of the per-repeat `J`.
    pub scatter_sigma: f64,
    /// `scatter_sigma / √repeats`.
    pub std_error: f64,
    /// Mean fit-covariance sigma of a single-repeat `J`.
    pub fit_sigma: f64,
    /// Per-point parity mean and scatter over repeats.
    pub parity_means: [(f64, f64); 4],
}

/// Simulate `repeats` independent experiments at the four vertices of
/// `points`. Repeats run concurrently; repeat `k` draws from stream `k` of
/// a generator seeded with `config.seed`.
pub fn run_pipeline(state: &StateSpec, points: &PointSet4, config: &PipelineConfig) -> Result<PipelineReport> {
    config.model.validate()?;
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be positive".into()));
    }
    let truth = crate::witness::eval_j(state, points)?.value;
    let mut alphas = [Complex64::new(0.0, 0.0); 4];
    for (i, (j, k)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let (x, y) = points.vertex(j, k);
        let (q, p) = frame_to_qp(x, y, points.theta());
        alphas[i] = Complex64::new(q, p);
    }
    let dists: Vec<PhononDistribution> =
        alphas.iter().map(|&a| displaced_distribution(state, -a, config.sim_n_max)).collect::<Result<_>>()?;

    let repeats: Vec<RepeatResult> = (0..config.repeats)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(index as u64);
            let mut parities = [(0.0, 0.0); 4];
            for (slot, dist) in parities.iter_mut().zip(&dists) {
                let ts = simulate_signal(dist, &config.model, &config.times, config.shots, &mut rng)?;
                let fit = fit_distribution(&ts, &config.model, &config.fit)?;
                *slot = match config.estimator {
                    ParityEstimator::Linear => (fit.parity, fit.parity_sigma),
                    ParityEstimator::Constrained => (fit.constrained_parity, fit.constrained_parity_sigma),
                };
            }
            let est = estimate_j(parities, 1)?;
            Ok(RepeatResult { index, parities, j: est.value, j_fit_sigma: est.sigma })
        })
        .collect::<Result<_>>()?;

    let n = repeats.len() as f64;
    let mean = repeats.iter().map(|r| r.j).sum::<f64>() / n;
    let scatter_sigma = if repeats.len() > 1 {
        (repeats.iter().map(|r| (r.j - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut parity_means = [(0.0, 0.0); 4];
    for (i, slot) in parity_means.iter_mut().enumerate() {
        let m = repeats.iter().map(|r| r.parities[i].0).sum::<f64>() / n;
        let s = if repeats.len() > 1 {
            (repeats.iter().map(|r| (r.parities[i].0 - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        *slot = (m, s);
    }
    Ok(PipelineReport {
        truth,
        mean,
        scatter_sigma,
        std_error: scatter_sigma / n.sqrt(),
        fit_sigma: repeats.iter().map(|r| r.j_fit_sigma).sum::<f64>() / n,
        parity_means,
        repeats,
    })
}
