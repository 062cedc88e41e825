//! Closed-form optima of the rectangle and triangle functionals for Gaussian
//! states, and the purity/squeezing detection map.
//!
//! In the frame aligned at 45° to the squeezing axis and after rescaling by
//! `κ = sqrt((2n̄+1) / (2 cosh 2r))`, a Gaussian Wigner function reads
//! `μ exp(-u² - v² + k u v)` with `μ = 1/(2n̄+1)` and `k = 2 tanh 2r ∈ [0, 2)`.
//! The rectangle value is then `μ F_k` and the triangle value `μ H_k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::grid::Axis;
use crate::states::{qp_to_frame, GaussianSpec};
use crate::witness::{RectangleSpec, TriangleSpec, CLASSICAL_UPPER, TRIANGLE_CLASSICAL};

const K_ZERO: f64 = 1e-8;
const K_TWO: f64 = 2.0 - 1e-6;
const TRIANGLE_K_CAP: f64 = 2.0 - 1e-12;
const ROOT_TOL: f64 = 1e-12;
const C_HI_CAP: f64 = 1e12;

/// Correlation parameter of the rescaled Wigner exponent for squeezing `r`
/// and angle `delta` between the frame and the squeezing axis.
///
/// `k = 2 tanh 2r sin 2δ / sqrt(1 - tanh² 2r cos² 2δ)`; at `δ = π/4` this is
/// `2 tanh 2r`, the largest value over `δ`.
pub fn k_param(r: f64, delta: f64) -> f64 {
    let t = (2.0 * r).tanh();
    let (s2, c2) = (2.0 * delta).sin_cos();
    2.0 * t * s2 / (1.0 - t * t * c2 * c2).sqrt()
}

/// `F_k(x0, y0, x1, y1)` on the rescaled Gaussian, vertex `(x1, y1)` negative.
pub fn f_k(k: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let e = |x: f64, y: f64| (-x * x - y * y + k * x * y).exp();
    e(x0, y0) + e(x0, y1) + e(x1, y0) - e(x1, y1)
}

/// Triangle counterpart of [`f_k`]: `e(x1, y0) + e(x0, y1) - e(x1, y1)`.
pub fn g_k(k: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    let e = |x: f64, y: f64| (-x * x - y * y + k * x * y).exp();
    e(x1, y0) + e(x0, y1) - e(x1, y1)
}

/// Closed-form triangle maximum
/// `H_k = 2^{-4/(2+k)} (2-k)^{(2-k)/(2+k)} (2+k)`, equal to 1 at `k = 0`
/// and tending to 2 as `k → 2`.
pub fn h_k(k: f64) -> f64 {
    let k = k.clamp(0.0, 2.0);
    2f64.powf(-4.0 / (2.0 + k)) * (2.0 - k).powf((2.0 - k) / (2.0 + k)) * (2.0 + k)
}

/// Stationarity condition for the ratio `c = z1/z0` of the optimal
/// rectangle.
fn ratio_equation(c: f64, k: f64) -> f64 {
    ((1.0 + k) * c * c + k * c - 1.0) * ((k * c - 2.0) / (k + 2.0)).ln()
        - (1.0 + c) * (1.0 - c + k) * ((2.0 * c - k) / (c * (k + 2.0))).ln()
}

/// Optimum of `F_k` in rescaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledRectangle {
    pub k: f64,
    /// `F_k` at the optimum.
    pub value: f64,
    /// Ratio `z1 / z0`.
    pub c: f64,
    pub z0: f64,
    pub z1: f64,
}

/// Maximize `F_k` over rectangles.
///
/// The optimum has `(x0, y0, x1, y1) = (z0, -z0, -z1, z1)`; `c = z1/z0` is
/// the root of the stationarity condition above `1 + 4/k`, located by
/// doubling the upper end and bisecting to `1e-12`.
pub fn rectangle_optimum_for_k(k: f64) -> Result<ScaledRectangle> {
    ensure_finite("k", &[k])?;
    if !(0.0..2.0).contains(&k) {
        return Err(Error::Domain(format!("k must lie in [0, 2), got {k}")));
    }
    if k < K_ZERO {
        return Ok(ScaledRectangle { k, value: 2.0, c: 1.0, z0: 0.0, z1: 0.0 });
    }
    let (c, y2) = if k > K_TWO {
        (3.0, 3f64.ln() / 32.0)
    } else {
        let c = solve_ratio(k)?;
        let y2 = -((2.0 * c - k) / (c * (k + 2.0))).ln() / ((1.0 + k) * c * c + k * c - 1.0);
        (c, y2)
    };
    let z0 = y2.sqrt();
    let z1 = c * z0;
    Ok(ScaledRectangle { k, value: f_k(k, z0, -z0, -z1, z1), c, z0, z1 })
}

fn solve_ratio(k: f64) -> Result<f64> {
    let lo0 = (1.0 + 4.0 / k) * (1.0 + 1e-13);
    let f_lo = ratio_equation(lo0, k);
    let mut hi = 2.0 * lo0;
    while ratio_equation(hi, k).signum() == f_lo.signum() {
        hi *= 2.0;
        if hi > C_HI_CAP {
            return Err(Error::Numeric(format!(
                "no sign change of the ratio equation in ({lo0:.6e}, {C_HI_CAP:.1e}] for k = {k}; \
                 value at lower end {f_lo:.3e}"
            )));
        }
    }
    warn_if_multiple_roots(k, lo0, hi);
    let mut lo = lo0;
    let mut f_lo = f_lo;
    while (hi - lo) > ROOT_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let f_mid = ratio_equation(mid, k);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn warn_if_multiple_roots(k: f64, lo: f64, hi: f64) {
    const SAMPLES: usize = 256;
    let ratio = (hi / lo).ln();
    let values: Vec<f64> =
        (0..=SAMPLES).map(|i| ratio_equation(lo * (ratio * i as f64 / SAMPLES as f64).exp(), k)).collect();
    let changes = values.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    if changes > 1 {
        log::warn!("ratio equation has {changes} sign changes in ({lo:.4e}, {hi:.4e}] for k = {k}; using the first");
    }
}

/// Optimum of the triangle functional in rescaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledTriangle {
    pub k: f64,
    pub value: f64,
    pub z0: f64,
    pub z1: f64,
}

/// Maximize the triangle functional; `(x0, y0, x1, y1) = (z0, -z0, -z1, z1)`
/// with `z0² = ln(1/(1-k/2)) / (1+2/k)²` and `z1 = 2 z0 / k`.
pub fn triangle_optimum_for_k(k: f64) -> Result<ScaledTriangle> {
    ensure_finite("k", &[k])?;
    if !(0.0..2.0).contains(&k) {
        return Err(Error::Domain(format!("k must lie in [0, 2), got {k}")));
    }
    if k < K_ZERO {
        return Ok(ScaledTriangle { k, value: 1.0, z0: 0.0, z1: 0.0 });
    }
    let kc = k.min(TRIANGLE_K_CAP);
    let z0 = ((1.0 / (1.0 - kc / 2.0)).ln()).sqrt() / (1.0 + 2.0 / kc);
    let z1 = 2.0 * z0 / kc;
    Ok(ScaledTriangle { k, value: h_k(k), z0, z1 })
}

/// Optimal rectangle for a given Gaussian state, in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianOptimum {
    /// `J` (rectangle) or `J'` (triangle) at the optimum.
    pub value: f64,
    pub k: f64,
    /// Purity `1/(2n̄+1)`.
    pub mu: f64,
    /// Rescaling factor between frame and rescaled coordinates.
    pub kappa: f64,
    pub theta: f64,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl GaussianOptimum {
    pub fn rectangle(&self) -> RectangleSpec {
        RectangleSpec { theta: self.theta, x0: self.x0, x1: self.x1, y0: self.y0, y1: self.y1 }
    }

    pub fn triangle(&self) -> TriangleSpec {
        TriangleSpec { theta: self.theta, x0: self.x0, x1: self.x1, y0: self.y0, y1: self.y1 }
    }
}

fn place(state: &GaussianSpec, k: f64, value: f64, z0: f64, z1: f64) -> GaussianOptimum {
    let theta = state.phi + std::f64::consts::FRAC_PI_4;
    let kappa = ((2.0 * state.nbar + 1.0) / (2.0 * (2.0 * state.r).cosh())).sqrt();
    let (ax, ay) = qp_to_frame(state.alpha.re, state.alpha.im, theta);
    let mu = state.purity();
    GaussianOptimum {
        value: mu * value,
        k,
        mu,
        kappa,
        theta,
        x0: ax + z0 * kappa,
        y0: ay - z0 * kappa,
        x1: ax - z1 * kappa,
        y1: ay + z1 * kappa,
    }
}

/// Best rectangle test for a Gaussian state: frame at `φ + π/4`, centred on
/// the mean.
pub fn optimal_rectangle_gaussian(state: &GaussianSpec) -> Result<GaussianOptimum> {
    state.validate()?;
    let k = 2.0 * (2.0 * state.r).tanh();
    let opt = rectangle_optimum_for_k(k.min(TRIANGLE_K_CAP))?;
    Ok(place(state, k, opt.value, opt.z0, opt.z1))
}

/// Best triangle test for a Gaussian state.
pub fn optimal_triangle_gaussian(state: &GaussianSpec) -> Result<GaussianOptimum> {
    state.validate()?;
    let k = 2.0 * (2.0 * state.r).tanh();
    let opt = triangle_optimum_for_k(k.min(TRIANGLE_K_CAP))?;
    Ok(place(state, k, opt.value, opt.z0, opt.z1))
}

/// `μ*` above which the best rectangle exceeds the classical bound.
pub fn mu_star_rectangle(xi: f64) -> Result<f64> {
    Ok(CLASSICAL_UPPER / rectangle_optimum_for_k(xi)?.value)
}

/// `μ*` above which the best triangle exceeds its classical bound.
pub fn mu_star_triangle(xi: f64) -> Result<f64> {
    Ok(TRIANGLE_CLASSICAL / triangle_optimum_for_k(xi)?.value)
}

/// One cell of the detection map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionPoint {
    pub mu: f64,
    pub xi: f64,
    pub j_rect: f64,
    pub j_tri: f64,
    pub detect_rect: bool,
    pub detect_tri: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub xi: f64,
    pub mu_star_rect: f64,
    pub mu_star_tri: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMap {
    pub cells: Vec<DetectionPoint>,
    pub thresholds: Vec<ThresholdPoint>,
}

/// Evaluate the best rectangle and triangle for every `(μ, ξ)` on the grid,
/// with `ξ = 2 tanh 2r` restricted to `[0, 2)`.
pub fn detection_map(mu: Axis, xi: Axis) -> Result<DetectionMap> {
    if mu.min < 0.0 || mu.max > 1.0 {
        return Err(Error::Config(format!("purity axis must lie in [0, 1], got [{}, {}]", mu.min, mu.max)));
    }
    if xi.min < 0.0 || xi.max >= 2.0 {
        return Err(Error::Config(format!("xi axis must lie in [0, 2), got [{}, {}]", xi.min, xi.max)));
    }
    let xis = xi.values();
    let optima: Vec<(f64, f64)> = xis
        .par_iter()
        .map(|&x| Ok((rectangle_optimum_for_k(x)?.value, triangle_optimum_for_k(x)?.value)))
        .collect::<Result<_>>()?;
    let mus = mu.values();
    let cells = mus
        .iter()
        .flat_map(|&m| {
            xis.iter().zip(&optima).map(move |(&x, &(f, h))| {
                let (j_rect, j_tri) = (m * f, m * h);
                DetectionPoint {
                    mu: m,
                    xi: x,
                    j_rect,
                    j_tri,
                    detect_rect: j_rect > CLASSICAL_UPPER,
                    detect_tri: j_tri > TRIANGLE_CLASSICAL,
                }
            })
        })
        .collect();
    let thresholds = xis
        .iter()
        .zip(&optima)
        .map(|(&x, &(f, h))| ThresholdPoint { xi: x, mu_star_rect: CLASSICAL_UPPER / f, mu_star_tri: TRIANGLE_CLASSICAL / h })
        .collect();
    Ok(DetectionMap { cells, thresholds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::StateSpec;
    use crate::witness::{eval_j, eval_j_prime, PointSet4, GAUSSIAN_BOUND};
    use crate::grid::write_csv;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    #[test]
    fn k_param_peaks_at_quarter_turn() {
        let r = 0.5;
        assert_abs_diff_eq!(k_param(r, std::f64::consts::FRAC_PI_4), 2.0 * (2.0 * r).tanh(), epsilon = 1e-15);
        // oracle from a direct rescaling of the rotated covariance
        assert_abs_diff_eq!(k_param(r, std::f64::consts::PI / 8.0), 1.2782427850508915, epsilon = 1e-12);
        assert_eq!(k_param(0.0, 0.3), 0.0);
    }

    #[test]
    fn rectangle_values_match_brute_force_oracle() {
        // brute-force Nelder-Mead maxima of F_k (100 random starts)
        for &(k, f) in &[(0.5, 2.0409238717193725), (1.9, 2.3010689540358014), (1.999, 2.3242554251714758)] {
            let opt = rectangle_optimum_for_k(k).unwrap();
            assert_abs_diff_eq!(opt.value, f, epsilon = 1e-9);
            assert_abs_diff_eq!(f_k(k, opt.z0, -opt.z0, -opt.z1, opt.z1), opt.value, epsilon = 1e-15);
        }
        let small = rectangle_optimum_for_k(1e-3).unwrap();
        assert_abs_diff_eq!(small.c, 4001.99975, epsilon = 1e-3);
        assert_abs_diff_eq!(rectangle_optimum_for_k(0.0).unwrap().value, 2.0, epsilon = 0.0);
        assert!(rectangle_optimum_for_k(2.0).is_err());
        assert!(rectangle_optimum_for_k(f64::NAN).is_err());
    }

    #[test]
    fn rectangle_limit_is_gaussian_bound() {
        let opt = rectangle_optimum_for_k(2.0 - 1e-7).unwrap();
        assert_abs_diff_eq!(opt.value, GAUSSIAN_BOUND, epsilon = 1e-7);
        assert_abs_diff_eq!(opt.c, 3.0, epsilon = 0.0);
        assert_abs_diff_eq!(opt.z0, 0.25 * (3f64.ln() / 2.0).sqrt(), epsilon = 1e-15);
        let near = rectangle_optimum_for_k(2.0 - 2e-6).unwrap();
        assert!((near.value - opt.value).abs() < 1e-5);
    }

    #[test]
    fn triangle_closed_form() {
        assert_abs_diff_eq!(h_k(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h_k(2.0), 2.0, epsilon = 1e-15);
        for &k in &[0.2, 1.0, 1.8] {
            let t = triangle_optimum_for_k(k).unwrap();
            assert_abs_diff_eq!(g_k(k, t.z0, -t.z0, -t.z1, t.z1), h_k(k), epsilon = 1e-12);
        }
    }

    #[test]
    fn physical_optimum_is_consistent_with_evaluation() {
        let g = GaussianSpec::new(Complex64::new(0.3, -0.2), 0.6, 0.4, 0.3).unwrap();
        let state = StateSpec::from(g);
        let opt = optimal_rectangle_gaussian(&g).unwrap();
        let res = eval_j(&state, &PointSet4::rectangle(opt.rectangle()).unwrap()).unwrap();
        assert_abs_diff_eq!(res.value, opt.value, epsilon = 1e-12);
        let tri = optimal_triangle_gaussian(&g).unwrap();
        let res = eval_j_prime(&state, &tri.triangle()).unwrap();
        assert_abs_diff_eq!(res.value, tri.value, epsilon = 1e-12);
    }

    #[test]
    fn heavily_squeezed_pure_state() {
        let g = GaussianSpec::new(Complex64::new(0.0, 0.0), 8.0, 0.0, 0.0).unwrap();
        let opt = optimal_rectangle_gaussian(&g).unwrap();
        assert_abs_diff_eq!(opt.value, GAUSSIAN_BOUND, epsilon = 1e-3);
        let t = 0.25 * (3f64.ln() / 2.0).sqrt() * opt.kappa;
        for (got, want) in [(opt.x0, t), (opt.y0, -t), (opt.x1, -3.0 * t), (opt.y1, 3.0 * t)] {
            assert_abs_diff_eq!(got, want, epsilon = 1e-4);
        }
    }

    #[test]
    fn thresholds_and_map() {
        assert_abs_diff_eq!(mu_star_rectangle(2.0 - 1e-9).unwrap(), 3f64.powf(9.0 / 8.0) / 4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(mu_star_triangle(2.0 - 1e-9).unwrap(), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(mu_star_rectangle(0.0).unwrap(), 1.0, epsilon = 0.0);
        let map = detection_map(Axis::new(0.5, 1.0, 6).unwrap(), Axis::new(0.0, 1.9, 5).unwrap()).unwrap();
        assert_eq!(map.cells.len(), 30);
        assert_eq!(map.thresholds.len(), 5);
        for c in &map.cells {
            let star = map.thresholds.iter().find(|t| t.xi == c.xi).unwrap();
            assert_eq!(c.detect_rect, c.mu > star.mu_star_rect);
        }
        let mut buf = Vec::new();
        write_csv(&map.thresholds, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("xi,mu_star_rect,mu_star_tri\n"));
        let mut buf = Vec::new();
        write_csv(&map.cells, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("mu,xi,j_rect,j_tri,detect_rect,detect_tri\n"));
        assert!(detection_map(Axis::new(0.0, 1.0, 2).unwrap(), Axis::new(0.0, 2.0, 2).unwrap()).is_err());
    }
}
