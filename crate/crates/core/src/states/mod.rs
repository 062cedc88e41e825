//! Closed-form single-mode states and their scaled Wigner functions.
//!
//! Every value returned here is the displaced parity
//! `(π/2) W(q, p) = ⟨D(α) (-1)^n D†(α)⟩` with `α = q + i p`, so it lies in
//! `[-1, 1]`. Quadratures follow `q = (a† + a)/2`, `p = (a - a†)/(2i)`; the
//! vacuum has variance 1/4 in each.
//!
//! Points are given in a frame rotated by `theta` from `(q, p)`:
//! `(x, y)ᵀ = R(θ) (q, p)ᵀ`, equivalently `q + i p = (x + i y) e^{iθ}`.

mod laguerre;
mod repr;

pub use laguerre::{assoc_laguerre, laguerre};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Mixture weights must sum to one within this slack before renormalizing.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Rotate frame coordinates `(x, y)` at angle `theta` back to `(q, p)`.
#[inline]
pub fn frame_to_qp(x: f64, y: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (x * c - y * s, x * s + y * c)
}

/// Express `(q, p)` in the frame rotated by `theta`.
#[inline]
pub fn qp_to_frame(q: f64, p: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (q * c + p * s, -q * s + p * c)
}

/// Displaced squeezed thermal state `D(α) S(r, φ) ρ_th(n̄) S† D†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub alpha: Complex64,
    pub r: f64,
    pub phi: f64,
    pub nbar: f64,
}

impl GaussianSpec {
    pub fn new(alpha: Complex64, r: f64, phi: f64, nbar: f64) -> Result<Self> {
        let spec = Self { alpha, r, phi, nbar };
        spec.validate()?;
        Ok(spec)
    }

    pub fn vacuum() -> Self {
        Self { alpha: Complex64::new(0.0, 0.0), r: 0.0, phi: 0.0, nbar: 0.0 }
    }

    pub fn coherent(alpha: Complex64) -> Self {
        Self { alpha, ..Self::vacuum() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("Gaussian parameters", &[self.alpha.re, self.alpha.im, self.r, self.phi, self.nbar])?;
        if self.r < 0.0 {
            return Err(Error::Validation(format!("squeeze strength r must be >= 0, got {}", self.r)));
        }
        if self.nbar < 0.0 {
            return Err(Error::Validation(format!("thermal occupation nbar must be >= 0, got {}", self.nbar)));
        }
        Ok(())
    }

    /// Purity `μ = 1 / (2 n̄ + 1)`.
    pub fn purity(&self) -> f64 {
        1.0 / (2.0 * self.nbar + 1.0)
    }

    /// Mean quadratures `(⟨q⟩, ⟨p⟩)`.
    pub fn mean(&self) -> (f64, f64) {
        (self.alpha.re, self.alpha.im)
    }

    /// Symmetrized covariance matrix of `(q, p)`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let s = 0.5 * (self.nbar + 0.5);
        let (ch, sh) = ((2.0 * self.r).cosh(), (2.0 * self.r).sinh());
        let (s2, c2) = (2.0 * self.phi).sin_cos();
        [[s * (ch - sh * c2), -s * sh * s2], [-s * sh * s2, s * (ch + sh * c2)]]
    }

    /// Covariance in the frame rotated by `theta`, `R(θ) Γ R(-θ)`.
    pub fn rotated_covariance(&self, theta: f64) -> [[f64; 2]; 2] {
        let g = self.covariance();
        let (s, c) = theta.sin_cos();
        let rot = [[c, s], [-s, c]];
        let mut tmp = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                tmp[i][j] = rot[i][0] * g[0][j] + rot[i][1] * g[1][j];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = tmp[i][0] * rot[j][0] + tmp[i][1] * rot[j][1];
            }
        }
        out
    }

    /// Recover `(α, r, φ, n̄)` from first and second moments.
    pub fn from_moments(mean: (f64, f64), cov: [[f64; 2]; 2]) -> Result<Self> {
        ensure_finite("moments", &[mean.0, mean.1, cov[0][0], cov[0][1], cov[1][0], cov[1][1]])?;
        if (cov[0][1] - cov[1][0]).abs() > 1e-12 * (cov[0][0].abs() + cov[1][1].abs()) {
            return Err(Error::Validation("covariance matrix must be symmetric".into()));
        }
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if det <= 0.0 || cov[0][0] <= 0.0 {
            return Err(Error::Validation("covariance matrix must be positive definite".into()));
        }
        let s = det.sqrt();
        let nbar = 2.0 * s - 0.5;
        if nbar < -1e-10 {
            return Err(Error::Validation(format!("covariance violates the uncertainty relation (det = {det})")));
        }
        let cosh2r = ((cov[0][0] + cov[1][1]) / (2.0 * s)).max(1.0);
        let r = 0.5 * cosh2r.acosh();
        let phi = if r == 0.0 { 0.0 } else { 0.5 * (-cov[0][1]).atan2(-0.5 * (cov[0][0] - cov[1][1])) };
        Ok(Self { alpha: Complex64::new(mean.0, mean.1), r, phi, nbar: nbar.max(0.0) })
    }

    /// The Gaussian state whose Wigner function at `Q` equals this state's at
    /// `m Q` (`m` acting on `(q, p)`, `det m = 1`).
    pub fn pulled_back(&self, m: [[f64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("phase-space map must be unimodular, det = {det}")));
        }
        let inv = [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]];
        let (mq, mp) = self.mean();
        let mean = (inv[0][0] * mq + inv[0][1] * mp, inv[1][0] * mq + inv[1][1] * mp);
        let g = self.covariance();
        let mut tmp = [[0.0; 2]; 2];
        let mut cov = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                tmp[i][j] = inv[i][0] * g[0][j] + inv[i][1] * g[1][j];
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] = tmp[i][0] * inv[j][0] + tmp[i][1] * inv[j][1];
            }
        }
        // symmetrize rounding
        let off = 0.5 * (cov[0][1] + cov[1][0]);
        cov[0][1] = off;
        cov[1][0] = off;
        Self::from_moments(mean, cov)
    }

    fn parity_qp(&self, q: f64, p: f64) -> f64 {
        let g = self.covariance();
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let (dq, dp) = (q - self.alpha.re, p - self.alpha.im);
        let quad = (g[1][1] * dq * dq - 2.0 * g[0][1] * dq * dp + g[0][0] * dp * dp) / det;
        self.purity() * (-0.5 * quad).exp()
    }
}

/// Fock state `|n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpec {
    pub n: u32,
}

impl FockSpec {
    fn parity_qp(&self, q: f64, p: f64) -> f64 {
        let s = q * q + p * p;
        let sign = if self.n % 2 == 0 { 1.0 } else { -1.0 };
        sign * (-2.0 * s).exp() * laguerre(self.n, 4.0 * s)
    }
}

/// One term `c |γ⟩` of a coherent-state superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionTerm {
    pub coefficient: Complex64,
    pub amplitude: Complex64,
}

/// Overlap `⟨β|γ⟩ = exp(-|β|²/2 - |γ|²/2 + β̄γ)`.
pub fn coherent_overlap(beta: Complex64, gamma: Complex64) -> Complex64 {
    overlap_exponent(beta, gamma).exp()
}

#[inline]
fn overlap_exponent(beta: Complex64, gamma: Complex64) -> Complex64 {
    -0.5 * (beta.norm_sqr() + gamma.norm_sqr()) + beta.conj() * gamma
}

/// Normalized pure state `Σ c_i |γ_i⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentSuperpositionSpec {
    terms: Vec<SuperpositionTerm>,
}

impl CoherentSuperpositionSpec {
    /// Builds the state and rescales coefficients so that `⟨ψ|ψ⟩ = 1`.
    pub fn new(terms: Vec<SuperpositionTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Validation("superposition needs at least one term".into()));
        }
        for t in &terms {
            ensure_finite("superposition term", &[t.coefficient.re, t.coefficient.im, t.amplitude.re, t.amplitude.im])?;
        }
        let norm = Self::norm_sqr_of(&terms);
        if !(norm.re.is_finite() && norm.re > 1e-300) {
            return Err(Error::Domain(format!("superposition has zero or invalid norm ({norm})")));
        }
        if norm.im.abs() > 1e-9 * norm.re.max(1.0) {
            return Err(Error::Numeric(format!("superposition norm is not real: {norm}")));
        }
        let scale = 1.0 / norm.re.sqrt();
        let terms = terms
            .into_iter()
            .map(|t| SuperpositionTerm { coefficient: t.coefficient * scale, amplitude: t.amplitude })
            .collect();
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[SuperpositionTerm] {
        &self.terms
    }

    /// `Σ_ij c̄_j c_i ⟨γ_j|γ_i⟩`; equals one for a constructed value.
    pub fn norm_sqr(&self) -> f64 {
        Self::norm_sqr_of(&self.terms).re
    }

    fn norm_sqr_of(terms: &[SuperpositionTerm]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ti in terms {
            for tj in terms {
                acc += tj.coefficient.conj() * ti.coefficient * coherent_overlap(tj.amplitude, ti.amplitude);
            }
        }
        acc
    }

    /// `⟨ψ| D(α)(-1)^n D†(α) |ψ⟩` through `D(α)(-1)^n D†(α)|γ⟩ = e^{-αγ̄+ᾱγ}|2α-γ⟩`.
    pub fn parity_at(&self, alpha: Complex64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ti in &self.terms {
            let gi = ti.amplitude;
            let phase = -alpha * gi.conj() + alpha.conj() * gi;
            let target = 2.0 * alpha - gi;
            for tj in &self.terms {
                acc += tj.coefficient.conj() * ti.coefficient * (phase + overlap_exponent(tj.amplitude, target)).exp();
            }
        }
        acc.re
    }
}

/// One weighted component of a mixture. `spec` is never itself a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub spec: StateSpec,
}

/// Convex mixture of non-mixture states.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    /// Flattens nested mixtures, checks weights, and renormalizes them.
    pub fn new(components: Vec<(f64, StateSpec)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("mixture needs at least one component".into()));
        }
        let mut flat = Vec::with_capacity(components.len());
        for (w, spec) in components {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation(format!("mixture weight must be finite and >= 0, got {w}")));
            }
            match spec {
                StateSpec::Mixture(inner) => {
                    flat.extend(inner.components.into_iter().map(|c| MixtureComponent { weight: w * c.weight, spec: c.spec }));
                }
                other => {
                    other.validate()?;
                    flat.push(MixtureComponent { weight: w, spec: other });
                }
            }
        }
        let total: f64 = flat.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Validation(format!("mixture weights sum to {total}, expected 1")));
        }
        for c in &mut flat {
            c.weight /= total;
        }
        Ok(Self { components: flat })
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }
}

/// A closed-form state description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "repr::StateSpecRepr", into = "repr::StateSpecRepr")]
pub enum StateSpec {
    Gaussian(GaussianSpec),
    Fock(FockSpec),
    Superposition(CoherentSuperpositionSpec),
    Mixture(MixtureSpec),
}

impl From<GaussianSpec> for StateSpec {
    fn from(g: GaussianSpec) -> Self {
        StateSpec::Gaussian(g)
    }
}

impl From<FockSpec> for StateSpec {
    fn from(f: FockSpec) -> Self {
        StateSpec::Fock(f)
    }
}

impl From<CoherentSuperpositionSpec> for StateSpec {
    fn from(s: CoherentSuperpositionSpec) -> Self {
        StateSpec::Superposition(s)
    }
}

impl From<MixtureSpec> for StateSpec {
    fn from(m: MixtureSpec) -> Self {
        StateSpec::Mixture(m)
    }
}

impl StateSpec {
    pub fn vacuum() -> Self {
        GaussianSpec::vacuum().into()
    }

    pub fn fock(n: u32) -> Self {
        FockSpec { n }.into()
    }

    pub fn mixture(components: Vec<(f64, StateSpec)>) -> Result<Self> {
        MixtureSpec::new(components).map(Into::into)
    }

    /// `Σ w_i |n_i⟩⟨n_i|`.
    pub fn fock_mixture(components: &[(f64, u32)]) -> Result<Self> {
        Self::mixture(components.iter().map(|&(w, n)| (w, Self::fock(n))).collect())
    }

    pub fn superposition(terms: Vec<SuperpositionTerm>) -> Result<Self> {
        CoherentSuperpositionSpec::new(terms).map(Into::into)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Gaussian(g) => g.validate(),
            StateSpec::Fock(_) | StateSpec::Superposition(_) => Ok(()),
            StateSpec::Mixture(m) => m.components.iter().try_for_each(|c| c.spec.validate()),
        }
    }

    /// Parity at `(q, p)` without validation. Callers validate once up front.
    pub(crate) fn parity_qp(&self, q: f64, p: f64) -> f64 {
        match self {
            StateSpec::Gaussian(g) => g.parity_qp(q, p),
            StateSpec::Fock(f) => f.parity_qp(q, p),
            StateSpec::Superposition(s) => s.parity_at(Complex64::new(q, p)),
            StateSpec::Mixture(m) => m.components.iter().map(|c| c.weight * c.spec.parity_qp(q, p)).sum(),
        }
    }

    #[inline]
    pub(crate) fn parity_frame(&self, x: f64, y: f64, theta: f64) -> f64 {
        let (q, p) = frame_to_qp(x, y, theta);
        self.parity_qp(q, p)
    }

    /// Whether the Wigner function is invariant under phase rotations.
    pub fn is_phase_symmetric(&self) -> bool {
        match self {
            StateSpec::Fock(_) => true,
            StateSpec::Gaussian(g) => g.alpha.norm_sqr() == 0.0 && g.r == 0.0,
            StateSpec::Superposition(_) => false,
            StateSpec::Mixture(m) => m.components.iter().all(|c| c.spec.is_phase_symmetric()),
        }
    }

    /// Largest Fock index if the state is a Fock state or a Fock mixture.
    pub fn max_fock_index(&self) -> Option<u32> {
        match self {
            StateSpec::Fock(f) => Some(f.n),
            StateSpec::Mixture(m) => m.components.iter().map(|c| c.spec.max_fock_index()).try_fold(0, |acc, n| n.map(|n| acc.max(n))),
            _ => None,
        }
    }

    /// Phase rotation `e^{iφ n} ρ e^{-iφ n}`.
    pub fn rotated(&self, angle: f64) -> StateSpec {
        let rot = Complex64::from_polar(1.0, angle);
        match self {
            StateSpec::Gaussian(g) => GaussianSpec { alpha: g.alpha * rot, phi: g.phi + angle, ..*g }.into(),
            StateSpec::Fock(f) => (*f).into(),
            StateSpec::Superposition(s) => StateSpec::Superposition(CoherentSuperpositionSpec {
                terms: s.terms.iter().map(|t| SuperpositionTerm { amplitude: t.amplitude * rot, ..*t }).collect(),
            }),
            StateSpec::Mixture(m) => StateSpec::Mixture(MixtureSpec {
                components: m.components.iter().map(|c| MixtureComponent { weight: c.weight, spec: c.spec.rotated(angle) }).collect(),
            }),
        }
    }

    /// Displacement `D(β) ρ D†(β)`. Fock states have no closed form here.
    pub fn displaced(&self, beta: Complex64) -> Result<StateSpec> {
        Ok(match self {
            StateSpec::Gaussian(g) => GaussianSpec { alpha: g.alpha + beta, ..*g }.into(),
            StateSpec::Fock(_) => {
                return Err(Error::Validation("displaced Fock states are not a closed-form family".into()));
            }
            StateSpec::Superposition(s) => StateSpec::Superposition(CoherentSuperpositionSpec {
                terms: s
                    .terms
                    .iter()
                    .map(|t| {
                        // D(β)|γ⟩ = e^{(βγ̄ - β̄γ)/2} |γ+β⟩
                        let phase = 0.5 * (beta * t.amplitude.conj() - beta.conj() * t.amplitude);
                        SuperpositionTerm { coefficient: t.coefficient * phase.exp(), amplitude: t.amplitude + beta }
                    })
                    .collect(),
            }),
            StateSpec::Mixture(m) => StateSpec::Mixture(MixtureSpec {
                components: m
                    .components
                    .iter()
                    .map(|c| Ok(MixtureComponent { weight: c.weight, spec: c.spec.displaced(beta)? }))
                    .collect::<Result<_>>()?,
            }),
        })
    }
}

/// Scaled Wigner function `(π/2) W(x, y)` at a point given in the frame
/// rotated by `theta`.
pub fn displaced_parity(state: &StateSpec, x: f64, y: f64, theta: f64) -> Result<f64> {
    ensure_finite("phase-space point", &[x, y, theta])?;
    state.validate()?;
    Ok(state.parity_frame(x, y, theta))
}

/// Even cat state `N(|γ⟩ + |-γ⟩)` with `N = [2(1 + e^{-2γ²})]^{-1/2}`.
pub fn make_cat(gamma: f64) -> Result<StateSpec> {
    ensure_finite("cat amplitude", &[gamma])?;
    let norm = (2.0 * (1.0 + (-2.0 * gamma * gamma).exp())).sqrt().recip();
    let c = Complex64::new(norm, 0.0);
    StateSpec::superposition(vec![
        SuperpositionTerm { coefficient: c, amplitude: Complex64::new(gamma, 0.0) },
        SuperpositionTerm { coefficient: c, amplitude: Complex64::new(-gamma, 0.0) },
    ])
}

/// `e^{-γ²} (sinh γ² |0⟩⟨0| + cosh γ² |ψ_γ⟩⟨ψ_γ|)` for the even cat `|ψ_γ⟩`.
pub fn make_cat_vacuum_mixture(gamma: f64) -> Result<StateSpec> {
    let g2 = gamma * gamma;
    let damp = (-g2).exp();
    StateSpec::mixture(vec![(damp * g2.sinh(), StateSpec::vacuum()), (damp * g2.cosh(), make_cat(gamma)?)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_and_fock_at_origin() {
        assert_eq!(displaced_parity(&StateSpec::vacuum(), 0.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(displaced_parity(&StateSpec::fock(1), 0.0, 0.0, 0.0).unwrap(), -1.0);
        for n in 0..8 {
            let expect = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(displaced_parity(&StateSpec::fock(n), 0.0, 0.0, 0.3).unwrap(), expect);
        }
    }

    #[test]
    fn fock_two_at_witness_point() {
        let s = 2.0 * 0.331f64.powi(2);
        let z = 4.0 * s;
        let oracle = (-2.0 * s).exp() * (1.0 - 2.0 * z + z * z / 2.0);
        let v = displaced_parity(&StateSpec::fock(2), 0.331, 0.331, 0.0).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(v, -0.2380, epsilon = 1e-4);
    }

    #[test]
    fn coherent_overlap_identities() {
        let b = c(0.7, -0.2);
        assert_abs_diff_eq!(coherent_overlap(b, b).re, 1.0, epsilon = 1e-15);
        let g = c(0.3, 1.1);
        let v = coherent_overlap(c(0.0, 0.0), g);
        assert_abs_diff_eq!(v.re, (-g.norm_sqr() / 2.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        let m = coherent_overlap(c(1.0, 0.0), c(0.0, 1.0)).norm_sqr();
        assert_abs_diff_eq!(m, (-2.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn cat_constructors() {
        let cat = make_cat(1.0).unwrap();
        match &cat {
            StateSpec::Superposition(s) => assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12),
            _ => panic!("cat should be a superposition"),
        }
        assert_abs_diff_eq!(displaced_parity(&cat, 0.0, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        let cat0 = make_cat(0.0).unwrap();
        assert_abs_diff_eq!(displaced_parity(&cat0, 0.0, 0.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        // degenerate cat equals vacuum everywhere
        assert_abs_diff_eq!(
            displaced_parity(&cat0, 0.4, -0.3, 0.0).unwrap(),
            displaced_parity(&StateSpec::vacuum(), 0.4, -0.3, 0.0).unwrap(),
            epsilon = 1e-12
        );

        let mix = make_cat_vacuum_mixture(1.0).unwrap();
        let StateSpec::Mixture(m) = &mix else { panic!("expected mixture") };
        let w: Vec<f64> = m.components().iter().map(|c| c.weight).collect();
        // sinh + cosh = e^{γ²}
        assert_abs_diff_eq!(w[0], (-1.0f64).exp() * 1.0f64.sinh(), epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 0.43233, epsilon = 1e-5);
        assert_abs_diff_eq!(w[1], 0.56767, epsilon = 1e-5);
        assert_abs_diff_eq!(w[0] + w[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mixture_validation_and_flattening() {
        assert!(StateSpec::fock_mixture(&[(0.5, 0), (-0.1, 2)]).is_err());
        assert!(StateSpec::fock_mixture(&[(0.5, 0), (0.4, 2)]).is_err());
        assert!(StateSpec::mixture(vec![]).is_err());
        let inner = StateSpec::fock_mixture(&[(0.5, 0), (0.5, 2)]).unwrap();
        let outer = StateSpec::mixture(vec![(0.5, inner), (0.5, StateSpec::fock(1))]).unwrap();
        let StateSpec::Mixture(m) = &outer else { panic!() };
        assert_eq!(m.components().len(), 3);
        assert!(m.components().iter().all(|c| !matches!(c.spec, StateSpec::Mixture(_))));
        // tiny rounding in weights is renormalized
        let ok = StateSpec::fock_mixture(&[(0.5 + 4e-10, 0), (0.5, 2)]).unwrap();
        let StateSpec::Mixture(m) = &ok else { panic!() };
        let total: f64 = m.components().iter().map(|c| c.weight).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_inputs() {
        let bad = StateSpec::Gaussian(GaussianSpec { nbar: -0.1, ..GaussianSpec::vacuum() });
        assert!(matches!(displaced_parity(&bad, 0.0, 0.0, 0.0), Err(Error::Validation(_))));
        assert!(matches!(displaced_parity(&StateSpec::vacuum(), f64::NAN, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(GaussianSpec::new(c(0.0, 0.0), -1.0, 0.0, 0.0).is_err());
        assert!(matches!(
            StateSpec::superposition(vec![
                SuperpositionTerm { coefficient: c(1.0, 0.0), amplitude: c(0.5, 0.0) },
                SuperpositionTerm { coefficient: c(-1.0, 0.0), amplitude: c(0.5, 0.0) },
            ]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gaussian_covariance_invariants() {
        let g = GaussianSpec::new(c(0.2, -0.4), 0.7, 0.3, 0.8).unwrap();
        let cov = g.covariance();
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        assert_abs_diff_eq!(det, ((g.nbar + 0.5) / 2.0).powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(g.purity(), 1.0 / (4.0 * det.sqrt()), epsilon = 1e-12);
        let back = GaussianSpec::from_moments(g.mean(), cov).unwrap();
        assert_abs_diff_eq!(back.r, g.r, epsilon = 1e-10);
        assert_abs_diff_eq!(back.phi, g.phi, epsilon = 1e-10);
        assert_abs_diff_eq!(back.nbar, g.nbar, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_rotated_covariance_matches_frame_evaluation() {
        let g = GaussianSpec::new(c(0.0, 0.0), 0.6, 0.2, 0.3).unwrap();
        let theta = 0.9;
        let gt = g.rotated_covariance(theta);
        let det = gt[0][0] * gt[1][1] - gt[0][1] * gt[1][0];
        let (x, y) = (0.31, -0.12);
        let quad = (gt[1][1] * x * x - 2.0 * gt[0][1] * x * y + gt[0][0] * y * y) / det;
        let direct = g.purity() * (-0.5 * quad).exp();
        let st = StateSpec::Gaussian(g);
        assert_abs_diff_eq!(displaced_parity(&st, x, y, theta).unwrap(), direct, epsilon = 1e-14);
    }

    #[test]
    fn max_fock_index_detection() {
        assert_eq!(StateSpec::fock(3).max_fock_index(), Some(3));
        assert_eq!(StateSpec::fock_mixture(&[(0.3, 0), (0.7, 2)]).unwrap().max_fock_index(), Some(2));
        assert_eq!(StateSpec::vacuum().max_fock_index(), None);
    }
}
