//! Strategies and oracles shared by the property suites and the acceptance run.
#![allow(dead_code)]

use nonclassical::states::{GaussianSpec, StateSpec};
use nonclassical::witness::{RectangleSpec, TriangleSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

pub fn complex(bound: f64) -> impl Strategy<Value = Complex64> {
    (-bound..bound, -bound..bound).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Finite mixture of coherent states.
pub fn coherent_mixture() -> impl Strategy<Value = StateSpec> {
    prop::collection::vec((0.05f64..1.0, complex(2.0)), 1..=5).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        StateSpec::mixture(
            parts.into_iter().map(|(w, a)| (w / total, GaussianSpec::coherent(a).into())).collect(),
        )
        .unwrap()
    })
}

pub fn gaussian_spec(r_max: f64, nbar_max: f64, alpha_max: f64) -> impl Strategy<Value = GaussianSpec> {
    (complex(alpha_max), 0.0..r_max, 0.0..PI, 0.0..nbar_max)
        .prop_map(|(alpha, r, phi, nbar)| GaussianSpec::new(alpha, r, phi, nbar).unwrap())
}

pub fn gaussian_mixture() -> impl Strategy<Value = StateSpec> {
    prop::collection::vec((0.05f64..1.0, gaussian_spec(1.5, 2.0, 1.5)), 1..=3).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        StateSpec::mixture(parts.into_iter().map(|(w, g)| (w / total, g.into())).collect()).unwrap()
    })
}

/// Even cat, Fock state or Gaussian, mixed at random.
pub fn assorted_state() -> impl Strategy<Value = StateSpec> {
    let single = prop_oneof![
        gaussian_spec(1.2, 1.0, 1.5).prop_map(StateSpec::from),
        (0.05f64..2.0).prop_map(|g| nonclassical::states::make_cat(g).unwrap()),
        (0u32..6).prop_map(StateSpec::fock),
        (0.1f64..1.5).prop_map(|g| nonclassical::states::make_cat_vacuum_mixture(g).unwrap()),
    ];
    prop::collection::vec((0.05f64..1.0, single), 1..=3).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        StateSpec::mixture(parts.into_iter().map(|(w, s)| (w / total, s)).collect()).unwrap()
    })
}

pub fn rectangle() -> impl Strategy<Value = RectangleSpec> {
    (0.0..2.0 * PI, -2.5f64..2.5, -2.5f64..2.5, -2.5f64..2.5, -2.5f64..2.5)
        .prop_map(|(theta, x0, x1, y0, y1)| RectangleSpec::new(theta, x0, x1, y0, y1).unwrap())
}

pub fn triangle() -> impl Strategy<Value = TriangleSpec> {
    rectangle().prop_map(|r| TriangleSpec { theta: r.theta, x0: r.x0, x1: r.x1, y0: r.y0, y1: r.y1 })
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// `L_n^{(a)}(z)` by the three-term recurrence.
fn laguerre(n: usize, a: usize, z: f64) -> f64 {
    let a = a as f64;
    let (mut prev, mut cur) = (1.0, 1.0 + a - z);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - z) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `⟨m|D(β)|n⟩`.
fn displacement_element(m: usize, n: usize, beta: Complex64) -> Complex64 {
    let x = beta.norm_sqr();
    let (lo, hi) = (m.min(n), m.max(n));
    let mag = (0.5 * (ln_factorial(lo) - ln_factorial(hi)) - 0.5 * x).exp() * laguerre(lo, hi - lo, x);
    let base = if m >= n { beta } else { -beta.conj() };
    base.powu((hi - lo) as u32) * mag
}

/// Scaled Wigner function of a pure state given by Fock amplitudes, via
/// the parity of `D(-α)|ψ⟩` in a truncated basis.
pub fn fock_basis_parity(amplitudes: &[Complex64], q: f64, p: f64, dim: usize) -> f64 {
    let alpha = Complex64::new(q, p);
    (0..dim)
        .map(|k| {
            let b: Complex64 =
                amplitudes.iter().enumerate().map(|(n, c)| displacement_element(k, n, -alpha) * c).sum();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * b.norm_sqr()
        })
        .sum()
}

/// Fock amplitudes of the even cat `N(|γ⟩ + |-γ⟩)`, real `γ`.
pub fn cat_amplitudes(gamma: f64, dim: usize) -> Vec<Complex64> {
    let norm = (2.0 * (1.0 + (-2.0 * gamma * gamma).exp())).sqrt().recip();
    (0..dim)
        .map(|n| {
            if n % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            let log_mag = n as f64 * gamma.abs().ln() - 0.5 * ln_factorial(n) - 0.5 * gamma * gamma;
            let v = if gamma == 0.0 { if n == 0 { 1.0 } else { 0.0 } } else { log_mag.exp() };
            Complex64::new(2.0 * norm * v, 0.0)
        })
        .collect()
}

/// Proptest config with `n` cases and no regression files.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}
