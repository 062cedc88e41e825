//! Phase-space nonclassicality and non-Gaussianity tests built on displaced
//! parity measurements.
//!
//! The central quantity is the rescaled Wigner function
//! `(π/2) W(α) = ⟨D(α) (-1)^n D†(α)⟩`, evaluated on four (or three) points in
//! phase space and combined into the CHSH-like functionals `J` and `J'`.
//!
//! ```
//! use nonclassical::states::StateSpec;
//! use nonclassical::witness::{eval_j, PointSet4, GAUSSIAN_BOUND};
//!
//! let points = PointSet4::from_vertices([
//!     (-0.110, -0.110), (0.121, 0.100), (0.100, 0.121), (0.331, 0.331),
//! ]).unwrap();
//! let res = eval_j(&StateSpec::fock(2), &points).unwrap();
//! assert!(res.value > GAUSSIAN_BOUND);
//! ```

pub mod eigenmax;
pub mod error;
pub mod expsim;
pub mod gaussian;
pub mod grid;
pub mod optimizer;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
pub use states::{displaced_parity, StateSpec};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/tests.md")]
    mod tests {}
    #[doc = include_str!("../../../book/src/gaussian.md")]
    mod gaussian {}
    #[doc = include_str!("../../../book/src/optimizer.md")]
    mod optimizer {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
