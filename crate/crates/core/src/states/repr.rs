//! Serialized form of [`StateSpec`]: `{"type": "gaussian" | "fock" | "superposition" | "mixture", ...}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CoherentSuperpositionSpec, FockSpec, GaussianSpec, MixtureSpec, StateSpec, SuperpositionTerm};
use crate::error::Error;

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub(crate) enum StateSpecRepr {
    Gaussian {
        #[serde(default)]
        alpha: Complex64,
        #[serde(default)]
        r: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        nbar: f64,
    },
    Fock {
        n: u32,
    },
    Superposition {
        terms: Vec<SuperpositionTerm>,
    },
    Mixture {
        components: Vec<ComponentRepr>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ComponentRepr {
    weight: f64,
    spec: StateSpecRepr,
}

impl TryFrom<StateSpecRepr> for StateSpec {
    type Error = Error;

    fn try_from(repr: StateSpecRepr) -> Result<Self, Error> {
        Ok(match repr {
            StateSpecRepr::Gaussian { alpha, r, phi, nbar } => GaussianSpec::new(alpha, r, phi, nbar)?.into(),
            StateSpecRepr::Fock { n } => FockSpec { n }.into(),
            StateSpecRepr::Superposition { terms } => CoherentSuperpositionSpec::new(terms)?.into(),
            StateSpecRepr::Mixture { components } => MixtureSpec::new(
                components
                    .into_iter()
                    .map(|c| Ok((c.weight, StateSpec::try_from(c.spec)?)))
                    .collect::<Result<_, Error>>()?,
            )?
            .into(),
        })
    }
}

impl From<StateSpec> for StateSpecRepr {
    fn from(spec: StateSpec) -> Self {
        match spec {
            StateSpec::Gaussian(g) => StateSpecRepr::Gaussian { alpha: g.alpha, r: g.r, phi: g.phi, nbar: g.nbar },
            StateSpec::Fock(f) => StateSpecRepr::Fock { n: f.n },
            StateSpec::Superposition(s) => StateSpecRepr::Superposition { terms: s.terms },
            StateSpec::Mixture(m) => StateSpecRepr::Mixture {
                components: m
                    .components
                    .into_iter()
                    .map(|c| ComponentRepr { weight: c.weight, spec: c.spec.into() })
                    .collect(),
            },
        }
    }
}
