//! Intrinsic moral rewards.
//!
//! Every framework maps the outcome of one iteration, seen from the moral
//! agent's side, to the scalar reward that agent learns from. Selfish agents
//! learn from the game payoff itself; the others replace it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, Points};
use crate::scalar::Scalar;

pub const DEFAULT_XI: f64 = 5.0;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_XI_HAT: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum MoralFramework<F> {
    Selfish,
    Utilitarian,
    /// Punished by `xi` for defecting on an opponent who cooperated last turn.
    Deontological {
        xi: F,
    },
    /// Two-player Gini equality of the extrinsic payoffs.
    VirtueEquality,
    /// Rewarded by `xi` for cooperating.
    VirtueKindness {
        xi: F,
    },
    /// `beta` · equality + (1 − `beta`) · `xi_hat` · [cooperated].
    VirtueMixed {
        beta: F,
        xi_hat: F,
    },
}

impl<F: Scalar> MoralFramework<F> {
    pub fn deontological() -> Self {
        MoralFramework::Deontological { xi: F::from_real(DEFAULT_XI) }
    }

    pub fn virtue_kindness() -> Self {
        MoralFramework::VirtueKindness { xi: F::from_real(DEFAULT_XI) }
    }

    pub fn virtue_mixed(beta: F) -> Self {
        MoralFramework::VirtueMixed { beta, xi_hat: F::from_real(DEFAULT_XI_HAT) }
    }

    /// The six frameworks with their default parameters.
    pub fn all_defaults() -> [Self; 6] {
        [
            MoralFramework::Selfish,
            MoralFramework::Utilitarian,
            Self::deontological(),
            MoralFramework::VirtueEquality,
            Self::virtue_kindness(),
            Self::virtue_mixed(F::from_real(DEFAULT_BETA)),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            MoralFramework::Selfish => "Selfish",
            MoralFramework::Utilitarian => "Utilitarian",
            MoralFramework::Deontological { .. } => "Deontological",
            MoralFramework::VirtueEquality => "VirtueEquality",
            MoralFramework::VirtueKindness { .. } => "VirtueKindness",
            MoralFramework::VirtueMixed { .. } => "VirtueMixed",
        }
    }

    /// Parses a framework name, applying default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "Selfish" => MoralFramework::Selfish,
            "Utilitarian" => MoralFramework::Utilitarian,
            "Deontological" => Self::deontological(),
            "VirtueEquality" => MoralFramework::VirtueEquality,
            "VirtueKindness" => Self::virtue_kindness(),
            "VirtueMixed" => Self::virtue_mixed(F::from_real(DEFAULT_BETA)),
            other => return Err(Error::Config(format!("unknown moral framework {other:?}"))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: F| v >= F::zero() && v <= F::one();
        match *self {
            MoralFramework::Deontological { xi } | MoralFramework::VirtueKindness { xi } if xi <= F::zero() => {
                Err(Error::Config(format!("{}: xi must be positive, got {xi:?}", self.name())))
            }
            MoralFramework::VirtueMixed { beta, .. } if !unit(beta) => {
                Err(Error::Config(format!("VirtueMixed: beta must lie in [0,1], got {beta:?}")))
            }
            MoralFramework::VirtueMixed { xi_hat, .. } if !unit(xi_hat) => {
                Err(Error::Config(format!("VirtueMixed: xi_hat must lie in [0,1], got {xi_hat:?}")))
            }
            _ => Ok(()),
        }
    }

    /// Name plus any parameter that differs from its default.
    pub fn label(&self) -> String {
        let non_default = |v: F, d: f64| (v.to_real() - d).abs() > 1e-12;
        match *self {
            MoralFramework::Deontological { xi } | MoralFramework::VirtueKindness { xi }
                if non_default(xi, DEFAULT_XI) =>
            {
                format!("{}(xi={})", self.name(), xi.to_real())
            }
            MoralFramework::VirtueMixed { beta, xi_hat }
                if non_default(beta, DEFAULT_BETA) || non_default(xi_hat, DEFAULT_XI_HAT) =>
            {
                if non_default(xi_hat, DEFAULT_XI_HAT) {
                    format!("VirtueMixed(beta={},xi_hat={})", beta.to_real(), xi_hat.to_real())
                } else {
                    format!("VirtueMixed(beta={})", beta.to_real())
                }
            }
            _ => self.name().to_string(),
        }
    }

    /// Converts the framework parameters to another scalar type.
    pub fn cast<G: Scalar>(&self) -> MoralFramework<G> {
        let c = |v: F| G::from_real(v.to_real());
        match *self {
            MoralFramework::Selfish => MoralFramework::Selfish,
            MoralFramework::Utilitarian => MoralFramework::Utilitarian,
            MoralFramework::Deontological { xi } => MoralFramework::Deontological { xi: c(xi) },
            MoralFramework::VirtueEquality => MoralFramework::VirtueEquality,
            MoralFramework::VirtueKindness { xi } => MoralFramework::VirtueKindness { xi: c(xi) },
            MoralFramework::VirtueMixed { beta, xi_hat } => {
                MoralFramework::VirtueMixed { beta: c(beta), xi_hat: c(xi_hat) }
            }
        }
    }
}

impl<F: Scalar> fmt::Display for MoralFramework<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One iteration's outcome from the moral agent's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RewardContext {
    pub prev_opponent_action: Action,
    pub own_action: Action,
    pub self_payoff: Points,
    pub opponent_payoff: Points,
}

/// Two-player Gini equality: `1 − |r1 − r2| / (r1 + r2)`.
pub fn gini_pair<F: Scalar>(r1: F, r2: F) -> Result<F> {
    let total = r1 + r2;
    if total <= F::zero() {
        return Err(Error::DegenerateDenominator);
    }
    Ok(F::one() - (r1 - r2).abs() / total)
}

pub fn intrinsic_reward<F: Scalar>(framework: &MoralFramework<F>, ctx: &RewardContext) -> Result<F> {
    let own = F::from_points(ctx.self_payoff);
    let opp = F::from_points(ctx.opponent_payoff);
    let cooperated = ctx.own_action == Action::Cooperate;

    Ok(match *framework {
        MoralFramework::Selfish => own,
        MoralFramework::Utilitarian => own + opp,
        MoralFramework::Deontological { xi } => {
            if ctx.own_action == Action::Defect && ctx.prev_opponent_action == Action::Cooperate {
                -xi
            } else {
                F::zero()
            }
        }
        MoralFramework::VirtueEquality => gini_pair(own, opp)?,
        MoralFramework::VirtueKindness { xi } => {
            if cooperated {
                xi
            } else {
                F::zero()
            }
        }
        MoralFramework::VirtueMixed { beta, xi_hat } => {
            let equality = beta * gini_pair(own, opp)?;
            if cooperated {
                equality + (F::one() - beta) * xi_hat
            } else {
                equality
            }
        }
    })
}
