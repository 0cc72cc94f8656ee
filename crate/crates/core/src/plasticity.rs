//! Hysteretic local weight updates with a stop-learning dead zone.
//!
//! The update compares a target-side current against a prediction-side
//! current. Differences inside the hysteresis band produce no update at
//! all, which is what lets already-converged pathways hold their weights
//! while others keep learning.

use crate::dynamics::NeuronState;
use crate::error::{Error, Result};

/// Which printed form of the update rule to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleForm {
    /// `eta * d - theta` above the band, `eta * d + theta` below it.
    /// With `eta < 1` deltas just outside the band oppose the sign of `d`;
    /// that is a property of this form, kept as the default.
    Literal,
    /// `eta * (d - theta)` / `eta * (d + theta)`, sign-safe for any `eta`.
    Shifted,
}

/// When a plastic synapse evaluates its update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    /// On every presynaptic spike of the specific synapse (default).
    PresynSpike,
    /// Every `every` steps, for ablation runs.
    Periodic { every: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlasticityParams {
    /// Learning rate per update, dimensionless.
    pub eta: f64,
    /// Hysteresis half-width, nA.
    pub theta: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub trigger: Trigger,
    pub form: RuleForm,
}

impl PlasticityParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::invalid(format!("{prefix}_eta"), "must be > 0"));
        }
        if !(self.theta >= 0.0) {
            return Err(Error::invalid(format!("{prefix}_theta"), "must be >= 0"));
        }
        if !(self.w_min < self.w_max) {
            return Err(Error::invalid(
                "plasticity.w_min",
                "must be below plasticity.w_max",
            ));
        }
        Ok(())
    }
}

/// The three plastic connection roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynapseRole {
    /// Sensory and hidden-to-readout feedforward synapses.
    BasalBottomUp,
    /// Hidden-to-interneuron synapses.
    LateralToInter,
    /// Interneuron inhibition cancelling the feedback in the apical tuft.
    ApicalCancellation,
}

/// Target-side and prediction-side currents entering the update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair {
    pub i_plus: f64,
    pub i_minus: f64,
    pub role: SynapseRole,
}

impl ErrorPair {
    pub fn difference(&self) -> f64 {
        self.i_plus - self.i_minus
    }
}

/// Builds the error pair for a role from the postsynaptic state.
///
/// Feedforward roles compare the somatic current against the basal
/// compartment current. The apical role compares the feedback excitation
/// against the inhibition magnitude so learning drives the net apical
/// current toward zero.
pub fn error_pair(role: SynapseRole, post: &NeuronState) -> ErrorPair {
    match role {
        SynapseRole::BasalBottomUp | SynapseRole::LateralToInter => ErrorPair {
            i_plus: post.i_soma,
            i_minus: post.i_comp.basal,
            role,
        },
        SynapseRole::ApicalCancellation => ErrorPair {
            i_plus: post.apical_excitation,
            i_minus: post.apical_inhibition,
            role,
        },
    }
}

/// Weight increment for one update event. Exactly zero inside the
/// stop-learning band `|d| <= theta` (boundary included).
pub fn weight_delta(pair: &ErrorPair, p: &PlasticityParams) -> f64 {
    let d = pair.difference();
    match p.form {
        RuleForm::Literal => {
            if d > p.theta {
                p.eta * d - p.theta
            } else if d < -p.theta {
                p.eta * d + p.theta
            } else {
                0.0
            }
        }
        RuleForm::Shifted => {
            if d > p.theta {
                p.eta * (d - p.theta)
            } else if d < -p.theta {
                p.eta * (d + p.theta)
            } else {
                0.0
            }
        }
    }
}

/// Applies a delta to a weight, clamped to the configured bounds.
pub fn apply_delta(w: f64, delta: f64, p: &PlasticityParams) -> f64 {
    (w + delta).clamp(p.w_min, p.w_max)
}
