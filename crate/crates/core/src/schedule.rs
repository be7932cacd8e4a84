//! Step- and state-conditioned measurement schedules.
//!
//! At step `n` the walker sits at `x = x_{n-1}` and measures with
//!
//! ```text
//! α_n = alpha(n, x),  δ_n = δ · g_δ(n, x),  τ_n = δ² · g_τ(n, x)
//! ```
//!
//! where `τ_n` is the time the step represents. Profiles are declarative so a
//! schedule can be written to and read from a config file.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measurement::{co_pi_of_x, pi_difference, pi_of_x, step_sizes, x_of_pi, MeasurementParams, StepSizes};

/// A named scalar profile of `(step, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `mean + amplitude · sin(wavenumber · x + phase)`.
    Sinusoid {
        mean: f64,
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `first` on steps `1..=period`, `second` on the next `period` steps, and so on.
    StepAlternating {
        first: f64,
        second: f64,
        period: u64,
    },
    /// Vanishes at the state with `Π = pi_x`:
    /// `(Π_X - Π)/(1 - Π) · tilde_g` below it, `(Π - Π_X)/Π · tilde_g` above it.
    Localization {
        pi_x: f64,
        #[serde(default = "one")]
        tilde_g: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ProfileSpec {
    /// Names understood by [`ProfileSpec::from_name`], in a stable order.
    pub const NAMES: [&'static str; 4] = ["constant", "sinusoid", "step-alternating", "localization"];

    /// Registry lookup: builds a profile from its name and numeric parameters.
    pub fn from_name(name: &str, params: &[(&str, f64)]) -> Result<Self> {
        let get = |key: &'static str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|&(_, v)| v)
                .ok_or_else(|| invalid(key, format!("missing for profile `{name}`")))
        };
        let allowed: &[&str] = match name {
            "constant" => &["value"],
            "sinusoid" => &["mean", "amplitude", "wavenumber", "phase"],
            "step-alternating" => &["first", "second", "period"],
            "localization" => &["pi_x", "tilde_g"],
            _ => return Err(invalid("name", format!("unknown profile `{name}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(invalid("profile", format!("unknown key `{k}` for profile `{name}`")));
        }
        let opt = |key: &str, default: f64| {
            params.iter().find(|(k, _)| *k == key).map_or(default, |&(_, v)| v)
        };
        let spec = match name {
            "constant" => ProfileSpec::Constant { value: get("value")? },
            "sinusoid" => ProfileSpec::Sinusoid {
                mean: get("mean")?,
                amplitude: get("amplitude")?,
                wavenumber: get("wavenumber")?,
                phase: opt("phase", 0.0),
            },
            "step-alternating" => {
                let period = get("period")?;
                if period < 1.0 || period.fract() != 0.0 {
                    return Err(invalid("period", "must be a positive integer"));
                }
                ProfileSpec::StepAlternating {
                    first: get("first")?,
                    second: get("second")?,
                    period: period as u64,
                }
            }
            _ => ProfileSpec::Localization {
                pi_x: get("pi_x")?,
                tilde_g: opt("tilde_g", 1.0),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProfileSpec::Localization { pi_x, tilde_g } => {
                if !(pi_x > 0.0 && pi_x < 1.0) {
                    return Err(invalid("pi_x", "must lie in (0, 1)"));
                }
                if !(tilde_g > 0.0) {
                    return Err(invalid("tilde_g", "must be positive"));
                }
            }
            ProfileSpec::StepAlternating { period: 0, .. } => {
                return Err(invalid("period", "must be positive"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ProfileSpec::Constant { .. })
    }

    pub fn eval(&self, step: u64, x: f64) -> f64 {
        match *self {
            ProfileSpec::Constant { value } => value,
            ProfileSpec::Sinusoid {
                mean,
                amplitude,
                wavenumber,
                phase,
            } => mean + amplitude * (wavenumber * x + phase).sin(),
            ProfileSpec::StepAlternating {
                first,
                second,
                period,
            } => {
                if (step.saturating_sub(1) / period).is_multiple_of(2) {
                    first
                } else {
                    second
                }
            }
            ProfileSpec::Localization { pi_x, tilde_g } => localization_factor_x(x, pi_x, tilde_g),
        }
    }
}

/// Localization form factor evaluated in the x chart. Differences of `Π` use
/// [`pi_difference`] so the factor stays signed and accurate right next to
/// the barrier.
pub fn localization_factor_x(x: f64, pi_x: f64, tilde_g: f64) -> f64 {
    // pi_x is validated to (0, 1)
    let barrier = x_of_pi(pi_x).unwrap_or(0.0);
    if x < barrier {
        pi_difference(x, barrier) / co_pi_of_x(x) * tilde_g
    } else if x > barrier {
        pi_difference(barrier, x) / pi_of_x(x) * tilde_g
    } else {
        0.0
    }
}

/// Measurement parameters and elapsed time for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepValues {
    pub params: MeasurementParams,
    pub tau: f64,
    pub steps: StepSizes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub alpha: ProfileSpec,
    pub g_delta: ProfileSpec,
    pub g_tau: ProfileSpec,
    pub delta_scale: f64,
}

impl Schedule {
    /// Constant measurement strength: `α` fixed, `g_δ = g_τ = 1`.
    pub fn constant(alpha: f64, delta: f64) -> Self {
        Schedule {
            alpha: ProfileSpec::Constant { value: alpha },
            g_delta: ProfileSpec::Constant { value: 1.0 },
            g_tau: ProfileSpec::Constant { value: 1.0 },
            delta_scale: delta,
        }
    }

    /// `α = π/4`, `g_τ = 1` and the given `g_δ`.
    pub fn conditional(g_delta: ProfileSpec, delta: f64) -> Self {
        Schedule {
            alpha: ProfileSpec::Constant { value: FRAC_PI_4 },
            g_delta,
            g_tau: ProfileSpec::Constant { value: 1.0 },
            delta_scale: delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_scale.is_finite() {
            return Err(invalid("delta_scale", "must be finite"));
        }
        self.alpha.validate()?;
        self.g_delta.validate()?;
        self.g_tau.validate()
    }

    pub fn is_static(&self) -> bool {
        self.alpha.is_constant() && self.g_delta.is_constant() && self.g_tau.is_constant()
    }

    /// Positions where `g_δ` is known to vanish; trajectories cannot cross them.
    pub fn barriers(&self) -> Vec<f64> {
        match self.g_delta {
            ProfileSpec::Localization { pi_x, .. } => x_of_pi(pi_x).into_iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn params(&self, step: u64, x: f64) -> MeasurementParams {
        MeasurementParams {
            alpha: self.alpha.eval(step, x),
            delta: self.delta_scale * self.g_delta.eval(step, x),
        }
    }

    /// Values used for `step` (1-based) starting from position `x`.
    pub fn step_values(&self, step: u64, x: f64) -> Result<StepValues> {
        let params = self.params(step, x);
        let g_tau = self.g_tau.eval(step, x);
        if !(g_tau > 0.0) {
            return Err(invalid("g_tau", format!("must be positive, got {g_tau} at x={x}")));
        }
        let steps = step_sizes(&params)?;
        Ok(StepValues {
            params,
            tau: self.delta_scale * self.delta_scale * g_tau,
            steps,
        })
    }

    /// Form factor of the continuum limit, `g = g_δ / √g_τ`: the drift is
    /// `g² tanh x` and the diffusion `g²/2` per unit time.
    pub fn form_factor(&self, step: u64, x: f64) -> f64 {
        self.g_delta.eval(step, x) / self.g_tau.eval(step, x).sqrt()
    }
}
