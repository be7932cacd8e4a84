//! Single-step weak measurement of a qubit through a rotated ancilla.
//!
//! The qubit state `cos θ |0⟩ + sin θ |1⟩` is tracked by one real coordinate in
//! one of three charts:
//!
//! * `x = atanh(-cos 2θ) = ln tan θ`, the parabolic coordinate on the whole line,
//! * `θ ∈ (0, π/2)`,
//! * `Π = sin² θ = (1 + tanh x) / 2`, the probability of projecting onto `|1⟩`.
//!
//! One measurement with parameters `(α, δ)` moves `x` by a step `ε₀` or `ε₁`
//! that does not depend on `x`; the outcome probabilities do.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude at which an atanh argument is clamped and flagged as saturated.
pub const ATANH_CLAMP: f64 = 1.0 - 1e-15;

/// Squared trig factors below this are treated as exact zeros (projective step).
const PROJECTIVE_EPS: f64 = 1e-30;

/// Rotation angles of one weak measurement: `alpha` is the unconditional ancilla
/// rotation, `delta` the rotation conditioned on the qubit being in `|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams {
    pub alpha: f64,
    pub delta: f64,
}

impl MeasurementParams {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= FRAC_PI_2 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("{alpha} is outside (0, pi/2)"),
            });
        }
        if !delta.is_finite() || delta.abs() >= FRAC_PI_2 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("|{delta}| must be finite and below pi/2"),
            });
        }
        Ok(Self { alpha, delta })
    }

    /// The two trig factors `(cos² α, cos²(α+δ))`.
    fn cos_sq(&self) -> (f64, f64) {
        let c = self.alpha.cos();
        let c2 = (self.alpha + self.delta).cos();
        (c * c, c2 * c2)
    }

    /// The two trig factors `(sin² α, sin²(α+δ))`.
    fn sin_sq(&self) -> (f64, f64) {
        let s = self.alpha.sin();
        let s2 = (self.alpha + self.delta).sin();
        (s * s, s2 * s2)
    }
}

/// Measurement outcome of the ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    pub fn index(self) -> usize {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    X,
    Theta,
    Pi,
}

/// A pure qubit state on the `|0⟩`-`|1⟩` line, tagged with its chart.
///
/// The bounded charts carry their complement (`π/2 - θ`, `1 - Π`) so states
/// exponentially close to a basis state convert back to `x` without loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateCoordinate {
    X(f64),
    Theta { theta: f64, co_theta: f64 },
    Pi { pi: f64, co_pi: f64 },
}

impl StateCoordinate {
    pub fn from_x(x: f64) -> Result<Self> {
        if x.is_finite() {
            Ok(StateCoordinate::X(x))
        } else {
            Err(Error::InfiniteCoordinate { value: x })
        }
    }

    pub fn from_theta(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::InfiniteCoordinate { value: theta });
        }
        Ok(StateCoordinate::Theta {
            theta,
            co_theta: FRAC_PI_2 - theta,
        })
    }

    pub fn from_pi(pi: f64) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::InfiniteCoordinate { value: pi });
        }
        Ok(StateCoordinate::Pi { pi, co_pi: 1.0 - pi })
    }

    pub fn chart(&self) -> Chart {
        match self {
            StateCoordinate::X(_) => Chart::X,
            StateCoordinate::Theta { .. } => Chart::Theta,
            StateCoordinate::Pi { .. } => Chart::Pi,
        }
    }

    /// Value in the state's own chart.
    pub fn value(&self) -> f64 {
        match *self {
            StateCoordinate::X(x) => x,
            StateCoordinate::Theta { theta, .. } => theta,
            StateCoordinate::Pi { pi, .. } => pi,
        }
    }

    pub fn x(&self) -> f64 {
        match *self {
            StateCoordinate::X(x) => x,
            StateCoordinate::Theta { theta, co_theta } => theta.sin().ln() - co_theta.sin().ln(),
            StateCoordinate::Pi { pi, co_pi } => 0.5 * (pi.ln() - co_pi.ln()),
        }
    }

    /// `(θ, π/2 - θ)`.
    pub fn theta_pair(&self) -> (f64, f64) {
        match *self {
            StateCoordinate::X(x) => (x.exp().atan(), (-x).exp().atan()),
            StateCoordinate::Theta { theta, co_theta } => (theta, co_theta),
            StateCoordinate::Pi { pi, co_pi } => {
                let (s, c) = (pi.sqrt(), co_pi.sqrt());
                (s.atan2(c), c.atan2(s))
            }
        }
    }

    /// `(Π, 1 - Π)`.
    pub fn pi_pair(&self) -> (f64, f64) {
        match *self {
            StateCoordinate::X(x) => (pi_of_x(x), co_pi_of_x(x)),
            StateCoordinate::Theta { theta, co_theta } => {
                let (s, c) = (theta.sin(), co_theta.sin());
                (s * s, c * c)
            }
            StateCoordinate::Pi { pi, co_pi } => (pi, co_pi),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta_pair().0
    }

    pub fn pi(&self) -> f64 {
        self.pi_pair().0
    }

    pub fn to_chart(&self, chart: Chart) -> StateCoordinate {
        match chart {
            Chart::X => StateCoordinate::X(self.x()),
            Chart::Theta => {
                let (theta, co_theta) = self.theta_pair();
                StateCoordinate::Theta { theta, co_theta }
            }
            Chart::Pi => {
                let (pi, co_pi) = self.pi_pair();
                StateCoordinate::Pi { pi, co_pi }
            }
        }
    }
}

/// `x = atanh(-cos 2θ)`, evaluated as `ln tan θ`.
pub fn x_of_theta(theta: f64) -> Result<f64> {
    StateCoordinate::from_theta(theta).map(|s| s.x())
}

/// `θ = arcsin √Π(x)`.
pub fn theta_of_x(x: f64) -> Result<f64> {
    StateCoordinate::from_x(x).map(|s| s.theta())
}

/// `Π(x) = (1 + tanh x)/2`.
pub fn pi_of_x(x: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * x).exp())
}

/// `1 - Π(x)` without cancellation.
pub fn co_pi_of_x(x: f64) -> f64 {
    1.0 / (1.0 + (2.0 * x).exp())
}

pub fn x_of_pi(p: f64) -> Result<f64> {
    StateCoordinate::from_pi(p).map(|s| s.x())
}

/// `Π(b) - Π(a)` evaluated without cancellation.
pub fn pi_difference(a: f64, b: f64) -> f64 {
    if a.abs() > 350.0 || b.abs() > 350.0 {
        return pi_of_x(b) - pi_of_x(a);
    }
    0.5 * (b - a).sinh() / (a.cosh() * b.cosh())
}

/// Amplitudes `b_ij` of the joint state after both ancilla rotations; row `i`
/// is the (unnormalized) qubit state paired with ancilla outcome `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeMatrix {
    pub b: [[f64; 2]; 2],
}

impl AmplitudeMatrix {
    pub fn norm_sq(&self) -> f64 {
        self.b.iter().flatten().map(|v| v * v).sum()
    }

    /// Probability of ancilla outcome `i`: the squared norm of row `i`.
    pub fn outcome_probability(&self, outcome: Outcome) -> f64 {
        let row = self.b[outcome.index()];
        row[0] * row[0] + row[1] * row[1]
    }
}

pub fn amplitude_matrix(theta: f64, p: &MeasurementParams) -> AmplitudeMatrix {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = p.alpha.sin_cos();
    let (sad, cad) = (p.alpha + p.delta).sin_cos();
    AmplitudeMatrix {
        b: [[ct * ca, st * cad], [ct * sa, st * sad]],
    }
}

/// Diagonal measurement operators `B₀ = diag(b00, b01)`, `B₁ = diag(b10, b11)`
/// acting on the qubit basis. These are the state-independent factors of the
/// amplitude matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    pub b0_diag: [f64; 2],
    pub b1_diag: [f64; 2],
}

impl KrausPair {
    pub fn new(p: &MeasurementParams) -> Self {
        let (sa, ca) = p.alpha.sin_cos();
        let (sad, cad) = (p.alpha + p.delta).sin_cos();
        KrausPair {
            b0_diag: [ca, cad],
            b1_diag: [sa, sad],
        }
    }

    /// Diagonal of `Σ_j B_j† B_j`; both entries are one.
    pub fn completeness(&self) -> [f64; 2] {
        [
            self.b0_diag[0].powi(2) + self.b1_diag[0].powi(2),
            self.b0_diag[1].powi(2) + self.b1_diag[1].powi(2),
        ]
    }

    /// `B_j (cos θ, sin θ)`, unnormalized.
    pub fn apply(&self, outcome: Outcome, amplitudes: [f64; 2]) -> [f64; 2] {
        let d = match outcome {
            Outcome::Zero => self.b0_diag,
            Outcome::One => self.b1_diag,
        };
        [d[0] * amplitudes[0], d[1] * amplitudes[1]]
    }
}

/// Outcome probabilities evaluated in the θ chart (rows of the amplitude matrix).
pub fn outcome_probabilities_theta(theta: f64, p: &MeasurementParams) -> (f64, f64) {
    let b = amplitude_matrix(theta, p);
    (
        b.outcome_probability(Outcome::Zero),
        b.outcome_probability(Outcome::One),
    )
}

/// Outcome probabilities in the x chart:
/// `p₀ = Π cos²(α+δ) + (1-Π) cos² α`, `p₁ = Π sin²(α+δ) + (1-Π) sin² α`.
pub fn outcome_probabilities_x(x: f64, p: &MeasurementParams) -> (f64, f64) {
    probabilities_from_pi(pi_of_x(x), co_pi_of_x(x), p)
}

fn probabilities_from_pi(pi: f64, co_pi: f64, p: &MeasurementParams) -> (f64, f64) {
    let (c, c2) = p.cos_sq();
    let (s, s2) = p.sin_sq();
    (pi * c2 + co_pi * c, pi * s2 + co_pi * s)
}

pub fn outcome_probabilities(s: &StateCoordinate, p: &MeasurementParams) -> (f64, f64) {
    let (pi, co_pi) = s.pi_pair();
    probabilities_from_pi(pi, co_pi, p)
}

/// Step sizes of the random walk in `x`, plus a flag raised when an atanh
/// argument had to be clamped to [`ATANH_CLAMP`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub eps0: f64,
    pub eps1: f64,
    pub saturated: bool,
}

impl StepSizes {
    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Zero => self.eps0,
            Outcome::One => self.eps1,
        }
    }
}

/// `ln|1 + r|` for `r` computed without cancellation; clamped like
/// `atanh` at [`ATANH_CLAMP`].
fn log_ratio(r: f64) -> (f64, bool) {
    let v = if r > -1.0 { r.ln_1p() } else { (1.0 + r).abs().ln() };
    let cap = ATANH_CLAMP.atanh();
    if v.abs() > cap {
        (v.signum() * cap, true)
    } else {
        (v, false)
    }
}

/// `ε₀ = atanh(2cos²(α+δ)/(cos²(α+δ)+cos²α) - 1)` and the analogous `ε₁` with sines.
///
/// Evaluated as `ε₀ = ln|cos(α+δ)/cos α|`, `ε₁ = ln|sin(α+δ)/sin α|`, with the
/// ratios expanded in `sin δ` and `sin²(δ/2)` so tiny δ keeps full relative
/// precision.
pub fn step_sizes(p: &MeasurementParams) -> Result<StepSizes> {
    let (c, c2) = p.cos_sq();
    let (s, s2) = p.sin_sq();
    if c < PROJECTIVE_EPS || c2 < PROJECTIVE_EPS || s < PROJECTIVE_EPS || s2 < PROJECTIVE_EPS {
        return Err(Error::SingularParameters {
            alpha: p.alpha,
            delta: p.delta,
        });
    }
    let half = (0.5 * p.delta).sin();
    let shrink = -2.0 * half * half;
    let sd = p.delta.sin();
    let (eps0, sat0) = log_ratio(shrink - p.alpha.tan() * sd);
    let (eps1, sat1) = log_ratio(shrink + sd / p.alpha.tan());
    Ok(StepSizes {
        eps0,
        eps1,
        saturated: sat0 || sat1,
    })
}

/// Step size written as a function of the starting point:
/// `ε₀(x) = atanh((1 + tanh x) cos²(α+δ)/p₀(x) - 1) - x` (and the sine analogue
/// for outcome one). Its x-dependence cancels identically; kept as an
/// independent check on [`step_sizes`].
pub fn step_size_at_x(x: f64, p: &MeasurementParams, outcome: Outcome) -> Result<f64> {
    let (c, c2) = p.cos_sq();
    let (s, s2) = p.sin_sq();
    if c < PROJECTIVE_EPS || c2 < PROJECTIVE_EPS || s < PROJECTIVE_EPS || s2 < PROJECTIVE_EPS {
        return Err(Error::SingularParameters {
            alpha: p.alpha,
            delta: p.delta,
        });
    }
    let (pi, co_pi) = (pi_of_x(x), co_pi_of_x(x));
    let (p0, p1) = probabilities_from_pi(pi, co_pi, p);
    // with a = (1 + tanh x) k / p - 1:  1 + a = 2Πk/p,  1 - a = 2(p - Πk)/p
    let (one_plus, one_minus) = match outcome {
        Outcome::Zero => (2.0 * pi * c2 / p0, 2.0 * co_pi * c / p0),
        Outcome::One => (2.0 * pi * s2 / p1, 2.0 * co_pi * s / p1),
    };
    let a = 0.5 * (one_plus - one_minus);
    let value = if a.abs() > ATANH_CLAMP {
        a.signum() * ATANH_CLAMP.atanh()
    } else {
        0.5 * (one_plus.ln() - one_minus.ln())
    };
    Ok(value - x)
}

/// Applies the measurement operator of `outcome` to the state and renormalizes.
/// The result is reported in the input's chart.
pub fn post_measurement_state(
    s: &StateCoordinate,
    p: &MeasurementParams,
    outcome: Outcome,
) -> StateCoordinate {
    let (theta, co_theta) = s.theta_pair();
    let kraus = KrausPair::new(p);
    let [a0, a1] = kraus.apply(outcome, [co_theta.sin(), theta.sin()]);
    let (a0, a1) = (a0.abs(), a1.abs());
    
    match s.chart() {
        // ln tan θ' straight from the amplitudes keeps full precision far out
        Chart::X => StateCoordinate::X(a1.ln() - a0.ln()),
        Chart::Theta => StateCoordinate::Theta {
            theta: a1.atan2(a0),
            co_theta: a0.atan2(a1),
        },
        Chart::Pi => {
            let n = a0 * a0 + a1 * a1;
            StateCoordinate::Pi {
                pi: a1 * a1 / n,
                co_pi: a0 * a0 / n,
            }
        }
    }
}

/// `(μ₀, μ₁) = (ε₀ p₀(x), ε₁ p₁(x))` for a constant-parameter walk.
pub fn mean_step_components(x: f64, p: &MeasurementParams) -> Result<(f64, f64)> {
    let eps = step_sizes(p)?;
    let (p0, p1) = outcome_probabilities_x(x, p);
    Ok((eps.eps0 * p0, eps.eps1 * p1))
}

/// Average step `μ(x) = Σ εᵢ pᵢ(x)`; approaches `δ² tanh x` for small `δ`.
pub fn mean_step(x: f64, p: &MeasurementParams) -> Result<f64> {
    let (m0, m1) = mean_step_components(x, p)?;
    Ok(m0 + m1)
}

/// Per-step diffusion `D(x) = ½ Σ pᵢ(x) εᵢ²`; approaches `δ²/2` for small `δ`.
pub fn diffusion_step(x: f64, p: &MeasurementParams) -> Result<f64> {
    let eps = step_sizes(p)?;
    let (p0, p1) = outcome_probabilities_x(x, p);
    Ok(0.5 * (p0 * eps.eps0 * eps.eps0 + p1 * eps.eps1 * eps.eps1))
}
