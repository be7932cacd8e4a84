//! Ratchet experiments in the asymptotic (shifted) coordinate, and dynamic
//! localization around a zero of the measurement strength.
//!
//! Far from the origin `tanh x → ±1`, so in the shifted coordinate
//! `x_← = x + X` (left side, `X ≫ 0`) the walk obeys a Fokker–Planck
//! equation with `μ = -g²`, `D = g²/2`. For a
//! profile periodic in `x_←` the density folded onto one period has a
//! well-defined long-time current.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fp::{
    coefficients_pi, BoundaryCondition, Field, FormFactor, FpCoefficients, FpStepper, SolverAudit, SolverOptions,
    TimeDependence,
};
use crate::measurement::Chart;

/// `offset + Σ sinₖ sin(2πkx/L) + cosₖ cos(2πkx/L)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialProfile {
    pub period: f64,
    #[serde(default)]
    pub offset: f64,
    /// `(k, sin coefficient, cos coefficient)`.
    pub terms: Vec<(u32, f64, f64)>,
}

impl SpatialProfile {
    /// `a (sin x + b sin 2x)` on period `2π`.
    pub fn two_harmonic(a: f64, b: f64) -> Self {
        SpatialProfile {
            period: TAU,
            offset: 0.0,
            terms: vec![(1, a, 0.0), (2, a * b, 0.0)],
        }
    }

    pub fn flat(value: f64) -> Self {
        SpatialProfile {
            period: TAU,
            offset: value,
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let w = TAU / self.period;
        self.offset
            + self
                .terms
                .iter()
                .map(|&(k, s, c)| {
                    let arg = w * k as f64 * x;
                    s * arg.sin() + c * arg.cos()
                })
                .sum::<f64>()
    }

    pub fn is_flat(&self) -> bool {
        self.terms.iter().all(|&(_, s, c)| s == 0.0 && c == 0.0)
    }

    /// Mean of `F²` over a period.
    fn mean_square(&self) -> f64 {
        self.offset.powi(2) + 0.5 * self.terms.iter().map(|&(_, s, c)| s * s + c * c).sum::<f64>()
    }

    /// Lower bound of `F` from sampling plus the largest possible error
    /// between samples (sum of `|k|·amplitude·Δ`).
    fn min_bound(&self) -> f64 {
        const N: usize = 4096;
        let step = self.period / N as f64;
        let w = TAU / self.period;
        let lip: f64 = self.terms.iter().map(|&(k, s, c)| w * k as f64 * s.hypot(c)).sum();
        let min = (0..N).map(|i| self.eval(i as f64 * step)).fold(f64::INFINITY, f64::min);
        min - 0.5 * lip * step
    }

    fn max_bound(&self) -> f64 {
        let neg = SpatialProfile {
            period: self.period,
            offset: -self.offset,
            terms: self.terms.iter().map(|&(k, s, c)| (k, -s, -c)).collect(),
        };
        -neg.min_bound()
    }
}

/// Temporal switch `f(t)` with period `period`; switching happens at
/// multiples of `period / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TemporalSwitch {
    Constant { value: f64 },
    /// `(sign(sin ωt) - 1)/2`: 0 in the first half-period, -1 in the second.
    OnOff { period: f64 },
    /// `sign(sin ωt)`.
    SignSin { period: f64 },
}

impl TemporalSwitch {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TemporalSwitch::Constant { value } => value,
            TemporalSwitch::OnOff { period } => {
                if Self::first_half(t, period) {
                    0.0
                } else {
                    -1.0
                }
            }
            TemporalSwitch::SignSin { period } => {
                if Self::first_half(t, period) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Whether `t` falls in `[kT, kT + T/2)`; switching instants belong to
    /// the phase they start.
    fn first_half(t: f64, period: f64) -> bool {
        (t / (0.5 * period)).floor().rem_euclid(2.0) == 0.0
    }

    /// Distinct values `f` takes.
    fn values(&self) -> Vec<f64> {
        match *self {
            TemporalSwitch::Constant { value } => vec![value],
            TemporalSwitch::OnOff { .. } => vec![0.0, -1.0],
            TemporalSwitch::SignSin { .. } => vec![1.0, -1.0],
        }
    }

    pub fn half_period(&self) -> Option<f64> {
        match *self {
            TemporalSwitch::Constant { .. } => None,
            TemporalSwitch::OnOff { period } | TemporalSwitch::SignSin { period } => Some(0.5 * period),
        }
    }

    /// First switching instant strictly after `t`.
    pub fn next_switch(&self, t: f64) -> f64 {
        match self.half_period() {
            None => f64::INFINITY,
            Some(h) => {
                let k = (t / h).floor() + 1.0;
                let s = k * h;
                if s > t {
                    s
                } else {
                    s + h
                }
            }
        }
    }
}

/// How the prefactor `C` of a [`GProfile`] is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Spatial mean of `g²` equal to one at every instant; `C` follows the switch.
    PerInstant,
    /// One constant `C` making the space-time mean of `g²` equal to one.
    PeriodAverage,
    /// `C ≡ 1`.
    None,
}

/// `g(x_←, t) = C(t) (1 + F(x_←) f(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GProfile {
    pub spatial: SpatialProfile,
    pub temporal: TemporalSwitch,
    pub normalization: Normalization,
    /// `(f, C(f))` for every value the switch takes.
    normalizers: Vec<(f64, f64)>,
}

impl GProfile {
    /// Profile normalized at every instant.
    pub fn new(spatial: SpatialProfile, temporal: TemporalSwitch) -> Result<Self> {
        Self::with_normalization(spatial, temporal, Normalization::PerInstant)
    }

    pub fn with_normalization(spatial: SpatialProfile, temporal: TemporalSwitch, normalization: Normalization) -> Result<Self> {
        if !(spatial.period > 0.0 && spatial.period.is_finite()) {
            return Err(invalid("period", "must be positive"));
        }
        if let Some(h) = temporal.half_period() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("temporal period", "must be positive"));
            }
        }
        let (fmin, fmax) = (spatial.min_bound(), spatial.max_bound());
        let values = temporal.values();
        for &f in &values {
            let lowest = 1.0 + if f >= 0.0 { f * fmin } else { f * fmax };
            if lowest < 0.0 {
                return Err(Error::NonPositiveProfile { min: lowest });
            }
        }
        // every switch value is held for the same fraction of the period
        let squares: Vec<f64> = values.iter().map(|&f| Self::mean_square(&spatial, f)).collect();
        let overall = squares.iter().sum::<f64>() / squares.len() as f64;
        let normalizers = values
            .iter()
            .zip(&squares)
            .map(|(&f, &sq)| {
                let c = match normalization {
                    Normalization::PerInstant => sq.powf(-0.5),
                    Normalization::PeriodAverage => overall.powf(-0.5),
                    Normalization::None => 1.0,
                };
                (f, c)
            })
            .collect();
        Ok(GProfile {
            spatial,
            temporal,
            normalization,
            normalizers,
        })
    }

    /// `⟨(1 + fF)²⟩`, closed form for zero-mean `F` and by quadrature otherwise.
    fn mean_square(spatial: &SpatialProfile, f: f64) -> f64 {
        if spatial.offset == 0.0 {
            1.0 + f * f * spatial.mean_square()
        } else {
            quadrature::integrate(|x| (1.0 + f * spatial.eval(x)).powi(2), 0.0, spatial.period, 1e-13).integral
                / spatial.period
        }
    }

    pub fn period(&self) -> f64 {
        self.spatial.period
    }

    pub fn f(&self, t: f64) -> f64 {
        self.temporal.eval(t)
    }

    pub fn c(&self, t: f64) -> f64 {
        let f = self.f(t);
        self.normalizers
            .iter()
            .find(|&&(v, _)| v == f)
            .map(|&(_, c)| c)
            .expect("normalizers cover every switch value")
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.c(t) * (1.0 + self.spatial.eval(x) * self.f(t))
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self.temporal, TemporalSwitch::Constant { .. }) || self.spatial.is_flat() && self.normalizers.len() == 1
    }

    fn time_dependence(&self) -> TimeDependence {
        match self.temporal {
            TemporalSwitch::Constant { .. } => TimeDependence::Static,
            sw => TimeDependence::Piecewise(Arc::new(move |t| sw.next_switch(t))),
        }
    }

    pub fn form_factor(&self) -> FormFactor {
        let g = self.clone();
        FormFactor::new(move |x, t| g.eval(x, t), self.time_dependence())
    }

    /// Spatial mean of `g^p` at time `t`, by quadrature.
    pub fn spatial_mean_pow(&self, p: i32, t: f64) -> f64 {
        quadrature::integrate(|x| self.eval(x, t).powi(p), 0.0, self.period(), 1e-13).integral / self.period()
    }
}

/// `F = a (sin x + b sin 2x)` with the on/off switch of period `2π`.
pub fn reference_profile_spacetime() -> GProfile {
    GProfile::new(SpatialProfile::two_harmonic(-0.6, -0.5), TemporalSwitch::OnOff { period: TAU })
        .expect("fixed profile is positive")
}

/// Time-independent `F = -0.8 sin x`.
pub fn reference_profile_seebeck() -> GProfile {
    GProfile::new(SpatialProfile::two_harmonic(-0.8, 0.0), TemporalSwitch::Constant { value: 1.0 })
        .expect("fixed profile is positive")
}

/// `F = -0.8 sin x` switched by `sign(sin t)`.
pub fn alternating_profile() -> GProfile {
    GProfile::new(SpatialProfile::two_harmonic(-0.8, 0.0), TemporalSwitch::SignSin { period: TAU })
        .expect("fixed profile is positive")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `x → -∞`, coordinate `x_← = x + X`.
    Left,
    /// `x → +∞`, coordinate `x_→ = x - X`.
    Right,
}

/// `μ = ∓g²`, `D = g²/2`.
pub fn asymptotic_coefficients(g: &GProfile, side: Side) -> FpCoefficients {
    let sign = match side {
        Side::Left => -1.0,
        Side::Right => 1.0,
    };
    let (g1, g2) = (g.clone(), g.clone());
    FpCoefficients::new(
        Chart::X,
        move |x, t| sign * g1.eval(x, t).powi(2),
        move |x, t| 0.5 * g2.eval(x, t).powi(2),
        g.time_dependence(),
    )
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurrentRecord {
    pub times: Vec<f64>,
    /// `∫ J̃ dx_←` at each time. At a switching instant two entries share the
    /// time: the value just before and just after the switch.
    pub currents: Vec<f64>,
    /// Running averages `(1/t) ∫₀ᵗ current` (NaN at `t = 0`).
    pub averages: Vec<f64>,
}

impl CurrentRecord {
    fn push(&mut self, t: f64, current: f64) {
        let avg = match (self.times.last(), self.currents.last(), self.averages.last()) {
            (Some(&t0), Some(&c0), Some(&a0)) if t > 0.0 => {
                let integral = if t0 > 0.0 { a0 * t0 } else { 0.0 };
                (integral + 0.5 * (c0 + current) * (t - t0)) / t
            }
            _ => f64::NAN,
        };
        self.times.push(t);
        self.currents.push(current);
        self.averages.push(avg);
    }

    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }
}

/// `(1/t) ∫₀ᵗ current dτ` by the trapezoid rule on the recorded series,
/// interpolating linearly inside the last interval.
pub fn moving_average(rec: &CurrentRecord, t: f64) -> Result<f64> {
    if rec.times.is_empty() || !(t > 0.0) || t > rec.end_time() * (1.0 + 1e-12) {
        return Err(invalid("t", format!("{t} is outside the record")));
    }
    let mut integral = 0.0;
    for k in 1..rec.times.len() {
        let (t0, t1) = (rec.times[k - 1], rec.times[k]);
        let (c0, c1) = (rec.currents[k - 1], rec.currents[k]);
        if t1 <= t {
            integral += 0.5 * (c0 + c1) * (t1 - t0);
        } else {
            if t > t0 {
                let ct = c0 + (c1 - c0) * (t - t0) / (t1 - t0);
                integral += 0.5 * (c0 + ct) * (t - t0);
            }
            break;
        }
    }
    Ok(integral / t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOptions {
    pub cells: usize,
    pub t_end: f64,
    /// Spacing of current samples.
    pub record_every: f64,
    pub snapshot_times: Vec<f64>,
    pub side: Side,
    /// Width parameter `s` of the initial `exp(-x²/s)`.
    pub initial_width: f64,
    pub solver: SolverOptions,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        ReducedOptions {
            cells: 256,
            t_end: 50.0,
            record_every: 0.05,
            snapshot_times: Vec::new(),
            side: Side::Left,
            initial_width: 0.1,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedRun {
    pub record: CurrentRecord,
    pub snapshots: Vec<Field>,
    pub final_field: Field,
    pub audit: SolverAudit,
}

impl ReducedRun {
    /// Whether the moving average moved by less than `tol` over the last 20% of the run.
    pub fn converged(&self, tol: f64) -> bool {
        let t = self.record.end_time();
        match (moving_average(&self.record, 0.8 * t), moving_average(&self.record, t)) {
            (Ok(a), Ok(b)) => (a - b).abs() < tol,
            _ => false,
        }
    }
}

/// Periodic grid on `[-L/2, L/2)` holding the wrapped, normalized `exp(-x²/s)`.
pub fn reduced_initial(period: f64, cells: usize, width: f64) -> Result<Field> {
    if !(width > 0.0) {
        return Err(invalid("initial_width", "must be positive"));
    }
    Field::sampled(Chart::X, -0.5 * period, 0.5 * period, cells, BoundaryCondition::Periodic, |x| {
        (-4..=4).map(|k| (-(x + k as f64 * period).powi(2) / width).exp()).sum()
    })?
    .normalized()
}

pub fn solve_reduced(g: &GProfile, opts: &ReducedOptions) -> Result<ReducedRun> {
    if !(opts.t_end > 0.0 && opts.record_every > 0.0) {
        return Err(invalid("t_end", "run length and sampling interval must be positive"));
    }
    let init = reduced_initial(g.period(), opts.cells, opts.initial_width)?;
    let mut stepper = FpStepper::new(init, asymptotic_coefficients(g, opts.side), opts.solver)?;
    let mut record = CurrentRecord::default();
    record.push(0.0, stepper.drift_velocity());
    let mut snaps: Vec<f64> = opts.snapshot_times.iter().copied().filter(|&s| s > 0.0 && s <= opts.t_end).collect();
    snaps.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    if opts.snapshot_times.contains(&0.0) {
        snapshots.push(stepper.snapshot());
    }
    let mut snap_iter = snaps.into_iter().peekable();
    let mut k = 1u64;
    loop {
        let t = stepper.time();
        if t >= opts.t_end {
            break;
        }
        let next_sample = (k as f64 * opts.record_every).min(opts.t_end);
        let next_switch = g.temporal.next_switch(t);
        let next_snap = snap_iter.peek().copied().unwrap_or(f64::INFINITY);
        let target = next_sample.min(next_switch).min(next_snap);
        stepper.advance_to(target)?;
        let now = stepper.time();
        if now >= next_switch {
            // left limit with the expiring coefficients, then the right limit
            record.push(now, stepper.drift_velocity_cached());
            record.push(now, stepper.drift_velocity());
        } else if now >= next_sample {
            record.push(now, stepper.drift_velocity());
        }
        if now >= next_sample {
            k += 1;
        }
        if now >= next_snap {
            snapshots.push(stepper.snapshot());
            snap_iter.next();
        }
    }
    let audit = stepper.audit().clone();
    let final_field = stepper.snapshot();
    Ok(ReducedRun {
        record,
        snapshots,
        final_field,
        audit,
    })
}

/// `-1/⟨g⁻²⟩`, the stationary current of a time-independent profile: in the
/// steady state `J̃` is constant and periodicity forces `g²P̃` to be constant.
pub fn seebeck_steady_current(g: &GProfile) -> Result<f64> {
    if !g.is_time_independent() {
        return Err(invalid("profile", "must be time-independent"));
    }
    let min = (0..4096)
        .map(|i| g.eval(i as f64 * g.period() / 4096.0, 0.0))
        .fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositiveProfile { min });
    }
    Ok(-1.0 / g.spatial_mean_pow(-2, 0.0))
}

/// Time-steps the reduced problem until the current changes by less than
/// `tol` over one unit of time; returns the final current.
pub fn numerical_steady_current(g: &GProfile, cells: usize, tol: f64, t_max: f64) -> Result<f64> {
    if !g.is_time_independent() {
        return Err(invalid("profile", "must be time-independent"));
    }
    let init = reduced_initial(g.period(), cells, 0.1)?;
    let mut stepper = FpStepper::new(init, asymptotic_coefficients(g, Side::Left), SolverOptions::default())?;
    let mut prev = stepper.drift_velocity();
    let mut t = 0.0;
    while t < t_max {
        t += 1.0;
        stepper.advance_to(t)?;
        let cur = stepper.drift_velocity();
        if (cur - prev).abs() < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(invalid("t_max", format!("current did not settle to {tol:e} by t={t_max}")))
}

/// `(Π_X - Π)/(1 - Π) · g̃` on the branch `Π < Π_X`.
pub fn localization_g(pi: f64, pi_x: f64, tilde_g: f64) -> Result<f64> {
    check_pi_x(pi_x)?;
    if !(pi >= 0.0 && pi < pi_x) {
        return Err(Error::OutsideBranch {
            value: pi,
            reason: "the lower branch needs 0 ≤ Π < Π_X",
        });
    }
    Ok((pi_x - pi) / (1.0 - pi) * tilde_g)
}

/// `(Π - Π_X)/Π · g̃` on the branch `Π > Π_X`.
pub fn localization_g_upper(pi: f64, pi_x: f64, tilde_g: f64) -> Result<f64> {
    check_pi_x(pi_x)?;
    if !(pi > pi_x && pi <= 1.0) {
        return Err(Error::OutsideBranch {
            value: pi,
            reason: "the upper branch needs Π_X < Π ≤ 1",
        });
    }
    Ok((pi - pi_x) / pi * tilde_g)
}

fn check_pi_x(pi_x: f64) -> Result<()> {
    if pi_x > 0.0 && pi_x < 1.0 {
        Ok(())
    } else {
        Err(invalid("pi_x", "must lie in (0, 1)"))
    }
}

pub type PiProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Form factor over the whole Π chart, vanishing at `Π_X` (which is
/// registered as a barrier). `tilde_g` is a function of `Π`.
pub fn localization_profile(pi_x: f64, tilde_g: PiProfile) -> Result<FormFactor> {
    check_pi_x(pi_x)?;
    let g = move |p: f64, _t: f64| {
        if p < pi_x {
            (pi_x - p) / (1.0 - p) * tilde_g(p)
        } else if p > pi_x {
            (p - pi_x) / p * tilde_g(p)
        } else {
            0.0
        }
    };
    Ok(FormFactor::new(g, TimeDependence::Static).with_barriers(vec![pi_x]))
}

/// The lower-branch problem rewritten in `Π̃ = Π/Π_X`, `t̃ = Π_X² t`, where it
/// becomes an ordinary walk on `[0, 1]` with form factor `g̃(Π_X Π̃)`.
#[derive(Clone)]
pub struct RescaledProblem {
    pub pi_x: f64,
    /// Π̃-chart coefficients in rescaled time.
    pub coefficients: FpCoefficients,
}

impl RescaledProblem {
    pub fn to_pi(&self, pi_tilde: f64) -> f64 {
        pi_tilde * self.pi_x
    }

    pub fn to_time(&self, t_tilde: f64) -> f64 {
        t_tilde / (self.pi_x * self.pi_x)
    }

    pub fn to_rescaled_time(&self, t: f64) -> f64 {
        t * self.pi_x * self.pi_x
    }

    /// Density in `Π` from a density in `Π̃`.
    pub fn to_pi_density(&self, p_tilde: f64) -> f64 {
        p_tilde / self.pi_x
    }
}

pub fn rescale_equivalence(pi_x: f64, tilde_g: PiProfile) -> Result<RescaledProblem> {
    check_pi_x(pi_x)?;
    let g = FormFactor::new(move |pt: f64, _| tilde_g(pi_x * pt), TimeDependence::Static);
    Ok(RescaledProblem {
        pi_x,
        coefficients: coefficients_pi(&g),
    })
}

/// Amplitudes `(A, B)` of `|X⟩ = A|0⟩ + B|1⟩` with `A = √Π_X`, `B = √(1 - Π_X)`.
/// With this assignment the `|1⟩` population of `|X⟩` is `1 - Π_X`.
pub fn build_state_x(pi_x: f64) -> Result<(f64, f64)> {
    check_pi_x(pi_x)?;
    Ok((pi_x.sqrt(), (1.0 - pi_x).sqrt()))
}

/// Probability that a walk started at `pi0` ends at `|X⟩` rather than at the
/// basis state on its own side.
pub fn absorption_probability_at_x(pi0: f64, pi_x: f64) -> Result<f64> {
    check_pi_x(pi_x)?;
    if !(0.0..=1.0).contains(&pi0) {
        return Err(invalid("pi0", "must lie in [0, 1]"));
    }
    Ok(if pi0 < pi_x {
        pi0 / pi_x
    } else {
        (1.0 - pi0) / (1.0 - pi_x)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn switches() {
        let on_off = TemporalSwitch::OnOff { period: TAU };
        assert_eq!(on_off.eval(0.0), 0.0);
        assert_eq!(on_off.eval(1.0), 0.0);
        assert_eq!(on_off.eval(PI), -1.0);
        assert_eq!(on_off.eval(4.0), -1.0);
        assert_eq!(on_off.eval(TAU + 0.1), 0.0);
        assert_eq!(on_off.next_switch(0.0), PI);
        assert_eq!(on_off.next_switch(PI), TAU);
        let s = TemporalSwitch::SignSin { period: TAU };
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(3.5), -1.0);
    }

    #[test]
    fn spacetime_profile_normalization() {
        let g = reference_profile_spacetime();
        // f = 0 phase: g ≡ 1
        assert_eq!(g.eval(0.7, 1.0), 1.0);
        assert_abs_diff_eq!(g.c(4.0), 1.225f64.powf(-0.5), epsilon = 1e-15);
        for t in [1.0, 4.0] {
            assert_abs_diff_eq!(g.spatial_mean_pow(2, t), 1.0, epsilon = 1e-10);
        }
        let min = (0..1000).map(|i| 1.0 - g.spatial.eval(i as f64 * TAU / 1000.0)).fold(f64::INFINITY, f64::min);
        assert!(min >= 0.1 - 1e-12);
    }

    #[test]
    fn seebeck_profile_normalization() {
        let g = reference_profile_seebeck();
        assert_abs_diff_eq!(g.c(0.0), 1.0 / 1.32f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.spatial_mean_pow(2, 0.0), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(g.eval(PI / 2.0, 0.0), 0.2 / 1.32f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn offset_profiles_use_quadrature_normalizer() {
        let sp = SpatialProfile {
            period: TAU,
            offset: 0.2,
            terms: vec![(1, 0.3, 0.1)],
        };
        let g = GProfile::new(sp, TemporalSwitch::Constant { value: 1.0 }).unwrap();
        assert_abs_diff_eq!(g.spatial_mean_pow(2, 0.0), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn negative_profiles_are_rejected() {
        let r = GProfile::new(SpatialProfile::two_harmonic(-0.9, 0.5), TemporalSwitch::Constant { value: 1.0 });
        assert!(matches!(r, Err(Error::NonPositiveProfile { .. })));
    }

    #[test]
    fn asymptotic_coefficient_values() {
        let one = GProfile::new(SpatialProfile::flat(0.0), TemporalSwitch::Constant { value: 1.0 }).unwrap();
        let left = asymptotic_coefficients(&one, Side::Left);
        let right = asymptotic_coefficients(&one, Side::Right);
        assert_eq!((left.mu(0.3, 0.0), left.diffusion(0.3, 0.0)), (-1.0, 0.5));
        assert_eq!(right.mu(0.3, 0.0), 1.0);
        let g = reference_profile_spacetime();
        let c = asymptotic_coefficients(&g, Side::Left);
        assert_abs_diff_eq!(c.mu(0.0, 4.0), -g.c(4.0).powi(2), epsilon = 1e-15);
    }

    #[test]
    fn seebeck_closed_form() {
        let g = reference_profile_seebeck();
        let j = seebeck_steady_current(&g).unwrap();
        // ⟨(1 + a sin x)⁻²⟩ = (1 - a²)^{-3/2}, times C⁻² = 1.32
        let expect = -(1.0f64 - 0.64).powf(1.5) / 1.32;
        assert_abs_diff_eq!(j, expect, epsilon = 1e-10);
        assert_abs_diff_eq!(j, -0.16363636363636364, epsilon = 1e-10);
        assert!(seebeck_steady_current(&reference_profile_spacetime()).is_err());
    }

    #[test]
    fn moving_average_of_constant_series() {
        let mut rec = CurrentRecord::default();
        for k in 0..=10 {
            rec.push(k as f64 * 0.5, -0.7);
        }
        assert_abs_diff_eq!(moving_average(&rec, 5.0).unwrap(), -0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(moving_average(&rec, 1.3).unwrap(), -0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(*rec.averages.last().unwrap(), -0.7, epsilon = 1e-15);
        assert!(moving_average(&rec, 6.0).is_err());
    }

    #[test]
    fn localization_branch_values() {
        assert_abs_diff_eq!(localization_g(0.35, 0.7, 1.0).unwrap(), 0.35 / 0.65, epsilon = 1e-15);
        assert_eq!(localization_g(0.0, 0.7, 1.0).unwrap(), 0.7);
        assert!(localization_g(0.7, 0.7, 1.0).is_err());
        assert!(localization_g(0.9, 0.7, 1.0).is_err());
        let near = localization_g(0.7 - 1e-6, 0.7, 1.0).unwrap();
        assert_abs_diff_eq!(near / 1e-6, 1.0 / 0.3, epsilon = 1e-4);
        assert_abs_diff_eq!(localization_g_upper(0.8, 0.7, 1.0).unwrap(), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn state_x_amplitudes() {
        let (a, b) = build_state_x(0.5).unwrap();
        assert_abs_diff_eq!(a, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-16);
        assert_abs_diff_eq!(b, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-16);
        assert_eq!(build_state_x(0.25).unwrap(), (0.5, 0.75f64.sqrt()));
        assert!(build_state_x(1.0).is_err());
    }

    #[test]
    fn rescaled_unit_strength_is_plain_walk() {
        let r = rescale_equivalence(0.6, Arc::new(|_| 1.0)).unwrap();
        let plain = coefficients_pi(&FormFactor::constant(1.0));
        for p in [0.1, 0.5, 0.9] {
            assert_eq!(r.coefficients.diffusion(p, 0.0), plain.diffusion(p, 0.0));
        }
        assert_abs_diff_eq!(r.to_time(r.to_rescaled_time(3.0)), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn absorption_probabilities() {
        assert_abs_diff_eq!(absorption_probability_at_x(0.3, 0.6).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(absorption_probability_at_x(0.8, 0.6).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unit_profile_current_is_minus_one() {
        let one = GProfile::new(SpatialProfile::flat(0.0), TemporalSwitch::Constant { value: 1.0 }).unwrap();
        let run = solve_reduced(
            &one,
            &ReducedOptions {
                cells: 64,
                t_end: 40.0,
                ..ReducedOptions::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(*run.record.currents.last().unwrap(), -1.0, epsilon = 1e-12);
        let l = TAU;
        for v in &run.final_field.values {
            assert_abs_diff_eq!(*v, 1.0 / l, epsilon = 1e-6);
        }
    }
}
