//! Finite-volume solver for `∂ₜP = -∂ᵧJ`, `J = μP - ∂ᵧ(DP)`.
//!
//! Face fluxes are exponentially fitted (Scharfetter–Gummel / Chang–Cooper)
//! in the variable `u = DP`, for which `J = (μ/D) u - ∂ᵧu`:
//!
//! ```text
//! J_f = [B(-w h) u_left - B(w h) u_right] / h,   w = μ_f / D_f,   B(z) = z/(eᶻ-1)
//! ```
//!
//! The scheme is central (second order) for small `w h`, upwind for large
//! `w h`, and keeps both weights nonnegative. Without drift it reduces to the
//! pure-diffusion difference `-(u_right - u_left)/h`, so sums of fluxes
//! telescope. Faces with `D_f = 0` fall back to upwinding `μ P`.
//!
//! Time stepping is the two-stage strong-stability-preserving Runge–Kutta
//! method.

use serde::{Deserialize, Serialize};

use super::coefficients::{FpCoefficients, TimeDependence};
use crate::error::{invalid, Error, Result};
use crate::measurement::Chart;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    ZeroFlux,
    Periodic,
    /// Density vanishes just outside the domain; outflow is counted as absorbed.
    Absorbing,
}

/// Cell averages of `P` on a uniform grid, plus face fluxes when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub chart: Chart,
    pub lo: f64,
    pub width: f64,
    pub values: Vec<f64>,
    pub t: f64,
    pub bc: BoundaryCondition,
    /// Fluxes at the `cells + 1` faces; empty if not computed.
    pub flux: Vec<f64>,
    /// Mass that left through absorbing boundaries.
    pub absorbed: f64,
}

impl Field {
    pub fn zeros(chart: Chart, lo: f64, hi: f64, cells: usize, bc: BoundaryCondition) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || cells < 3 {
            return Err(invalid("grid", "need finite hi > lo and at least three cells"));
        }
        Ok(Field {
            chart,
            lo,
            width: (hi - lo) / cells as f64,
            values: vec![0.0; cells],
            t: 0.0,
            bc,
            flux: Vec::new(),
            absorbed: 0.0,
        })
    }

    /// `f` sampled at the cell centres.
    pub fn sampled(
        chart: Chart,
        lo: f64,
        hi: f64,
        cells: usize,
        bc: BoundaryCondition,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let mut field = Self::zeros(chart, lo, hi, cells, bc)?;
        for i in 0..cells {
            field.values[i] = f(field.node(i));
        }
        if field.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("initial", "density must be finite and nonnegative"));
        }
        Ok(field)
    }

    /// Rescaled to unit mass.
    pub fn normalized(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(invalid("initial", "density has zero mass"));
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(self)
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.width * self.cells() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.width * (i as f64 + 0.5)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.node(i)).collect()
    }

    pub fn face(&self, f: usize) -> f64 {
        self.lo + self.width * f as f64
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.width
    }

    /// `∫ φ P dy` by the midpoint rule.
    pub fn expectation(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| phi(self.node(i)) * v)
            .sum::<f64>()
            * self.width
    }

    /// Mass in cells whose centre lies above `y`.
    pub fn mass_above(&self, y: f64) -> f64 {
        (0..self.cells())
            .filter(|&i| self.node(i) > y)
            .map(|i| self.values[i])
            .sum::<f64>()
            * self.width
    }

    /// `√(Σ (P - p(y))² h)` against point values of `p` at the centres.
    pub fn l2_distance(&self, p: impl Fn(f64) -> f64) -> f64 {
        (self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - p(self.node(i))).powi(2))
            .sum::<f64>()
            * self.width)
            .sqrt()
    }

    /// Mass per histogram bin given by sorted `edges`, splitting each cell by
    /// its overlap with the bins. Mass outside the edges is dropped.
    pub fn binned(&self, edges: &[f64]) -> Vec<f64> {
        let bins = edges.len().saturating_sub(1);
        let mut out = vec![0.0; bins];
        for i in 0..self.cells() {
            let (a, b) = (self.face(i), self.face(i + 1));
            let first = edges.partition_point(|&e| e <= a).max(1);
            for k in first..=bins {
                if edges[k - 1] >= b {
                    break;
                }
                let overlap = b.min(edges[k]) - a.max(edges[k - 1]);
                if overlap > 0.0 {
                    out[k - 1] += self.values[i] * overlap;
                }
            }
        }
        out
    }

    fn distinct_faces(&self) -> std::ops::Range<usize> {
        match self.bc {
            // face 0 and face N are the same face
            BoundaryCondition::Periodic => 1..self.cells() + 1,
            _ => 0..self.cells() + 1,
        }
    }
}

/// `∫ J dy` over the domain, i.e. the rate of change of `⟨y⟩`. Requires fluxes.
pub fn drift_velocity(field: &Field) -> Result<f64> {
    if field.flux.len() != field.cells() + 1 {
        return Err(invalid("field", "fluxes have not been computed"));
    }
    Ok(field.distinct_faces().map(|f| field.flux[f]).sum::<f64>() * field.width)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Fraction of the stability limit used for the time step.
    pub cfl: f64,
    /// Fixed time step; rejected if above the stability limit.
    pub dt: Option<f64>,
    pub mass_tolerance: f64,
    pub negativity_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            cfl: 0.4,
            dt: None,
            mass_tolerance: 1e-8,
            negativity_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverAudit {
    pub steps: u64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub initial_mass: f64,
    /// Largest `|M(t) + absorbed - M(0)| / M(0)` seen.
    pub max_mass_drift: f64,
    /// Total negative mass removed by clipping.
    pub clipped_mass: f64,
}

/// `B(z) = z / (eᶻ - 1)`.
fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-10 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

/// Advances a [`Field`] in time. Face weights are cached for static
/// coefficients and refreshed once per epoch for piecewise-constant ones.
pub struct FpStepper {
    field: Field,
    coeffs: FpCoefficients,
    opts: SolverOptions,
    a: Vec<f64>,
    b: Vec<f64>,
    barrier_faces: Vec<usize>,
    dt_limit: f64,
    /// Weights are valid for `t < valid_until`.
    valid_until: f64,
    audit: SolverAudit,
    flux: Vec<f64>,
    stage: Vec<f64>,
}

impl FpStepper {
    pub fn new(field: Field, coeffs: FpCoefficients, opts: SolverOptions) -> Result<Self> {
        if field.chart != coeffs.chart {
            return Err(invalid("chart", "field and coefficients use different charts"));
        }
        if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
            return Err(invalid("cfl", "must lie in (0, 1]"));
        }
        let mut barrier_faces = Vec::new();
        for &bar in &coeffs.barriers {
            let pos = (bar - field.lo) / field.width;
            let f = pos.round();
            if (pos - f).abs() > 1e-6 || f < 0.0 || f > field.cells() as f64 {
                return Err(invalid("barrier", format!("{bar} does not lie on a cell face")));
            }
            barrier_faces.push(f as usize);
        }
        let n = field.cells();
        let initial_mass = field.mass();
        let mut s = FpStepper {
            a: vec![0.0; n + 1],
            b: vec![0.0; n + 1],
            flux: vec![0.0; n + 1],
            stage: vec![0.0; n],
            barrier_faces,
            dt_limit: f64::INFINITY,
            valid_until: f64::NEG_INFINITY,
            audit: SolverAudit {
                initial_mass,
                dt_min: f64::INFINITY,
                ..SolverAudit::default()
            },
            field,
            coeffs,
            opts,
        };
        s.field.flux.clear();
        Ok(s)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.field.t
    }

    pub fn audit(&self) -> &SolverAudit {
        &self.audit
    }

    /// Recomputes face weights for coefficients at time `t`, and the step limit.
    fn refresh(&mut self, t: f64) {
        let f = &self.field;
        let h = f.width;
        let n = f.cells();
        let c = &self.coeffs;
        let mut max_d: f64 = 0.0;
        let mut max_mu: f64 = 0.0;
        for i in 0..n {
            let y = f.node(i);
            max_d = max_d.max(c.diffusion(y, t));
            max_mu = max_mu.max(c.mu(y, t).abs());
        }
        for face in 0..=n {
            let y = f.face(face);
            let d = c.diffusion(y, t);
            let mu = c.mu(y, t);
            let (a, b) = if d > 0.0 {
                let wh = mu / d * h;
                let (dl, dr) = (c.diffusion(y - 0.5 * h, t), c.diffusion(y + 0.5 * h, t));
                (bernoulli(-wh) * dl / h, bernoulli(wh) * dr / h)
            } else {
                (mu.max(0.0), (-mu).max(0.0))
            };
            self.a[face] = a;
            self.b[face] = b;
        }
        for &face in &self.barrier_faces {
            self.a[face] = 0.0;
            self.b[face] = 0.0;
        }
        if f.bc == BoundaryCondition::ZeroFlux {
            self.a[0] = 0.0;
            self.b[0] = 0.0;
            self.a[n] = 0.0;
            self.b[n] = 0.0;
        }
        // explicit-Euler positivity: outflow rate of every cell times dt ≤ 1
        let max_out = (0..n).map(|i| self.b[i] + self.a[i + 1]).fold(0.0, f64::max);
        let mut limit = f64::INFINITY;
        if max_d > 0.0 {
            limit = limit.min(h * h / (2.0 * max_d));
        }
        if max_mu > 0.0 {
            limit = limit.min(h / max_mu);
        }
        limit *= self.opts.cfl;
        if max_out > 0.0 {
            limit = limit.min(0.9 / max_out);
        }
        self.dt_limit = limit;
    }

    fn ensure_weights(&mut self, t: f64) {
        match self.coeffs.time.clone() {
            TimeDependence::Static => {
                if self.valid_until == f64::NEG_INFINITY {
                    self.refresh(t);
                    self.valid_until = f64::INFINITY;
                }
            }
            TimeDependence::Piecewise(next) => {
                if t >= self.valid_until || self.valid_until == f64::NEG_INFINITY {
                    let end = next(t);
                    // sample inside the epoch, away from the switching instant itself
                    let probe = if end.is_finite() { 0.5 * (t + end) } else { t };
                    self.refresh(probe);
                    self.valid_until = end;
                }
            }
            TimeDependence::Continuous => self.refresh(t),
        }
    }

    fn compute_flux(&mut self, p: &[f64]) {
        let n = p.len();
        for face in 1..n {
            self.flux[face] = self.a[face] * p[face - 1] - self.b[face] * p[face];
        }
        match self.field.bc {
            BoundaryCondition::ZeroFlux => {
                self.flux[0] = 0.0;
                self.flux[n] = 0.0;
            }
            BoundaryCondition::Periodic => {
                let j = self.a[0] * p[n - 1] - self.b[0] * p[0];
                self.flux[0] = j;
                self.flux[n] = j;
            }
            BoundaryCondition::Absorbing => {
                self.flux[0] = -self.b[0] * p[0];
                self.flux[n] = self.a[n] * p[n - 1];
            }
        }
    }

    /// `out = p - dt/h (J_{i+1} - J_i)`
    fn euler(&mut self, p: &[f64], dt: f64, out: &mut [f64]) {
        self.compute_flux(p);
        let r = dt / self.field.width;
        for i in 0..p.len() {
            out[i] = p[i] - r * (self.flux[i + 1] - self.flux[i]);
        }
    }

    /// One step, never past `t_max` or the end of the current coefficient epoch.
    pub fn step(&mut self, t_max: f64) -> Result<f64> {
        let t = self.field.t;
        self.ensure_weights(t);
        let limit = self.dt_limit;
        let mut dt = match self.opts.dt {
            Some(dt) if dt > limit * (1.0 + 1e-12) => return Err(Error::CflViolation { dt, limit }),
            Some(dt) => dt,
            None => limit,
        };
        dt = dt.min(t_max - t).min(self.valid_until - t);
        if !(dt > 0.0) {
            return Ok(0.0);
        }
        // avoid leaving a sliver that would need a tiny extra step
        let rest = t_max.min(self.valid_until) - (t + dt);
        if rest > 0.0 && rest < 1e-9 * dt.max(1.0) {
            dt += rest;
        }

        let before = self.field.mass() + self.field.absorbed;
        let p = std::mem::take(&mut self.field.values);
        let mut stage = std::mem::take(&mut self.stage);
        self.euler(&p, dt, &mut stage);
        if matches!(self.coeffs.time, TimeDependence::Continuous) {
            self.refresh(t + dt);
        }
        let mut second = vec![0.0; p.len()];
        self.euler(&stage, dt, &mut second);
        let mut next = p;
        for i in 0..next.len() {
            next[i] = 0.5 * (next[i] + second[i]);
        }
        self.stage = stage;
        self.field.values = next;
        self.field.t = t + dt;
        self.post_step(dt, before)?;
        Ok(dt)
    }

    fn post_step(&mut self, dt: f64, before: f64) -> Result<()> {
        let tol = self.opts.negativity_tolerance;
        for (i, v) in self.field.values.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < -tol {
                    return Err(Error::NegativeDensity { value: *v, cell: i });
                }
                self.audit.clipped_mass -= *v * self.field.width;
                *v = 0.0;
            }
        }
        let mass = self.field.mass();
        if self.field.bc == BoundaryCondition::Absorbing {
            // whatever left the grid during the step went through the walls
            self.field.absorbed += (before - self.field.absorbed - mass).max(0.0);
        }
        let m0 = self.audit.initial_mass;
        let drift = ((mass + self.field.absorbed - m0) / m0).abs();
        self.audit.max_mass_drift = self.audit.max_mass_drift.max(drift);
        if self.field.bc != BoundaryCondition::Absorbing && drift > self.opts.mass_tolerance {
            return Err(Error::MassDrift {
                drift,
                tolerance: self.opts.mass_tolerance,
            });
        }
        self.audit.steps += 1;
        self.audit.dt_min = self.audit.dt_min.min(dt);
        self.audit.dt_max = self.audit.dt_max.max(dt);
        Ok(())
    }

    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        while self.field.t < t_target {
            if self.step(t_target)? == 0.0 {
                break;
            }
        }
        Ok(())
    }

    /// Face fluxes of the current density with coefficients at the current time.
    pub fn current_flux(&mut self) -> Vec<f64> {
        let t = self.field.t;
        self.ensure_weights(t);
        let p = std::mem::take(&mut self.field.values);
        self.compute_flux(&p);
        self.field.values = p;
        self.flux.clone()
    }

    pub fn drift_velocity(&mut self) -> f64 {
        let flux = self.current_flux();
        self.field.distinct_faces().map(|f| flux[f]).sum::<f64>() * self.field.width
    }

    /// Like [`FpStepper::drift_velocity`] but with the face weights of the
    /// epoch that just ended: the left limit at a switching instant.
    pub fn drift_velocity_cached(&mut self) -> f64 {
        if self.valid_until == f64::NEG_INFINITY {
            return self.drift_velocity();
        }
        let p = std::mem::take(&mut self.field.values);
        self.compute_flux(&p);
        self.field.values = p;
        self.field.distinct_faces().map(|f| self.flux[f]).sum::<f64>() * self.field.width
    }

    /// Copy of the current field with its fluxes filled in.
    pub fn snapshot(&mut self) -> Field {
        let flux = self.current_flux();
        Field {
            flux,
            ..self.field.clone()
        }
    }

    pub fn into_field(self) -> Field {
        self.field
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpSolution {
    /// Fields at the requested times (those up to `t_end`), then at `t_end`.
    pub snapshots: Vec<Field>,
    pub audit: SolverAudit,
}

impl FpSolution {
    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("a solution holds the final field")
    }
}

pub fn solve(
    initial: &Field,
    coeffs: &FpCoefficients,
    t_end: f64,
    snapshot_times: &[f64],
    opts: SolverOptions,
) -> Result<FpSolution> {
    if !(t_end >= initial.t) {
        return Err(invalid("t_end", "must not precede the initial time"));
    }
    let mut times: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|&s| s >= initial.t && s < t_end)
        .collect();
    times.sort_by(f64::total_cmp);
    times.push(t_end);
    let mut stepper = FpStepper::new(initial.clone(), coeffs.clone(), opts)?;
    let mut snapshots = Vec::with_capacity(times.len());
    for t in times {
        stepper.advance_to(t)?;
        snapshots.push(stepper.snapshot());
    }
    Ok(FpSolution {
        snapshots,
        audit: stepper.audit().clone(),
    })
}
