//! Deterministic evolution of the density `P(n, x)` on a uniform x grid.
//!
//! Each step pushes the mass of every cell forward to `x + ε_i(x)` with weight
//! `p_i(x)`. A pushed packet is split between the two neighbouring cell
//! centres linearly in `Π`, not in `x`: the split then reproduces both the
//! packet's mass and its `Π`, so the ensemble average of `Π` is conserved to
//! rounding regardless of the resolution.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measurement::{outcome_probabilities_x, pi_difference, pi_of_x, step_sizes, Chart, MeasurementParams};
use crate::schedule::{Schedule, StepValues};
use crate::trajectory::{HistogramSpec, X_MAX};

pub const DEFAULT_CELLS: usize = 8192;
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdfGrid {
    chart: Chart,
    nodes: Vec<f64>,
    width: f64,
    values: Vec<f64>,
    /// Number of steps applied so far; the next step uses schedule index `step + 1`.
    pub step: u64,
    absorbed_mass: f64,
    absorbed_pi: f64,
    pub boundary_tolerance: f64,
}

impl PdfGrid {
    /// Zero density on `cells` equal cells spanning `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || cells < 2 {
            return Err(invalid("grid", "need finite hi > lo and at least two cells"));
        }
        let width = (hi - lo) / cells as f64;
        Ok(PdfGrid {
            chart: Chart::X,
            nodes: (0..cells).map(|k| lo + width * (k as f64 + 0.5)).collect(),
            width,
            values: vec![0.0; cells],
            step: 0,
            absorbed_mass: 0.0,
            absorbed_pi: 0.0,
            boundary_tolerance: DEFAULT_BOUNDARY_TOLERANCE,
        })
    }

    /// `[-X_MAX, X_MAX]` with the default resolution.
    pub fn standard() -> Self {
        Self::uniform(-X_MAX, X_MAX, DEFAULT_CELLS).expect("static bounds are valid")
    }

    /// Same grid shifted by less than one cell so that `face` falls on a cell
    /// boundary. Used to put a barrier between two cells.
    pub fn with_face_at(mut self, face: f64) -> Self {
        let lo = self.nodes[0] - 0.5 * self.width;
        let shift = (face - lo) / self.width;
        let shift = (shift - shift.round()) * self.width;
        for x in &mut self.nodes {
            *x += shift;
        }
        self
    }

    /// All mass at `x0`, split between the two nearest centres so that the
    /// grid reproduces `Π(x0)` exactly.
    pub fn with_spike(mut self, x0: f64) -> Result<Self> {
        self.values.iter_mut().for_each(|v| *v = 0.0);
        self.absorbed_mass = 0.0;
        self.absorbed_pi = 0.0;
        match self.locate(x0) {
            Some((j, upper)) => {
                self.values[j] = (1.0 - upper) / self.width;
                self.values[j + 1] = upper / self.width;
                Ok(self)
            }
            None => Err(invalid("x0", format!("{x0} is outside the grid"))),
        }
    }

    /// Density sampled from `f` at the cell centres and normalised to unit mass.
    pub fn with_density(mut self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let vals: Vec<f64> = self.nodes.iter().map(|&x| f(x)).collect();
        if vals.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("density", "must be finite and nonnegative"));
        }
        let mass: f64 = vals.iter().sum::<f64>() * self.width;
        if !(mass > 0.0) {
            return Err(invalid("density", "has zero mass on the grid"));
        }
        self.values = vals.into_iter().map(|v| v / mass).collect();
        self.absorbed_mass = 0.0;
        self.absorbed_pi = 0.0;
        Ok(self)
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self) -> f64 {
        self.width
    }

    pub fn cell_widths(&self) -> Vec<f64> {
        vec![self.width; self.nodes.len()]
    }

    /// Mass still on the grid.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.width
    }

    /// Mass pushed past either end of the grid.
    pub fn absorbed_mass(&self) -> f64 {
        self.absorbed_mass
    }

    /// Mass in cells whose centre is at or above `x`.
    pub fn mass_at_or_above(&self, x: f64) -> f64 {
        let k = self.nodes.partition_point(|&c| c < x);
        self.values[k..].iter().sum::<f64>() * self.width
    }

    /// `∫ Π P dx` by the midpoint rule, plus the `Π` carried by absorbed mass.
    pub fn pi_average(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| pi_of_x(x) * v)
            .sum::<f64>()
            * self.width
            + self.absorbed_pi
    }

    /// Grid mass per histogram bin, assigning each cell by its centre.
    pub fn histogram(&self, spec: &HistogramSpec) -> Vec<f64> {
        let mut out = vec![0.0; spec.bins()];
        for (&x, &v) in self.nodes.iter().zip(&self.values) {
            out[spec.bin_of(x)] += v * self.width;
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x,density")?;
        for (x, v) in self.nodes.iter().zip(&self.values) {
            writeln!(w, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }

    /// Index `j` and the `Π`-linear weight of centre `j + 1` for a packet at
    /// `y`, or `None` if `y` lies outside the outermost centres.
    fn locate(&self, y: f64) -> Option<(usize, f64)> {
        let n = self.nodes.len();
        let first = self.nodes[0];
        if !(y >= first && y <= self.nodes[n - 1]) {
            return None;
        }
        let j = (((y - first) / self.width).floor() as usize).min(n - 2);
        // guard against rounding in the index computation
        let j = if y < self.nodes[j] {
            j.saturating_sub(1)
        } else if y > self.nodes[j + 1] {
            (j + 1).min(n - 2)
        } else {
            j
        };
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        let upper = (pi_difference(a, y) / pi_difference(a, b)).clamp(0.0, 1.0);
        Some((j, upper))
    }

    fn check_boundary(&self) -> Result<()> {
        if self.absorbed_mass > self.boundary_tolerance {
            return Err(Error::BoundaryOverflow {
                mass: self.absorbed_mass,
                tolerance: self.boundary_tolerance,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Deposit {
    Split { j: usize, upper: f64 },
    Absorbed { pi: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Push {
    prob: f64,
    deposit: Deposit,
}

/// The linear map taking `P(n, ·)` to `P(n + 1, ·)` on a given grid.
#[derive(Debug, Clone)]
pub struct TransferMap {
    pushes: Vec<[Push; 2]>,
}

impl TransferMap {
    /// Builds the map from per-cell step values. Packets never get split
    /// across a barrier: one landing between a barrier and the last centre on
    /// the source's side is deposited entirely on that centre.
    fn build(grid: &PdfGrid, barriers: &[f64], values_at: impl Fn(f64) -> Result<StepValues>) -> Result<Self> {
        let mut pushes = Vec::with_capacity(grid.nodes.len());
        for &x in &grid.nodes {
            let v = values_at(x)?;
            let (p0, p1) = if v.steps.eps0 == v.steps.eps1 {
                // both outcomes land on the same point; keep the cell's mass bit-exact
                (1.0, 0.0)
            } else {
                outcome_probabilities_x(x, &v.params)
            };
            let mut pair = [Push {
                prob: 0.0,
                deposit: Deposit::Absorbed { pi: 0.0 },
            }; 2];
            for (slot, (prob, eps)) in pair.iter_mut().zip([(p0, v.steps.eps0), (p1, v.steps.eps1)]) {
                let y = x + eps;
                let deposit = match grid.locate(y) {
                    Some((j, upper)) => {
                        let (a, b) = (grid.nodes[j], grid.nodes[j + 1]);
                        let upper = match barriers.iter().find(|&&bar| a < bar && bar < b) {
                            Some(&bar) if x < bar => 0.0,
                            Some(_) => 1.0,
                            None => upper,
                        };
                        Deposit::Split { j, upper }
                    }
                    None => Deposit::Absorbed { pi: pi_of_x(y) },
                };
                *slot = Push { prob, deposit };
            }
            pushes.push(pair);
        }
        Ok(TransferMap { pushes })
    }

    /// Map for fixed parameters.
    pub fn constant(grid: &PdfGrid, p: &MeasurementParams) -> Result<Self> {
        let steps = step_sizes(p)?;
        let v = StepValues {
            params: *p,
            tau: 0.0,
            steps,
        };
        Self::build(grid, &[], |_| Ok(v))
    }

    /// Map for step `step` (1-based) of a conditional schedule.
    pub fn conditional(grid: &PdfGrid, sched: &Schedule, step: u64) -> Result<Self> {
        sched.validate()?;
        Self::build(grid, &sched.barriers(), |x| sched.step_values(step, x))
    }

    pub fn apply(&self, grid: &PdfGrid) -> Result<PdfGrid> {
        if self.pushes.len() != grid.values.len() {
            return Err(invalid("grid", "transfer map was built for a different grid"));
        }
        let mut next = vec![0.0; grid.values.len()];
        let mut absorbed_mass = grid.absorbed_mass;
        let mut absorbed_pi = grid.absorbed_pi;
        for (&v, pair) in grid.values.iter().zip(&self.pushes) {
            if v == 0.0 {
                continue;
            }
            for push in pair {
                let m = v * push.prob;
                match push.deposit {
                    Deposit::Split { j, upper } => {
                        next[j] += m * (1.0 - upper);
                        next[j + 1] += m * upper;
                    }
                    Deposit::Absorbed { pi } => {
                        absorbed_mass += m * grid.width;
                        absorbed_pi += m * grid.width * pi;
                    }
                }
            }
        }
        let out = PdfGrid {
            values: next,
            step: grid.step + 1,
            absorbed_mass,
            absorbed_pi,
            ..grid.clone()
        };
        out.check_boundary()?;
        Ok(out)
    }
}

/// One step with fixed measurement parameters.
pub fn propagate_const(grid: &PdfGrid, p: &MeasurementParams) -> Result<PdfGrid> {
    TransferMap::constant(grid, p)?.apply(grid)
}

/// One step of a state- and step-dependent schedule.
pub fn propagate_conditional(grid: &PdfGrid, sched: &Schedule) -> Result<PdfGrid> {
    TransferMap::conditional(grid, sched, grid.step + 1)?.apply(grid)
}

/// `n_steps` steps; the transfer map is built once when the schedule is static.
/// `observe` sees every intermediate grid, including the initial one.
pub fn evolve(
    grid: &PdfGrid,
    sched: &Schedule,
    n_steps: u64,
    mut observe: impl FnMut(&PdfGrid),
) -> Result<PdfGrid> {
    let mut current = grid.clone();
    observe(&current);
    let fixed = if sched.is_static() {
        Some(TransferMap::conditional(grid, sched, 1)?)
    } else {
        None
    };
    for _ in 0..n_steps {
        current = match &fixed {
            Some(map) => map.apply(&current)?,
            None => propagate_conditional(&current, sched)?,
        };
        observe(&current);
    }
    Ok(current)
}

pub fn pi_average(grid: &PdfGrid) -> f64 {
    grid.pi_average()
}
