//! Monte Carlo quantum trajectories and ensembles.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measurement::{outcome_probabilities_x, pi_of_x, x_of_pi, Outcome};
use crate::rng::{stream_rng, StreamRng};
use crate::schedule::{Schedule, StepValues};

/// Beyond `|x| > X_MAX` a trajectory counts as collapsed onto a basis state
/// (`Π` within 2e-22 of 0 or 1) and stops moving.
pub const X_MAX: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Zero,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub step: u64,
    pub t: f64,
    pub x: f64,
    /// Outcome that produced this entry; `None` for the initial point.
    pub outcome: Option<Outcome>,
    /// `(α_n, δ_n)` used for the step into this entry; zero for the initial point.
    pub alpha: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub entries: Vec<TrajectoryEntry>,
    /// Set when the walk crossed `|x| = X_MAX`; no entries follow.
    pub absorbed: Option<Basis>,
}

impl TrajectoryRecord {
    pub fn final_x(&self) -> f64 {
        self.entries.last().expect("record holds the initial point").x
    }
}

/// A single walker; advances one measurement at a time.
pub struct Walker<'a> {
    schedule: &'a Schedule,
    fixed: Option<StepValues>,
    rng: StreamRng,
    pub x: f64,
    pub t: f64,
    pub step: u64,
    pub absorbed: Option<Basis>,
}

impl<'a> Walker<'a> {
    pub fn new(x0: f64, schedule: &'a Schedule, rng: StreamRng) -> Result<Self> {
        if !x0.is_finite() {
            return Err(invalid("x0", "must be finite"));
        }
        schedule.validate()?;
        let fixed = if schedule.is_static() {
            Some(schedule.step_values(1, x0)?)
        } else {
            None
        };
        Ok(Walker {
            schedule,
            fixed,
            rng,
            x: x0,
            t: 0.0,
            step: 0,
            absorbed: absorbed_side(x0),
        })
    }

    /// Performs one measurement. Returns the outcome and the values used, or
    /// `None` once the walker is absorbed.
    pub fn advance(&mut self) -> Result<Option<(Outcome, StepValues)>> {
        if self.absorbed.is_some() {
            self.step += 1;
            return Ok(None);
        }
        let n = self.step + 1;
        let values = match self.fixed {
            Some(v) => v,
            None => self.schedule.step_values(n, self.x)?,
        };
        let (p0, _) = outcome_probabilities_x(self.x, &values.params);
        let u: f64 = self.rng.random();
        let outcome = if u < p0 { Outcome::Zero } else { Outcome::One };
        self.x += values.steps.get(outcome);
        self.t += values.tau;
        self.step = n;
        self.absorbed = absorbed_side(self.x);
        Ok(Some((outcome, values)))
    }
}

fn absorbed_side(x: f64) -> Option<Basis> {
    if x > X_MAX {
        Some(Basis::One)
    } else if x < -X_MAX {
        Some(Basis::Zero)
    } else {
        None
    }
}

/// Runs one trajectory of `n_steps` measurements on stream 0 of `seed`.
pub fn run_trajectory(x0: f64, schedule: &Schedule, n_steps: u64, seed: u64) -> Result<TrajectoryRecord> {
    record_walk(x0, schedule, n_steps, seed, 0)
}

/// Full records of `n_traj` trajectories; trajectory `i` uses stream `i`, as
/// in [`run_ensemble`].
pub fn run_trajectories(
    x0: f64,
    schedule: &Schedule,
    n_steps: u64,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    schedule.validate()?;
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| record_walk(x0, schedule, n_steps, seed, i))
        .collect()
}

fn record_walk(x0: f64, schedule: &Schedule, n_steps: u64, seed: u64, stream: u64) -> Result<TrajectoryRecord> {
    let mut walker = Walker::new(x0, schedule, stream_rng(seed, stream))?;
    let mut entries = vec![TrajectoryEntry {
        step: 0,
        t: 0.0,
        x: x0,
        outcome: None,
        alpha: 0.0,
        delta: 0.0,
    }];
    for _ in 0..n_steps {
        match walker.advance()? {
            Some((outcome, v)) => entries.push(TrajectoryEntry {
                step: walker.step,
                t: walker.t,
                x: walker.x,
                outcome: Some(outcome),
                alpha: v.params.alpha,
                delta: v.params.delta,
            }),
            None => break,
        }
    }
    Ok(TrajectoryRecord {
        seed,
        entries,
        absorbed: walker.absorbed,
    })
}

/// Histogram binning; values outside the edges are counted in the end bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub edges: Vec<f64>,
}

impl HistogramSpec {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(invalid("histogram", "need hi > lo and at least one bin"));
        }
        let w = (hi - lo) / bins as f64;
        Ok(HistogramSpec {
            edges: (0..=bins).map(|i| lo + w * i as f64).collect(),
        })
    }

    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("histogram", "edges must be strictly increasing"));
        }
        Ok(HistogramSpec { edges })
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let k = self.edges.partition_point(|&e| e <= x);
        k.saturating_sub(1).min(self.bins() - 1)
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_trajectories: usize,
    pub checkpoints: Vec<u64>,
    pub histogram: HistogramSpec,
    /// `masses[c][b]`: fraction of trajectories in bin `b` at checkpoint `c`.
    pub masses: Vec<Vec<f64>>,
    pub pi_mean: Vec<f64>,
    pub pi_stderr: Vec<f64>,
    /// `positions[c][i]`: position of trajectory `i` at checkpoint `c`.
    pub positions: Vec<Vec<f64>>,
}

/// Positions of one trajectory at each checkpoint (checkpoints sorted).
fn checkpoint_positions(
    x0: f64,
    schedule: &Schedule,
    checkpoints: &[u64],
    base_seed: u64,
    index: u64,
) -> Result<Vec<f64>> {
    let mut walker = Walker::new(x0, schedule, stream_rng(base_seed, index))?;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        while walker.step < c {
            if walker.advance()?.is_none() {
                walker.step = c;
            }
        }
        out.push(walker.x);
    }
    Ok(out)
}

/// Runs `n_traj` independent trajectories; trajectory `i` uses stream `i` of
/// `base_seed`. Results are merged in index order, so they are identical for
/// any thread count.
pub fn run_ensemble(
    x0: f64,
    schedule: &Schedule,
    n_traj: usize,
    checkpoints: &[u64],
    histogram: HistogramSpec,
    base_seed: u64,
) -> Result<EnsembleStats> {
    if n_traj == 0 {
        return Err(invalid("n_traj", "must be at least 1"));
    }
    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("checkpoints", "must be sorted"));
    }
    schedule.validate()?;
    let per_traj: Vec<Vec<f64>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| checkpoint_positions(x0, schedule, checkpoints, base_seed, i))
        .collect::<Result<_>>()?;

    let n = n_traj as f64;
    let mut masses = Vec::with_capacity(checkpoints.len());
    let mut pi_mean = Vec::with_capacity(checkpoints.len());
    let mut pi_stderr = Vec::with_capacity(checkpoints.len());
    let mut positions = Vec::with_capacity(checkpoints.len());
    for c in 0..checkpoints.len() {
        let xs: Vec<f64> = per_traj.iter().map(|p| p[c]).collect();
        let mut counts = vec![0.0; histogram.bins()];
        for &x in &xs {
            counts[histogram.bin_of(x)] += 1.0;
        }
        masses.push(counts.into_iter().map(|k| k / n).collect());
        let (mean, se) = mean_and_stderr(xs.iter().map(|&x| pi_of_x(x)));
        pi_mean.push(mean);
        pi_stderr.push(se);
        positions.push(xs);
    }
    Ok(EnsembleStats {
        n_trajectories: n_traj,
        checkpoints: checkpoints.to_vec(),
        histogram,
        masses,
        pi_mean,
        pi_stderr,
        positions,
    })
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample mean of `Π` over the ensemble at `checkpoint`, with its standard error.
pub fn empirical_pi_mean(stats: &EnsembleStats, checkpoint: u64) -> Result<(f64, f64)> {
    let c = stats
        .checkpoints
        .iter()
        .position(|&k| k == checkpoint)
        .ok_or_else(|| invalid("checkpoint", format!("{checkpoint} was not recorded")))?;
    Ok((stats.pi_mean[c], stats.pi_stderr[c]))
}

/// Where a trajectory ends up when a state `|X⟩` with vanishing measurement
/// strength is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fate {
    Basis(Basis),
    /// Stayed within `tolerance` of `Π_X` for `hold` consecutive steps.
    FalseBasis,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodCriterion {
    pub pi_x: f64,
    pub tolerance: f64,
    pub hold: u64,
}

impl NeighborhoodCriterion {
    pub fn new(pi_x: f64) -> Self {
        NeighborhoodCriterion {
            pi_x,
            tolerance: 1e-3,
            hold: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionStats {
    pub n_trajectories: usize,
    pub fates: Vec<Fate>,
    /// Trajectories that ever moved to the other side of the barrier.
    pub crossings: usize,
    pub steps_taken: Vec<u64>,
}

impl AbsorptionStats {
    pub fn count(&self, fate: Fate) -> usize {
        self.fates.iter().filter(|&&f| f == fate).count()
    }

    /// Fraction with the given fate and its binomial standard error.
    pub fn fraction(&self, fate: Fate) -> (f64, f64) {
        let n = self.n_trajectories as f64;
        let p = self.count(fate) as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }
}

fn run_to_fate(
    x0: f64,
    schedule: &Schedule,
    criterion: &NeighborhoodCriterion,
    max_steps: u64,
    base_seed: u64,
    index: u64,
) -> Result<(Fate, bool, u64)> {
    let barrier = x_of_pi(criterion.pi_x)?;
    let below = x0 < barrier;
    let mut walker = Walker::new(x0, schedule, stream_rng(base_seed, index))?;
    let mut crossed = false;
    let mut held = 0u64;
    while walker.step < max_steps {
        if walker.advance()?.is_none() {
            break;
        }
        if (walker.x >= barrier) == below {
            crossed = true;
        }
        if (pi_of_x(walker.x) - criterion.pi_x).abs() < criterion.tolerance {
            held += 1;
            if held >= criterion.hold {
                return Ok((Fate::FalseBasis, crossed, walker.step));
            }
        } else {
            held = 0;
        }
    }
    let fate = match walker.absorbed {
        Some(b) => Fate::Basis(b),
        None => Fate::Unresolved,
    };
    Ok((fate, crossed, walker.step))
}

/// Runs trajectories until each one is absorbed in a basis state, settles next
/// to `|X⟩`, or hits `max_steps`.
pub fn run_absorption(
    x0: f64,
    schedule: &Schedule,
    criterion: NeighborhoodCriterion,
    max_steps: u64,
    n_traj: usize,
    base_seed: u64,
) -> Result<AbsorptionStats> {
    if n_traj == 0 {
        return Err(invalid("n_traj", "must be at least 1"));
    }
    let results: Vec<(Fate, bool, u64)> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| run_to_fate(x0, schedule, &criterion, max_steps, base_seed, i))
        .collect::<Result<_>>()?;
    Ok(AbsorptionStats {
        n_trajectories: n_traj,
        crossings: results.iter().filter(|r| r.1).count(),
        fates: results.iter().map(|r| r.0).collect(),
        steps_taken: results.iter().map(|r| r.2).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::step_sizes;
    use crate::schedule::ProfileSpec;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn zero_steps_keeps_only_initial_point() {
        let rec = run_trajectory(0.3, &Schedule::constant(FRAC_PI_4, 0.05), 0, 1).unwrap();
        assert_eq!(rec.entries.len(), 1);
        assert_eq!(rec.entries[0].x, 0.3);
    }

    #[test]
    fn zero_delta_freezes_the_walk() {
        let rec = run_trajectory(-0.7, &Schedule::constant(FRAC_PI_4, 0.0), 500, 9).unwrap();
        assert!(rec.entries.iter().all(|e| e.x == -0.7));
    }

    #[test]
    fn steps_match_recorded_outcomes() {
        let sched = Schedule::conditional(
            ProfileSpec::Sinusoid {
                mean: 1.0,
                amplitude: 0.5,
                wavenumber: 1.3,
                phase: 0.2,
            },
            0.04,
        );
        let rec = run_trajectory(0.1, &sched, 2000, 77).unwrap();
        for w in rec.entries.windows(2) {
            let e = &w[1];
            let p = crate::measurement::MeasurementParams {
                alpha: e.alpha,
                delta: e.delta,
            };
            let eps = step_sizes(&p).unwrap().get(e.outcome.unwrap());
            assert_eq!(e.x, w[0].x + eps);
            assert!(e.t > w[0].t);
        }
    }

    #[test]
    fn same_seed_same_record() {
        let sched = Schedule::constant(0.6, 0.07);
        let a = run_trajectory(0.0, &sched, 3000, 5).unwrap();
        let b = run_trajectory(0.0, &sched, 3000, 5).unwrap();
        let c = run_trajectory(0.0, &sched, 3000, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn recorded_trajectories_match_ensemble_streams() {
        let sched = Schedule::constant(FRAC_PI_4, 0.1);
        let recs = run_trajectories(0.1, &sched, 40, 5, 77).unwrap();
        let stats = run_ensemble(0.1, &sched, 5, &[40], HistogramSpec::uniform(-3.0, 3.0, 6).unwrap(), 77).unwrap();
        for (r, &x) in recs.iter().zip(&stats.positions[0]) {
            assert_eq!(r.final_x(), x);
        }
        assert_eq!(recs[0], run_trajectory(0.1, &sched, 40, 77).unwrap());
    }

    #[test]
    fn single_member_ensemble_matches_trajectory() {
        let sched = Schedule::constant(FRAC_PI_4, 0.05);
        let hist = HistogramSpec::uniform(-5.0, 5.0, 20).unwrap();
        let stats = run_ensemble(0.0, &sched, 1, &[300], hist.clone(), 11).unwrap();
        let rec = run_trajectory(0.0, &sched, 300, 11).unwrap();
        assert_eq!(stats.positions[0][0], rec.final_x());
        let mut expected = vec![0.0; 20];
        expected[hist.bin_of(rec.final_x())] = 1.0;
        assert_eq!(stats.masses[0], expected);
    }

    #[test]
    fn pi_mean_of_trajectories_at_origin() {
        let sched = Schedule::constant(FRAC_PI_4, 0.0);
        let hist = HistogramSpec::uniform(-1.0, 1.0, 4).unwrap();
        let stats = run_ensemble(0.0, &sched, 50, &[0, 10], hist, 3).unwrap();
        assert_eq!(empirical_pi_mean(&stats, 10).unwrap(), (0.5, 0.0));
        assert!(empirical_pi_mean(&stats, 11).is_err());
    }

    #[test]
    fn histogram_masses_sum_to_one() {
        let sched = Schedule::constant(0.5, 0.1);
        let hist = HistogramSpec::uniform(-2.0, 2.0, 8).unwrap();
        let stats = run_ensemble(0.0, &sched, 400, &[10, 1000], hist, 21).unwrap();
        for m in &stats.masses {
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_bins_clamp() {
        let h = HistogramSpec::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(h.bin_of(-3.0), 0);
        assert_eq!(h.bin_of(0.3), 1);
        assert_eq!(h.bin_of(1.0), 3);
        assert_eq!(h.bin_of(7.0), 3);
        assert!(HistogramSpec::from_edges(vec![0.0, 0.0]).is_err());
    }
}
