//! The experiment registry and the runners behind it.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, TAU};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use wzm_core::fp::io::write_field_csv;
use wzm_core::fp::{
    analytic_solution, coefficients_pi, coefficients_x, solve, truncated_domain, BoundaryCondition, Field, FormFactor,
    FpStepper, SolverAudit, SolverOptions,
};
use wzm_core::master::{evolve, PdfGrid};
use wzm_core::measurement::{pi_of_x, x_of_pi, Chart};
use wzm_core::ratchet::{
    absorption_probability_at_x, localization_profile, moving_average, numerical_steady_current,
    seebeck_steady_current, solve_reduced, CurrentRecord, GProfile, ReducedOptions, SpatialProfile, TemporalSwitch,
};
use wzm_core::schedule::{ProfileSpec, Schedule};
use wzm_core::trajectory::{run_absorption, run_trajectories, Basis, Fate, NeighborhoodCriterion, X_MAX};

use crate::config::{ProfileConfig, ScenarioConfig};
use crate::output::{write_atomic, Cell, Check, Csv, Summary};
use crate::CliError;

pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// `(file, columns)` for every CSV the experiment writes.
    pub outputs: &'static [(&'static str, &'static str)],
    /// `numerics` keys the experiment reads.
    pub numerics: &'static [&'static str],
    run: fn(&mut Context) -> Result<(), CliError>,
}

const FIELD_COLUMNS: &str = "# chart/grid/time header lines, then <chart>,P,J";

pub const EXPERIMENTS: [ExperimentInfo; 6] = [
    ExperimentInfo {
        name: "trajectory",
        description: "Monte Carlo trajectories of the measured qubit under a step/state-conditioned schedule",
        outputs: &[("trajectories.csv", "trajectory,step,t,x,pi,outcome,alpha,delta")],
        numerics: &["x0", "alpha", "delta_scale", "n_steps", "n_traj"],
        run: trajectory,
    },
    ExperimentInfo {
        name: "master",
        description: "Master-equation propagation of the density on an x grid, with <Pi> and mass audits",
        outputs: &[
            ("density.csv", "x,density"),
            ("pi_average.csv", "step,pi_average,mass,absorbed_mass"),
        ],
        numerics: &["x0", "alpha", "delta_scale", "n_steps", "cells"],
        run: master,
    },
    ExperimentInfo {
        name: "fp-analytic-check",
        description: "Fokker-Planck solver against the closed-form solution for unit form factor",
        outputs: &[("field.csv", FIELD_COLUMNS), ("comparison.csv", "x,numeric,analytic")],
        numerics: &["x0", "t_end", "cells"],
        run: fp_analytic_check,
    },
    ExperimentInfo {
        name: "ratchet-spacetime",
        description: "Reduced asymptotic problem with a space- and time-dependent form factor; long-time current",
        outputs: &[("current.csv", "t,current,moving_average"), ("density.csv", FIELD_COLUMNS)],
        numerics: &["cells", "t_end", "record_every"],
        run: ratchet_spacetime,
    },
    ExperimentInfo {
        name: "seebeck",
        description: "Time-independent form factor: numerical steady current against -1/<g^-2>",
        outputs: &[("current.csv", "t,current,moving_average"), ("density.csv", FIELD_COLUMNS)],
        numerics: &["cells", "t_end", "record_every"],
        run: seebeck,
    },
    ExperimentInfo {
        name: "localization",
        description: "Form factor vanishing at Pi_X: trajectory fates and the Pi-chart density",
        outputs: &[("fates.csv", "trajectory,fate,steps"), ("fp_density.csv", FIELD_COLUMNS)],
        numerics: &["pi0", "delta_scale", "n_traj", "n_steps", "cells", "t_end"],
        run: localization,
    },
];

pub fn find(name: &str) -> Option<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Runs the configured experiment, writing its files and `summary.json` into `out`.
pub fn run(cfg: &ScenarioConfig, out: &Path) -> Result<Summary, CliError> {
    let info = find(&cfg.experiment).ok_or_else(|| {
        let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        CliError::Config(format!(
            "`experiment`: unknown experiment `{}` (available: {})",
            cfg.experiment,
            names.join(", ")
        ))
    })?;
    if let Some(k) = cfg.numerics.set_keys().into_iter().find(|k| !info.numerics.contains(k)) {
        return Err(CliError::Config(format!(
            "`numerics.{k}` is not used by experiment `{}` (it reads: {})",
            info.name,
            info.numerics.join(", ")
        )));
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut ctx = Context {
        cfg,
        dir: out.to_path_buf(),
        parameters: BTreeMap::new(),
        results: BTreeMap::new(),
        audits: BTreeMap::new(),
        checks: Vec::new(),
        outputs: Vec::new(),
    };
    (info.run)(&mut ctx)?;
    let summary = Summary {
        tool: "wzm",
        version: env!("CARGO_PKG_VERSION"),
        core_version: wzm_core::VERSION,
        experiment: cfg.experiment.clone(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.without_output(),
        parameters: ctx.parameters,
        results: ctx.results,
        audits: ctx.audits,
        passed: ctx.checks.iter().all(|c| c.pass),
        checks: ctx.checks,
        outputs: ctx.outputs,
    };
    write_atomic(out, "summary.json", &summary.to_json())?;
    Ok(summary)
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    dir: PathBuf,
    parameters: BTreeMap<String, Value>,
    results: BTreeMap<String, Value>,
    audits: BTreeMap<String, Value>,
    checks: Vec<Check>,
    outputs: Vec<String>,
}

fn config_err(e: wzm_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

impl Context<'_> {
    fn param<T: Serialize + Copy>(&mut self, key: &str, given: Option<T>, default: T) -> T {
        let v = given.unwrap_or(default);
        self.parameters.insert(key.into(), to_value(v));
        v
    }

    fn positive(&mut self, key: &str, given: Option<f64>, default: f64) -> Result<f64, CliError> {
        let v = self.param(key, given, default);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("`numerics.{key}` must be positive and finite, got {v}")))
        }
    }

    fn at_least<T: Serialize + Copy + PartialOrd + std::fmt::Display>(
        &mut self,
        key: &str,
        given: Option<T>,
        default: T,
        min: T,
    ) -> Result<T, CliError> {
        let v = self.param(key, given, default);
        if v >= min {
            Ok(v)
        } else {
            Err(CliError::Config(format!("`numerics.{key}` must be at least {min}, got {v}")))
        }
    }

    fn result(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(key.into(), to_value(v));
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir, name, bytes)?;
        self.outputs.push(name.into());
        Ok(())
    }

    fn write_field(&mut self, name: &str, field: &Field) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_field_csv(field, &mut buf)?;
        self.write(name, &buf)
    }

    fn solver_audit(&mut self, audit: &SolverAudit) {
        self.audits.insert("solver".into(), to_value(audit));
    }

    fn check(&mut self, name: &str, value: f64, target: impl Into<String>, pass: bool) {
        self.checks.push(Check::new(name, value, target, pass));
    }

    /// `g_δ` profile for the walk experiments; constant 1 when absent.
    fn schedule_profile(&mut self) -> Result<ProfileSpec, CliError> {
        let spec = match &self.cfg.profile {
            None => ProfileSpec::Constant { value: 1.0 },
            Some(p) => ProfileSpec::from_name(&p.name, &p.pairs()).map_err(config_err)?,
        };
        self.parameters.insert("profile".into(), to_value(&spec));
        Ok(spec)
    }

    /// `two-harmonic` ratchet profile: names `on-off`, `sign-sin`, `static`;
    /// keys `a`, `b` and the switching `period`.
    fn ratchet_profile(&mut self, default: (&str, f64, f64)) -> Result<GProfile, CliError> {
        let fallback = ProfileConfig {
            name: default.0.into(),
            params: BTreeMap::new(),
        };
        let p = self.cfg.profile.clone().unwrap_or(fallback);
        if let Some(k) = p.params.keys().find(|k| !["a", "b", "period"].contains(&k.as_str())) {
            return Err(CliError::Config(format!("`profile.{k}` is not a ratchet profile parameter (a, b, period)")));
        }
        let a = p.get("a").unwrap_or(default.1);
        let b = p.get("b").unwrap_or(default.2);
        let period = p.get("period").unwrap_or(TAU);
        let temporal = match p.name.as_str() {
            "on-off" => TemporalSwitch::OnOff { period },
            "sign-sin" => TemporalSwitch::SignSin { period },
            "static" => TemporalSwitch::Constant { value: 1.0 },
            other => {
                return Err(CliError::Config(format!(
                    "`profile.name`: unknown ratchet profile `{other}` (on-off, sign-sin, static)"
                )))
            }
        };
        let g = GProfile::new(SpatialProfile::two_harmonic(a, b), temporal).map_err(config_err)?;
        self.parameters.insert(
            "profile".into(),
            json!({ "name": p.name, "a": a, "b": b, "period": period, "normalization": g.normalization }),
        );
        Ok(g)
    }
}

fn walk_schedule(ctx: &mut Context, alpha: f64, delta: f64) -> Result<Schedule, CliError> {
    let sched = Schedule {
        alpha: ProfileSpec::Constant { value: alpha },
        g_delta: ctx.schedule_profile()?,
        g_tau: ProfileSpec::Constant { value: 1.0 },
        delta_scale: delta,
    };
    sched.validate().map_err(config_err)?;
    Ok(sched)
}

fn trajectory(ctx: &mut Context) -> Result<(), CliError> {
    let n = &ctx.cfg.numerics;
    let (x0, alpha, delta, n_steps, n_traj) = (n.x0, n.alpha, n.delta_scale, n.n_steps, n.n_traj);
    let x0 = ctx.param("x0", x0, 0.0);
    let alpha = ctx.param("alpha", alpha, FRAC_PI_4);
    let delta = ctx.param("delta_scale", delta, 0.05);
    let n_steps = ctx.param("n_steps", n_steps, 1000);
    let n_traj = ctx.at_least("n_traj", n_traj, 10, 1)?;
    let sched = walk_schedule(ctx, alpha, delta)?;
    sched.step_values(1, x0).map_err(config_err)?;

    let records = run_trajectories(x0, &sched, n_steps, n_traj, ctx.cfg.seed)?;
    let mut csv = Csv::new(&["trajectory", "step", "t", "x", "pi", "outcome", "alpha", "delta"]);
    for (i, rec) in records.iter().enumerate() {
        for e in &rec.entries {
            let outcome = e.outcome.map_or(-1, |o| o.index() as i64);
            csv.row(&[
                Cell::U(i as u64),
                Cell::U(e.step),
                Cell::F(e.t),
                Cell::F(e.x),
                Cell::F(pi_of_x(e.x)),
                Cell::I(outcome),
                Cell::F(e.alpha),
                Cell::F(e.delta),
            ]);
        }
    }
    ctx.write("trajectories.csv", &csv.into_bytes())?;

    let finals: Vec<f64> = records.iter().map(|r| pi_of_x(r.final_x())).collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let se = if finals.len() > 1 {
        let var = finals.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (finals.len() - 1) as f64;
        (var / finals.len() as f64).sqrt()
    } else {
        0.0
    };
    let absorbed = |b: Basis| records.iter().filter(|r| r.absorbed == Some(b)).count();
    ctx.result("initial_pi", pi_of_x(x0));
    ctx.result("final_pi_mean", mean);
    ctx.result("final_pi_stderr", se);
    ctx.result("absorbed_zero", absorbed(Basis::Zero));
    ctx.result("absorbed_one", absorbed(Basis::One));
    if n_traj > 1 {
        let dev = (mean - pi_of_x(x0)).abs();
        let pass = if se > 0.0 { dev < 4.0 * se } else { dev < 1e-12 };
        ctx.check("pi_martingale", dev, format!("< 4 standard errors ({:.3e})", 4.0 * se), pass);
    }
    Ok(())
}

fn master(ctx: &mut Context) -> Result<(), CliError> {
    let n = &ctx.cfg.numerics;
    let (x0, alpha, delta, n_steps, cells) = (n.x0, n.alpha, n.delta_scale, n.n_steps, n.cells);
    let x0 = ctx.param("x0", x0, 0.0);
    let alpha = ctx.param("alpha", alpha, FRAC_PI_4);
    let delta = ctx.param("delta_scale", delta, 0.05);
    let n_steps = ctx.param("n_steps", n_steps, 200);
    let cells = ctx.at_least("cells", cells, 8192, 2)?;
    let sched = walk_schedule(ctx, alpha, delta)?;
    ctx.parameters.insert("grid".into(), json!([-X_MAX, X_MAX]));

    let mut grid = PdfGrid::uniform(-X_MAX, X_MAX, cells).map_err(config_err)?;
    if let Some(&b) = sched.barriers().first() {
        grid = grid.with_face_at(b);
    }
    let grid = grid.with_spike(x0).map_err(config_err)?;
    let mut rows: Vec<(u64, f64, f64, f64)> = Vec::new();
    let last = evolve(&grid, &sched, n_steps, |g| {
        rows.push((g.step, g.pi_average(), g.mass(), g.absorbed_mass()))
    })?;

    let mut csv = Csv::new(&["step", "pi_average", "mass", "absorbed_mass"]);
    for &(s, p, m, a) in &rows {
        csv.row(&[Cell::U(s), Cell::F(p), Cell::F(m), Cell::F(a)]);
    }
    ctx.write("pi_average.csv", &csv.into_bytes())?;
    let mut density = Vec::new();
    last.write_csv(&mut density)?;
    ctx.write("density.csv", &density)?;

    let pi_step = rows.windows(2).map(|w| (w[1].1 - w[0].1).abs()).fold(0.0, f64::max);
    let mass_step = rows.windows(2).map(|w| (w[1].2 + w[1].3 - w[0].2 - w[0].3).abs()).fold(0.0, f64::max);
    ctx.result("initial_pi_average", rows[0].1);
    ctx.result("final_pi_average", last.pi_average());
    ctx.audits.insert(
        "conservation".into(),
        json!({ "max_pi_step_drift": pi_step, "max_mass_step_drift": mass_step, "absorbed_mass": last.absorbed_mass() }),
    );
    ctx.check("pi_conservation", pi_step, "max per-step |d<Pi>| < 1e-9", pi_step < 1e-9);
    ctx.check("mass_conservation", mass_step, "max per-step |dM| < 1e-12", mass_step < 1e-12);
    Ok(())
}

fn fp_analytic_check(ctx: &mut Context) -> Result<(), CliError> {
    let n = &ctx.cfg.numerics;
    let (x0, t_end, cells) = (n.x0, n.t_end, n.cells);
    let x0 = ctx.param("x0", x0, -10.0);
    let t_end = ctx.positive("t_end", t_end, 1.0)?;
    let cells = ctx.at_least("cells", cells, 4096, 4)?;
    if cells % 2 != 0 {
        return Err(CliError::Config(format!("`numerics.cells` must be even so x0 sits on a face, got {cells}")));
    }
    let (lo, hi) = truncated_domain(x0, t_end);
    ctx.parameters.insert("domain".into(), json!([lo, hi]));

    let mut init = Field::zeros(Chart::X, lo, hi, cells, BoundaryCondition::ZeroFlux).map_err(config_err)?;
    let k = cells / 2;
    init.values[k - 1] = 0.5 / init.width;
    init.values[k] = 0.5 / init.width;
    let sol = solve(&init, &coefficients_x(&FormFactor::constant(1.0)), t_end, &[], SolverOptions::default())?;
    let field = sol.last();
    let l2 = field.l2_distance(|x| analytic_solution(t_end, x, x0));

    ctx.write_field("field.csv", field)?;
    let mut csv = Csv::new(&["x", "numeric", "analytic"]);
    for (i, &p) in field.values.iter().enumerate() {
        let x = field.node(i);
        csv.row(&[Cell::F(x), Cell::F(p), Cell::F(analytic_solution(t_end, x, x0))]);
    }
    ctx.write("comparison.csv", &csv.into_bytes())?;
    ctx.result("l2_error", l2);
    ctx.result("mass", field.mass());
    ctx.solver_audit(&sol.audit);
    ctx.check("l2_error", l2, "< 1e-3", l2 < 1e-3);
    Ok(())
}

fn current_csv(rec: &CurrentRecord) -> Vec<u8> {
    let mut csv = Csv::new(&["t", "current", "moving_average"]);
    for ((&t, &c), &a) in rec.times.iter().zip(&rec.currents).zip(&rec.averages) {
        csv.row(&[Cell::F(t), Cell::F(c), Cell::F(a)]);
    }
    csv.into_bytes()
}

fn reduced_options(ctx: &mut Context, cells: usize, t_end: f64) -> Result<ReducedOptions, CliError> {
    let n = &ctx.cfg.numerics;
    let (c, t, r) = (n.cells, n.t_end, n.record_every);
    Ok(ReducedOptions {
        cells: ctx.at_least("cells", c, cells, 3)?,
        t_end: ctx.positive("t_end", t, t_end)?,
        record_every: ctx.positive("record_every", r, 0.05)?,
        ..ReducedOptions::default()
    })
}

fn ratchet_spacetime(ctx: &mut Context) -> Result<(), CliError> {
    let g = ctx.ratchet_profile(("on-off", -0.6, -0.5))?;
    let opts = reduced_options(ctx, 128, 400.0 * g.period())?;
    let run = solve_reduced(&g, &opts)?;
    ctx.write("current.csv", &current_csv(&run.record))?;
    ctx.write_field("density.csv", &run.final_field)?;
    let avg = moving_average(&run.record, run.record.end_time())?;
    ctx.result("final_moving_average", avg);
    ctx.result("converged", run.converged(1e-3));
    ctx.solver_audit(&run.audit);
    ctx.check("moving_average_band", avg, "-0.86 +- 0.05", (avg + 0.86).abs() <= 0.05);
    ctx.check("weak_ratchet", avg, "in [-0.95, 0)", (-0.95..0.0).contains(&avg));
    Ok(())
}

fn seebeck(ctx: &mut Context) -> Result<(), CliError> {
    let g = ctx.ratchet_profile(("static", -0.8, 0.0))?;
    if !g.is_time_independent() {
        return Err(CliError::Config("`profile.name`: the seebeck experiment needs a `static` profile".into()));
    }
    let opts = reduced_options(ctx, 256, 50.0)?;
    let closed = seebeck_steady_current(&g).map_err(config_err)?;
    let numeric = numerical_steady_current(&g, opts.cells, 1e-9, 1000.0)?;
    let run = solve_reduced(&g, &opts)?;
    ctx.write("current.csv", &current_csv(&run.record))?;
    ctx.write_field("density.csv", &run.final_field)?;
    ctx.result("closed_form_current", closed);
    ctx.result("numerical_steady_current", numeric);
    ctx.solver_audit(&run.audit);
    let diff = (numeric - closed).abs();
    ctx.check("closed_form_agreement", diff, "|numeric - (-1/<g^-2>)| < 1e-3", diff < 1e-3);
    ctx.check("figure_band", closed, "-0.2 +- 0.08", (closed + 0.2).abs() <= 0.08);
    Ok(())
}

fn localization(ctx: &mut Context) -> Result<(), CliError> {
    let spec = match &ctx.cfg.profile {
        None => ProfileSpec::Localization { pi_x: 0.6, tilde_g: 1.0 },
        Some(p) if p.name == "localization" => ProfileSpec::from_name(&p.name, &p.pairs()).map_err(config_err)?,
        Some(p) => {
            return Err(CliError::Config(format!(
                "`profile.name`: the localization experiment needs `localization`, got `{}`",
                p.name
            )))
        }
    };
    let ProfileSpec::Localization { pi_x, tilde_g } = spec else { unreachable!() };
    ctx.parameters.insert("profile".into(), to_value(&spec));
    let n = &ctx.cfg.numerics;
    let (pi0, delta, n_traj, n_steps, cells, t_end) = (n.pi0, n.delta_scale, n.n_traj, n.n_steps, n.cells, n.t_end);
    let pi0 = ctx.param("pi0", pi0, 0.3);
    if !(pi0 > 0.0 && pi0 < 1.0) || pi0 == pi_x {
        return Err(CliError::Config(format!("`numerics.pi0` must lie in (0, 1) away from pi_x, got {pi0}")));
    }
    let delta = ctx.positive("delta_scale", delta, 0.05)?;
    let n_traj = ctx.at_least("n_traj", n_traj, 10_000, 1)?;
    let n_steps = ctx.param("n_steps", n_steps, 2_000_000);
    let cells = ctx.at_least("cells", cells, 500, 3)?;
    let t_end = ctx.positive("t_end", t_end, 10.0)?;
    let face = pi_x * cells as f64;
    if (face - face.round()).abs() > 1e-6 {
        return Err(CliError::Config(format!(
            "`numerics.cells`: pi_x * cells must be an integer so the barrier is a cell face, got {face}"
        )));
    }

    let sched = Schedule::conditional(spec, delta);
    let x0 = x_of_pi(pi0).map_err(config_err)?;
    let stats = run_absorption(x0, &sched, NeighborhoodCriterion::new(pi_x), n_steps, n_traj, ctx.cfg.seed)?;
    let mut csv = Csv::new(&["trajectory", "fate", "steps"]);
    for (i, (f, s)) in stats.fates.iter().zip(&stats.steps_taken).enumerate() {
        let name = match f {
            Fate::Basis(Basis::Zero) => "zero",
            Fate::Basis(Basis::One) => "one",
            Fate::FalseBasis => "false-basis",
            Fate::Unresolved => "unresolved",
        };
        csv.row(&[Cell::U(i as u64), Cell::S(name), Cell::U(*s)]);
    }
    ctx.write("fates.csv", &csv.into_bytes())?;

    let g = localization_profile(pi_x, Arc::new(move |_| tilde_g)).map_err(config_err)?;
    let init = Field::sampled(Chart::Pi, 0.0, 1.0, cells, BoundaryCondition::ZeroFlux, |p| {
        (-(p - pi0).powi(2) / (2.0 * 0.03f64.powi(2))).exp()
    })
    .and_then(Field::normalized)
    .map_err(config_err)?;
    let mut stepper = FpStepper::new(init, coefficients_pi(&g), SolverOptions::default())?;
    stepper.advance_to(t_end)?;
    let field = stepper.snapshot();
    ctx.write_field("fp_density.csv", &field)?;

    let expected = absorption_probability_at_x(pi0, pi_x).map_err(config_err)?;
    let (p_x, se) = stats.fraction(Fate::FalseBasis);
    let home = if pi0 < pi_x { Basis::Zero } else { Basis::One };
    let beyond = if pi0 < pi_x {
        field.mass_above(pi_x)
    } else {
        field.mass() - field.mass_above(pi_x)
    };
    ctx.result("expected_false_basis_fraction", expected);
    ctx.result("false_basis_fraction", p_x);
    ctx.result("false_basis_stderr", se);
    ctx.result("basis_fraction", stats.fraction(Fate::Basis(home)).0);
    ctx.result("unresolved", stats.count(Fate::Unresolved));
    ctx.result("crossings", stats.crossings);
    ctx.solver_audit(stepper.audit());
    ctx.audits.insert("fp_mass_beyond_barrier".into(), to_value(beyond));
    ctx.check("no_crossings", stats.crossings as f64, "0 trajectories cross Pi_X", stats.crossings == 0);
    let dev = (p_x - expected).abs();
    let split_ok = if se > 0.0 { dev < 4.0 * se } else { dev == 0.0 };
    ctx.check("absorption_split", dev, format!("|P(X) - Pi0/Pi_X| < 4 SE ({:.3e})", 4.0 * se), split_ok);
    ctx.check("fp_mass_beyond_barrier", beyond, "< 1e-12", beyond < 1e-12);
    Ok(())
}
