use proptest::prelude::*;

use wzm_core::fp::{coefficients_x, FormFactor, TimeDependence};
use wzm_core::master::{evolve, propagate_const, PdfGrid};
use wzm_core::measurement::{
    outcome_probabilities_x, pi_of_x, post_measurement_state, step_size_at_x, step_sizes, x_of_pi, Chart, KrausPair,
    MeasurementParams, Outcome, StateCoordinate,
};
use wzm_core::ratchet::{seebeck_steady_current, GProfile, SpatialProfile, TemporalSwitch};
use wzm_core::schedule::{ProfileSpec, Schedule};
use wzm_core::trajectory::{run_ensemble, run_trajectory, HistogramSpec};

/// Weak, non-projective parameters.
fn params() -> impl Strategy<Value = MeasurementParams> {
    (0.1f64..1.2, -0.09f64..0.3)
        .prop_filter("alpha + delta away from pi/2", |(a, d)| a + d < 1.5)
        .prop_map(|(a, d)| MeasurementParams::new(a, d).unwrap())
}

const OUTCOMES: [Outcome; 2] = [Outcome::Zero, Outcome::One];

proptest! {
    #[test]
    fn probabilities_are_complete(x in -20.0f64..20.0, p in params()) {
        let (p0, p1) = outcome_probabilities_x(x, &p);
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
        prop_assert!(p0 >= 0.0 && p1 >= 0.0);
    }

    #[test]
    fn kraus_operators_are_complete(p in params()) {
        for c in KrausPair::new(&p).completeness() {
            prop_assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_size_does_not_depend_on_x(x in -10.0f64..10.0, p in params()) {
        let eps = step_sizes(&p).unwrap();
        for o in OUTCOMES {
            prop_assert!((step_size_at_x(x, &p, o).unwrap() - eps.get(o)).abs() < 1e-10);
        }
    }

    #[test]
    fn update_moves_by_the_step_size(x in -10.0f64..10.0, p in params()) {
        let eps = step_sizes(&p).unwrap();
        let s = StateCoordinate::from_x(x).unwrap();
        for o in OUTCOMES {
            let next = post_measurement_state(&s, &p, o);
            prop_assert!((next.x() - (x + eps.get(o))).abs() < 1e-10);
        }
    }

    #[test]
    fn charts_round_trip(x in -20.0f64..20.0) {
        let s = StateCoordinate::from_x(x).unwrap();
        for chart in [Chart::Theta, Chart::Pi] {
            prop_assert!((s.to_chart(chart).x() - x).abs() < 1e-12);
        }
    }

    /// One step leaves the expected Π unchanged.
    #[test]
    fn pi_is_a_martingale(x in -8.0f64..8.0, p in params()) {
        let eps = step_sizes(&p).unwrap();
        let (p0, p1) = outcome_probabilities_x(x, &p);
        let after = p0 * pi_of_x(x + eps.eps0) + p1 * pi_of_x(x + eps.eps1);
        prop_assert!((after - pi_of_x(x)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectories_are_deterministic(x0 in -2.0f64..2.0, seed: u64, amplitude in 0.0f64..0.9) {
        let sched = Schedule::conditional(
            ProfileSpec::Sinusoid { mean: 1.0, amplitude, wavenumber: 1.3, phase: 0.0 },
            0.08,
        );
        let a = run_trajectory(x0, &sched, 300, seed).unwrap();
        let b = run_trajectory(x0, &sched, 300, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ensembles_do_not_depend_on_thread_count(seed: u64) {
        let sched = Schedule::constant(0.6, 0.1);
        let hist = HistogramSpec::uniform(-5.0, 5.0, 20).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(0.2, &sched, 64, &[10, 50], hist.clone(), seed).unwrap())
        };
        prop_assert_eq!(run(1), run(4));
    }

    #[test]
    fn localized_walks_never_cross(pi_x in 0.2f64..0.8, below in 0.05f64..0.9, delta in 0.02f64..0.2, seed: u64) {
        let barrier = x_of_pi(pi_x).unwrap();
        let x0 = x_of_pi(pi_x * below).unwrap();
        let sched = Schedule::conditional(ProfileSpec::Localization { pi_x, tilde_g: 1.0 }, delta);
        let rec = run_trajectory(x0, &sched, 3000, seed).unwrap();
        prop_assert!(rec.entries.iter().all(|e| e.x < barrier));
    }

    #[test]
    fn master_step_conserves_mass_and_pi(x0 in -3.0f64..3.0, p in params()) {
        // twenty steps of up to |ε| ≈ 1.6 from |x0| ≤ 3
        let mut grid = PdfGrid::uniform(-40.0, 40.0, 8000).unwrap().with_spike(x0).unwrap();
        for _ in 0..20 {
            let next = propagate_const(&grid, &p).unwrap();
            // large steps can reach the grid ends; the absorbers keep that mass
            let total = |g: &PdfGrid| g.mass() + g.absorbed_mass();
            prop_assert!((total(&next) - total(&grid)).abs() <= 1e-12);
            prop_assert!((next.pi_average() - grid.pi_average()).abs() <= 1e-9);
            grid = next;
        }
    }

    #[test]
    fn constant_schedule_matches_constant_path(x0 in -3.0f64..3.0, p in params()) {
        let grid = PdfGrid::uniform(-15.0, 15.0, 1500).unwrap().with_spike(x0).unwrap();
        let via_schedule = evolve(&grid, &Schedule::constant(p.alpha, p.delta), 15, |_| {}).unwrap();
        let mut direct = grid;
        for _ in 0..15 {
            direct = propagate_const(&direct, &p).unwrap();
        }
        for (a, b) in via_schedule.values().iter().zip(direct.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn x_chart_drift_is_twice_diffusion_times_tanh(
        x in -30.0f64..30.0,
        t in 0.0f64..10.0,
        a in -2.0f64..2.0,
        k in 0.1f64..3.0,
    ) {
        let c = coefficients_x(&FormFactor::new(move |x, t| 1.0 + a * (k * x + t).sin(), TimeDependence::Continuous));
        prop_assert_eq!(c.mu(x, t), 2.0 * c.diffusion(x, t) * x.tanh());
    }

    /// ⟨g²⟩⟨g⁻²⟩ ≥ 1, so the Seebeck current never drops below -1.
    #[test]
    fn mean_inequality_bounds_the_seebeck_current(a in -0.8f64..0.8, b in -0.6f64..0.6, c in -0.3f64..0.3) {
        let sp = SpatialProfile { terms: vec![(1, a, 0.0), (2, a * b, c)], ..SpatialProfile::flat(0.0) };
        if let Ok(g) = GProfile::new(sp, TemporalSwitch::Constant { value: 1.0 }) {
            let product = g.spatial_mean_pow(2, 0.0) * g.spatial_mean_pow(-2, 0.0);
            prop_assert!(product >= 1.0 - 1e-12);
            let j = seebeck_steady_current(&g).unwrap();
            prop_assert!((-1.0 - 1e-12..0.0).contains(&j));
        }
    }
}

#[test]
fn mean_inequality_is_tight_for_constant_profiles() {
    let g = GProfile::new(SpatialProfile::flat(0.0), TemporalSwitch::Constant { value: 1.0 }).unwrap();
    let product = g.spatial_mean_pow(2, 0.0) * g.spatial_mean_pow(-2, 0.0);
    assert!((product - 1.0).abs() < 1e-12);
    assert!((seebeck_steady_current(&g).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn tiny_deltas_keep_relative_precision() {
    let p = MeasurementParams::new(std::f64::consts::FRAC_PI_4, 6.831107878435287e-17).unwrap();
    let eps = step_sizes(&p).unwrap();
    assert!((eps.eps0 / -p.delta - 1.0).abs() < 1e-12, "{eps:?}");
    assert!((eps.eps1 / p.delta - 1.0).abs() < 1e-12, "{eps:?}");
}

#[test]
fn walk_converging_on_the_barrier_stays_below_it() {
    let (pi_x, delta, seed) = (0.7943323698682366, 0.19365051748395973, 5045913094999194796);
    let barrier = x_of_pi(pi_x).unwrap();
    let x0 = x_of_pi(pi_x * 0.771642957031226).unwrap();
    let sched = Schedule::conditional(ProfileSpec::Localization { pi_x, tilde_g: 1.0 }, delta);
    let rec = run_trajectory(x0, &sched, 3000, seed).unwrap();
    assert!(rec.entries.iter().all(|e| e.x < barrier));
}
