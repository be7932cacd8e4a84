//! Continuum (Fokker–Planck) description of the walk.

pub mod coefficients;
pub mod io;
pub mod solver;

pub use coefficients::{
    change_coordinates, coefficients_pi, coefficients_theta, coefficients_x, potential, CoordinateMap,
    FormFactor, FpCoefficients, TimeDependence,
};
pub use solver::{drift_velocity, solve, BoundaryCondition, Field, FpSolution, FpStepper, SolverAudit, SolverOptions};

/// `ln cosh z` without overflow.
fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Density at time `t` for unit form factor, starting from a point mass at `x0`:
///
/// ```text
/// P = (2πt)^{-1/2} · cosh x / cosh x0 · exp(-(t² + (x - x0)²) / 2t)
/// ```
pub fn analytic_solution(t: f64, x: f64, x0: f64) -> f64 {
    let log = ln_cosh(x) - ln_cosh(x0) - (t * t + (x - x0).powi(2)) / (2.0 * t);
    log.exp() / (2.0 * std::f64::consts::PI * t).sqrt()
}

/// Truncated domain `[x0 - 15√t - 5, x0 + 15√t + 5]` for runs of length `t_end`.
pub fn truncated_domain(x0: f64, t_end: f64) -> (f64, f64) {
    let w = 15.0 * t_end.sqrt() + 5.0;
    (x0 - w, x0 + w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn value_at_start_point() {
        for t in [0.3f64, 1.0, 4.0] {
            let expect = (-t / 2.0f64).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
            assert_abs_diff_eq!(analytic_solution(t, -10.0, -10.0), expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn unit_mass() {
        for t in [0.5, 1.0, 2.0] {
            let m: f64 = (0..20)
                .map(|k| {
                    let a = -60.0 + 5.0 * k as f64;
                    quadrature::integrate(|x| analytic_solution(t, x, -10.0), a, a + 5.0, 1e-13).integral
                })
                .sum();
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn peak_moves_away_from_origin() {
        let (mut best, mut arg) = (0.0, 0.0);
        for k in 0..=40_000 {
            let x = -14.0 + k as f64 * 1e-4;
            let p = analytic_solution(1.0, x, -10.0);
            if p > best {
                best = p;
                arg = x;
            }
        }
        assert!((arg + 11.0).abs() < 1e-3, "argmax {arg}");
    }

    #[test]
    fn ln_cosh_is_stable() {
        assert_abs_diff_eq!(ln_cosh(0.0), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(ln_cosh(1.5), 1.5f64.cosh().ln(), epsilon = 1e-14);
        assert!(ln_cosh(1000.0).is_finite());
    }
}
