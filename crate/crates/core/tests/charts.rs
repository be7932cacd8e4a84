//! The same initial condition evolved in the x and Π charts.

use wzm_core::fp::{coefficients_pi, coefficients_x, solve, BoundaryCondition, Field, FormFactor, SolverOptions};
use wzm_core::measurement::{pi_of_x, x_of_pi, Chart};

#[test]
fn x_and_pi_charts_agree() {
    let g = FormFactor::spatial(|x: f64| 1.0 + 0.3 * (0.7 * x).sin());
    let g_pi = FormFactor::spatial(|p: f64| 1.0 + 0.3 * (0.7 * x_of_pi(p.clamp(1e-300, 1.0 - 1e-16)).unwrap()).sin());
    let density_x = |x: f64| (-(x - 0.5f64).powi(2) / 0.5).exp();

    let init_x = Field::sampled(Chart::X, -12.0, 12.0, 1200, BoundaryCondition::ZeroFlux, density_x)
        .unwrap()
        .normalized()
        .unwrap();
    // P_Π(Π) = P_x(x(Π)) / (dΠ/dx), dΠ/dx = 2Π(1 - Π)
    let init_pi = Field::sampled(Chart::Pi, 0.0, 1.0, 500, BoundaryCondition::ZeroFlux, |p| {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            density_x(x_of_pi(p).unwrap()) / (2.0 * p * (1.0 - p))
        }
    })
    .unwrap()
    .normalized()
    .unwrap();

    let t = 0.5;
    let sx = solve(&init_x, &coefficients_x(&g), t, &[], SolverOptions::default()).unwrap();
    let sp = solve(&init_pi, &coefficients_pi(&g_pi), t, &[], SolverOptions::default()).unwrap();
    assert!(sx.audit.max_mass_drift < 1e-8 && sp.audit.max_mass_drift < 1e-8);

    let pi_edges: Vec<f64> = (0..=40).map(|k| 0.02 + 0.024 * k as f64).collect();
    let x_edges: Vec<f64> = pi_edges.iter().map(|&p| x_of_pi(p).unwrap()).collect();
    let (bx, bp) = (sx.last().binned(&x_edges), sp.last().binned(&pi_edges));
    let l1: f64 = bx.iter().zip(&bp).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 < 1e-3, "L1 {l1}");

    let mean_x = sx.last().expectation(pi_of_x);
    let mean_pi = sp.last().expectation(|p| p);
    assert!((mean_x - mean_pi).abs() < 1e-3, "{mean_x} vs {mean_pi}");
}
