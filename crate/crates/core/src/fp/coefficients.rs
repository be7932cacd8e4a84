//! Drift and diffusion coefficients in the three charts, and the rule that
//! carries them between charts.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measurement::{co_pi_of_x, pi_of_x, x_of_pi, Chart};

pub type CoefFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type MapFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How coefficients depend on time; lets the solver cache face weights.
#[derive(Clone)]
pub enum TimeDependence {
    Static,
    /// Constant between switching instants. The function returns the first
    /// switch strictly after its argument.
    Piecewise(MapFn),
    Continuous,
}

impl fmt::Debug for TimeDependence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeDependence::Static => "Static",
            TimeDependence::Piecewise(_) => "Piecewise",
            TimeDependence::Continuous => "Continuous",
        })
    }
}

/// Measurement-strength form factor `g(y, t)` in some chart coordinate `y`.
#[derive(Clone)]
pub struct FormFactor {
    pub g: CoefFn,
    pub time: TimeDependence,
    /// Zeros of `g` that mass must not cross.
    pub barriers: Vec<f64>,
}

impl FormFactor {
    pub fn new(g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, time: TimeDependence) -> Self {
        FormFactor {
            g: Arc::new(g),
            time,
            barriers: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c, TimeDependence::Static)
    }

    pub fn spatial(g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |y, _| g(y), TimeDependence::Static)
    }

    pub fn with_barriers(mut self, barriers: Vec<f64>) -> Self {
        self.barriers = barriers;
        self
    }

    pub fn eval(&self, y: f64, t: f64) -> f64 {
        (self.g)(y, t)
    }
}

impl fmt::Debug for FormFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormFactor")
            .field("time", &self.time)
            .field("barriers", &self.barriers)
            .finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub struct FpCoefficients {
    pub chart: Chart,
    pub mu: CoefFn,
    pub diffusion: CoefFn,
    pub time: TimeDependence,
    pub barriers: Vec<f64>,
}

impl fmt::Debug for FpCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FpCoefficients")
            .field("chart", &self.chart)
            .field("time", &self.time)
            .field("barriers", &self.barriers)
            .finish_non_exhaustive()
    }
}

impl FpCoefficients {
    pub fn new(
        chart: Chart,
        mu: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        diffusion: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        time: TimeDependence,
    ) -> Self {
        FpCoefficients {
            chart,
            mu: Arc::new(mu),
            diffusion: Arc::new(diffusion),
            time,
            barriers: Vec::new(),
        }
    }

    pub fn with_barriers(mut self, barriers: Vec<f64>) -> Self {
        self.barriers = barriers;
        self
    }

    pub fn mu(&self, y: f64, t: f64) -> f64 {
        (self.mu)(y, t)
    }

    pub fn diffusion(&self, y: f64, t: f64) -> f64 {
        (self.diffusion)(y, t)
    }
}

/// `μ = g² tanh x`, `D = g²/2`.
pub fn coefficients_x(g: &FormFactor) -> FpCoefficients {
    let (g1, g2) = (g.g.clone(), g.g.clone());
    FpCoefficients::new(
        Chart::X,
        move |x, t| g1(x, t).powi(2) * x.tanh(),
        move |x, t| 0.5 * g2(x, t).powi(2),
        g.time.clone(),
    )
    .with_barriers(g.barriers.clone())
}

/// `μ = -g² sin4θ / 8`, `D = g² sin²2θ / 8`.
pub fn coefficients_theta(g: &FormFactor) -> FpCoefficients {
    let (g1, g2) = (g.g.clone(), g.g.clone());
    FpCoefficients::new(
        Chart::Theta,
        move |th, t| -g1(th, t).powi(2) * (4.0 * th).sin() / 8.0,
        move |th, t| g2(th, t).powi(2) * (2.0 * th).sin().powi(2) / 8.0,
        g.time.clone(),
    )
    .with_barriers(g.barriers.clone())
}

/// `μ = 0`, `D = 2 Π² (1-Π)² g²`.
pub fn coefficients_pi(g: &FormFactor) -> FpCoefficients {
    let g2 = g.g.clone();
    FpCoefficients::new(
        Chart::Pi,
        |_, _| 0.0,
        move |p, t| 2.0 * (p * (1.0 - p)).powi(2) * g2(p, t).powi(2),
        g.time.clone(),
    )
    .with_barriers(g.barriers.clone())
}

/// A smooth monotone change of variables `y(x)` with its first two
/// derivatives expressed in the source coordinate.
#[derive(Clone)]
pub struct CoordinateMap {
    pub target: Chart,
    pub forward: MapFn,
    pub inverse: MapFn,
    pub d1: MapFn,
    pub d2: MapFn,
    /// Source interval on which monotonicity is checked.
    pub domain: (f64, f64),
}

impl CoordinateMap {
    pub fn identity(chart: Chart, domain: (f64, f64)) -> Self {
        CoordinateMap {
            target: chart,
            forward: Arc::new(|x| x),
            inverse: Arc::new(|y| y),
            d1: Arc::new(|_| 1.0),
            d2: Arc::new(|_| 0.0),
            domain,
        }
    }

    /// `Π = (1 + tanh x)/2`.
    pub fn x_to_pi() -> Self {
        CoordinateMap {
            target: Chart::Pi,
            forward: Arc::new(pi_of_x),
            inverse: Arc::new(|p| x_of_pi(p).unwrap_or(f64::NAN)),
            d1: Arc::new(|x| 2.0 * pi_of_x(x) * co_pi_of_x(x)),
            d2: Arc::new(|x| -x.tanh() / x.cosh().powi(2)),
            domain: (-20.0, 20.0),
        }
    }

    /// `θ = atan(eˣ)`.
    pub fn x_to_theta() -> Self {
        CoordinateMap {
            target: Chart::Theta,
            forward: Arc::new(|x: f64| x.exp().atan()),
            inverse: Arc::new(|th: f64| th.tan().ln()),
            d1: Arc::new(|x: f64| 0.5 / x.cosh()),
            d2: Arc::new(|x: f64| -0.5 * x.tanh() / x.cosh()),
            domain: (-20.0, 20.0),
        }
    }

    fn check_monotone(&self) -> Result<()> {
        const SAMPLES: usize = 1001;
        let (lo, hi) = self.domain;
        let mut sign = 0.0;
        for k in 0..SAMPLES {
            let x = lo + (hi - lo) * k as f64 / (SAMPLES - 1) as f64;
            let d = (self.d1)(x);
            if !d.is_finite() || d == 0.0 || (sign != 0.0 && d.signum() != sign) {
                return Err(Error::NonMonotoneMap);
            }
            sign = d.signum();
        }
        Ok(())
    }
}

/// Coefficients in the coordinate `y(x)`:
/// `μ_y = μ y' + D y''`, `D_y = D y'²`, both evaluated at `x = x(y)`.
pub fn change_coordinates(c: &FpCoefficients, map: &CoordinateMap) -> Result<FpCoefficients> {
    map.check_monotone()?;
    let (mu, dd) = (c.mu.clone(), c.diffusion.clone());
    let (inv, d1, d2) = (map.inverse.clone(), map.d1.clone(), map.d2.clone());
    let mu_y = move |y: f64, t: f64| {
        let x = inv(y);
        mu(x, t) * d1(x) + dd(x, t) * d2(x)
    };
    let (dd, inv, d1) = (c.diffusion.clone(), map.inverse.clone(), map.d1.clone());
    let d_y = move |y: f64, t: f64| {
        let x = inv(y);
        dd(x, t) * d1(x).powi(2)
    };
    let barriers = c.barriers.iter().map(|&b| (map.forward)(b)).collect();
    Ok(FpCoefficients::new(map.target, mu_y, d_y, c.time.clone()).with_barriers(barriers))
}

/// `V(y, t) = -∫₀ʸ μ(s, t) ds` by double-exponential quadrature.
pub fn potential(c: &FpCoefficients) -> impl Fn(f64, f64) -> f64 + Send + Sync {
    let mu = c.mu.clone();
    move |y: f64, t: f64| -quadrature::integrate(|s| mu(s, t), 0.0, y, 1e-10).integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::x_of_theta;
    use approx::assert_abs_diff_eq;

    fn wavy() -> FormFactor {
        FormFactor::spatial(|x: f64| 1.0 + 0.4 * (1.3 * x).sin())
    }

    #[test]
    fn unit_strength_at_origin() {
        let c = coefficients_x(&FormFactor::constant(1.0));
        assert_eq!(c.mu(0.0, 0.0), 0.0);
        assert_eq!(c.diffusion(0.0, 0.0), 0.5);
    }

    #[test]
    fn pi_chart_is_driftless_and_degenerate_at_ends() {
        let c = coefficients_pi(&FormFactor::spatial(|p| 3.0 - p));
        for p in [0.0, 0.2, 0.9, 1.0] {
            assert_eq!(c.mu(p, 1.0), 0.0);
        }
        assert_eq!(c.diffusion(0.0, 0.0), 0.0);
        assert_eq!(c.diffusion(1.0, 0.0), 0.0);
    }

    #[test]
    fn x_chart_drift_is_twice_diffusion_times_tanh() {
        let c = coefficients_x(&wavy());
        for x in [-7.0, -0.3, 0.0, 0.8, 4.0] {
            assert_eq!(c.mu(x, 0.0), 2.0 * c.diffusion(x, 0.0) * x.tanh());
        }
    }

    #[test]
    fn identity_map_keeps_coefficients() {
        let c = coefficients_x(&wavy());
        let m = change_coordinates(&c, &CoordinateMap::identity(Chart::X, (-5.0, 5.0))).unwrap();
        for x in [-2.0, 0.1, 3.0] {
            assert_eq!(m.mu(x, 0.0), c.mu(x, 0.0));
            assert_eq!(m.diffusion(x, 0.0), c.diffusion(x, 0.0));
        }
    }

    #[test]
    fn x_to_pi_reproduces_pi_chart() {
        let g = |x: f64| 1.0 + 0.4 * (1.3 * x).sin();
        let mapped = change_coordinates(&coefficients_x(&FormFactor::spatial(g)), &CoordinateMap::x_to_pi()).unwrap();
        let direct = coefficients_pi(&FormFactor::spatial(move |p| g(x_of_pi(p).unwrap())));
        for p in [0.01, 0.2, 0.5, 0.77, 0.999] {
            assert_abs_diff_eq!(mapped.mu(p, 0.0), direct.mu(p, 0.0), epsilon = 1e-10);
            assert_abs_diff_eq!(mapped.diffusion(p, 0.0), direct.diffusion(p, 0.0), epsilon = 1e-10);
        }
    }

    #[test]
    fn x_to_theta_reproduces_theta_chart() {
        let g = |x: f64| 0.5 + 0.1 * x.cos();
        let mapped = change_coordinates(&coefficients_x(&FormFactor::spatial(g)), &CoordinateMap::x_to_theta()).unwrap();
        let direct = coefficients_theta(&FormFactor::spatial(move |th| g(x_of_theta(th).unwrap())));
        for th in [0.05, 0.4, 0.785, 1.2, 1.5] {
            assert_abs_diff_eq!(mapped.mu(th, 0.0), direct.mu(th, 0.0), epsilon = 1e-10);
            assert_abs_diff_eq!(mapped.diffusion(th, 0.0), direct.diffusion(th, 0.0), epsilon = 1e-10);
        }
    }

    #[test]
    fn folding_map_is_rejected() {
        let mut m = CoordinateMap::identity(Chart::X, (-1.0, 1.0));
        m.d1 = Arc::new(|x: f64| 2.0 * x);
        let c = coefficients_x(&FormFactor::constant(1.0));
        assert!(matches!(change_coordinates(&c, &m), Err(Error::NonMonotoneMap)));
    }

    #[test]
    fn potential_of_unit_strength_is_minus_log_cosh() {
        let v = potential(&coefficients_x(&FormFactor::constant(1.0)));
        for x in [-3.0, -0.5, 0.0, 1.0, 6.0] {
            assert_abs_diff_eq!(v(x, 0.0), -x.cosh().ln(), epsilon = 1e-9);
        }
        let flat = potential(&coefficients_pi(&FormFactor::constant(1.0)));
        assert_eq!(flat(0.4, 0.0), 0.0);
    }

    #[test]
    fn potential_slope_is_minus_drift() {
        let c = coefficients_x(&wavy());
        let v = potential(&c);
        let h = 1e-4;
        for x in [-2.0, 0.3, 1.7] {
            let slope = (v(x + h, 0.0) - v(x - h, 0.0)) / (2.0 * h);
            assert_abs_diff_eq!(slope, -c.mu(x, 0.0), epsilon = 1e-6);
        }
    }
}
