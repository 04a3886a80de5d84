//! Closed forms and small helpers shared by the integration tests. Nothing
//! here calls into the library's quadrature or ODE code.
#![allow(dead_code)]

use attractor_lab::attractor::PdeModel;
use attractor_lab::parabolic::NonlinearitySpec;
use attractor_lab::{DriverSpec, HullPoint};

/// `v(t)` for half of p1 with `ρ = 1/2`, `θ = 3`; the boundary is `v^{-1/2}`.
pub fn heteroclinic_v(t: f64) -> f64 {
    if t <= -1.0 {
        -t
    } else {
        let e = (-2.0 * (t + 1.0)).exp();
        e + (1.0 - e) / 2.0
    }
}

pub fn heteroclinic_b(t: f64) -> f64 {
    heteroclinic_v(t).powf(-0.5)
}

/// `ln c(t)` for p0: `-t²` on `[-1, 1]`, `-1 - 2 ln|t|` outside.
pub fn p0_log_c(t: f64) -> f64 {
    if t.abs() <= 1.0 {
        -t * t
    } else {
        -1.0 - 2.0 * t.abs().ln()
    }
}

/// `∫_{-inf}^t c(s)^2 ds` for p0, Simpson on the middle piece.
fn p0_c2_integral(t: f64) -> f64 {
    let e2 = (-2.0f64).exp();
    if t <= -1.0 {
        return e2 * (-t).powi(-3) / 3.0;
    }
    let mid_end = t.min(1.0);
    let n = 4000;
    let h = (mid_end + 1.0) / n as f64;
    let f = |s: f64| (-2.0 * s * s).exp();
    let mut acc = f(-1.0) + f(mid_end);
    for i in 1..n {
        acc += f(-1.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let mut total = e2 / 3.0 + acc * h / 3.0;
    if t > 1.0 {
        total += e2 * (1.0 - t.powi(-3)) / 3.0;
    }
    total
}

/// Bounded entire solution of `y' = p0(t) y - y³`: with `u = y^{-2}`,
/// `u(t) = 2 c(t)^{-2} ∫_{-inf}^t c(s)^2 ds`.
pub fn homoclinic_b(t: f64) -> f64 {
    let u = 2.0 * (-2.0 * p0_log_c(t)).exp() * p0_c2_integral(t);
    u.powf(-0.5)
}

pub fn pure(rho: f64, theta: f64) -> NonlinearitySpec {
    NonlinearitySpec::pure_power(rho, theta).unwrap()
}

pub fn neumann(n: usize, d: DriverSpec, shift: f64, scale: f64, g: NonlinearitySpec) -> PdeModel {
    PdeModel::neumann(n, HullPoint::new(d, shift), scale, g).unwrap()
}

/// Hull points used for sampling: three translates and every limit point.
pub fn sample_points(d: &DriverSpec, shifts: &[f64]) -> Vec<HullPoint> {
    let mut pts: Vec<HullPoint> = shifts.iter().map(|s| HullPoint::new(d.clone(), *s)).collect();
    pts.extend(d.limit_points().unwrap());
    pts
}
