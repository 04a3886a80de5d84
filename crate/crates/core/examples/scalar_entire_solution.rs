//! The scalar Bernoulli equation `w' = (a w - w^θ)/(θ-1)`: its closed-form
//! entire solution against a pullback from a large initial value.
//!
//! `cargo run --release --example scalar_entire_solution`

use attractor_lab::scalar_ode::ScalarProblem;
use attractor_lab::{DriverSpec, HullPoint};

fn main() {
    let p = HullPoint::new(DriverSpec::P1, 0.0);
    for theta in [2.0, 3.0] {
        let sp = ScalarProblem::on_point(theta, p.clone()).unwrap();
        // The backward decay of c is only polynomial here, so the ladder is long.
        let ladder: Vec<f64> = (0..8).map(|k| 100.0 * 2f64.powi(k)).collect();
        let b = sp.pullback_bstar(None, &ladder, 1e-4).unwrap();
        let w0 = sp.entire_solution(0.0, 1e-10).unwrap();
        println!(
            "theta {theta}: pullback b* = {:.10} (gap {:.1e}), closed form w0(0) = {w0:.10}, {}",
            b.b_star, b.cauchy_gap, b.classification
        );

        // Follow the entire solution forward and compare with the closed form.
        let start = sp.entire_solution(-10.0, 1e-10).unwrap();
        let traj = sp.integrate(start, -10.0, 5.0, 0.5).unwrap();
        for t in [-5.0, 0.0, 5.0] {
            let num = traj.value_at(t).unwrap();
            let exact = sp.entire_solution(t, 1e-10).unwrap();
            println!("   t = {t:>4}: integrated {num:.10}  closed form {exact:.10}");
        }
    }
}
