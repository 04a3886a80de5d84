//! Forward evolution of `y_t = Δy + h(t)y - ρ y^θ` from a few initial fields,
//! with the sup-norm sampled every time unit.
//!
//! `cargo run --release --example evolve_forward`

use attractor_lab::attractor::PdeModel;
use attractor_lab::parabolic::{evolve_sampled, FieldState, NonlinearitySpec};
use attractor_lab::{DriverSpec, HullPoint};

fn main() {
    let g = NonlinearitySpec::pure_power(1.0, 3.0).unwrap();
    let model = PdeModel::neumann(64, HullPoint::new(DriverSpec::constant(0.5), 0.0), 1.0, g).unwrap();
    let dt = model.default_dt(3.0);
    let starts = [
        ("0.01 e0", model.grid.e0().scaled(0.01)),
        ("bump", FieldState::from_fn(&model.grid, |x| 3.0 * (-40.0 * (x - 0.3).powi(2)).exp())),
        ("3 e0", model.grid.e0().scaled(3.0)),
    ];
    for (name, z0) in starts {
        let traj = evolve_sampled(&model.coeff, Some(&model.g), &model.grid, &z0, 20.0, dt, 5.0).unwrap();
        let norms: Vec<String> = traj.iter().map(|(t, z)| format!("t={t:>4}: {:.6}", z.sup_norm())).collect();
        println!("{name:<8} {}", norms.join("  "));
    }
    println!("equilibrium sqrt(1/2) = {:.6}", 0.5f64.sqrt());
}
