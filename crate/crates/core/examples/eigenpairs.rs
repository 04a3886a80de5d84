//! Principal eigenpair of `-Δ` on (0, 1) for each boundary condition.
//!
//! `cargo run --release --example eigenpairs`

use attractor_lab::parabolic::{BoundaryCondition, Grid};
use std::f64::consts::PI;

fn main() {
    let bcs = [
        BoundaryCondition::Neumann,
        BoundaryCondition::Robin { alpha_bar: 1.0 },
        BoundaryCondition::Dirichlet,
    ];
    for bc in bcs {
        for n in [32, 128, 512] {
            let g = Grid::unit(n, bc).unwrap();
            let e0 = g.e0();
            println!(
                "{:<10} n = {n:>3}: gamma0 = {:.8}  max e0 = {:.4}  e0(1/2) = {:.4}",
                bc.to_string(),
                g.gamma0(),
                e0.sup_norm(),
                e0.values[n / 2]
            );
        }
    }
    println!("continuum Dirichlet value pi^2 = {:.8}", PI * PI);
}
