//! With a nonlinearity that vanishes on [0, r0], three statements about a hull
//! point should agree: b(p) ≫ 0, c(t,p) bounded backward, and the linear
//! pullback `φ(t, p·(-t)) e0` not decaying.
//!
//! `cargo run --release --example deadzone_equivalence`

use attractor_lab::attractor::{equivalence_report, AttractorError, PdeModel};
use attractor_lab::parabolic::NonlinearitySpec;
use attractor_lab::{DriverSpec, HullPoint};

fn main() -> Result<(), AttractorError> {
    let g = NonlinearitySpec::deadzone(1.0, 3.0, 0.5)?;
    for d in [DriverSpec::P0, DriverSpec::P1, DriverSpec::P2] {
        let model = PdeModel::neumann(48, HullPoint::new(d.clone(), 0.0), 1.0, g)?;
        let mut points = vec![HullPoint::new(d.clone(), 0.0), HullPoint::new(d.clone(), -5.0)];
        points.extend(d.limit_points().unwrap());
        for p in &points {
            let r = equivalence_report(&model, p, 400.0)?;
            println!(
                "{:<14} b>>0 {:<5} bounded {:<5} persistent {:<5} agree {:<5} (sup b {:.3e})",
                r.hull_point, r.b_positive, r.cocycle_bounded, r.linear_persistent, r.agree, r.b_sup
            );
        }
    }
    Ok(())
}
