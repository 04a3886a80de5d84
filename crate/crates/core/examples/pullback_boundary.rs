//! The upper boundary `b(p)` of the attractor section, as the decreasing
//! pullback limit from `r·e0`, across the nonlinearity exponent.
//!
//! `cargo run --release --example pullback_boundary`

use attractor_lab::attractor::{pullback_boundary, AttractorError, PdeModel, PullbackConfig};
use attractor_lab::parabolic::NonlinearitySpec;
use attractor_lab::{DriverSpec, HullPoint};

fn main() -> Result<(), AttractorError> {
    let p = HullPoint::new(DriverSpec::P0, 0.0);
    let cfg = PullbackConfig::default();
    for theta in [1.2, 1.6, 3.0] {
        let g = NonlinearitySpec::pure_power(1.0, theta)?;
        let model = PdeModel::neumann(64, p.clone(), 1.0, g)?;
        // Slow ladders come back as NotConverged; the partial section still
        // carries the cocycle-based classification.
        let s = pullback_boundary(&model, &cfg).or_else(AttractorError::into_partial)?;
        println!(
            "theta {theta}: sup b = {:.3e}  gap {:.1e}  pullback says {:<17} overall {:<17} ({:?})",
            s.sup_norm, s.cauchy_gap, s.pullback_classification, s.classification, s.basis
        );
    }
    Ok(())
}
