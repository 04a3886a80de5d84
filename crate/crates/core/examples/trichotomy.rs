//! Attractor structure against the sign pattern of the principal spectrum,
//! for one driver in each regime.
//!
//! `cargo run --release --example trichotomy`

use attractor_lab::attractor::{principal_spectrum, trichotomy_report, AttractorError, PdeModel, PullbackConfig};
use attractor_lab::parabolic::NonlinearitySpec;
use attractor_lab::{DriverSpec, HullPoint};

fn main() -> Result<(), AttractorError> {
    let g = NonlinearitySpec::pure_power(1.0, 3.0)?;
    for d in [DriverSpec::constant(-0.5), DriverSpec::P2, DriverSpec::P1, DriverSpec::constant(0.5)] {
        let model = PdeModel::neumann(48, HullPoint::new(d.clone(), 0.0), 1.0, g)?;
        let mut points: Vec<HullPoint> = [-20.0, 0.0, 20.0].iter().map(|s| HullPoint::new(d.clone(), *s)).collect();
        points.extend(d.limit_points().unwrap());
        let sp = principal_spectrum(&model)?;
        let r = trichotomy_report(&model, &points, &sp, &PullbackConfig::default())?;
        let classes: Vec<String> = r.sections.iter().map(|s| format!("{}={}", s.hull_point, s.classification)).collect();
        println!(
            "{d:<14} spectrum [{:.2}, {:.2}] case {:?}: {:?}\n    {}",
            sp.alpha,
            sp.lambda,
            r.case_tag,
            r.verdict,
            classes.join(", ")
        );
    }
    Ok(())
}
