//! Whether `∫_{-inf}^0 c(t,p)^(θ-1) dt` converges, for a range of exponents.
//! For p0, `c(t) ~ t^-2` backward, so the tail is finite exactly when θ > 3/2.
//!
//! `cargo run --release --example tail_integrability`

use attractor_lab::cocycle::tail_integral;
use attractor_lab::{DriverSpec, HullPoint};

fn main() {
    let p = HullPoint::new(DriverSpec::P0, 0.0);
    println!("{:>6} {:>10} {:>14} {:>12}  fit", "theta", "integrable", "value", "tail bound");
    for theta in [1.2, 1.4, 1.5, 1.6, 2.0, 3.0] {
        match tail_integral(&p, theta - 1.0, 1e3, 1e-3) {
            Ok(r) => println!(
                "{theta:>6} {:>10} {:>14.6} {:>12.3e}  {:?}",
                r.integrable, r.value, r.tail_bound, r.fit.map(|f| f.model)
            ),
            Err(e) => println!("{theta:>6} {e}"),
        }
    }
}
