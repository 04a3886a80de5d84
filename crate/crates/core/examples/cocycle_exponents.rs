//! `c(t,p) = exp ∫_0^t a(p·s) ds` along the base orbit, its Lyapunov-type
//! exponents and the principal spectrum of each driver.
//!
//! `cargo run --release --example cocycle_exponents`

use attractor_lab::cocycle::{log_cocycle, lyapunov, spectrum_estimate, DEFAULT_STEP};
use attractor_lab::{DriverSpec, HullPoint};

fn main() {
    for d in [DriverSpec::P0, DriverSpec::P1, DriverSpec::P2, DriverSpec::constant(-0.5)] {
        let p = HullPoint::new(d.clone(), 0.0);
        let ln_c: Vec<String> = [-50.0, -5.0, 5.0, 50.0]
            .iter()
            .map(|t| format!("{:>9.4}", log_cocycle(&p, *t, DEFAULT_STEP)))
            .collect();
        let l = lyapunov(&p, 1e4).unwrap();
        let sp = spectrum_estimate(&d, &[1e4], &[-100.0, 0.0, 100.0]).unwrap();
        println!("{d:<14} ln c at -50,-5,5,50: {}", ln_c.join(""));
        println!(
            "{:<14} lambda+ in [{:.3}, {:.3}], lambda- in [{:.3}, {:.3}], spectrum ~ [{:.3}, {:.3}]",
            "", l.lambda_inf_plus, l.lambda_sup_plus, l.lambda_inf_minus, l.lambda_sup_minus, sp.alpha, sp.lambda
        );
    }
}
