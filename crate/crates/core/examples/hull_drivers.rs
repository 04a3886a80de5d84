//! The three model drivers, their translates and their limit functions.
//!
//! `cargo run --release --example hull_drivers`

use attractor_lab::{DriverSpec, HullPoint};

fn main() {
    for d in [DriverSpec::P0, DriverSpec::P1, DriverSpec::P2] {
        let p = HullPoint::new(d.clone(), 0.0);
        let row: Vec<String> = [-100.0, -2.0, 0.0, 2.0, 100.0]
            .iter()
            .map(|t| format!("{:>8.4}", p.evaluate(*t)))
            .collect();
        println!("{:<4} a(t) at t = -100, -2, 0, 2, 100: {}", d, row.join(" "));

        // Translating by s and evaluating at t is evaluating at t + s.
        let q = p.advance(5.0);
        assert_eq!(q.evaluate(-3.0), p.evaluate(2.0));

        for lp in d.limit_points().unwrap() {
            println!("     limit {:<12} a = {}", lp.label(), lp.evaluate(0.0));
        }
    }

    let qp = DriverSpec::quasi_periodic(vec![1.0, 0.5], vec![1.0, 2f64.sqrt()], vec![0.0, 0.3]).unwrap();
    let p = HullPoint::new(qp, 10.0);
    println!("quasi-periodic at shift 10: a(0) = {:.6}, torus phases {:?}", p.evaluate(0.0), p.torus_phases());
}
