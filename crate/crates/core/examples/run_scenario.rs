//! Runs a bundled scenario (default `autonomous_s5`) or a scenario file and
//! writes `report.json` plus one artifact per experiment.
//!
//! `cargo run --release --example run_scenario -- homoclinic_threshold /tmp/report-dir`

use attractor_lab::scenario::{self, Scenario};
use std::path::{Path, PathBuf};

fn main() {
    let mut args = std::env::args().skip(1);
    let which = args.next().unwrap_or_else(|| "autonomous_s5".into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join(&which));
    let s = scenario::bundled(&which).unwrap_or_else(|| Scenario::load(Path::new(&which)).unwrap_or_else(|e| panic!("{e}")));
    let report = scenario::run(&s, &out).unwrap_or_else(|e| panic!("{e}"));
    for e in &report.experiments {
        println!("{:<24} {:<12} {:?}  ({})", e.name, e.kind, e.status, e.anchor);
    }
    println!("{:?}; report in {}", report.status, out.join("report.json").display());
    std::process::exit(report.exit_code());
}
