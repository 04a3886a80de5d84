//! Every bundled scenario runs clean and writes one artifact per experiment.

use attractor_lab::scenario::{self, Status};

#[test]
fn every_bundled_scenario_passes() {
    for (name, _) in scenario::BUNDLED {
        let s = scenario::bundled(name).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let report = scenario::run(&s, dir.path()).unwrap();
        for e in &report.experiments {
            assert_eq!(e.status, Status::Pass, "{name}/{}: {}", e.name, e.details);
            let artifact = e.artifact.as_ref().expect("artifact");
            assert!(dir.path().join(artifact).exists());
        }
        assert_eq!(report.exit_code(), 0);
    }
}
