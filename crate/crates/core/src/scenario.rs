//! JSON scenario files: one problem, a list of experiments, one artifact per
//! experiment and a `report.json` summary.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::attractor::{
    equivalence_report, integrability_criterion, orbit_trace, principal_spectrum, pullback_boundary,
    sublinear_convergence_check, trichotomy_report, AttractorError, PdeModel, PullbackConfig, SpectralCase,
    Verdict,
};
use crate::classify::Classification;
use crate::cocycle::{tail_integral, CocycleTrace, DEFAULT_STEP};
use crate::coefficient::Affine;
use crate::hull::{DriverSpec, HullPoint, LimitTag};
use crate::output::{csv, write_atomic};
use crate::parabolic::{evolve_sampled, BoundaryCondition, Grid, LinearCoefficientSpec, NonlinearitySpec};
use crate::scalar_ode::ScalarProblem;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "one")]
    pub length: f64,
    pub n_nodes: usize,
}

fn one() -> f64 {
    1.0
}

/// `h = offset + scale·a`; `auto_gamma0` takes the grid's principal eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaOffset {
    #[default]
    AutoGamma0,
    Explicit(f64),
}

/// A check on a scalar: `|value - expected| <= tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub value: f64,
    pub tol: f64,
}

impl Expect {
    fn holds(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tol
    }
}

/// Which hull points an experiment visits: translates of the scenario driver
/// and, optionally, its limit functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSet {
    #[serde(default = "zero_shift")]
    pub shifts: Vec<f64>,
    #[serde(default)]
    pub limits: bool,
    #[serde(default)]
    pub extra: Vec<LimitTag>,
}

fn zero_shift() -> Vec<f64> {
    vec![0.0]
}

impl Default for PointSet {
    fn default() -> Self {
        PointSet {
            shifts: zero_shift(),
            limits: false,
            extra: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Eigen {
        name: String,
        anchor: Option<String>,
        expect_gamma0: Option<Expect>,
    },
    Cocycle {
        name: String,
        anchor: Option<String>,
        t_min: f64,
        t_max: f64,
    },
    Tail {
        name: String,
        anchor: Option<String>,
        theta: f64,
        #[serde(default = "default_truncation")]
        truncation: f64,
        #[serde(default = "default_tail_tol")]
        tol: f64,
        expect_integrable: Option<bool>,
    },
    Spectrum {
        name: String,
        anchor: Option<String>,
        expect: Option<[f64; 2]>,
        #[serde(default = "default_band")]
        tol: f64,
    },
    ThetaSweep {
        name: String,
        anchor: Option<String>,
        thetas: Vec<f64>,
        #[serde(default = "default_horizons")]
        horizons: Vec<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Pullback {
        name: String,
        anchor: Option<String>,
        #[serde(default)]
        points: PointSet,
        #[serde(default = "default_horizons")]
        horizons: Vec<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
        expect: Option<Classification>,
        expect_sup: Option<Expect>,
    },
    Orbit {
        name: String,
        anchor: Option<String>,
        t_min: f64,
        t_max: f64,
        sample: f64,
        #[serde(default = "default_horizons")]
        horizons: Vec<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
        expect_start: Option<Expect>,
        expect_terminal: Option<Expect>,
    },
    Trichotomy {
        name: String,
        anchor: Option<String>,
        #[serde(default)]
        points: PointSet,
        #[serde(default = "default_horizons")]
        horizons: Vec<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
        expect_case: Option<SpectralCase>,
    },
    Equivalence {
        name: String,
        anchor: Option<String>,
        #[serde(default)]
        points: PointSet,
        #[serde(default = "default_equivalence_horizon")]
        horizon: f64,
    },
    DecayRate {
        name: String,
        anchor: Option<String>,
        #[serde(default = "one")]
        z0: f64,
        t0: f64,
        t1: f64,
        expect: Expect,
    },
    Persistence {
        name: String,
        anchor: Option<String>,
        factors: Vec<f64>,
        t: f64,
        expect: Expect,
    },
    Sublinear {
        name: String,
        anchor: Option<String>,
        #[serde(default = "half")]
        below: f64,
        #[serde(default = "two")]
        above: f64,
        horizon: f64,
        #[serde(default = "default_horizons")]
        horizons: Vec<f64>,
        #[serde(default = "default_tol")]
        pullback_tol: f64,
        tol: f64,
    },
    VerifyLemma {
        name: String,
        anchor: Option<String>,
        thetas: Vec<f64>,
        #[serde(default = "default_lemma_range")]
        range: [f64; 2],
        #[serde(default = "default_lemma_samples")]
        samples: usize,
        #[serde(default = "default_lemma_tol")]
        tol: f64,
    },
}

fn default_truncation() -> f64 {
    1e3
}
fn default_tail_tol() -> f64 {
    1e-3
}
fn default_band() -> f64 {
    0.05
}
fn default_horizons() -> Vec<f64> {
    PullbackConfig::default().horizons
}
fn default_tol() -> f64 {
    PullbackConfig::default().tol
}
fn default_equivalence_horizon() -> f64 {
    400.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn default_lemma_range() -> [f64; 2] {
    [-20.0, 10.0]
}
fn default_lemma_samples() -> usize {
    200
}
fn default_lemma_tol() -> f64 {
    1e-6
}

impl Experiment {
    pub fn name(&self) -> &str {
        match self {
            Experiment::Eigen { name, .. }
            | Experiment::Cocycle { name, .. }
            | Experiment::Tail { name, .. }
            | Experiment::Spectrum { name, .. }
            | Experiment::ThetaSweep { name, .. }
            | Experiment::Pullback { name, .. }
            | Experiment::Orbit { name, .. }
            | Experiment::Trichotomy { name, .. }
            | Experiment::Equivalence { name, .. }
            | Experiment::DecayRate { name, .. }
            | Experiment::Persistence { name, .. }
            | Experiment::Sublinear { name, .. }
            | Experiment::VerifyLemma { name, .. } => name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Eigen { .. } => "eigen",
            Experiment::Cocycle { .. } => "cocycle",
            Experiment::Tail { .. } => "tail",
            Experiment::Spectrum { .. } => "spectrum",
            Experiment::ThetaSweep { .. } => "theta_sweep",
            Experiment::Pullback { .. } => "pullback",
            Experiment::Orbit { .. } => "orbit",
            Experiment::Trichotomy { .. } => "trichotomy",
            Experiment::Equivalence { .. } => "equivalence",
            Experiment::DecayRate { .. } => "decay_rate",
            Experiment::Persistence { .. } => "persistence",
            Experiment::Sublinear { .. } => "sublinear",
            Experiment::VerifyLemma { .. } => "verify_lemma",
        }
    }

    fn anchor_override(&self) -> Option<&String> {
        match self {
            Experiment::Eigen { anchor, .. }
            | Experiment::Cocycle { anchor, .. }
            | Experiment::Tail { anchor, .. }
            | Experiment::Spectrum { anchor, .. }
            | Experiment::ThetaSweep { anchor, .. }
            | Experiment::Pullback { anchor, .. }
            | Experiment::Orbit { anchor, .. }
            | Experiment::Trichotomy { anchor, .. }
            | Experiment::Equivalence { anchor, .. }
            | Experiment::DecayRate { anchor, .. }
            | Experiment::Persistence { anchor, .. }
            | Experiment::Sublinear { anchor, .. }
            | Experiment::VerifyLemma { anchor, .. } => anchor.as_ref(),
        }
    }

    /// The statement the experiment checks.
    pub fn anchor(&self) -> String {
        if let Some(a) = self.anchor_override() {
            return a.clone();
        }
        match self {
            Experiment::Eigen { .. } => "principal eigenpair of the boundary value problem",
            Experiment::Cocycle { .. } => "one-dimensional linear cocycle along the base orbit",
            Experiment::Tail { .. } => "integrability of c(t,p)^beta on (-inf, 0]",
            Experiment::Spectrum { .. } => "principal spectrum [alpha_P, lambda_P]",
            Experiment::ThetaSweep { .. } => "c^(theta-1) integrable at -inf implies b(p) >> 0, with the converse under a nonnegative spectrum",
            Experiment::Pullback { .. } => "upper boundary b(p) as a decreasing pullback limit",
            Experiment::Orbit { .. } => "t -> b(p.t) is an entire orbit of the skew-product semiflow",
            Experiment::Trichotomy { .. } => "attractor structure by the sign pattern of the principal spectrum",
            Experiment::Equivalence { .. } => "b(p) >> 0 iff c bounded backward iff linear pullback persists",
            Experiment::DecayRate { .. } => "uniform exponential stability under a negative spectrum",
            Experiment::Persistence { .. } => "uniform persistence under a positive spectrum",
            Experiment::Sublinear { .. } => "solutions from 0 << z approach b(p.t) under sublinearity",
            Experiment::VerifyLemma { .. } => "entire positive solution of the scalar Bernoulli equation",
        }
        .to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub driver: DriverSpec,
    #[serde(default)]
    pub shift: f64,
    pub boundary: BoundaryCondition,
    pub grid: GridSpec,
    #[serde(default = "one")]
    pub driver_scale: f64,
    #[serde(default)]
    pub gamma_offset: GammaOffset,
    pub nonlinearity: NonlinearitySpec,
    pub dt: Option<f64>,
    pub experiments: Vec<Experiment>,
}

impl Scenario {
    pub fn from_json(path: &str, text: &str) -> Result<Scenario, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_json(&path.display().to_string(), &text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ScenarioError::Schema(self.schema));
        }
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        self.driver.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.nonlinearity
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.model().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if self.experiments.is_empty() {
            return bad("no experiments".into());
        }
        let mut names: Vec<&str> = self.experiments.iter().map(Experiment::name).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("duplicate experiment name '{}'", w[0]));
        }
        for e in &self.experiments {
            let name = e.name();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return bad(format!("experiment name '{name}' must be [A-Za-z0-9_-]+"));
            }
            let horizons = match e {
                Experiment::ThetaSweep { horizons, .. }
                | Experiment::Pullback { horizons, .. }
                | Experiment::Orbit { horizons, .. }
                | Experiment::Trichotomy { horizons, .. }
                | Experiment::Sublinear { horizons, .. } => Some(horizons),
                _ => None,
            };
            if let Some(h) = horizons {
                if h.len() < 2 || h.windows(2).any(|w| w[1] <= w[0]) || h[0] <= 0.0 {
                    return bad(format!("{name}: horizons must be at least two increasing positive values"));
                }
            }
            if let Experiment::ThetaSweep { thetas, .. } | Experiment::VerifyLemma { thetas, .. } = e {
                if thetas.is_empty() || thetas.iter().any(|t| !(*t > 1.0)) {
                    return bad(format!("{name}: thetas must be nonempty and exceed 1"));
                }
            }
        }
        Ok(())
    }

    pub fn hull_point(&self) -> HullPoint {
        HullPoint::new(self.driver.clone(), self.shift)
    }

    pub fn model(&self) -> Result<PdeModel, crate::parabolic::ParabolicError> {
        let grid = Grid::new(self.grid.length, self.grid.n_nodes, self.boundary)?;
        let offset = match self.gamma_offset {
            GammaOffset::AutoGamma0 => grid.gamma0(),
            GammaOffset::Explicit(v) => v,
        };
        let coeff = LinearCoefficientSpec::new(offset, self.hull_point()).with_scale(self.driver_scale);
        Ok(PdeModel::new(grid, coeff, self.nonlinearity))
    }

    fn points(&self, set: &PointSet) -> Vec<HullPoint> {
        let mut pts: Vec<HullPoint> = set
            .shifts
            .iter()
            .map(|s| HullPoint::new(self.driver.clone(), self.shift + s))
            .collect();
        if set.limits {
            pts.extend(self.driver.limit_points().unwrap_or_default());
        }
        pts.extend(set.extra.iter().map(|t| HullPoint::limit(self.driver.clone(), *t)));
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub kind: String,
    pub anchor: String,
    pub status: Status,
    pub artifact: Option<String>,
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub scenario: String,
    pub status: Status,
    pub experiments: Vec<ExperimentOutcome>,
}

impl Report {
    /// 0 when every check passed, 2 when something is inconclusive, 1 on any
    /// violation or error.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Inconclusive => 2,
            Status::Fail | Status::Error => 1,
        }
    }
}

/// An artifact to write next to the report.
struct Artifact {
    file: String,
    contents: String,
}

struct Outcome {
    status: Status,
    details: Value,
    artifact: Option<Artifact>,
}

impl Outcome {
    fn new(ok: bool, details: Value, artifact: Option<Artifact>) -> Self {
        Outcome {
            status: if ok { Status::Pass } else { Status::Fail },
            details,
            artifact,
        }
    }
}

fn worst(a: Status, b: Status) -> Status {
    let rank = |s| match s {
        Status::Pass => 0,
        Status::Inconclusive => 1,
        Status::Fail => 2,
        Status::Error => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn json_artifact(name: &str, v: &Value) -> Option<Artifact> {
    Some(Artifact {
        file: format!("{name}.json"),
        contents: serde_json::to_string_pretty(v).expect("json") + "\n",
    })
}

fn pullback_cfg(s: &Scenario, horizons: &[f64], tol: f64) -> PullbackConfig {
    PullbackConfig {
        horizons: horizons.to_vec(),
        tol,
        r: None,
        dt: s.dt,
    }
}

fn section_or_partial(
    model: &PdeModel,
    cfg: &PullbackConfig,
) -> Result<crate::attractor::AttractorSection, AttractorError> {
    pullback_boundary(model, cfg).or_else(AttractorError::into_partial)
}

fn run_experiment(s: &Scenario, e: &Experiment) -> Result<Outcome, String> {
    let model = s.model().map_err(|e| e.to_string())?;
    let err = |x: AttractorError| x.to_string();
    match e {
        Experiment::Eigen { name, expect_gamma0, .. } => {
            let g = model.grid.gamma0();
            let ok = expect_gamma0.is_none_or(|x| x.holds(g));
            Ok(Outcome::new(
                ok,
                json!({"gamma0": g, "bc": s.boundary.to_string(), "n_nodes": model.grid.n_nodes}),
                Some(Artifact {
                    file: format!("{name}.csv"),
                    contents: model.grid.e0().to_csv(&model.grid),
                }),
            ))
        }
        Experiment::Cocycle { name, t_min, t_max, .. } => {
            let c = model.effective_coefficient().map_err(|e| e.to_string())?;
            let tr = CocycleTrace::build(&c, *t_min, *t_max, DEFAULT_STEP);
            Ok(Outcome::new(
                true,
                json!({"points": tr.len(), "log_c_min": tr.log_values.first(), "log_c_max": tr.log_values.last()}),
                Some(Artifact {
                    file: format!("{name}.csv"),
                    contents: tr.to_csv(),
                }),
            ))
        }
        Experiment::Tail {
            name,
            theta,
            truncation,
            tol,
            expect_integrable,
            ..
        } => {
            let c = model.effective_coefficient().map_err(|e| e.to_string())?;
            match tail_integral(&c, theta - 1.0, *truncation, *tol) {
                Ok(r) => {
                    let ok = expect_integrable.is_none_or(|x| x == r.integrable);
                    let v = r.to_json();
                    Ok(Outcome::new(ok, v.clone(), json_artifact(name, &v)))
                }
                Err(crate::cocycle::CocycleError::InconclusiveFit { truncation, residual }) => Ok(Outcome {
                    status: Status::Inconclusive,
                    details: json!({"inconclusive_fit": {"T": truncation, "residual": residual}}),
                    artifact: None,
                }),
                Err(e) => Err(e.to_string()),
            }
        }
        Experiment::Spectrum { name, expect, tol, .. } => {
            let sp = principal_spectrum(&model).map_err(err)?;
            let ok = expect.is_none_or(|[a, l]| (sp.alpha - a).abs() <= *tol && (sp.lambda - l).abs() <= *tol);
            let v = json!({"alpha": sp.alpha, "lambda": sp.lambda, "horizons": sp.horizons});
            Ok(Outcome::new(ok, v.clone(), json_artifact(name, &v)))
        }
        Experiment::ThetaSweep {
            name,
            thetas,
            horizons,
            tol,
            ..
        } => {
            let cfg = pullback_cfg(s, horizons, *tol);
            let c = model.effective_coefficient().map_err(|e| e.to_string())?;
            let rows: Vec<Result<Value, String>> = thetas
                .par_iter()
                .map(|&theta| {
                    let g = match s.nonlinearity {
                        NonlinearitySpec::PurePower { rho, .. } => NonlinearitySpec::pure_power(rho, theta),
                        NonlinearitySpec::Deadzone { rho, r0, .. } => NonlinearitySpec::deadzone(rho, theta, r0),
                    }
                    .map_err(|e| e.to_string())?;
                    let m = PdeModel { g, ..model.clone() };
                    let crit = integrability_criterion(&c, theta, 1e3, 1e-3).map_err(|e| e.to_string())?;
                    let sec = section_or_partial(&m, &cfg).map_err(err)?;
                    let expected = if crit.predicted {
                        Classification::StronglyPositive
                    } else {
                        Classification::Trivial
                    };
                    let raw_ok = sec.pullback_classification == expected
                        || sec.pullback_classification == Classification::Indeterminate;
                    Ok(json!({
                        "theta": theta,
                        "predicted_positive": crit.predicted,
                        "classification": sec.classification,
                        "pullback_classification": sec.pullback_classification,
                        "basis": sec.basis,
                        "sup_norm": sec.sup_norm,
                        "cauchy_gap": sec.cauchy_gap,
                        "consistent": sec.classification == expected && raw_ok,
                        "decided": sec.classification.is_decided(),
                    }))
                })
                .collect();
            let rows: Vec<Value> = rows.into_iter().collect::<Result<_, _>>()?;
            let all_consistent = rows.iter().all(|r| r["consistent"] == json!(true));
            let any_undecided = rows.iter().any(|r| r["decided"] == json!(false));
            let v = json!({ "rows": rows });
            Ok(Outcome {
                status: if any_undecided {
                    Status::Inconclusive
                } else if all_consistent {
                    Status::Pass
                } else {
                    Status::Fail
                },
                artifact: json_artifact(name, &v),
                details: v,
            })
        }
        Experiment::Pullback {
            name,
            points,
            horizons,
            tol,
            expect,
            expect_sup,
            ..
        } => {
            let cfg = pullback_cfg(s, horizons, *tol);
            let sections: Vec<_> = s
                .points(points)
                .par_iter()
                .map(|p| section_or_partial(&model.at(p.clone()), &cfg))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let monotone = sections
                .iter()
                .all(|s| s.ladder.windows(2).all(|w| w[1].1 <= w[0].1 + 10.0 * tol));
            let dichotomy = sections.iter().all(|s| !s.violates_dichotomy());
            let matches = sections.iter().all(|sec| {
                expect.is_none_or(|c| sec.classification == c) && expect_sup.is_none_or(|x| x.holds(sec.sup_norm))
            });
            let undecided = sections.iter().any(|s| !s.classification.is_decided());
            let v = json!({
                "sections": sections.iter().map(|s| {
                    let mut j = s.to_json();
                    j["b_field"] = json!(s.b_field.values);
                    j
                }).collect::<Vec<_>>(),
                "monotone": monotone,
                "dichotomy": dichotomy,
            });
            let status = if !(monotone && dichotomy) || (!matches && !undecided) {
                Status::Fail
            } else if undecided || !matches {
                Status::Inconclusive
            } else {
                Status::Pass
            };
            Ok(Outcome {
                status,
                artifact: json_artifact(name, &v),
                details: json!({
                    "sections": sections.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
                    "monotone": monotone,
                    "dichotomy": dichotomy,
                }),
            })
        }
        Experiment::Orbit {
            name,
            t_min,
            t_max,
            sample,
            horizons,
            tol,
            expect_start,
            expect_terminal,
            ..
        } => {
            let cfg = pullback_cfg(s, horizons, *tol);
            let tr = match orbit_trace(&model, *t_min, *t_max, *sample, &cfg) {
                Ok(t) => t,
                Err(AttractorError::NotConverged(sec)) => {
                    return Ok(Outcome {
                        status: Status::Inconclusive,
                        details: json!({"not_converged": sec.to_json()}),
                        artifact: None,
                    })
                }
                Err(e) => return Err(e.to_string()),
            };
            let first = tr.samples.first().unwrap().1;
            let last = tr.samples.last().unwrap().1;
            let spot_ok = tr.max_spot_gap() < 5.0 * tol;
            let ok = spot_ok && expect_start.is_none_or(|x| x.holds(first)) && expect_terminal.is_none_or(|x| x.holds(last));
            Ok(Outcome::new(
                ok,
                json!({
                    "start": tr.start.to_json(),
                    "first_sup": first,
                    "terminal_sup": last,
                    "spot_checks": tr.spot_checks,
                }),
                Some(Artifact {
                    file: format!("{name}.csv"),
                    contents: tr.to_csv(),
                }),
            ))
        }
        Experiment::Trichotomy {
            name,
            points,
            horizons,
            tol,
            expect_case,
            ..
        } => {
            let cfg = pullback_cfg(s, horizons, *tol);
            let sp = principal_spectrum(&model).map_err(err)?;
            let r = trichotomy_report(&model, &s.points(points), &sp, &cfg).map_err(err)?;
            let case_ok = expect_case.is_none_or(|c| c == r.case_tag);
            let status = match (&r.verdict, case_ok) {
                (_, false) | (Verdict::Inconsistent { .. }, _) => Status::Fail,
                (Verdict::Inconclusive { .. }, _) => Status::Inconclusive,
                (Verdict::Consistent, true) => Status::Pass,
            };
            let v = serde_json::to_value(&r).expect("json");
            Ok(Outcome {
                status,
                artifact: json_artifact(name, &v),
                details: v,
            })
        }
        Experiment::Equivalence {
            name, points, horizon, ..
        } => {
            let reports: Vec<_> = s
                .points(points)
                .par_iter()
                .map(|p| equivalence_report(&model, p, *horizon))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let ok = reports.iter().all(|r| r.agree);
            let v = serde_json::to_value(&reports).expect("json");
            Ok(Outcome::new(ok, json!({ "points": v }), json_artifact(name, &v)))
        }
        Experiment::DecayRate {
            name, z0, t0, t1, expect, ..
        } => {
            let start = model.grid.e0().scaled(*z0);
            let dt = s.dt.unwrap_or_else(|| model.default_dt(z0.abs().max(model.absorbing_radius())));
            let traj = evolve_sampled(&model.coeff, Some(&model.g), &model.grid, &start, *t1, dt, 1.0)
                .map_err(|e| e.to_string())?;
            let pts: Vec<(f64, f64)> = traj
                .iter()
                .filter(|(t, _)| *t >= *t0 - 1e-9)
                .map(|(t, z)| (*t, z.sup_norm().ln()))
                .collect();
            let rate = slope(&pts);
            Ok(Outcome::new(
                expect.holds(rate),
                json!({"rate": rate}),
                Some(Artifact {
                    file: format!("{name}.csv"),
                    contents: csv("t,sup_norm", traj.iter().map(|(t, z)| [*t, z.sup_norm()])),
                }),
            ))
        }
        Experiment::Persistence {
            name, factors, t, expect, ..
        } => {
            let rows: Vec<(f64, f64, f64)> = factors
                .par_iter()
                .map(|&f| {
                    let z0 = model.grid.e0().scaled(f);
                    let dt = s.dt.unwrap_or_else(|| model.default_dt(f.max(model.absorbing_radius())));
                    model.evolve(&z0, *t, dt).map(|z| {
                        let dev = z.values.iter().fold(0.0_f64, |m, v| m.max((v - expect.value).abs()));
                        (f, z.sup_norm(), dev)
                    })
                })
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let ok = rows.iter().all(|r| r.2 <= expect.tol);
            Ok(Outcome::new(
                ok,
                json!({"rows": rows.iter().map(|r| json!({"factor": r.0, "sup_norm": r.1, "deviation": r.2})).collect::<Vec<_>>()}),
                Some(Artifact {
                    file: format!("{name}.csv"),
                    contents: csv("factor,sup_norm,deviation", rows.iter().map(|r| [r.0, r.1, r.2])),
                }),
            ))
        }
        Experiment::Sublinear {
            name,
            below,
            above,
            horizon,
            horizons,
            pullback_tol,
            tol,
            ..
        } => {
            let cfg = pullback_cfg(s, horizons, *pullback_tol);
            let sec = section_or_partial(&model, &cfg).map_err(err)?;
            let curves = sublinear_convergence_check(
                &model,
                &sec,
                &sec.b_field.scaled(*below),
                &sec.b_field.scaled(*above),
                *horizon,
                1.0,
            )
            .map_err(err)?;
            let ok = curves.final_below() < *tol && curves.final_above() < *tol;
            Ok(Outcome::new(
                ok,
                json!({"final_below": curves.final_below(), "final_above": curves.final_above()}),
                Some(Artifact {
                    file: format!("{name}.csv"),
                    contents: curves.to_csv(),
                }),
            ))
        }
        Experiment::VerifyLemma {
            name,
            thetas,
            range,
            samples,
            tol,
            ..
        } => {
            let rows: Vec<(f64, f64)> = thetas
                .iter()
                .map(|&th| lemma_residual(&s.hull_point(), th, range[0], range[1], *samples).map(|r| (th, r)))
                .collect::<Result<_, _>>()?;
            let ok = rows.iter().all(|r| r.1 < *tol);
            Ok(Outcome::new(
                ok,
                json!({"rows": rows.iter().map(|r| json!({"theta": r.0, "max_residual": r.1})).collect::<Vec<_>>()}),
                Some(Artifact {
                    file: format!("{name}.csv"),
                    contents: csv("theta,max_residual", rows.iter().map(|r| [r.0, r.1])),
                }),
            ))
        }
    }
}

/// Least-squares slope of `(x, y)` pairs.
fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest residual of the closed-form entire solution in the scalar
/// equation, by centered differences at `samples` evenly spaced times.
pub fn lemma_residual(hp: &HullPoint, theta: f64, t_min: f64, t_max: f64, samples: usize) -> Result<f64, String> {
    let sp = ScalarProblem::new(theta, Affine::identity(hp.clone())).map_err(|e| e.to_string())?;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for i in 0..samples {
        let t = t_min + (t_max - t_min) * i as f64 / (samples.max(2) - 1) as f64;
        let w = |t| sp.entire_solution(t, 1e-10).map_err(|e| e.to_string());
        let (wp, wm, w0) = (w(t + h)?, w(t - h)?, w(t)?);
        worst = worst.max(((wp - wm) / (2.0 * h) - sp.rhs(t, w0)).abs());
    }
    Ok(worst)
}

/// Runs every experiment (in parallel), writes artifacts and `report.json`
/// under `out_dir`, and returns the report.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<Report, ScenarioError> {
    fs::create_dir_all(out_dir).map_err(|source| ScenarioError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let results: Vec<Result<Outcome, String>> = scenario
        .experiments
        .par_iter()
        .map(|e| run_experiment(scenario, e))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut status = Status::Pass;
    for (e, r) in scenario.experiments.iter().zip(results) {
        let outcome = match r {
            Ok(o) => {
                let artifact = match o.artifact {
                    Some(a) => {
                        write_atomic(&out_dir.join(&a.file), a.contents.as_bytes()).map_err(|source| {
                            ScenarioError::Io {
                                path: a.file.clone(),
                                source,
                            }
                        })?;
                        Some(a.file)
                    }
                    None => None,
                };
                ExperimentOutcome {
                    name: e.name().to_string(),
                    kind: e.kind().to_string(),
                    anchor: e.anchor(),
                    status: o.status,
                    artifact,
                    details: o.details,
                }
            }
            Err(msg) => ExperimentOutcome {
                name: e.name().to_string(),
                kind: e.kind().to_string(),
                anchor: e.anchor(),
                status: Status::Error,
                artifact: None,
                details: json!({"error": format!("{}: {msg}", e.name())}),
            },
        };
        status = worst(status, outcome.status);
        outcomes.push(outcome);
    }
    let report = Report {
        schema: SCHEMA_VERSION,
        scenario: scenario.name.clone(),
        status,
        experiments: outcomes,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_atomic(&out_dir.join("report.json"), text.as_bytes()).map_err(|source| ScenarioError::Io {
        path: "report.json".into(),
        source,
    })?;
    Ok(report)
}

/// Scenario files shipped with the crate, by name.
pub const BUNDLED: [(&str, &str); 6] = [
    ("homoclinic_threshold", include_str!("../scenarios/homoclinic_threshold.json")),
    ("heteroclinic_orbit", include_str!("../scenarios/heteroclinic_orbit.json")),
    ("decaying_driver", include_str!("../scenarios/decaying_driver.json")),
    ("autonomous_s1", include_str!("../scenarios/autonomous_s1.json")),
    ("autonomous_s5", include_str!("../scenarios/autonomous_s5.json")),
    ("deadzone_equivalence", include_str!("../scenarios/deadzone_equivalence.json")),
];

pub fn bundled(name: &str) -> Option<Scenario> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| Scenario::from_json(n, text).expect("bundled scenario parses"))
}
