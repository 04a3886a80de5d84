//! Upper boundary `b(p)` of the pullback attractor, its classification, and
//! the structural reports built on top of it.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{Classification, EPS_POSITIVE, EPS_TRIVIAL};
use crate::cocycle::{
    backward_growth_on, spectrum_estimate, tail_integral, BackwardGrowth, CocycleError, SpectralInterval,
    TailIntegralResult,
};
use crate::coefficient::{Affine, Coefficient};
use crate::hull::{DriverSpec, HullPoint};
use crate::output::csv;
use crate::scalar_ode::ScalarProblem;
use crate::parabolic::{
    evolve, evolve_sampled, linear_log_growth, stable_dt, BoundaryCondition, FieldState, Grid,
    LinearCoefficientSpec, NonlinearitySpec, ParabolicError,
};

#[derive(Debug, Error)]
pub enum AttractorError {
    #[error(transparent)]
    Parabolic(#[from] ParabolicError),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error("pullback not converged at {}: gap {} at horizon {}", .0.hull_point, .0.cauchy_gap, .0.horizon)]
    NotConverged(Box<AttractorSection>),
    #[error("pullback iterate at horizon {horizon} exceeds the previous one by {excess}")]
    MonotonicityViolation { horizon: f64, excess: f64 },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("{0}")]
    InvalidArgument(String),
}

impl AttractorError {
    /// The partially converged section carried by `NotConverged`.
    pub fn into_partial(self) -> Result<AttractorSection, AttractorError> {
        match self {
            AttractorError::NotConverged(s) => Ok(*s),
            e => Err(e),
        }
    }
}

/// Half-width of the band treated as zero when reading spectral signs.
pub const ZERO_BAND: f64 = 0.05;
/// Largest time step used by default, for accuracy rather than stability.
pub const MAX_DT: f64 = 0.02;
const CRITERION_TRUNCATION: f64 = 1e3;
const CRITERION_TOL: f64 = 1e-3;

/// A nonlinear problem `y_t = y_xx + h(p·t,x) y + g(y)` on a grid.
#[derive(Debug, Clone)]
pub struct PdeModel {
    pub grid: Grid,
    pub coeff: LinearCoefficientSpec,
    pub g: NonlinearitySpec,
}

impl PdeModel {
    pub fn new(grid: Grid, coeff: LinearCoefficientSpec, g: NonlinearitySpec) -> Self {
        PdeModel { grid, coeff, g }
    }

    /// Neumann problem on `[0, 1]` with `h = gamma0 + scale·a(p·t)`.
    pub fn neumann(n_nodes: usize, driver: HullPoint, scale: f64, g: NonlinearitySpec) -> Result<Self, ParabolicError> {
        let grid = Grid::unit(n_nodes, BoundaryCondition::Neumann)?;
        let coeff = LinearCoefficientSpec::new(grid.gamma0(), driver).with_scale(scale);
        Ok(PdeModel::new(grid, coeff, g))
    }

    pub fn hull_point(&self) -> &HullPoint {
        &self.coeff.driver
    }

    /// The same problem seen from another hull point.
    pub fn at(&self, hp: HullPoint) -> PdeModel {
        PdeModel {
            coeff: LinearCoefficientSpec {
                driver: hp,
                ..self.coeff.clone()
            },
            ..self.clone()
        }
    }

    pub fn shifted(&self, s: f64) -> PdeModel {
        PdeModel {
            coeff: self.coeff.shifted(s),
            ..self.clone()
        }
    }

    pub fn absorbing_radius(&self) -> f64 {
        self.g.absorbing_radius(self.coeff.sup_abs())
    }

    /// `h - gamma0`, the coefficient of the principal mode.
    pub fn effective_coefficient(&self) -> Result<Affine, ParabolicError> {
        self.coeff.effective_coefficient(self.grid.gamma0())
    }

    pub fn default_dt(&self, radius: f64) -> f64 {
        stable_dt(&self.coeff, Some(&self.g), &self.grid, radius).min(MAX_DT)
    }

    pub fn evolve(&self, z0: &FieldState, t: f64, dt: f64) -> Result<FieldState, ParabolicError> {
        evolve(&self.coeff, &self.g, &self.grid, z0, t, dt)
    }

    /// Spatially constant solutions of a homogeneous Neumann problem with a
    /// pure power are `y(t) = λ·w(t)`, `w` solving the returned scalar problem.
    pub fn scalar_reduction(&self) -> Option<(ScalarProblem, f64)> {
        let NonlinearitySpec::PurePower { rho, theta } = self.g else {
            return None;
        };
        if self.grid.bc != BoundaryCondition::Neumann {
            return None;
        }
        let k = self.coeff.homogeneous_profile()?;
        let m = theta - 1.0;
        let a0 = Affine::new(
            self.coeff.driver.clone(),
            m * self.coeff.gamma_offset,
            m * self.coeff.driver_scale * k,
        );
        let lambda = (rho * m).powf(-1.0 / m);
        Some((ScalarProblem::new(theta, a0).ok()?, lambda))
    }

    /// Interior positivity margin: the interior minimum, or under Dirichlet
    /// the largest `ε` with `z ≥ ε e0` at interior nodes.
    pub fn positivity_margin(&self, z: &FieldState) -> f64 {
        if self.grid.bc == BoundaryCondition::Dirichlet {
            let e0 = self.grid.e0();
            let n = z.values.len();
            (1..n - 1).map(|i| z.values[i] / e0.values[i]).fold(f64::INFINITY, f64::min)
        } else {
            z.min_interior()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackConfig {
    pub horizons: Vec<f64>,
    pub tol: f64,
    /// Starting level `r` of `r·e0`; defaults to the absorbing radius.
    pub r: Option<f64>,
    pub dt: Option<f64>,
}

impl Default for PullbackConfig {
    fn default() -> Self {
        PullbackConfig {
            horizons: vec![25.0, 50.0, 100.0, 200.0, 400.0],
            tol: 1e-5,
            r: None,
            dt: None,
        }
    }
}

impl PullbackConfig {
    /// Doubling ladder `first, 2·first, ..., last`.
    pub fn doubling(first: f64, last: f64, tol: f64) -> Self {
        let mut horizons = vec![first];
        while *horizons.last().unwrap() * 2.0 <= last * (1.0 + 1e-12) {
            horizons.push(horizons.last().unwrap() * 2.0);
        }
        PullbackConfig {
            horizons,
            tol,
            ..Default::default()
        }
    }
}

/// What decided the reported classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// The pullback value alone.
    Pullback,
    /// Integrable `c^(θ-1)` forces a strongly positive section.
    IntegrabilityCriterion,
    /// `c(t,p)` unbounded as `t → -inf` forces `b(p) = 0`.
    UnboundedCocycle,
    /// Non-integrable `c^(θ-1)` with nonnegative spectrum on the orbit closure
    /// and a flux boundary condition forces `b(p) = 0`.
    CriterionConverse,
    /// Linear-dissipative problem with `c(t,p)` bounded on `t ≤ 0`.
    BoundedCocycle,
    Undecided,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttractorSection {
    pub hull_point: String,
    #[serde(skip)]
    pub b_field: FieldState,
    /// Pullback value combined with the cocycle criteria.
    pub classification: Classification,
    /// The threshold rule on the pullback value alone.
    pub pullback_classification: Classification,
    pub basis: Basis,
    pub sup_norm: f64,
    pub min_interior: f64,
    pub horizon: f64,
    pub cauchy_gap: f64,
    pub converged: bool,
    /// `(horizon, sup-norm)` down the ladder.
    #[serde(skip)]
    pub ladder: Vec<(f64, f64)>,
}

impl AttractorSection {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("section serializes")
    }

    /// Aitken extrapolation of the sup-norms over the last three horizons:
    /// exact for geometric approach, which is what power-law decay looks like
    /// on a doubling ladder.
    pub fn extrapolated_sup(&self) -> f64 {
        let n = self.ladder.len();
        if n < 3 {
            return self.sup_norm;
        }
        let (x0, x1, x2) = (self.ladder[n - 3].1, self.ladder[n - 2].1, self.ladder[n - 1].1);
        let (d1, d2) = (x1 - x0, x2 - x1);
        let curvature = d2 - d1;
        if d2 == 0.0 || curvature.abs() <= 1e-14 * x2.abs().max(1e-300) || d2 / d1 >= 1.0 {
            return x2;
        }
        (x2 - d2 * d2 / curvature).clamp(0.0, x2)
    }

    /// Both thresholds crossed at once: tiny somewhere, large elsewhere.
    pub fn violates_dichotomy(&self) -> bool {
        self.converged && self.min_interior <= EPS_TRIVIAL && self.sup_norm >= EPS_POSITIVE
    }
}

/// `b(p) ≈ u(T, p·(-T), r e0)` over the horizon ladder, declared once the
/// last two iterates agree to `tol` in sup-norm.
pub fn pullback_boundary(model: &PdeModel, cfg: &PullbackConfig) -> Result<AttractorSection, AttractorError> {
    let hs = &cfg.horizons;
    if hs.len() < 2 || hs.windows(2).any(|w| w[1] <= w[0]) || hs[0] <= 0.0 {
        return Err(AttractorError::InvalidArgument("need at least two increasing positive horizons".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(AttractorError::InvalidArgument("tolerance must be positive".into()));
    }
    let absorbing = model.absorbing_radius();
    let r = cfg.r.unwrap_or(absorbing);
    if r < absorbing {
        return Err(AttractorError::InvalidArgument(format!(
            "start level {r} below the absorbing radius {absorbing}"
        )));
    }
    let start = model.grid.e0().scaled(r);
    let dt = cfg.dt.unwrap_or_else(|| model.default_dt(r));
    let iterates: Vec<FieldState> = hs
        .par_iter()
        .map(|&t| model.shifted(-t).evolve(&start, t, dt))
        .collect::<Result<_, _>>()?;
    for (k, w) in iterates.windows(2).enumerate() {
        let excess = w[1]
            .values
            .iter()
            .zip(&w[0].values)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        if excess > 10.0 * cfg.tol {
            return Err(AttractorError::MonotonicityViolation {
                horizon: hs[k + 1],
                excess,
            });
        }
    }
    let n = iterates.len();
    let b = iterates[n - 1].clone();
    let gap = b.distance(&iterates[n - 2]);
    let converged = gap < cfg.tol;
    let sup = b.sup_norm();
    let margin = model.positivity_margin(&b);
    let raw = if converged {
        Classification::from_bounds(sup, margin)
    } else if sup <= EPS_TRIVIAL {
        // iterates decrease to b, so b sits below the last one
        Classification::Trivial
    } else {
        Classification::Indeterminate
    };
    let (classification, basis) = if raw.is_decided() {
        (raw, Basis::Pullback)
    } else {
        combine(model)?
    };
    let section = AttractorSection {
        hull_point: model.hull_point().label(),
        b_field: b,
        classification,
        pullback_classification: raw,
        basis,
        sup_norm: sup,
        min_interior: margin,
        horizon: hs[n - 1],
        cauchy_gap: gap,
        converged,
        ladder: hs.iter().cloned().zip(iterates.iter().map(FieldState::sup_norm)).collect(),
    };
    if raw == Classification::Indeterminate && !converged {
        return Err(AttractorError::NotConverged(Box::new(section)));
    }
    Ok(section)
}

/// The cocycle-side evidence used when the pullback value is undecided.
fn combine(model: &PdeModel) -> Result<(Classification, Basis), AttractorError> {
    let Ok(c) = model.effective_coefficient() else {
        return Ok((Classification::Indeterminate, Basis::Undecided));
    };
    let growth = backward_growth_on(&c, &growth_ladder(1e4))?;
    if growth.is_unbounded() {
        return Ok((Classification::Trivial, Basis::UnboundedCocycle));
    }
    if model.g.is_deadzone() {
        return Ok((Classification::StronglyPositive, Basis::BoundedCocycle));
    }
    match integrability_criterion(&c, model.g.theta(), CRITERION_TRUNCATION, CRITERION_TOL) {
        Ok(v) if v.predicted => Ok((Classification::StronglyPositive, Basis::IntegrabilityCriterion)),
        Ok(_) => {
            let flux = model.grid.bc != BoundaryCondition::Dirichlet;
            let spectrum = orbit_closure_spectrum(&c)?;
            if flux && spectrum.alpha >= -ZERO_BAND {
                Ok((Classification::Trivial, Basis::CriterionConverse))
            } else {
                Ok((Classification::Indeterminate, Basis::Undecided))
            }
        }
        Err(CocycleError::InconclusiveFit { .. }) => Ok((Classification::Indeterminate, Basis::Undecided)),
        Err(e) => Err(e.into()),
    }
}

/// `horizon / 2^k` for `k = 5, ..., 0`, ascending.
fn growth_ladder(horizon: f64) -> Vec<f64> {
    (0..6).rev().map(|k| horizon / 2f64.powi(k)).collect()
}

/// Horizons and shifts that resolve the spectrum of each driver family.
fn spectrum_sampling(d: &DriverSpec) -> (Vec<f64>, Vec<f64>) {
    match d {
        DriverSpec::P0 | DriverSpec::P1 | DriverSpec::P2 => (vec![1e6], vec![-1e3, -10.0, 0.0, 10.0, 1e3]),
        _ => (vec![1e4], vec![-100.0, 0.0, 100.0]),
    }
}

/// Principal spectrum of `h - gamma0` over the whole hull.
pub fn principal_spectrum(model: &PdeModel) -> Result<SpectralInterval, AttractorError> {
    let c = model.effective_coefficient()?;
    let (hs, shifts) = spectrum_sampling(&c.base.driver);
    Ok(spectrum_estimate(&c.base.driver, &hs, &shifts)?.affine(c.offset, c.scale))
}

/// Spectrum of the orbit closure of the coefficient's hull point: the single
/// value at a limit point, the whole hull otherwise.
fn orbit_closure_spectrum(c: &Affine) -> Result<SpectralInterval, AttractorError> {
    if let Some(v) = c.constant_value() {
        return Ok(SpectralInterval::degenerate(v));
    }
    let (hs, shifts) = spectrum_sampling(&c.base.driver);
    Ok(spectrum_estimate(&c.base.driver, &hs, &shifts)?.affine(c.offset, c.scale))
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionVerdict {
    /// `c^(θ-1)` judged integrable on `(-inf, 0]`.
    pub predicted: bool,
    pub tail: TailIntegralResult,
}

/// Whether `c(t,p)^(θ-1)` is integrable at `-inf`, predicting `b(p) ≫ 0`.
pub fn integrability_criterion<C: Coefficient>(
    c: &C,
    theta: f64,
    truncation: f64,
    tol: f64,
) -> Result<CriterionVerdict, CocycleError> {
    if !(theta > 1.0) {
        return Err(CocycleError::InvalidArgument(format!("theta must exceed 1, got {theta}")));
    }
    let tail = tail_integral(c, theta - 1.0, truncation, tol)?;
    Ok(CriterionVerdict {
        predicted: tail.integrable,
        tail,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub hull_point: String,
    /// (i) the pullback value is strongly positive.
    pub b_positive: bool,
    /// (ii) `c(t,p)` bounded for `t ≤ 0` along the ladder.
    pub cocycle_bounded: bool,
    /// (iii) `‖φ(t, p·(-t)) e0‖` does not decay along the ladder.
    pub linear_persistent: bool,
    pub agree: bool,
    pub b_sup: f64,
    pub b_margin: f64,
    /// Limit of the pullback ladder by Aitken extrapolation.
    pub b_extrapolated: f64,
    pub growth: BackwardGrowth,
    /// `(t, ln ‖φ(t, p·(-t)) e0‖)`.
    pub linear_log_norms: Vec<(f64, f64)>,
}

/// Finite-horizon check that the three characterizations of `b(p) ≫ 0` for a
/// linear-dissipative problem agree.
pub fn equivalence_report(model: &PdeModel, hp: &HullPoint, horizon: f64) -> Result<EquivalenceReport, AttractorError> {
    if !model.g.is_deadzone() {
        return Err(AttractorError::PreconditionFailed(
            "the equivalence needs a linear-dissipative (deadzone) nonlinearity".into(),
        ));
    }
    let m = model.at(hp.clone());
    let times = growth_ladder(horizon);
    let cfg = PullbackConfig {
        horizons: times.clone(),
        ..Default::default()
    };
    let section = pullback_boundary(&m, &cfg).or_else(AttractorError::into_partial)?;
    let c = m.effective_coefficient()?;
    let growth = backward_growth_on(&c, &times)?;
    let e0 = m.grid.e0().clone();
    let dt = MAX_DT;
    let logs: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| linear_log_growth(&m.coeff.shifted(-t), &m.grid, &e0, t, dt).map(|l| (t, l)))
        .collect::<Result<_, _>>()?;
    let half = logs.len() / 2;
    let early = logs[..half].iter().map(|p| p.1).fold(0.0, f64::max);
    let decaying = logs.last().unwrap().1 - early < -std::f64::consts::LN_2;
    let b_positive = section.min_interior.min(section.extrapolated_sup()) >= EPS_POSITIVE;
    let cocycle_bounded = !growth.is_unbounded();
    let linear_persistent = !decaying;
    Ok(EquivalenceReport {
        hull_point: hp.label(),
        b_positive,
        cocycle_bounded,
        linear_persistent,
        agree: b_positive == cocycle_bounded && cocycle_bounded == linear_persistent,
        b_sup: section.sup_norm,
        b_margin: section.min_interior,
        b_extrapolated: section.extrapolated_sup(),
        growth,
        linear_log_norms: logs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralCase {
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl SpectralCase {
    /// Sign pattern of `[alpha, lambda]`, reading `|x| ≤ band` as zero.
    pub fn from_interval(s: &SpectralInterval, band: f64) -> SpectralCase {
        let sign = |x: f64| {
            if x < -band {
                -1
            } else if x > band {
                1
            } else {
                0
            }
        };
        match (sign(s.alpha), sign(s.lambda)) {
            (_, -1) => SpectralCase::S1,
            (-1, 0) => SpectralCase::S2,
            (-1, 1) => SpectralCase::S3,
            (0, _) => SpectralCase::S4,
            _ => SpectralCase::S5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent { witnesses: Vec<String> },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct TrichotomyReport {
    pub spectral_interval: SpectralInterval,
    pub case_tag: SpectralCase,
    pub linear_dissipative: bool,
    pub sections: Vec<AttractorSection>,
    /// Smallest positivity margin over the sample, reported in case s5.
    pub uniform_lower_bound: Option<f64>,
    pub verdict: Verdict,
}

/// Classifies the sample and compares it with what the spectral case allows.
pub fn trichotomy_report(
    model: &PdeModel,
    points: &[HullPoint],
    spectrum: &SpectralInterval,
    cfg: &PullbackConfig,
) -> Result<TrichotomyReport, AttractorError> {
    if points.is_empty() {
        return Err(AttractorError::InvalidArgument("need at least one hull point".into()));
    }
    let case = SpectralCase::from_interval(spectrum, ZERO_BAND);
    let sections: Vec<AttractorSection> = points
        .par_iter()
        .map(|p| pullback_boundary(&model.at(p.clone()), cfg).or_else(AttractorError::into_partial))
        .collect::<Result<_, _>>()?;
    let linear_dissipative = model.g.is_deadzone();
    let mut witnesses = Vec::new();
    let mut undecided = Vec::new();
    for (p, s) in points.iter().zip(&sections) {
        let c = model.at(p.clone()).effective_coefficient().ok();
        match s.classification {
            Classification::Indeterminate => undecided.push(s.hull_point.clone()),
            Classification::Trivial => {
                if case == SpectralCase::S5 {
                    witnesses.push(format!("{}: trivial under a positive spectrum", s.hull_point));
                }
                if let Some(a) = c.as_ref().and_then(|c| c.constant_value()) {
                    if a > ZERO_BAND {
                        witnesses.push(format!("{}: trivial with constant rate {a}", s.hull_point));
                    }
                }
            }
            Classification::StronglyPositive => {
                if case == SpectralCase::S1 {
                    witnesses.push(format!("{}: positive under a negative spectrum", s.hull_point));
                }
                if let Some(c) = &c {
                    if let Some(a) = c.constant_value() {
                        if a < -ZERO_BAND {
                            witnesses.push(format!("{}: positive with constant rate {a}", s.hull_point));
                        }
                    } else if backward_growth_on(c, &growth_ladder(1e4))?.is_unbounded() {
                        witnesses.push(format!("{}: positive with unbounded backward cocycle", s.hull_point));
                    }
                }
            }
        }
    }
    let uniform_lower_bound = (case == SpectralCase::S5)
        .then(|| sections.iter().map(|s| s.min_interior).fold(f64::INFINITY, f64::min));
    let any_positive = sections.iter().any(|s| s.classification == Classification::StronglyPositive);
    let verdict = if !witnesses.is_empty() {
        Verdict::Inconsistent { witnesses }
    } else if !undecided.is_empty() {
        Verdict::Inconclusive {
            reason: format!("undecided sections: {}", undecided.join(", ")),
        }
    } else if linear_dissipative
        && matches!(case, SpectralCase::S2 | SpectralCase::S3 | SpectralCase::S4)
        && !any_positive
    {
        Verdict::Inconclusive {
            reason: "no strongly positive section found in the sample".into(),
        }
    } else {
        Verdict::Consistent
    };
    Ok(TrichotomyReport {
        spectral_interval: spectrum.clone(),
        case_tag: case,
        linear_dissipative,
        sections,
        uniform_lower_bound,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    pub t: f64,
    pub forward: f64,
    pub pullback: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitTrace {
    pub hull_point: String,
    pub start: AttractorSection,
    /// `(t, ‖b(p·t)‖)`.
    pub samples: Vec<(f64, f64)>,
    #[serde(skip)]
    pub fields: Vec<(f64, FieldState)>,
    pub spot_checks: Vec<SpotCheck>,
}

impl OrbitTrace {
    pub fn to_csv(&self) -> String {
        csv("t,sup_norm", self.samples.iter().map(|(t, v)| [*t, *v]))
    }

    pub fn max_spot_gap(&self) -> f64 {
        self.spot_checks.iter().fold(0.0, |m, s| m.max(s.gap))
    }
}

/// `t ↦ b(p·t)` on `[t_min, t_max]`: one pullback at `p·t_min`, then forward
/// evolution, with three independent re-pullbacks as a cross-check.
pub fn orbit_trace(
    model: &PdeModel,
    t_min: f64,
    t_max: f64,
    dt_sample: f64,
    cfg: &PullbackConfig,
) -> Result<OrbitTrace, AttractorError> {
    if !(t_max > t_min && dt_sample > 0.0) {
        return Err(AttractorError::InvalidArgument("need t_min < t_max and a positive sample step".into()));
    }
    let start_model = model.shifted(t_min);
    let start = pullback_boundary(&start_model, cfg)?;
    let span = t_max - t_min;
    let steps = (span / dt_sample).round().max(1.0);
    let sample = span / steps;
    let dt = cfg.dt.unwrap_or_else(|| start_model.default_dt(start.sup_norm.max(1.0)));
    let fields: Vec<(f64, FieldState)> = evolve_sampled(
        &start_model.coeff,
        Some(&start_model.g),
        &start_model.grid,
        &start.b_field,
        span,
        dt,
        sample,
    )?
    .into_iter()
    .map(|(s, z)| (t_min + s, z))
    .collect();
    let n = fields.len();
    let picks = [n / 4, n / 2, (3 * n) / 4];
    let spot_checks = picks
        .par_iter()
        .map(|&i| {
            let (t, z) = &fields[i];
            let s = pullback_boundary(&model.shifted(*t), cfg).or_else(AttractorError::into_partial)?;
            Ok(SpotCheck {
                t: *t,
                forward: z.sup_norm(),
                pullback: s.sup_norm,
                gap: z.distance(&s.b_field),
            })
        })
        .collect::<Result<Vec<_>, AttractorError>>()?;
    Ok(OrbitTrace {
        hull_point: model.hull_point().label(),
        samples: fields.iter().map(|(t, z)| (*t, z.sup_norm())).collect(),
        fields,
        start,
        spot_checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceCurves {
    pub times: Vec<f64>,
    /// `‖b(p·t) - u(t,p,z_below)‖`.
    pub below_gap: Vec<f64>,
    /// `‖u(t,p,z_above) - b(p·t)‖`.
    pub above_gap: Vec<f64>,
}

impl ConvergenceCurves {
    pub fn final_below(&self) -> f64 {
        *self.below_gap.last().unwrap()
    }

    pub fn final_above(&self) -> f64 {
        *self.above_gap.last().unwrap()
    }

    pub fn to_csv(&self) -> String {
        csv(
            "t,below_gap,above_gap",
            self.times
                .iter()
                .zip(self.below_gap.iter().zip(&self.above_gap))
                .map(|(t, (b, a))| [*t, *b, *a]),
        )
    }
}

/// Solutions started below and above `b(p)` approach `b(p·t)`.
pub fn sublinear_convergence_check(
    model: &PdeModel,
    section: &AttractorSection,
    z_below: &FieldState,
    z_above: &FieldState,
    horizon: f64,
    sample: f64,
) -> Result<ConvergenceCurves, AttractorError> {
    if section.classification != Classification::StronglyPositive {
        return Err(AttractorError::PreconditionFailed(format!(
            "section at {} is {}, not strongly positive",
            section.hull_point, section.classification
        )));
    }
    let b = &section.b_field;
    let tol = 1e-9;
    let ordered = z_below.values.iter().zip(&b.values).all(|(z, b)| *z <= b + tol)
        && z_above.values.iter().zip(&b.values).all(|(z, b)| *z >= b - tol)
        && model.positivity_margin(z_below) > 0.0;
    if !ordered {
        return Err(AttractorError::PreconditionFailed("need 0 ≪ z_below ≤ b(p) ≤ z_above".into()));
    }
    let radius = z_above.sup_norm().max(model.absorbing_radius());
    let dt = model.default_dt(radius);
    let run = |z: &FieldState| evolve_sampled(&model.coeff, Some(&model.g), &model.grid, z, horizon, dt, sample);
    let ((bt, lo), hi) = rayon::join(|| rayon::join(|| run(b), || run(z_below)), || run(z_above));
    let (bt, lo, hi) = (bt?, lo?, hi?);
    let tail = &bt[bt.len() / 2..];
    if tail.iter().map(|(_, z)| z.sup_norm()).fold(0.0, f64::max) < EPS_POSITIVE {
        return Err(AttractorError::PreconditionFailed(
            "forward orbit of b(p) collapses to zero".into(),
        ));
    }
    Ok(ConvergenceCurves {
        times: bt.iter().map(|(t, _)| *t).collect(),
        below_gap: bt.iter().zip(&lo).map(|((_, b), (_, z))| b.distance(z)).collect(),
        above_gap: bt.iter().zip(&hi).map(|((_, b), (_, z))| b.distance(z)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::LimitTag;

    fn cube(n: usize, hp: HullPoint, scale: f64) -> PdeModel {
        PdeModel::neumann(n, hp, scale, NonlinearitySpec::pure_power(1.0, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn autonomous_equilibrium() {
        let m = cube(17, HullPoint::new(DriverSpec::constant(1.0), 0.0), 1.0);
        let s = pullback_boundary(&m, &PullbackConfig::doubling(25.0, 100.0, 1e-6)).unwrap();
        assert_eq!(s.classification, Classification::StronglyPositive);
        assert!(s.b_field.values.iter().all(|v| (v - 1.0).abs() < 1e-4));
        assert!(s.ladder.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    }

    #[test]
    fn negative_rate_is_trivial() {
        let m = cube(17, HullPoint::new(DriverSpec::constant(-0.5), 0.0), 1.0);
        let s = pullback_boundary(&m, &PullbackConfig::default()).unwrap();
        assert_eq!(s.classification, Classification::Trivial);
        assert_eq!(s.basis, Basis::Pullback);
    }

    #[test]
    fn criterion_examples() {
        let p0 = HullPoint::new(DriverSpec::P0, 0.0);
        assert!(integrability_criterion(&p0, 3.0, 1e3, 1e-3).unwrap().predicted);
        assert!(!integrability_criterion(&p0, 1.4, 1e3, 1e-3).unwrap().predicted);
        let one = HullPoint::new(DriverSpec::constant(1.0), 0.0);
        assert!(integrability_criterion(&one, 2.0, 1e3, 1e-3).unwrap().predicted);
    }

    #[test]
    fn spectral_cases() {
        let s = |a, l| SpectralInterval {
            alpha: a,
            lambda: l,
            horizons: vec![],
            samples: 1,
        };
        assert_eq!(SpectralCase::from_interval(&s(-1.0, -0.5), ZERO_BAND), SpectralCase::S1);
        assert_eq!(SpectralCase::from_interval(&s(-1.0, 0.01), ZERO_BAND), SpectralCase::S2);
        assert_eq!(SpectralCase::from_interval(&s(-1.0, 1.0), ZERO_BAND), SpectralCase::S3);
        assert_eq!(SpectralCase::from_interval(&s(0.0, 1.0), ZERO_BAND), SpectralCase::S4);
        assert_eq!(SpectralCase::from_interval(&s(0.0, 0.0), ZERO_BAND), SpectralCase::S4);
        assert_eq!(SpectralCase::from_interval(&s(0.5, 0.5), ZERO_BAND), SpectralCase::S5);
    }

    #[test]
    fn equivalence_needs_deadzone() {
        let m = cube(17, HullPoint::limit(DriverSpec::P0, LimitTag::Zero), 1.0);
        assert!(matches!(
            equivalence_report(&m, m.hull_point(), 400.0),
            Err(AttractorError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn unbounded_cocycle_decides_when_pullback_cannot() {
        // p2 orbit: c(t,p2) ~ e|t| as t -> -inf
        let m = cube(17, HullPoint::new(DriverSpec::P2, 0.0), 1.0);
        let s = pullback_boundary(&m, &PullbackConfig::default())
            .or_else(AttractorError::into_partial)
            .unwrap();
        assert_eq!(s.classification, Classification::Trivial);
    }
}
