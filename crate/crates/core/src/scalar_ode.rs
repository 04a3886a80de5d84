//! The scalar Bernoulli equation `w' = (a0(p·t) w - w^θ) / (θ - 1)` on `w ≥ 0`,
//! its entire positive solution and its pullback attractor.

use serde::Serialize;
use thiserror::Error;

use crate::classify::{Classification, EPS_POSITIVE, EPS_TRIVIAL};
use crate::cocycle::{tail_integral, CocycleError};
use crate::coefficient::{Affine, Coefficient};
use crate::hull::HullPoint;
use crate::output::csv;

#[derive(Debug, Error, PartialEq)]
pub enum ScalarOdeError {
    #[error("exponent theta must exceed 1 (got {0})")]
    InvalidTheta(f64),
    #[error("initial condition {0} is negative")]
    NegativeInitialCondition(f64),
    #[error("backward integral diverges or does not settle at {label}, t = {t}")]
    DivergentTail { label: String, t: f64 },
    #[error("pullback sequence not converged: b_T = {value} at T = {horizon}, gap {gap}")]
    NotConverged { value: f64, horizon: f64, gap: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Truncations tried, in order, when evaluating `v(t)` by quadrature.
const V_TRUNCATIONS: [f64; 9] = [1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10];

#[derive(Debug, Clone)]
pub struct ScalarProblem<C: Coefficient = Affine> {
    pub theta: f64,
    pub coefficient: C,
}

impl ScalarProblem<Affine> {
    /// The problem with `a0 = p`.
    pub fn on_point(theta: f64, p: HullPoint) -> Result<Self, ScalarOdeError> {
        ScalarProblem::new(theta, Affine::identity(p))
    }
}

impl<C: Coefficient> ScalarProblem<C> {
    pub fn new(theta: f64, coefficient: C) -> Result<Self, ScalarOdeError> {
        if !(theta > 1.0 && theta.is_finite()) {
            return Err(ScalarOdeError::InvalidTheta(theta));
        }
        Ok(ScalarProblem { theta, coefficient })
    }

    pub fn rhs(&self, t: f64, w: f64) -> f64 {
        let a0 = self.coefficient.at(t);
        (a0 * w - w.abs().powf(self.theta - 1.0) * w) / (self.theta - 1.0)
    }

    /// Radius of a ball absorbing every bounded set.
    pub fn absorbing_radius(&self) -> f64 {
        (2.0 * self.coefficient.sup_abs()).powf(1.0 / (self.theta - 1.0)) + 1.0
    }

    /// `v(t) = int_{-inf}^t exp(-int_s^t a0) ds`, with `w0 = v^{1/(1-θ)}`.
    /// Quadrature on `[-T, 0]` plus a fitted tail, with `T` grown until two
    /// successive totals agree to `tol`.
    pub fn v(&self, t: f64, tol: f64) -> Result<f64, ScalarOdeError> {
        if let Some(a) = self.coefficient.constant_value() {
            return if a > 0.0 {
                Ok(1.0 / a)
            } else {
                Err(self.divergent(t))
            };
        }
        let at_t = self.coefficient.shifted(t);
        let mut prev: Option<f64> = None;
        for truncation in V_TRUNCATIONS {
            match tail_integral(&at_t, 1.0, truncation, tol) {
                Ok(r) if r.integrable => {
                    let total = r.total();
                    if r.converged {
                        return Ok(total);
                    }
                    if let Some(p) = prev {
                        if (total - p).abs() < tol {
                            return Ok(total);
                        }
                    }
                    prev = Some(total);
                }
                Ok(_) => prev = None,
                Err(CocycleError::InconclusiveFit { .. }) => prev = None,
                Err(e) => return Err(ScalarOdeError::InvalidArgument(e.to_string())),
            }
        }
        Err(self.divergent(t))
    }

    /// The entire positive solution at `t`.
    pub fn entire_solution(&self, t: f64, tol: f64) -> Result<f64, ScalarOdeError> {
        Ok(self.v(t, tol)?.powf(1.0 / (1.0 - self.theta)))
    }

    fn divergent(&self, t: f64) -> ScalarOdeError {
        ScalarOdeError::DivergentTail {
            label: self.coefficient.label(),
            t,
        }
    }

    /// Adaptive RK4 (step doubling) from `(t0, w0)` to `t1 ≥ t0`. Steps never
    /// straddle a breakpoint and never exceed `max_step`.
    pub fn integrate(&self, w0: f64, t0: f64, t1: f64, max_step: f64) -> Result<Trajectory, ScalarOdeError> {
        if w0 < 0.0 {
            return Err(ScalarOdeError::NegativeInitialCondition(w0));
        }
        if !(t1 >= t0 && max_step > 0.0) {
            return Err(ScalarOdeError::InvalidArgument(format!(
                "need t1 >= t0 and a positive step (t0={t0}, t1={t1}, step={max_step})"
            )));
        }
        let mut traj = Trajectory {
            label: self.coefficient.label(),
            times: vec![t0],
            values: vec![w0],
            slopes: vec![self.rhs(t0, w0)],
        };
        let mut stops = self.coefficient.breakpoints_between(t0, t1);
        stops.sort_by(f64::total_cmp);
        stops.push(t1);
        let mut t = t0;
        let mut w = w0;
        let mut h = max_step.min(t1 - t0).max(f64::MIN_POSITIVE);
        for stop in stops {
            while t < stop {
                let remaining = stop - t;
                let trial = h.min(remaining);
                let full = self.rk4(t, w, trial);
                let half = self.rk4(t, w, trial / 2.0);
                let two = self.rk4(t + trial / 2.0, half, trial / 2.0);
                let err = (two - full).abs() / 15.0;
                let scale = STEP_RTOL * (1.0 + w.abs());
                if err > scale && trial > 1e-10 {
                    h = trial * (0.9 * (scale / err).powf(0.2)).max(0.2);
                    continue;
                }
                let mut next = two + (two - full) / 15.0;
                if next < 0.0 {
                    // the zero solution is invariant; overshoot only happens at
                    // round-off level
                    next = 0.0;
                }
                t = if trial == remaining { stop } else { t + trial };
                w = next;
                traj.times.push(t);
                traj.values.push(w);
                traj.slopes.push(self.rhs(t, w));
                let grow = if err > 0.0 { 0.9 * (scale / err).powf(0.2) } else { 5.0 };
                h = (trial * grow.clamp(0.2, 5.0)).min(max_step);
            }
        }
        Ok(traj)
    }

    fn rk4(&self, t: f64, w: f64, h: f64) -> f64 {
        let k1 = self.rhs(t, w);
        let k2 = self.rhs(t + h / 2.0, w + h / 2.0 * k1);
        let k3 = self.rhs(t + h / 2.0, w + h / 2.0 * k2);
        let k4 = self.rhs(t + h, w + h * k3);
        w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// `w(T, p·(-T), r)`: the solution started at `r` at time `-T`, read at 0.
    pub fn pullback_value(&self, r: f64, horizon: f64) -> Result<f64, ScalarOdeError> {
        let traj = self.integrate(r, -horizon, 0.0, PULLBACK_MAX_STEP)?;
        Ok(*traj.values.last().unwrap())
    }

    /// `b*(p)` as the limit of pullback values over increasing horizons,
    /// declared once two successive values agree to `tol`.
    pub fn pullback_bstar(&self, r: Option<f64>, horizons: &[f64], tol: f64) -> Result<ScalarAttractor, ScalarOdeError> {
        let r = r.unwrap_or_else(|| self.absorbing_radius());
        if r < self.absorbing_radius() {
            return Err(ScalarOdeError::InvalidArgument(format!(
                "start {r} below the absorbing radius {}",
                self.absorbing_radius()
            )));
        }
        if horizons.len() < 2 || horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ScalarOdeError::InvalidArgument(
                "need at least two increasing horizons".into(),
            ));
        }
        let mut samples = Vec::with_capacity(horizons.len());
        for &h in horizons {
            samples.push((h, self.pullback_value(r, h)?));
        }
        let n = samples.len();
        let (horizon, value) = samples[n - 1];
        let gap = (value - samples[n - 2].1).abs();
        if gap >= tol && value > EPS_TRIVIAL {
            return Err(ScalarOdeError::NotConverged { value, horizon, gap });
        }
        let classification = if value <= EPS_TRIVIAL {
            Classification::Trivial
        } else if value >= EPS_POSITIVE {
            Classification::StronglyPositive
        } else {
            Classification::Indeterminate
        };
        Ok(ScalarAttractor {
            hull_point: self.coefficient.label(),
            b_star: value,
            horizon,
            cauchy_gap: gap,
            classification,
            samples,
        })
    }
}

const STEP_RTOL: f64 = 1e-11;
const PULLBACK_MAX_STEP: f64 = 0.5;

/// Accepted steps of an integration, with slopes for Hermite interpolation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Trajectory {
    /// Cubic Hermite interpolation between accepted steps.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let first = *self.times.first()?;
        let last = *self.times.last()?;
        if t < first || t > last {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let h = t1 - t0;
        if h == 0.0 {
            return Some(self.values[i]);
        }
        let s = (t - t0) / h;
        let (h00, h10) = (2.0 * s.powi(3) - 3.0 * s * s + 1.0, s.powi(3) - 2.0 * s * s + s);
        let (h01, h11) = (-2.0 * s.powi(3) + 3.0 * s * s, s.powi(3) - s * s);
        Some(
            h00 * self.values[i - 1]
                + h10 * h * self.slopes[i - 1]
                + h01 * self.values[i]
                + h11 * h * self.slopes[i],
        )
    }

    pub fn to_csv(&self) -> String {
        csv(
            "t,w",
            self.times
                .iter()
                .zip(&self.values)
                .map(|(t, w)| [*t, *w]),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarAttractor {
    pub hull_point: String,
    pub b_star: f64,
    pub horizon: f64,
    pub cauchy_gap: f64,
    pub classification: Classification,
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::{DriverSpec, LimitTag};

    fn p1_problem() -> ScalarProblem {
        ScalarProblem::on_point(3.0, HullPoint::new(DriverSpec::P1, 0.0)).unwrap()
    }

    /// For a0 = p1: v = |t| on t ≤ -1 and 1/2 + e^{-2(t+1)}/2 after.
    fn p1_v(t: f64) -> f64 {
        if t <= -1.0 {
            -t
        } else {
            0.5 + 0.5 * (-2.0 * (t + 1.0)).exp()
        }
    }

    #[test]
    fn v_matches_closed_form() {
        let sp = p1_problem();
        for t in [-50.0, -3.0, -1.0, -0.4, 0.0, 2.0, 9.0] {
            let v = sp.v(t, 1e-9).unwrap();
            assert!((v - p1_v(t)).abs() < 1e-7, "t={t}: {v} vs {}", p1_v(t));
        }
    }

    #[test]
    fn entire_solution_solves_the_equation() {
        let sp = p1_problem();
        let h = 1e-3;
        for i in 0..40 {
            let t = -20.0 + i as f64 * 0.7;
            let wp = sp.entire_solution(t + h, 1e-10).unwrap();
            let wm = sp.entire_solution(t - h, 1e-10).unwrap();
            let w = sp.entire_solution(t, 1e-10).unwrap();
            let res = (wp - wm) / (2.0 * h) - sp.rhs(t, w);
            assert!(res.abs() < 1e-6, "t={t}: residual {res}");
        }
    }

    #[test]
    fn constant_coefficients() {
        let sp = ScalarProblem::on_point(2.0, HullPoint::new(DriverSpec::constant(0.5), 0.0)).unwrap();
        assert!((sp.entire_solution(3.0, 1e-9).unwrap() - 0.5).abs() < 1e-12);
        let sp = ScalarProblem::on_point(2.0, HullPoint::new(DriverSpec::constant(-0.5), 0.0)).unwrap();
        assert!(matches!(sp.v(0.0, 1e-9), Err(ScalarOdeError::DivergentTail { .. })));
    }

    #[test]
    fn divergent_tail_is_reported() {
        // p0 with a0 = p0/2 has c ~ |t|^{-1}: not integrable
        let p = HullPoint::new(DriverSpec::P0, 0.0);
        let sp = ScalarProblem::new(2.0, Affine::new(p, 0.0, 0.5)).unwrap();
        assert!(matches!(sp.v(0.0, 1e-6), Err(ScalarOdeError::DivergentTail { .. })));
    }

    #[test]
    fn integrator_matches_logistic_closed_form() {
        // a0 = 1, theta = 2: w' = w - w^2
        let sp = ScalarProblem::on_point(2.0, HullPoint::new(DriverSpec::constant(1.0), 0.0)).unwrap();
        let traj = sp.integrate(0.1, 0.0, 6.0, 0.1).unwrap();
        let exact = |t: f64| 1.0 / (1.0 + 9.0 * (-t).exp());
        for t in [0.5, 1.3, 3.0, 6.0] {
            assert!((traj.value_at(t).unwrap() - exact(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn negative_start_rejected() {
        let sp = p1_problem();
        assert_eq!(
            sp.integrate(-1.0, 0.0, 1.0, 0.1).unwrap_err(),
            ScalarOdeError::NegativeInitialCondition(-1.0)
        );
    }

    #[test]
    fn pullback_reaches_entire_solution() {
        let sp = p1_problem();
        let att = sp
            .pullback_bstar(None, &[1e3, 2e3, 4e3, 8e3, 16e3], 1e-4)
            .unwrap();
        let w0 = sp.entire_solution(0.0, 1e-10).unwrap();
        assert!((att.b_star - w0).abs() < 1e-4);
        assert_eq!(att.classification, Classification::StronglyPositive);
        // monotone decreasing from above
        assert!(att.samples.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12));
    }

    #[test]
    fn limit_point_zero_has_trivial_attractor() {
        let sp = ScalarProblem::on_point(3.0, HullPoint::limit(DriverSpec::P1, LimitTag::Zero)).unwrap();
        // w' = -w^3/2 from r: w(T) = (r^-2 + T)^{-1/2}
        let r = sp.absorbing_radius();
        let v = sp.pullback_value(r, 100.0).unwrap();
        assert!((v - (r.powi(-2) + 100.0).powf(-0.5)).abs() < 1e-9);
    }
}
