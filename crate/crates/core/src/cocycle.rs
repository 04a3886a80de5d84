//! The scalar linear cocycle `c(t,p) = exp(int_0^t a(p·s) ds)`, its Lyapunov
//! exponents, principal-spectrum estimates and improper integrals of its
//! powers over `(-inf, 0]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficient::{integrate, march, Coefficient};
use crate::hull::{DriverSpec, HullPoint};
use crate::output::fmt_num;

/// Default base step of the graded Simpson rule.
pub const DEFAULT_STEP: f64 = 1e-2;

/// Number of ladder samples `horizon / 2^k`, `k = 0..LADDER_WINDOW`, used for
/// finite-horizon limsup/liminf.
pub const LADDER_WINDOW: usize = 10;

/// Largest RMS residual (log units) accepted for the tail decay fit.
pub const FIT_RMS_MAX: f64 = 0.05;

/// `m β` must exceed one by this much before a power tail counts as integrable.
pub const INTEGRABILITY_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("horizon {horizon} leaves fewer than {LADDER_WINDOW} ladder samples above t = 1")]
    HorizonTooShort { horizon: f64 },
    #[error("tail decay fit inconclusive at T = {truncation}: residual {residual:.3e}")]
    InconclusiveFit { truncation: f64, residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `ln c(t,p)` by graded composite Simpson with nodes forced at breakpoints.
pub fn log_cocycle<C: Coefficient>(c: &C, t: f64, step: f64) -> f64 {
    integrate(c, 0.0, t, step)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureInfo {
    pub rule: String,
    pub step: f64,
}

/// `ln c(t,p)` sampled on a strictly increasing grid containing `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleTrace {
    pub label: String,
    pub times: Vec<f64>,
    pub log_values: Vec<f64>,
    pub quadrature: QuadratureInfo,
}

impl CocycleTrace {
    /// Integrates outward from `0` to `t_min <= 0` and to `t_max >= 0`. Panel
    /// ends and midpoints become grid nodes.
    pub fn build<C: Coefficient>(c: &C, t_min: f64, t_max: f64, step: f64) -> Self {
        assert!(t_min <= 0.0 && t_max >= 0.0, "trace interval must contain 0");
        let mut back = Vec::new();
        let mut acc = 0.0;
        march(c, 0.0, t_min, step, |p| {
            back.push((p.mid, acc + p.to_mid));
            acc += p.to_end;
            back.push((p.x1, acc));
        });
        let mut fwd = Vec::new();
        acc = 0.0;
        march(c, 0.0, t_max, step, |p| {
            fwd.push((p.mid, acc + p.to_mid));
            acc += p.to_end;
            fwd.push((p.x1, acc));
        });
        let mut times = Vec::with_capacity(back.len() + fwd.len() + 1);
        let mut log_values = Vec::with_capacity(times.capacity());
        for (t, l) in back.into_iter().rev() {
            times.push(t);
            log_values.push(l);
        }
        times.push(0.0);
        log_values.push(0.0);
        for (t, l) in fwd {
            times.push(t);
            log_values.push(l);
        }
        CocycleTrace {
            label: c.label(),
            times,
            log_values,
            quadrature: QuadratureInfo {
                rule: "graded composite simpson".into(),
                step,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t,log_c` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,log_c\n");
        for (t, l) in self.times.iter().zip(&self.log_values) {
            out.push_str(&fmt_num(*t));
            out.push(',');
            out.push_str(&fmt_num(*l));
            out.push('\n');
        }
        out
    }

    /// `int c(t)^beta dt` over the whole trace restricted to `t <= 0`, by
    /// Simpson on consecutive (end, mid, end) node triples.
    fn backward_power_integral(&self, beta: f64) -> f64 {
        let zero = self.times.iter().position(|&t| t == 0.0).expect("trace contains 0");
        let mut acc = 0.0;
        let mut i = zero;
        while i >= 2 {
            let (t0, t1, t2) = (self.times[i - 2], self.times[i - 1], self.times[i]);
            let f = |j: usize| (beta * self.log_values[j]).exp();
            debug_assert!((t1 - 0.5 * (t0 + t2)).abs() <= 1e-9 * (1.0 + t0.abs()));
            acc += (t2 - t0) / 6.0 * (f(i - 2) + 4.0 * f(i - 1) + f(i));
            i -= 2;
        }
        acc
    }
}

/// Finite-horizon estimates of the four Lyapunov exponents of `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda_sup_plus: f64,
    pub lambda_inf_plus: f64,
    pub lambda_sup_minus: f64,
    pub lambda_inf_minus: f64,
    pub horizon: f64,
}

impl LyapunovEstimate {
    pub fn min(&self) -> f64 {
        self.lambda_inf_plus.min(self.lambda_inf_minus)
    }

    pub fn max(&self) -> f64 {
        self.lambda_sup_plus.max(self.lambda_sup_minus)
    }
}

/// The ladder `horizon / 2^k`, ascending.
fn ladder(horizon: f64) -> Result<Vec<f64>, CocycleError> {
    if !(horizon.is_finite() && horizon / 2f64.powi(LADDER_WINDOW as i32 - 1) >= 1.0) {
        return Err(CocycleError::HorizonTooShort { horizon });
    }
    let mut ts: Vec<f64> = (0..LADDER_WINDOW).map(|k| horizon / 2f64.powi(k as i32)).collect();
    ts.reverse();
    Ok(ts)
}

/// `ln c` at each of `times` (sorted by increasing `|t|`, all of one sign),
/// integrating incrementally.
fn log_along<C: Coefficient>(c: &C, times: &[f64], step: f64) -> Vec<f64> {
    let mut prev = 0.0;
    let mut acc = 0.0;
    times
        .iter()
        .map(|&t| {
            acc += integrate(c, prev, t, step);
            prev = t;
            acc
        })
        .collect()
}

fn sup_inf(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::NEG_INFINITY, f64::INFINITY), |(s, i), v| (s.max(v), i.min(v)))
}

/// Sup and inf of `ln c(t,p)/t` over the ladder `±horizon/2^k`.
pub fn lyapunov<C: Coefficient>(c: &C, horizon: f64) -> Result<LyapunovEstimate, CocycleError> {
    lyapunov_with_step(c, horizon, DEFAULT_STEP)
}

pub fn lyapunov_with_step<C: Coefficient>(c: &C, horizon: f64, step: f64) -> Result<LyapunovEstimate, CocycleError> {
    let fwd = ladder(horizon)?;
    let back: Vec<f64> = fwd.iter().map(|t| -t).collect();
    let lf = log_along(c, &fwd, step);
    let lb = log_along(c, &back, step);
    let (sp, ip) = sup_inf(lf.iter().zip(&fwd).map(|(l, t)| l / t));
    let (sm, im) = sup_inf(lb.iter().zip(&back).map(|(l, t)| l / t));
    Ok(LyapunovEstimate {
        lambda_sup_plus: sp,
        lambda_inf_plus: ip,
        lambda_sup_minus: sm,
        lambda_inf_minus: im,
        horizon,
    })
}

/// Pullback exponents: sup and inf of `ln c(t, p·(-t)) / t` over the ladder.
/// Each sample integrates afresh from the pulled-back point.
pub fn pullback_exponents<C: Coefficient>(c: &C, horizon: f64) -> Result<(f64, f64), CocycleError> {
    let ts = ladder(horizon)?;
    Ok(sup_inf(
        ts.iter()
            .map(|&t| log_cocycle(&c.shifted(-t), t, DEFAULT_STEP) / t),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub alpha: f64,
    pub lambda: f64,
    pub horizons: Vec<f64>,
    pub samples: usize,
}

impl SpectralInterval {
    pub fn degenerate(value: f64) -> Self {
        SpectralInterval {
            alpha: value,
            lambda: value,
            horizons: vec![],
            samples: 1,
        }
    }

    /// Image under `x ↦ offset + scale·x`.
    pub fn affine(&self, offset: f64, scale: f64) -> Self {
        let (a, b) = (offset + scale * self.alpha, offset + scale * self.lambda);
        SpectralInterval {
            alpha: a.min(b),
            lambda: a.max(b),
            ..self.clone()
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.alpha - tol && x <= self.lambda + tol
    }
}

/// `[min, max]` of all finite-horizon exponents over the given hull points.
pub fn spectrum_of_points<C: Coefficient>(points: &[C], horizons: &[f64]) -> Result<SpectralInterval, CocycleError> {
    if points.is_empty() || horizons.is_empty() {
        return Err(CocycleError::InvalidArgument("need at least one hull point and one horizon".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &h in horizons {
        for p in points {
            let est = lyapunov(p, h)?;
            lo = lo.min(est.min());
            hi = hi.max(est.max());
        }
    }
    Ok(SpectralInterval {
        alpha: lo,
        lambda: hi,
        horizons: horizons.to_vec(),
        samples: points.len(),
    })
}

/// Principal-spectrum estimate over orbit points `d·s` plus the listable limit points.
pub fn spectrum_estimate(d: &DriverSpec, horizons: &[f64], shifts: &[f64]) -> Result<SpectralInterval, CocycleError> {
    if shifts.is_empty() {
        return Err(CocycleError::InvalidArgument("need at least one shift".into()));
    }
    if let DriverSpec::Constant { value } = d {
        let mut s = SpectralInterval::degenerate(*value);
        s.horizons = horizons.to_vec();
        return Ok(s);
    }
    let mut points: Vec<HullPoint> = shifts.iter().map(|&s| HullPoint::new(d.clone(), s)).collect();
    if let Ok(limits) = d.limit_points() {
        points.extend(limits);
    }
    spectrum_of_points(&points, horizons)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DecayModel {
    /// `ln c ≈ intercept - exponent · ln|t|`
    Power { exponent: f64 },
    /// `ln c ≈ intercept - rate · |t|`
    Exponential { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub model: DecayModel,
    pub intercept: f64,
    pub rms: f64,
}

/// `int_{-T}^0 c(t,p)^beta dt` plus a fitted bound for `(-inf, -T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailIntegralResult {
    pub beta: f64,
    #[serde(rename = "T")]
    pub truncation_t: f64,
    pub value: f64,
    pub tail_bound: f64,
    pub converged: bool,
    /// Whether the fitted decay makes `c^beta` integrable at `-inf`.
    #[serde(skip)]
    pub integrable: bool,
    #[serde(skip)]
    pub fit: Option<TailFit>,
}

impl TailIntegralResult {
    /// `value + tail_bound`, the full-line estimate when integrable.
    pub fn total(&self) -> f64 {
        self.value + self.tail_bound
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "beta": self.beta,
            "T": self.truncation_t,
            "value": self.value,
            "tail_bound": self.tail_bound,
            "converged": self.converged,
            "integrable": self.integrable,
        })
    }
}

/// Least squares `y ≈ a + b x`; returns `(a, b, rms)`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (a, b, rms)
}

/// Fits the decay of `ln c` on `[-T, -T/10]` by a power law and an
/// exponential and keeps the better one.
fn fit_tail(trace: &CocycleTrace, truncation: f64) -> TailFit {
    let (mut ln_abs, mut abs_t, mut ys) = (vec![], vec![], vec![]);
    for (t, l) in trace.times.iter().zip(&trace.log_values) {
        if *t <= -truncation / 10.0 && *t >= -truncation {
            ln_abs.push(t.abs().ln());
            abs_t.push(t.abs());
            ys.push(*l);
        }
    }
    let (pa, pb, prms) = linear_fit(&ln_abs, &ys);
    let (ea, eb, erms) = linear_fit(&abs_t, &ys);
    if prms <= erms {
        TailFit {
            model: DecayModel::Power { exponent: -pb },
            intercept: pa,
            rms: prms,
        }
    } else {
        TailFit {
            model: DecayModel::Exponential { rate: -eb },
            intercept: ea,
            rms: erms,
        }
    }
}

pub fn tail_integral<C: Coefficient>(c: &C, beta: f64, truncation: f64, tol: f64) -> Result<TailIntegralResult, CocycleError> {
    tail_integral_with_step(c, beta, truncation, tol, DEFAULT_STEP)
}

pub fn tail_integral_with_step<C: Coefficient>(
    c: &C,
    beta: f64,
    truncation: f64,
    tol: f64,
    step: f64,
) -> Result<TailIntegralResult, CocycleError> {
    if !(beta > 0.0 && truncation > 0.0 && tol > 0.0) {
        return Err(CocycleError::InvalidArgument(format!(
            "beta, T and tol must be positive (got {beta}, {truncation}, {tol})"
        )));
    }
    let trace = CocycleTrace::build(c, -truncation, 0.0, step);
    let value = trace.backward_power_integral(beta);
    let fit = fit_tail(&trace, truncation);
    if fit.rms > FIT_RMS_MAX {
        return Err(CocycleError::InconclusiveFit {
            truncation,
            residual: fit.rms,
        });
    }
    let (integrable, tail_bound) = match fit.model {
        DecayModel::Power { exponent } => {
            let q = exponent * beta;
            if q > 1.0 + INTEGRABILITY_MARGIN {
                (true, (beta * fit.intercept).exp() * truncation.powf(1.0 - q) / (q - 1.0))
            } else {
                (false, f64::INFINITY)
            }
        }
        DecayModel::Exponential { rate } => {
            let r = rate * beta;
            if r > 0.0 {
                (true, (beta * fit.intercept - r * truncation).exp() / r)
            } else {
                (false, f64::INFINITY)
            }
        }
    };
    Ok(TailIntegralResult {
        beta,
        truncation_t: truncation,
        value,
        tail_bound,
        converged: integrable && tail_bound < tol,
        integrable,
        fit: Some(fit),
    })
}

/// Whether `c(t,p)^beta → 0` as `t → -inf`: its maximum over `[-T, -T/10]`
/// is below `tol`.
pub fn is_asymptotic_at_minus_infinity<C: Coefficient>(c: &C, beta: f64, truncation: f64, tol: f64) -> bool {
    let trace = CocycleTrace::build(c, -truncation, 0.0, DEFAULT_STEP);
    let peak = trace
        .times
        .iter()
        .zip(&trace.log_values)
        .filter(|(t, _)| **t <= -truncation / 10.0)
        .map(|(_, l)| beta * l)
        .fold(f64::NEG_INFINITY, f64::max);
    peak.exp() < tol
}

/// Backward behaviour of `c(t,p)` on the ladder `-horizon/2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackwardGrowth {
    /// `max ln c` over the ladder (and `t = 0`).
    pub max_log: f64,
    /// `ln c` at `-horizon`.
    pub last_log: f64,
    /// `max ln c` over the first half of the ladder.
    pub early_max_log: f64,
}

impl BackwardGrowth {
    /// Unbounded at `-inf`: still climbing by more than a factor 2 at the far end
    /// of the ladder.
    pub fn is_unbounded(&self) -> bool {
        self.last_log - self.early_max_log > std::f64::consts::LN_2
    }
}

pub fn backward_growth<C: Coefficient>(c: &C, horizon: f64) -> Result<BackwardGrowth, CocycleError> {
    backward_growth_on(c, &ladder(horizon)?)
}

/// As [`backward_growth`] on an explicit ascending list of positive times.
pub fn backward_growth_on<C: Coefficient>(c: &C, times: &[f64]) -> Result<BackwardGrowth, CocycleError> {
    if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) || times[0] <= 0.0 {
        return Err(CocycleError::InvalidArgument("need at least two increasing positive times".into()));
    }
    let back: Vec<f64> = times.iter().map(|t| -t).collect();
    let logs = log_along(c, &back, DEFAULT_STEP);
    let half = logs.len() / 2;
    let early = logs[..half].iter().cloned().fold(0.0, f64::max);
    Ok(BackwardGrowth {
        max_log: logs.iter().cloned().fold(0.0, f64::max),
        last_log: *logs.last().unwrap(),
        early_max_log: early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::Affine;
    use crate::hull::LimitTag;
    use rand::{Rng, SeedableRng};

    fn hp(d: DriverSpec) -> HullPoint {
        HullPoint::new(d, 0.0)
    }

    /// Symbolic primitive of p0: `-t^2` on [-1,1], `-1 - 2 ln|t|` outside.
    fn p0_log_c(t: f64) -> f64 {
        if t.abs() <= 1.0 {
            -t * t
        } else {
            -1.0 - 2.0 * t.abs().ln()
        }
    }

    #[test]
    fn log_cocycle_examples() {
        let p0 = hp(DriverSpec::P0);
        assert!((log_cocycle(&p0, -1.0, DEFAULT_STEP) + 1.0).abs() < 1e-12);
        let expect = -1.0 - 2.0 * 10f64.ln();
        assert!((log_cocycle(&p0, -10.0, DEFAULT_STEP) - expect).abs() < 1e-9);
        assert!((expect + 5.6052).abs() < 1e-4);
        let c = hp(DriverSpec::constant(0.35));
        assert!((log_cocycle(&c, -8.0, DEFAULT_STEP) + 2.8).abs() < 1e-13);
    }

    #[test]
    fn matches_symbolic_primitive_everywhere() {
        let p0 = hp(DriverSpec::P0);
        for t in [-1e4, -333.3, -2.5, -0.3, 0.7, 1.0, 42.0, 1e5] {
            let err = (log_cocycle(&p0, t, DEFAULT_STEP) - p0_log_c(t)).abs();
            assert!(err < 1e-9, "t={t}: {err}");
        }
    }

    #[test]
    fn cocycle_identity() {
        let drivers = [
            DriverSpec::P0,
            DriverSpec::P1,
            DriverSpec::P2,
            DriverSpec::constant(0.2),
            DriverSpec::quasi_periodic(vec![1.0, 0.5], vec![1.0, 2f64.sqrt()], vec![0.1, 0.0]).unwrap(),
            DriverSpec::slow_growth_default(),
        ];
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for d in drivers {
            let p = hp(d.clone());
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                let t: f64 = rng.gen_range(-50.0..50.0);
                let s: f64 = rng.gen_range(-50.0..50.0);
                let lhs = log_cocycle(&p, t + s, DEFAULT_STEP);
                let rhs = log_cocycle(&p.advance(s), t, DEFAULT_STEP) + log_cocycle(&p, s, DEFAULT_STEP);
                worst = worst.max((lhs - rhs).abs());
            }
            assert!(worst < 1e-8, "{d}: {worst}");
        }
    }

    #[test]
    fn step_halving_is_stable_for_smooth_drivers() {
        let qp = hp(DriverSpec::quasi_periodic(vec![1.0, 0.7], vec![1.0, 3f64.sqrt()], vec![0.0, 1.0]).unwrap());
        let sg = hp(DriverSpec::slow_growth_default());
        for p in [qp, sg] {
            for t in [-100.0, -13.7, 5.0, 100.0] {
                let a = log_cocycle(&p, t, 0.02);
                let b = log_cocycle(&p, t, 0.01);
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn trace_starts_at_zero_and_is_monotone() {
        let tr = CocycleTrace::build(&hp(DriverSpec::P1), -30.0, 30.0, 0.05);
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        let i0 = tr.times.iter().position(|&t| t == 0.0).unwrap();
        assert_eq!(tr.log_values[i0], 0.0);
        let csv = tr.to_csv();
        assert!(csv.starts_with("t,log_c\n"));
        assert_eq!(csv.lines().count(), tr.len() + 1);
    }

    #[test]
    fn lyapunov_of_constant() {
        let est = lyapunov(&hp(DriverSpec::constant(0.7)), 1024.0).unwrap();
        for v in [est.lambda_sup_plus, est.lambda_inf_plus, est.lambda_sup_minus, est.lambda_inf_minus] {
            assert!((v - 0.7).abs() < 1e-6);
        }
        assert!(matches!(
            lyapunov(&hp(DriverSpec::P0), 100.0),
            Err(CocycleError::HorizonTooShort { .. })
        ));
    }

    #[test]
    fn lyapunov_of_p0_decays_like_log_over_t() {
        let p0 = hp(DriverSpec::P0);
        let mut prev = f64::INFINITY;
        for h in [1e3, 1e5, 1e7] {
            let est = lyapunov(&p0, h).unwrap();
            let spread = [est.lambda_sup_plus, est.lambda_inf_plus, est.lambda_sup_minus, est.lambda_inf_minus]
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max);
            // worst sample sits at h/512: (1 + 2 ln t)/t
            let t = h / 512.0;
            assert!((spread - (1.0 + 2.0 * t.ln()) / t).abs() < 1e-8);
            assert!(spread < prev);
            prev = spread;
        }
        assert!(prev < 2e-3);
    }

    #[test]
    fn lyapunov_of_p2() {
        let est = lyapunov(&hp(DriverSpec::P2), 1e7).unwrap();
        assert!((est.lambda_sup_plus + 1.0).abs() < 1e-9 && (est.lambda_inf_plus + 1.0).abs() < 1e-9);
        assert!(est.lambda_sup_minus.abs() < 1e-3 && est.lambda_inf_minus.abs() < 1e-3);
    }

    #[test]
    fn pullback_exponents_equal_backward_exponents() {
        for d in [DriverSpec::P0, DriverSpec::P1, DriverSpec::P2] {
            let p = hp(d);
            let est = lyapunov(&p, 1e5).unwrap();
            let (s, i) = pullback_exponents(&p, 1e5).unwrap();
            assert!((s - est.lambda_sup_minus).abs() < 1e-9);
            assert!((i - est.lambda_inf_minus).abs() < 1e-9);
        }
    }

    #[test]
    fn spectrum_examples() {
        let shifts = [-1e3, -10.0, 0.0, 10.0, 1e3];
        let s1 = spectrum_estimate(&DriverSpec::P1, &[1e6], &shifts).unwrap();
        assert!(s1.alpha.abs() < 0.05 && (s1.lambda - 2.0).abs() < 0.05, "{s1:?}");
        let s2 = spectrum_estimate(&DriverSpec::P2, &[1e6], &shifts).unwrap();
        assert!((s2.alpha + 1.0).abs() < 0.05 && s2.lambda.abs() < 0.05, "{s2:?}");
        let sc = spectrum_estimate(&DriverSpec::constant(-0.5), &[1e3], &[0.0]).unwrap();
        assert_eq!((sc.alpha, sc.lambda), (-0.5, -0.5));
        assert!(s1.alpha <= s1.lambda);
        assert_eq!(s1.affine(0.0, 0.5).lambda, s1.lambda * 0.5);
    }

    #[test]
    fn lyapunov_within_spectrum() {
        let spec = spectrum_estimate(&DriverSpec::P1, &[1e6], &[-100.0, 0.0, 100.0]).unwrap();
        for s in [-50.0, 3.0, 75.0] {
            let est = lyapunov(&HullPoint::new(DriverSpec::P1, s), 1e6).unwrap();
            assert!(est.lambda_inf_plus <= est.lambda_sup_plus);
            assert!(est.lambda_inf_minus <= est.lambda_sup_minus);
            for v in [est.lambda_sup_plus, est.lambda_inf_plus, est.lambda_sup_minus, est.lambda_inf_minus] {
                assert!(spec.contains(v, 0.05));
            }
        }
    }

    /// Independent oracle for the p0 power integral: closed form of c on each
    /// branch, integrated with a fine midpoint rule in `u = ln|t|`.
    fn p0_power_integral(beta: f64, truncation: f64) -> f64 {
        let n = 2_000_000;
        let inner: f64 = (0..n)
            .map(|i| {
                let t = -(i as f64 + 0.5) / n as f64;
                (-beta * t * t).exp()
            })
            .sum::<f64>()
            / n as f64;
        let umax = truncation.ln();
        let du = umax / n as f64;
        let outer: f64 = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) * du;
                let t = u.exp();
                (beta * (-1.0 - 2.0 * u)).exp() * t * du
            })
            .sum();
        inner + outer
    }

    #[test]
    fn tail_integral_p0_beta_two() {
        let r = tail_integral(&hp(DriverSpec::P0), 2.0, 1e3, 1e-6).unwrap();
        let oracle = p0_power_integral(2.0, 1e3);
        assert!((r.value - oracle).abs() < 1e-8, "{} vs {oracle}", r.value);
        assert!((r.value - 0.643).abs() < 5e-4);
        assert!(r.converged && r.integrable);
        let exact_tail = (-2.0f64).exp() / 3.0 * 1e-9;
        assert!((r.tail_bound - exact_tail).abs() < 1e-6 * exact_tail);
        let json = r.to_json();
        for k in ["beta", "T", "value", "tail_bound", "converged"] {
            assert!(json.get(k).is_some());
        }
    }

    #[test]
    fn tail_integral_p0_borderline() {
        let r = tail_integral(&hp(DriverSpec::P0), 0.5, 1e3, 1e-6).unwrap();
        assert!(!r.converged && !r.integrable);
        match r.fit.unwrap().model {
            DecayModel::Power { exponent } => assert!((exponent * 0.5 - 1.0).abs() < 1e-6),
            m => panic!("unexpected {m:?}"),
        }
    }

    #[test]
    fn tail_integral_constant() {
        let r = tail_integral(&hp(DriverSpec::constant(1.0)), 1.0, 50.0, 1e-6).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9 && r.converged);
        assert!(matches!(r.fit.unwrap().model, DecayModel::Exponential { .. }));
    }

    #[test]
    fn tail_monotone_in_truncation_and_beta() {
        let p0 = hp(DriverSpec::P0);
        let mut prev = 0.0;
        for t in [10.0, 30.0, 100.0, 300.0, 1e3] {
            let r = tail_integral(&p0, 2.0, t, 1e-3).unwrap();
            assert!(r.value >= prev);
            prev = r.value;
        }
        // convergence for beta carries over to 2 beta
        let a = tail_integral(&p0, 0.6, 1e3, 1.0).unwrap();
        let b = tail_integral(&p0, 1.2, 1e3, 1.0).unwrap();
        assert!(a.integrable && b.integrable && b.converged);
    }

    #[test]
    fn oscillating_cocycle_is_inconclusive() {
        let qp = hp(DriverSpec::quasi_periodic(vec![3.0], vec![0.5], vec![0.0]).unwrap());
        assert!(matches!(
            tail_integral(&qp, 1.0, 200.0, 1e-6),
            Err(CocycleError::InconclusiveFit { .. })
        ));
    }

    #[test]
    fn asymptotic_points() {
        assert!(is_asymptotic_at_minus_infinity(&hp(DriverSpec::P0), 2.0, 1e3, 1e-2));
        assert!(is_asymptotic_at_minus_infinity(&hp(DriverSpec::constant(1.0)), 1.0, 50.0, 1e-2));
        let zero = HullPoint::limit(DriverSpec::P0, LimitTag::Zero);
        assert!(!is_asymptotic_at_minus_infinity(&zero, 1.0, 1e3, 1e-2));
    }

    #[test]
    fn backward_growth_detects_unbounded_cocycles() {
        let unb = |c: HullPoint| backward_growth(&c, 512.0).unwrap().is_unbounded();
        assert!(unb(hp(DriverSpec::P2)));
        assert!(unb(HullPoint::limit(DriverSpec::P2, LimitTag::Const(-1.0))));
        assert!(!unb(hp(DriverSpec::P0)));
        assert!(!unb(hp(DriverSpec::P1)));
        assert!(!unb(HullPoint::limit(DriverSpec::P0, LimitTag::Zero)));
        assert!(!unb(HullPoint::limit(DriverSpec::P1, LimitTag::Const(2.0))));
    }

    #[test]
    fn affine_coefficient_scales_the_log() {
        let p = Affine::new(hp(DriverSpec::P1), 0.0, 0.5);
        let a = log_cocycle(&p, -40.0, DEFAULT_STEP);
        let b = log_cocycle(&hp(DriverSpec::P1), -40.0, DEFAULT_STEP);
        assert!((a - 0.5 * b).abs() < 1e-12);
    }
}
