//! Base flows: explicit driver functions, the shift flow `p·t` and the
//! limit functions of their hulls.
//!
//! A hull is represented extensionally. A [`HullPoint`] is either a
//! translate `driver(shift + ·)` of a concrete driver or one of the constant
//! limit functions that the translates accumulate on. Quasi-periodic drivers
//! carry their position on the torus as a phase vector that the flow
//! advances linearly.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("limit points are not finitely listable for {0} drivers; sample shifts instead")]
    Unsupported(&'static str),
    #[error("invalid driver: {0}")]
    InvalidDriver(String),
}

/// A bounded, uniformly continuous coefficient `t ↦ a(t)`.
///
/// JSON form: `{"kind": "p0" | "p1" | "p2" | "constant" | "quasiperiodic" | "slowgrowth", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields, from = "DriverRepr")]
pub enum DriverSpec {
    /// `-2/t` for `|t| >= 1`, `-2(t-1)-2` on `[-1, 1]`.
    P0,
    /// `-2/t` for `t <= -1`, `2` for `t >= -1`.
    P1,
    /// `1/t` for `t <= -1`, `-1` for `t >= -1`.
    P2,
    Constant { value: f64 },
    /// `sum_i A_i cos(w_i t + phi_i)`.
    QuasiPeriodic {
        amplitudes: Vec<f64>,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    },
    /// Mean-zero almost periodic series
    /// `sum_{k=1}^{terms} 2^{-k(1-beta)} cos(2^{-k} t)` whose primitive
    /// `sum_k 2^{k beta} sin(2^{-k} t)` grows like `t^beta`.
    SlowGrowth {
        #[serde(default = "default_slow_beta")]
        beta: f64,
        #[serde(default = "default_slow_terms")]
        terms: u32,
    },
}

// Unit variants of an internally tagged enum ignore `deny_unknown_fields`,
// so parsing goes through empty struct variants instead.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DriverRepr {
    P0 {},
    P1 {},
    P2 {},
    Constant {
        value: f64,
    },
    QuasiPeriodic {
        amplitudes: Vec<f64>,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    },
    SlowGrowth {
        #[serde(default = "default_slow_beta")]
        beta: f64,
        #[serde(default = "default_slow_terms")]
        terms: u32,
    },
}

impl From<DriverRepr> for DriverSpec {
    fn from(r: DriverRepr) -> Self {
        match r {
            DriverRepr::P0 {} => DriverSpec::P0,
            DriverRepr::P1 {} => DriverSpec::P1,
            DriverRepr::P2 {} => DriverSpec::P2,
            DriverRepr::Constant { value } => DriverSpec::Constant { value },
            DriverRepr::QuasiPeriodic { amplitudes, frequencies, phases } => DriverSpec::QuasiPeriodic {
                amplitudes,
                frequencies,
                phases,
            },
            DriverRepr::SlowGrowth { beta, terms } => DriverSpec::SlowGrowth { beta, terms },
        }
    }
}

fn default_slow_beta() -> f64 {
    0.5
}

fn default_slow_terms() -> u32 {
    24
}

impl DriverSpec {
    pub fn constant(value: f64) -> Self {
        DriverSpec::Constant { value }
    }

    pub fn slow_growth_default() -> Self {
        DriverSpec::SlowGrowth {
            beta: default_slow_beta(),
            terms: default_slow_terms(),
        }
    }

    pub fn quasi_periodic(amplitudes: Vec<f64>, frequencies: Vec<f64>, phases: Vec<f64>) -> Result<Self, HullError> {
        let d = DriverSpec::QuasiPeriodic {
            amplitudes,
            frequencies,
            phases,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), HullError> {
        match self {
            DriverSpec::Constant { value } if !value.is_finite() => {
                Err(HullError::InvalidDriver("constant value must be finite".into()))
            }
            DriverSpec::QuasiPeriodic {
                amplitudes,
                frequencies,
                phases,
            } => {
                if amplitudes.is_empty() {
                    return Err(HullError::InvalidDriver("quasiperiodic driver needs at least one mode".into()));
                }
                if amplitudes.len() != frequencies.len() || amplitudes.len() != phases.len() {
                    return Err(HullError::InvalidDriver(
                        "amplitudes, frequencies and phases must have equal length".into(),
                    ));
                }
                if frequencies.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return Err(HullError::InvalidDriver("frequencies must be positive".into()));
                }
                if amplitudes.iter().chain(phases).any(|v| !v.is_finite()) {
                    return Err(HullError::InvalidDriver("amplitudes and phases must be finite".into()));
                }
                Ok(())
            }
            DriverSpec::SlowGrowth { beta, terms } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(HullError::InvalidDriver("slowgrowth beta must lie in (0, 1)".into()));
                }
                if *terms == 0 || *terms > 60 {
                    return Err(HullError::InvalidDriver("slowgrowth terms must lie in 1..=60".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DriverSpec::P0 => "p0",
            DriverSpec::P1 => "p1",
            DriverSpec::P2 => "p2",
            DriverSpec::Constant { .. } => "constant",
            DriverSpec::QuasiPeriodic { .. } => "quasiperiodic",
            DriverSpec::SlowGrowth { .. } => "slowgrowth",
        }
    }

    /// Value of the driver at absolute time `t`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            DriverSpec::P0 => {
                if t.abs() >= 1.0 {
                    -2.0 / t
                } else {
                    -2.0 * (t - 1.0) - 2.0
                }
            }
            DriverSpec::P1 => {
                if t <= -1.0 {
                    -2.0 / t
                } else {
                    2.0
                }
            }
            DriverSpec::P2 => {
                if t <= -1.0 {
                    1.0 / t
                } else {
                    -1.0
                }
            }
            DriverSpec::Constant { value } => *value,
            DriverSpec::QuasiPeriodic {
                amplitudes,
                frequencies,
                phases,
            } => amplitudes
                .iter()
                .zip(frequencies)
                .zip(phases)
                .map(|((a, w), phi)| a * (w * t + phi).cos())
                .sum(),
            DriverSpec::SlowGrowth { beta, terms } => slow_growth_value(*beta, *terms, t),
        }
    }

    /// Analytic bound on `sup_t |a(t)|`.
    pub fn sup_abs(&self) -> f64 {
        match self {
            DriverSpec::P0 | DriverSpec::P1 => 2.0,
            DriverSpec::P2 => 1.0,
            DriverSpec::Constant { value } => value.abs(),
            DriverSpec::QuasiPeriodic { amplitudes, .. } => amplitudes.iter().map(|a| a.abs()).sum(),
            DriverSpec::SlowGrowth { beta, terms } => {
                (1..=*terms).map(|k| 2f64.powf(-(k as f64) * (1.0 - beta))).sum()
            }
        }
    }

    /// Points where the closed-form branches meet, in driver time.
    pub fn breakpoints(&self) -> &'static [f64] {
        match self {
            DriverSpec::P0 => &[-1.0, 1.0],
            DriverSpec::P1 | DriverSpec::P2 => &[-1.0],
            _ => &[],
        }
    }

    /// Quadrature panel width near driver time `tau` for a base step.
    ///
    /// The `1/t` branches are integrated on a mesh graded like `|t|`, constants
    /// need a single panel, and oscillatory drivers resolve their fastest mode.
    pub(crate) fn panel_width(&self, tau: f64, base: f64) -> f64 {
        match self {
            DriverSpec::P0 | DriverSpec::P1 | DriverSpec::P2 => base * tau.abs().max(1.0),
            DriverSpec::Constant { .. } => f64::INFINITY,
            DriverSpec::QuasiPeriodic { frequencies, .. } => {
                let w = frequencies.iter().cloned().fold(0.0, f64::max);
                base.min(0.05 / w)
            }
            DriverSpec::SlowGrowth { .. } => base,
        }
    }

    /// Hull limit functions, for drivers whose hull is an orbit plus constants.
    pub fn limit_points(&self) -> Result<Vec<HullPoint>, HullError> {
        let limits = match self {
            DriverSpec::P0 => vec![LimitTag::Zero],
            DriverSpec::P1 => vec![LimitTag::Zero, LimitTag::Const(2.0)],
            DriverSpec::P2 => vec![LimitTag::Zero, LimitTag::Const(-1.0)],
            DriverSpec::Constant { .. } => vec![],
            DriverSpec::QuasiPeriodic { .. } => return Err(HullError::Unsupported("quasiperiodic")),
            DriverSpec::SlowGrowth { .. } => return Err(HullError::Unsupported("slowgrowth")),
        };
        Ok(limits
            .into_iter()
            .map(|tag| HullPoint::limit(self.clone(), tag))
            .collect())
    }
}

fn slow_growth_value(beta: f64, terms: u32, t: f64) -> f64 {
    (1..=terms)
        .map(|k| {
            let k = k as f64;
            2f64.powf(-k * (1.0 - beta)) * (t * 2f64.powf(-k)).cos()
        })
        .sum()
}

/// Closed-form primitive of the slow-growth series, `int_0^t a`.
pub fn slow_growth_primitive(beta: f64, terms: u32, t: f64) -> f64 {
    (1..=terms)
        .map(|k| {
            let k = k as f64;
            2f64.powf(k * beta) * (t * 2f64.powf(-k)).sin()
        })
        .sum()
}

impl fmt::Display for DriverSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriverSpec::Constant { value } => write!(f, "constant:{value}"),
            DriverSpec::SlowGrowth { beta, terms } => write!(f, "slowgrowth:{beta}:{terms}"),
            DriverSpec::QuasiPeriodic {
                amplitudes,
                frequencies,
                phases,
            } => {
                write!(f, "quasiperiodic")?;
                for ((a, w), p) in amplitudes.iter().zip(frequencies).zip(phases) {
                    write!(f, ":{a},{w},{p}")?;
                }
                Ok(())
            }
            other => f.write_str(other.kind_name()),
        }
    }
}

/// Short textual form used by the command line:
/// `p0`, `p1`, `p2`, `constant:<c>`, `slowgrowth[:<beta>[:<terms>]]`,
/// `quasiperiodic:<A>,<w>,<phi>[:<A>,<w>,<phi>...]`.
impl FromStr for DriverSpec {
    type Err = HullError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim().split(':');
        let head = parts.next().unwrap_or_default().to_ascii_lowercase();
        let rest: Vec<&str> = parts.collect();
        let num = |v: &str| -> Result<f64, HullError> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| HullError::InvalidDriver(format!("not a number: {v:?}")))
        };
        let d = match head.as_str() {
            "p0" => DriverSpec::P0,
            "p1" => DriverSpec::P1,
            "p2" => DriverSpec::P2,
            "constant" | "const" => match rest.as_slice() {
                [v] => DriverSpec::Constant { value: num(v)? },
                _ => return Err(HullError::InvalidDriver("expected constant:<value>".into())),
            },
            "slowgrowth" => {
                let beta = rest.first().map(|v| num(v)).transpose()?.unwrap_or(default_slow_beta());
                let terms = rest
                    .get(1)
                    .map(|v| {
                        v.parse::<u32>()
                            .map_err(|_| HullError::InvalidDriver(format!("bad term count {v:?}")))
                    })
                    .transpose()?
                    .unwrap_or(default_slow_terms());
                DriverSpec::SlowGrowth { beta, terms }
            }
            "quasiperiodic" => {
                let (mut a, mut w, mut p) = (vec![], vec![], vec![]);
                for mode in rest {
                    let fields: Vec<&str> = mode.split(',').collect();
                    let [amp, freq, phase] = fields.as_slice() else {
                        return Err(HullError::InvalidDriver(format!("bad mode {mode:?}, expected A,w,phi")));
                    };
                    a.push(num(amp)?);
                    w.push(num(freq)?);
                    p.push(num(phase)?);
                }
                DriverSpec::QuasiPeriodic {
                    amplitudes: a,
                    frequencies: w,
                    phases: p,
                }
            }
            other => return Err(HullError::InvalidDriver(format!("unknown driver {other:?}"))),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Constant limit functions of a hull. They are fixed points of the shift flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitTag {
    Zero,
    Const(f64),
}

impl LimitTag {
    pub fn value(self) -> f64 {
        match self {
            LimitTag::Zero => 0.0,
            LimitTag::Const(c) => c,
        }
    }
}

impl fmt::Display for LimitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitTag::Zero => f.write_str("zero"),
            LimitTag::Const(c) => write!(f, "const({c})"),
        }
    }
}

/// An element `p` of the hull: a translate of the driver, or a limit function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullPoint {
    pub driver: DriverSpec,
    #[serde(default)]
    pub shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitTag>,
}

impl HullPoint {
    pub fn new(driver: DriverSpec, shift: f64) -> Self {
        HullPoint {
            driver,
            shift,
            limit: None,
        }
    }

    pub fn limit(driver: DriverSpec, tag: LimitTag) -> Self {
        HullPoint {
            driver,
            shift: 0.0,
            limit: Some(tag),
        }
    }

    pub fn is_limit(&self) -> bool {
        self.limit.is_some() || matches!(self.driver, DriverSpec::Constant { .. })
    }

    /// `a(p·t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        match (&self.limit, &self.driver) {
            (Some(tag), _) => tag.value(),
            (
                None,
                DriverSpec::QuasiPeriodic {
                    amplitudes,
                    frequencies,
                    ..
                },
            ) => self
                .torus_phases()
                .iter()
                .zip(amplitudes)
                .zip(frequencies)
                .map(|((phi, a), w)| a * (w * t + phi).cos())
                .sum(),
            (None, d) => d.value(self.shift + t),
        }
    }

    /// `p·t`.
    pub fn advance(&self, t: f64) -> HullPoint {
        if self.is_limit() {
            return self.clone();
        }
        HullPoint {
            driver: self.driver.clone(),
            shift: self.shift + t,
            limit: None,
        }
    }

    /// Position on the torus of a quasi-periodic driver, each phase in `[0, 2π)`.
    pub fn torus_phases(&self) -> Vec<f64> {
        match &self.driver {
            DriverSpec::QuasiPeriodic {
                frequencies, phases, ..
            } => frequencies
                .iter()
                .zip(phases)
                .map(|(w, phi)| (phi + w * self.shift).rem_euclid(TAU))
                .collect(),
            _ => vec![],
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self.limit {
            Some(tag) => tag.value().abs(),
            None => self.driver.sup_abs(),
        }
    }

    /// Branch breakpoints in flow time (relative to this point) inside `(lo, hi)`.
    pub fn breakpoints_between(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.is_limit() {
            return vec![];
        }
        self.driver
            .breakpoints()
            .iter()
            .map(|b| b - self.shift)
            .filter(|&b| b > lo && b < hi)
            .collect()
    }

    pub(crate) fn panel_width(&self, t: f64, base: f64) -> f64 {
        if self.is_limit() {
            f64::INFINITY
        } else {
            self.driver.panel_width(self.shift + t, base)
        }
    }

    pub fn label(&self) -> String {
        match self.limit {
            Some(tag) => format!("{}/{}", self.driver, tag),
            None if matches!(self.driver, DriverSpec::Constant { .. }) => self.driver.to_string(),
            None => format!("{}@{}", self.driver, self.shift),
        }
    }
}

impl fmt::Display for HullPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `a(p·t)`.
pub fn evaluate(hp: &HullPoint, t: f64) -> f64 {
    hp.evaluate(t)
}

/// `p·t`.
pub fn advance(hp: &HullPoint, t: f64) -> HullPoint {
    hp.advance(t)
}

pub fn limit_points(d: &DriverSpec) -> Result<Vec<HullPoint>, HullError> {
    d.limit_points()
}
