//! Time-dependent scalar coefficients along a base orbit and the composite
//! Simpson rule used to integrate them.

use std::fmt::Debug;

use crate::hull::HullPoint;

/// A scalar coefficient `t ↦ a(p·t)` attached to a point of a base flow.
pub trait Coefficient: Clone + Debug + Send + Sync {
    fn at(&self, t: f64) -> f64;
    /// The same coefficient seen from `p·s`.
    fn shifted(&self, s: f64) -> Self;
    /// Points in `(lo, hi)` where the coefficient changes closed-form branch.
    fn breakpoints_between(&self, lo: f64, hi: f64) -> Vec<f64>;
    /// Preferred panel width near `t` given a base step.
    fn panel_width(&self, t: f64, base: f64) -> f64;
    fn sup_abs(&self) -> f64;
    fn label(&self) -> String;
    /// `Some(c)` when the coefficient is the constant `c` along the whole orbit.
    fn constant_value(&self) -> Option<f64>;
}

impl Coefficient for HullPoint {
    fn at(&self, t: f64) -> f64 {
        self.evaluate(t)
    }

    fn shifted(&self, s: f64) -> Self {
        self.advance(s)
    }

    fn breakpoints_between(&self, lo: f64, hi: f64) -> Vec<f64> {
        HullPoint::breakpoints_between(self, lo, hi)
    }

    fn panel_width(&self, t: f64, base: f64) -> f64 {
        HullPoint::panel_width(self, t, base)
    }

    fn sup_abs(&self) -> f64 {
        HullPoint::sup_abs(self)
    }

    fn label(&self) -> String {
        HullPoint::label(self)
    }

    fn constant_value(&self) -> Option<f64> {
        if self.is_limit() {
            Some(self.evaluate(0.0))
        } else {
            None
        }
    }
}

/// `offset + scale · a(p·t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub base: HullPoint,
    pub offset: f64,
    pub scale: f64,
}

impl Affine {
    pub fn new(base: HullPoint, offset: f64, scale: f64) -> Self {
        Affine { base, offset, scale }
    }

    pub fn identity(base: HullPoint) -> Self {
        Affine::new(base, 0.0, 1.0)
    }
}

impl Coefficient for Affine {
    fn at(&self, t: f64) -> f64 {
        self.offset + self.scale * self.base.evaluate(t)
    }

    fn shifted(&self, s: f64) -> Self {
        Affine {
            base: self.base.advance(s),
            ..self.clone()
        }
    }

    fn breakpoints_between(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.base.breakpoints_between(lo, hi)
    }

    fn panel_width(&self, t: f64, base: f64) -> f64 {
        if self.scale == 0.0 {
            f64::INFINITY
        } else {
            self.base.panel_width(t, base)
        }
    }

    fn sup_abs(&self) -> f64 {
        self.offset.abs() + self.scale.abs() * self.base.sup_abs()
    }

    fn label(&self) -> String {
        if self.offset == 0.0 && self.scale == 1.0 {
            self.base.label()
        } else {
            format!("{}+{}*[{}]", self.offset, self.scale, self.base.label())
        }
    }

    fn constant_value(&self) -> Option<f64> {
        if self.scale == 0.0 {
            Some(self.offset)
        } else {
            self.base.constant_value().map(|a| self.offset + self.scale * a)
        }
    }
}

/// One Simpson panel `[x0, x1]` (possibly with `x1 < x0`) evaluated at its
/// quarter points: integrals from `x0` to the midpoint and to `x1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel {
    #[allow(dead_code)]
    pub x0: f64,
    pub mid: f64,
    pub x1: f64,
    pub to_mid: f64,
    pub to_end: f64,
}

/// Walks from `from` to `to` in Simpson panels, forcing nodes at breakpoints.
pub(crate) fn march<C: Coefficient>(c: &C, from: f64, to: f64, step: f64, mut visit: impl FnMut(Panel)) {
    if from == to {
        return;
    }
    let dir = if to > from { 1.0 } else { -1.0 };
    let (lo, hi) = if dir > 0.0 { (from, to) } else { (to, from) };
    let mut stops = c.breakpoints_between(lo, hi);
    stops.sort_by(|a, b| (dir * a).total_cmp(&(dir * b)));
    stops.push(to);
    let mut x = from;
    for stop in stops {
        while (stop - x) * dir > 0.0 {
            let remaining = (stop - x).abs();
            // constant coefficients report infinite panels; keep the grid graded so
            // that functions of the integral (powers of c) are still resolved
            let mut h = c.panel_width(x, step).min(step * x.abs().max(1.0)).min(remaining);
            if remaining - h < 0.25 * h {
                h = remaining;
            }
            let x1 = if h == remaining { stop } else { x + dir * h };
            let hs = x1 - x;
            let q = hs / 4.0;
            let f0 = c.at(x);
            let f1 = c.at(x + q);
            let f2 = c.at(x + 2.0 * q);
            let f3 = c.at(x + 3.0 * q);
            let f4 = c.at(x1);
            let half = hs / 12.0;
            let to_mid = half * (f0 + 4.0 * f1 + f2);
            let to_end = to_mid + half * (f2 + 4.0 * f3 + f4);
            visit(Panel {
                x0: x,
                mid: x + 2.0 * q,
                x1,
                to_mid,
                to_end,
            });
            x = x1;
        }
    }
}

/// `int_from^to a(p·s) ds` by graded composite Simpson.
pub fn integrate<C: Coefficient>(c: &C, from: f64, to: f64, step: f64) -> f64 {
    let mut acc = 0.0;
    march(c, from, to, step, |p| acc += p.to_end);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::{DriverSpec, LimitTag};

    #[test]
    fn polynomial_branch_is_exact() {
        // p0 is linear on [-1, 1]
        let hp = HullPoint::new(DriverSpec::P0, 0.0);
        assert!((integrate(&hp, 0.0, 1.0, 0.3) + 1.0).abs() < 1e-14);
        assert!((integrate(&hp, 0.0, -1.0, 0.3) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn reversing_limits_flips_sign() {
        let hp = HullPoint::new(DriverSpec::P1, -3.0);
        let a = integrate(&hp, -7.0, 11.0, 0.01);
        let b = integrate(&hp, 11.0, -7.0, 0.01);
        assert!((a + b).abs() < 1e-10);
    }

    #[test]
    fn affine_offsets_and_scales() {
        let hp = HullPoint::limit(DriverSpec::P1, LimitTag::Const(2.0));
        let c = Affine::new(hp, -0.5, 0.5);
        assert_eq!(c.constant_value(), Some(0.5));
        assert!((integrate(&c, 0.0, 4.0, 0.01) - 2.0).abs() < 1e-12);
    }
}
