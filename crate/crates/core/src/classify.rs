//! Thresholds separating trivial from strongly positive attractor sections.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Sections with sup-norm at or below this are trivial.
pub const EPS_TRIVIAL: f64 = 1e-6;
/// Sections whose interior minimum reaches this are strongly positive.
pub const EPS_POSITIVE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Trivial,
    StronglyPositive,
    Indeterminate,
}

impl Classification {
    /// Threshold rule on a converged value. The band between the two
    /// thresholds is reported, never rounded.
    pub fn from_bounds(sup_norm: f64, min_interior: f64) -> Self {
        if sup_norm <= EPS_TRIVIAL {
            Classification::Trivial
        } else if min_interior >= EPS_POSITIVE {
            Classification::StronglyPositive
        } else {
            Classification::Indeterminate
        }
    }

    pub fn is_decided(self) -> bool {
        self != Classification::Indeterminate
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Trivial => "trivial",
            Classification::StronglyPositive => "strongly_positive",
            Classification::Indeterminate => "indeterminate",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(Classification::from_bounds(1e-7, 1e-7), Classification::Trivial);
        assert_eq!(Classification::from_bounds(0.5, 0.2), Classification::StronglyPositive);
        assert_eq!(Classification::from_bounds(1e-4, 1e-4), Classification::Indeterminate);
        assert_eq!(Classification::from_bounds(0.5, 1e-5), Classification::Indeterminate);
    }
}
