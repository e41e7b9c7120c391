//! Reference values from verified runs of the bundled models.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionConstant {
    pub name: &'static str,
    pub value: f64,
    /// Absolute tolerance.
    pub tolerance: f64,
}

impl RegressionConstant {
    pub fn matches(&self, observed: f64) -> bool {
        (observed - self.value).abs() <= self.tolerance
    }
}

/// Medians of bins dominated by symmetry-forbidden elements sit at roundoff
/// level, so ratios built from them are not locked.
pub const LOCKED: &[RegressionConstant] = &[
    RegressionConstant {
        name: "default10.W.lowest_bin_median",
        value: 7.05614587622e-3,
        tolerance: 1e-8,
    },
    // ranks among roundoff-level elements are platform dependent
    RegressionConstant {
        name: "default10.W.low_gap_spearman",
        value: -7.38119417068e-2,
        tolerance: 1e-2,
    },
    RegressionConstant {
        name: "default10.quench.tau",
        value: 0.8,
        tolerance: 1e-9,
    },
    RegressionConstant {
        name: "default10.quench.first_time_below_0.2",
        value: 1.4,
        tolerance: 1e-9,
    },
    RegressionConstant {
        name: "chain10.W.lowest_bin_median",
        value: 4.60652099882e-2,
        tolerance: 1e-8,
    },
    RegressionConstant {
        name: "chain10.W.suppression_ratio",
        value: 3.52236992243,
        tolerance: 1e-6,
    },
];

pub fn lookup(name: &str) -> Option<RegressionConstant> {
    LOCKED.iter().copied().find(|c| c.name == name)
}
