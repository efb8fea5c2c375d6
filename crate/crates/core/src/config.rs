/// Numeric tolerances shared by every construction in the crate.
///
/// Probabilities, merged wealth values, and curve geometry live on different
/// scales, so each gets its own knob. All comparisons in the crate go through
/// one of these three; there are no ad-hoc epsilons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Probability-mass comparisons: sums to one, kernel-row fairness,
    /// marginal matching.
    pub prob: f64,
    /// Wealth values closer than this are treated as the same atom.
    pub value_merge: f64,
    /// Lorenz-curve geometry: dominance slack, crossing snaps, convex-hull
    /// turn tests.
    pub geometry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            prob: 1e-9,
            value_merge: 1e-12,
            geometry: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> bool {
        self.prob > 0.0 && self.value_merge > 0.0 && self.geometry > 0.0
    }
}
