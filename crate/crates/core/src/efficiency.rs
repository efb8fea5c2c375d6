//! Betting-volume analysis: how much money must cross the table to move
//! wealth from a point mass to a two-point extreme, and why randomizing the
//! stake can cut the expected volume.
//!
//! The closed form [`v_star`] is the minimal expected volume for turning
//! wealth `x` into the extreme distribution on {0, 1}. [`volume_recursion`]
//! is its n-step discretization, realized as an explicit plan by
//! [`achievability_plan`]. [`dyadic_plan`] and [`randomized_stake_plan`]
//! reproduce the classic comparison: halving stakes toward a uniform target
//! costs 1 - 2^-k, while privately randomizing a single stake over the same
//! leaf distribution costs exactly 1/2. [`bellman_check`] probes the
//! dynamic-programming inequality behind the converse on a grid.

use crate::distribution::DiscreteDistribution;
use crate::synth::{FairBinaryGamble, GamblePlan, NodeId, PlanBuilder, PlanNode};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EfficiencyError {
    #[error("argument outside domain: {0}")]
    OutOfDomain(String),
}

const DOMAIN_SLACK: f64 = 1e-12;

/// Minimal expected betting volume to carry wealth `x` to the two-point
/// distribution {1 w.p. x, 0 w.p. 1-x}: -(1-x)ln(1-x), extended by
/// continuity to 0 at x = 1. Always at most `x`.
pub fn v_star(x: f64) -> Result<f64, EfficiencyError> {
    if !x.is_finite() || x < -DOMAIN_SLACK || x > 1.0 + DOMAIN_SLACK {
        return Err(EfficiencyError::OutOfDomain(format!(
            "v_star needs x in [0, 1], got {x}"
        )));
    }
    let rest = (1.0 - x).clamp(0.0, 1.0);
    if rest == 0.0 || rest == 1.0 {
        return Ok(0.0);
    }
    Ok(-rest * rest.ln())
}

/// Expected volume of the n-step ladder: from wealth x_k = x k/n, stake
/// x/n to either win outcome 1 or drop one rung, starting the recursion at
/// V(0) = 0. Converges to [`v_star`] from above as n grows.
pub fn volume_recursion(x: f64, n: usize) -> Result<f64, EfficiencyError> {
    if !x.is_finite() || x < -DOMAIN_SLACK || x > 1.0 + DOMAIN_SLACK {
        return Err(EfficiencyError::OutOfDomain(format!(
            "volume_recursion needs x in [0, 1], got {x}"
        )));
    }
    if n == 0 {
        return Err(EfficiencyError::OutOfDomain(
            "volume_recursion needs at least one step".into(),
        ));
    }
    let x = x.clamp(0.0, 1.0);
    let mut v = 0.0f64;
    let mut rung_below = 0.0f64;
    for j in 1..=n {
        let rung = ladder_rung(x, j, n);
        let stake = rung - rung_below;
        let win_prob = stake / (1.0 - rung_below);
        v = stake + (1.0 - win_prob) * v;
        rung_below = rung;
    }
    Ok(v)
}

/// Wealth at rung `k` of the n-step ladder, pinned to the exact endpoints.
fn ladder_rung(x: f64, k: usize, n: usize) -> f64 {
    if k == 0 {
        0.0
    } else if k == n {
        x
    } else {
        x * (k as f64) / (n as f64)
    }
}

/// The n-step ladder as an explicit plan: at each rung bet the rung spacing
/// on reaching 1 outright, falling one rung otherwise. Leaves realize
/// {1 w.p. x, 0 w.p. 1-x}, and the expected volume equals
/// [`volume_recursion`] to within roundoff.
pub fn achievability_plan(x: f64, n: usize) -> Result<GamblePlan, EfficiencyError> {
    if !x.is_finite() || x <= 0.0 || x >= 1.0 {
        return Err(EfficiencyError::OutOfDomain(format!(
            "achievability_plan needs 0 < x < 1, got {x}"
        )));
    }
    if n == 0 {
        return Err(EfficiencyError::OutOfDomain(
            "achievability_plan needs at least one step".into(),
        ));
    }
    let mut b = PlanBuilder::new();
    let mut node = b.leaf(0.0);
    let mut rung_below = 0.0f64;
    for k in 1..=n {
        let rung = ladder_rung(x, k, n);
        let win = b.leaf(1.0);
        let gamble = FairBinaryGamble::new(rung, rung_below, 1.0)
            .expect("ladder rungs sit strictly inside (0, 1)");
        node = b
            .bet(gamble, node, win)
            .expect("child rung matches the gamble outcome by construction");
        rung_below = rung;
    }
    Ok(b.finish(node))
}

/// Expected money-on-the-table accounting for a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeReport {
    /// Probability-weighted sum of stakes over all bet nodes.
    pub expected_volume: f64,
    /// Expected number of bets along a walk.
    pub expected_bets: f64,
    /// Volume contribution per tree depth (root bets at depth 0).
    pub per_depth: Vec<(usize, f64)>,
}

/// Sums path probability times stake over every bet node, iteratively so
/// arbitrarily deep plans are fine.
pub fn expected_volume(plan: &GamblePlan) -> VolumeReport {
    let mut expected_volume = 0.0f64;
    let mut expected_bets = 0.0f64;
    let mut by_depth: Vec<f64> = Vec::new();
    let mut stack = vec![(plan.root(), 1.0f64, 0usize)];
    while let Some((id, prob, depth)) = stack.pop() {
        if let PlanNode::Bet { gamble, low, high } = plan.node(id) {
            let contribution = prob * gamble.stake();
            expected_volume += contribution;
            expected_bets += prob;
            if by_depth.len() <= depth {
                by_depth.resize(depth + 1, 0.0);
            }
            by_depth[depth] += contribution;
            stack.push((*low, prob * gamble.low_prob, depth + 1));
            stack.push((*high, prob * gamble.high_prob, depth + 1));
        }
    }
    VolumeReport {
        expected_volume,
        expected_bets,
        per_depth: by_depth.into_iter().enumerate().collect(),
    }
}

/// Halving-stake plan from wealth 1: bet 1/2, then 1/4, down to 2^-k,
/// double-or-nothing on each stake. Leaves are uniform over the odd
/// multiples of 2^-k in (0, 2).
pub fn dyadic_plan(k: u32) -> GamblePlan {
    assert!(k >= 1, "dyadic plan needs at least one level");
    let mut b = PlanBuilder::new();
    let scale = (2.0f64).powi(k as i32);
    let mut level: Vec<(NodeId, f64)> = (1..=(1u64 << k))
        .map(|j| {
            let v = (2 * j - 1) as f64 / scale;
            (b.leaf(v), v)
        })
        .collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len() / 2);
        for pair in level.chunks(2) {
            let (low_id, low_v) = pair[0];
            let (high_id, high_v) = pair[1];
            let wealth = (low_v + high_v) / 2.0;
            let gamble = FairBinaryGamble::new(wealth, low_v, high_v)
                .expect("dyadic midpoints are interior");
            let id = b
                .bet(gamble, low_id, high_id)
                .expect("children carry the outcome values");
            next.push((id, wealth));
        }
        level = next;
    }
    b.finish(level[0].0)
}

/// A private coin choosing among plans: a convex combination of gambling
/// schemes whose cost is the weighted average volume.
#[derive(Debug, Clone)]
pub struct MixedPlan {
    components: Vec<(f64, GamblePlan)>,
}

impl MixedPlan {
    /// At least one component; weights positive and summing to one; all
    /// components starting from the same wealth.
    pub fn new(components: Vec<(f64, GamblePlan)>) -> Result<Self, EfficiencyError> {
        if components.is_empty() {
            return Err(EfficiencyError::OutOfDomain(
                "a mixture needs at least one component".into(),
            ));
        }
        let total: f64 = components.iter().map(|&(w, _)| w).sum();
        if components.iter().any(|&(w, _)| !(w > 0.0) || w > 1.0) || (total - 1.0).abs() > 1e-12 {
            return Err(EfficiencyError::OutOfDomain(format!(
                "mixture weights must lie in (0, 1] and sum to 1, got total {total}"
            )));
        }
        let start = components[0].1.starting_wealth();
        if components
            .iter()
            .any(|(_, p)| (p.starting_wealth() - start).abs() > 1e-12)
        {
            return Err(EfficiencyError::OutOfDomain(
                "mixture components must share one starting wealth".into(),
            ));
        }
        Ok(MixedPlan { components })
    }

    pub fn components(&self) -> &[(f64, GamblePlan)] {
        &self.components
    }

    pub fn starting_wealth(&self) -> f64 {
        self.components[0].1.starting_wealth()
    }

    /// Weighted mixture of the component leaf distributions.
    pub fn leaf_distribution(&self) -> DiscreteDistribution {
        let mut masses: Vec<(f64, f64)> = Vec::new();
        for (w, plan) in &self.components {
            masses.extend(
                plan.leaf_distribution()
                    .atoms()
                    .iter()
                    .map(|&(v, p)| (v, w * p)),
            );
        }
        DiscreteDistribution::from_masses(&masses).expect("weights are positive")
    }
}

/// Single random fair bet from wealth 1 with stake drawn uniformly from the
/// odd multiples of 2^-k below 1. The leaf distribution matches
/// [`dyadic_plan`] of the same k, but the expected volume is exactly 1/2.
pub fn randomized_stake_plan(k: u32) -> MixedPlan {
    assert!(k >= 1, "randomized stake plan needs at least one level");
    let scale = (2.0f64).powi(k as i32);
    let count = 1u64 << (k - 1);
    let weight = 1.0 / count as f64;
    let components = (1..=count)
        .map(|j| {
            let stake = (2 * j - 1) as f64 / scale;
            let mut b = PlanBuilder::new();
            let low = b.leaf(1.0 - stake);
            let high = b.leaf(1.0 + stake);
            let gamble = FairBinaryGamble::new(1.0, 1.0 - stake, 1.0 + stake)
                .expect("stake below 1 keeps outcomes nonnegative");
            let root = b.bet(gamble, low, high).expect("children match outcomes");
            (weight, b.finish(root))
        })
        .collect();
    MixedPlan::new(components).expect("uniform weights are valid")
}

/// Average volume of a mixture: the cost of a randomized scheme is the
/// weighted average of its physical schemes.
pub fn expected_volume_mixed(m: &MixedPlan) -> f64 {
    m.components()
        .iter()
        .map(|(w, plan)| w * expected_volume(plan).expected_volume)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellmanReport {
    /// Grid points where the inequality failed by more than the tolerance.
    pub violations: u64,
    /// Largest left-minus-right gap seen anywhere (negative when the
    /// inequality holds strictly).
    pub worst_gap: f64,
    /// The (a, b, theta) grid point attaining the worst gap.
    pub worst_point: (f64, f64, f64),
}

/// Grid check of the dynamic-programming inequality behind the volume
/// converse: for wealth moving from a+(b-a)theta by a fair bet to {a, b},
/// paying the stake plus the optimal continuations from a and b is never
/// cheaper than acting optimally outright. Evaluated on the lattice
/// {0, 1/grid_n, ..., 1}^3 restricted to a <= b.
pub fn bellman_check(grid_n: usize, tol: f64) -> BellmanReport {
    assert!(grid_n >= 2, "grid needs at least two intervals");
    let points: Vec<f64> = (0..=grid_n).map(|i| i as f64 / grid_n as f64).collect();
    let values: Vec<f64> = points
        .iter()
        .map(|&p| v_star(p).expect("grid point in domain"))
        .collect();
    let mut report = BellmanReport {
        violations: 0,
        worst_gap: f64::NEG_INFINITY,
        worst_point: (0.0, 0.0, 0.0),
    };
    for ia in 0..=grid_n {
        for ib in ia..=grid_n {
            let (a, b) = (points[ia], points[ib]);
            let stake_span = b - a;
            for it in 0..=grid_n {
                let theta = points[it];
                let mid = a + stake_span * theta;
                let lhs = v_star(mid).expect("interpolant stays in domain");
                let rhs = stake_span * theta + (1.0 - theta) * values[ia] + theta * values[ib];
                let gap = lhs - rhs;
                if gap > report.worst_gap {
                    report.worst_gap = gap;
                    report.worst_point = (a, b, theta);
                }
                if gap > tol {
                    report.violations += 1;
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::plan_constant;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn closed_form_boundary_and_midpoint() {
        assert_eq!(v_star(0.0).unwrap(), 0.0);
        assert_eq!(v_star(1.0).unwrap(), 0.0);
        assert_close(v_star(0.5).unwrap(), 0.5 * (2.0f64).ln(), 1e-15);
        assert!(v_star(-0.1).is_err());
        assert!(v_star(1.1).is_err());
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!(v_star(x).unwrap() <= x + 1e-15);
        }
    }

    #[test]
    fn recursion_matches_hand_values() {
        assert_eq!(volume_recursion(0.5, 1).unwrap(), 0.5);
        assert_close(volume_recursion(0.5, 2).unwrap(), 5.0 / 12.0, 1e-15);
        assert_close(
            volume_recursion(0.5, 100_000).unwrap(),
            0.5 * (2.0f64).ln(),
            1e-3,
        );
        assert!(volume_recursion(0.5, 0).is_err());
        assert!(volume_recursion(1.5, 3).is_err());
    }

    #[test]
    fn recursion_decreases_in_steps_and_stays_above_closed_form() {
        for &x in &[0.3, 0.7, 0.95] {
            let vs = v_star(x).unwrap();
            let mut prev = f64::INFINITY;
            for n in 1..=50 {
                let v = volume_recursion(x, n).unwrap();
                assert!(v <= prev + 1e-15, "x={x} n={n}: {v} > {prev}");
                assert!(v >= vs - 1e-12, "x={x} n={n}: {v} < {vs}");
                prev = v;
            }
        }
    }

    #[test]
    fn constant_to_uniform_volume() {
        let target = DiscreteDistribution::uniform(&[0.0, 1.0, 2.0]).unwrap();
        let plan = plan_constant(1.0, &target).unwrap();
        let report = expected_volume(&plan);
        assert_close(report.expected_volume, 4.0 / 3.0, 1e-12);
        assert_close(report.expected_bets, 5.0 / 3.0, 1e-12);
        assert_eq!(report.per_depth.len(), 2);
        assert_close(report.per_depth[0].1, 1.0, 1e-12);
        assert_close(report.per_depth[1].1, 1.0 / 3.0, 1e-12);
        let sum: f64 = report.per_depth.iter().map(|&(_, v)| v).sum();
        assert_close(sum, report.expected_volume, 1e-12);
    }

    #[test]
    fn leaf_plan_costs_nothing() {
        let plan = plan_constant(1.0, &DiscreteDistribution::point_mass(1.0).unwrap()).unwrap();
        let report = expected_volume(&plan);
        assert_eq!(report.expected_volume, 0.0);
        assert_eq!(report.expected_bets, 0.0);
        assert!(report.per_depth.is_empty());
    }

    #[test]
    fn ladder_plan_reaches_the_extreme_distribution() {
        let plan = achievability_plan(0.5, 1).unwrap();
        let leaves = plan.leaf_distribution();
        assert_eq!(leaves.len(), 2);
        assert_close(leaves.atoms()[0].0, 0.0, 0.0);
        assert_close(leaves.atoms()[0].1, 0.5, 1e-15);
        assert_close(leaves.atoms()[1].0, 1.0, 0.0);
        assert_close(leaves.atoms()[1].1, 0.5, 1e-15);

        let plan = achievability_plan(0.3, 100).unwrap();
        plan.validate().unwrap();
        let leaves = plan.leaf_distribution();
        assert_eq!(leaves.len(), 2);
        assert_close(leaves.atoms()[0].1, 0.7, 1e-9);
        assert_close(leaves.atoms()[1].1, 0.3, 1e-9);
        assert_close(leaves.mean(), 0.3, 1e-12);
        let vol = expected_volume(&plan).expected_volume;
        assert_close(vol, volume_recursion(0.3, 100).unwrap(), 1e-12);

        assert!(achievability_plan(0.0, 5).is_err());
        assert!(achievability_plan(1.0, 5).is_err());
    }

    #[test]
    fn dyadic_plan_small_cases() {
        let p1 = dyadic_plan(1);
        let l1 = p1.leaf_distribution();
        assert_eq!(l1.atoms(), &[(0.5, 0.5), (1.5, 0.5)]);
        assert_eq!(expected_volume(&p1).expected_volume, 0.5);

        let p2 = dyadic_plan(2);
        p2.validate().unwrap();
        let l2 = p2.leaf_distribution();
        assert_eq!(
            l2.atoms(),
            &[(0.25, 0.25), (0.75, 0.25), (1.25, 0.25), (1.75, 0.25)]
        );
        assert_eq!(expected_volume(&p2).expected_volume, 0.75);
        assert_close(l2.mean(), 1.0, 1e-15);
        assert_eq!(p2.starting_wealth(), 1.0);
    }

    #[test]
    fn randomized_stake_matches_dyadic_leaves_at_half_the_volume() {
        let mixed = randomized_stake_plan(3);
        let stakes: Vec<f64> = mixed
            .components()
            .iter()
            .map(|(_, p)| match p.node(p.root()) {
                PlanNode::Bet { gamble, .. } => gamble.stake(),
                PlanNode::Leaf { .. } => panic!("component must bet"),
            })
            .collect();
        assert_eq!(stakes, vec![1.0 / 8.0, 3.0 / 8.0, 5.0 / 8.0, 7.0 / 8.0]);
        assert_eq!(expected_volume_mixed(&mixed), 0.5);
        assert_eq!(
            mixed.leaf_distribution().atoms(),
            dyadic_plan(3).leaf_distribution().atoms()
        );

        let single = randomized_stake_plan(1);
        assert_eq!(single.components().len(), 1);
        assert_eq!(
            expected_volume_mixed(&single),
            expected_volume(&dyadic_plan(1)).expected_volume
        );
    }

    #[test]
    fn mixture_volume_averages_components() {
        let mut b = PlanBuilder::new();
        let leaf = b.leaf(1.0);
        let still = b.finish(leaf);
        let mixed = MixedPlan::new(vec![(0.5, still), (0.5, dyadic_plan(1))]).unwrap();
        assert_close(expected_volume_mixed(&mixed), 0.25, 1e-15);
    }

    #[test]
    fn mixture_validation() {
        let mut b = PlanBuilder::new();
        let leaf = b.leaf(1.0);
        let still = b.finish(leaf);
        assert!(MixedPlan::new(vec![]).is_err());
        assert!(MixedPlan::new(vec![(0.7, still.clone())]).is_err());
        let mut b2 = PlanBuilder::new();
        let leaf2 = b2.leaf(2.0);
        let other = b2.finish(leaf2);
        assert!(MixedPlan::new(vec![(0.5, still), (0.5, other)]).is_err());
    }

    #[test]
    fn bellman_inequality_holds_on_a_grid() {
        let report = bellman_check(20, 1e-12);
        assert_eq!(report.violations, 0);
        assert!(report.worst_gap <= 1e-12);
        let (a, b, theta) = report.worst_point;
        assert!((0.0..=1.0).contains(&a) && a <= b && (0.0..=1.0).contains(&theta));
    }

    #[test]
    fn bellman_theta_boundaries_are_tight() {
        // theta = 0 reduces to v_star(a) on both sides; theta = 1 costs the
        // full stake on the right.
        let lhs = v_star(0.25).unwrap();
        let rhs = 0.0 + 1.0 * v_star(0.25).unwrap();
        assert_close(lhs, rhs, 1e-15);
        let lhs1 = v_star(0.9).unwrap();
        let rhs1 = (0.9 - 0.1) + v_star(0.9).unwrap();
        assert!(lhs1 <= rhs1);
    }
}
