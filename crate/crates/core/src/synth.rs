//! Constructive couplings between comparable distributions.
//!
//! A fair gamble replaces current wealth by a payout of equal conditional
//! mean. Two constructions are provided:
//!
//! - [`plan_constant`] turns constant wealth into an arbitrary target with a
//!   chain of fair binary gambles, peeling off the smallest target value at
//!   each step;
//! - [`synthesize`] builds a fair transition kernel carrying any mean-one
//!   distribution to any distribution its Lorenz curve dominates, one source
//!   atom per stage. Each stage extends the source curve's second segment
//!   leftward to its last crossing with the target curve; the crossing
//!   abscissa determines how much of the lower target tail the smallest
//!   source atom resolves immediately, with the remainder deferred to the
//!   next stage at the second-smallest source value.

use crate::config::Tolerances;
use crate::distribution::{DiscreteDistribution, DistError};
use crate::lorenz::{LorenzCurve, LorenzError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("target mean {actual} does not match starting wealth {expected}")]
    MeanMismatch { expected: f64, actual: f64 },
    #[error("single-point target {target} differs from starting wealth {start}")]
    SinglePointTargetNotEqualToC { start: f64, target: f64 },
    #[error("source curve does not dominate target curve; no fair coupling exists")]
    NotComparable,
    #[error("first curve does not dominate the second")]
    NotDominating,
    #[error("curve has a single segment; extension needs at least two atoms")]
    DegenerateSupport,
    #[error("kernel has no row for value {0}")]
    MissingRow(f64),
    #[error("invalid gamble: {0}")]
    InvalidGamble(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Distribution(#[from] DistError),
}

impl From<LorenzError> for SynthError {
    fn from(e: LorenzError) -> Self {
        match e {
            LorenzError::NotMeanOne(m) => SynthError::MeanMismatch {
                expected: 1.0,
                actual: m,
            },
            other => SynthError::InvalidKernel(other.to_string()),
        }
    }
}

/// A single fair bet: from `wealth`, move to `low_value` or `high_value` with
/// probabilities that preserve the mean. The stake is `wealth - low_value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairBinaryGamble {
    pub wealth: f64,
    pub low_value: f64,
    pub low_prob: f64,
    pub high_value: f64,
    pub high_prob: f64,
}

impl FairBinaryGamble {
    /// Builds the unique fair bet from `wealth` to `{low, high}`.
    pub fn new(wealth: f64, low: f64, high: f64) -> Result<Self, SynthError> {
        if !(low.is_finite() && high.is_finite() && wealth.is_finite()) || low < 0.0 {
            return Err(SynthError::InvalidGamble(format!(
                "outcomes must be finite and nonnegative, got low {low}, high {high}"
            )));
        }
        if !(low < high) {
            return Err(SynthError::InvalidGamble(format!(
                "need low < high, got {low} and {high}"
            )));
        }
        if wealth < low || wealth > high {
            return Err(SynthError::InvalidGamble(format!(
                "wealth {wealth} outside [{low}, {high}]"
            )));
        }
        let high_prob = (wealth - low) / (high - low);
        Ok(FairBinaryGamble {
            wealth,
            low_value: low,
            low_prob: 1.0 - high_prob,
            high_value: high,
            high_prob,
        })
    }

    /// Like [`FairBinaryGamble::new`] but with given probabilities, checked
    /// for consistency against the fairness identity.
    pub fn with_probs(
        wealth: f64,
        low: f64,
        low_prob: f64,
        high: f64,
        high_prob: f64,
    ) -> Result<Self, SynthError> {
        Self::new(wealth, low, high)?;
        if (low_prob + high_prob - 1.0).abs() > 1e-12 {
            return Err(SynthError::InvalidGamble(format!(
                "probabilities sum to {}",
                low_prob + high_prob
            )));
        }
        if (low_prob * low + high_prob * high - wealth).abs() > 1e-12 {
            return Err(SynthError::InvalidGamble(format!(
                "bet from {wealth} to {{{low}, {high}}} with probabilities ({low_prob}, {high_prob}) is not fair"
            )));
        }
        Ok(FairBinaryGamble {
            wealth,
            low_value: low,
            low_prob,
            high_value: high,
            high_prob,
        })
    }

    pub fn stake(&self) -> f64 {
        self.wealth - self.low_value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
pub enum PlanNode {
    Leaf {
        wealth: f64,
    },
    Bet {
        gamble: FairBinaryGamble,
        low: NodeId,
        high: NodeId,
    },
}

impl PlanNode {
    pub fn wealth(&self) -> f64 {
        match self {
            PlanNode::Leaf { wealth } => *wealth,
            PlanNode::Bet { gamble, .. } => gamble.wealth,
        }
    }
}

/// A finite tree of fair binary gambles. Nodes live in an arena so plans of
/// any depth traverse and drop without recursion.
#[derive(Debug, Clone)]
pub struct GamblePlan {
    nodes: Vec<PlanNode>,
    root: NodeId,
}

pub struct PlanBuilder {
    nodes: Vec<PlanNode>,
}

impl PlanBuilder {
    pub fn new() -> Self {
        PlanBuilder { nodes: Vec::new() }
    }

    pub fn leaf(&mut self, wealth: f64) -> NodeId {
        self.nodes.push(PlanNode::Leaf { wealth });
        NodeId(self.nodes.len() - 1)
    }

    /// Wealth of an already-built node.
    pub fn wealth(&self, id: NodeId) -> f64 {
        self.nodes[id.0].wealth()
    }

    pub fn bet(
        &mut self,
        gamble: FairBinaryGamble,
        low: NodeId,
        high: NodeId,
    ) -> Result<NodeId, SynthError> {
        for (child, expect) in [(low, gamble.low_value), (high, gamble.high_value)] {
            let got = self.nodes[child.0].wealth();
            if (got - expect).abs() > 1e-12 {
                return Err(SynthError::InvalidPlan(format!(
                    "child wealth {got} does not match gamble outcome {expect}"
                )));
            }
        }
        self.nodes.push(PlanNode::Bet { gamble, low, high });
        Ok(NodeId(self.nodes.len() - 1))
    }

    pub fn finish(self, root: NodeId) -> GamblePlan {
        GamblePlan {
            nodes: self.nodes,
            root,
        }
    }
}

impl Default for PlanBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl GamblePlan {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &PlanNode {
        &self.nodes[id.0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn starting_wealth(&self) -> f64 {
        self.node(self.root).wealth()
    }

    /// Number of bets along the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut max = 0usize;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, bets)) = stack.pop() {
            match self.node(id) {
                PlanNode::Leaf { .. } => max = max.max(bets),
                PlanNode::Bet { low, high, .. } => {
                    stack.push((*low, bets + 1));
                    stack.push((*high, bets + 1));
                }
            }
        }
        max
    }

    /// Distribution of final wealth: leaf values weighted by path
    /// probabilities.
    pub fn leaf_distribution(&self) -> DiscreteDistribution {
        let mut masses: Vec<(f64, f64)> = Vec::new();
        let mut stack = vec![(self.root, 1.0f64)];
        while let Some((id, prob)) = stack.pop() {
            match self.node(id) {
                PlanNode::Leaf { wealth } => masses.push((*wealth, prob)),
                PlanNode::Bet { gamble, low, high } => {
                    stack.push((*low, prob * gamble.low_prob));
                    stack.push((*high, prob * gamble.high_prob));
                }
            }
        }
        DiscreteDistribution::from_masses(&masses)
            .expect("plan invariants guarantee a valid leaf distribution")
    }

    /// Structural check: every bet is internally fair, children match their
    /// gamble outcomes, and the leaf distribution's mean equals the starting
    /// wealth.
    pub fn validate(&self) -> Result<(), SynthError> {
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if let PlanNode::Bet { gamble, low, high } = self.node(id) {
                FairBinaryGamble::with_probs(
                    gamble.wealth,
                    gamble.low_value,
                    gamble.low_prob,
                    gamble.high_value,
                    gamble.high_prob,
                )?;
                for (child, expect) in [(low, gamble.low_value), (high, gamble.high_value)] {
                    let got = self.node(*child).wealth();
                    if (got - expect).abs() > 1e-12 {
                        return Err(SynthError::InvalidPlan(format!(
                            "child wealth {got} does not match gamble outcome {expect}"
                        )));
                    }
                }
                stack.push(*low);
                stack.push(*high);
            }
        }
        let mean = self.leaf_distribution().mean();
        if (mean - self.starting_wealth()).abs() > 1e-9 {
            return Err(SynthError::InvalidPlan(format!(
                "leaf distribution mean {mean} does not match starting wealth {}",
                self.starting_wealth()
            )));
        }
        Ok(())
    }
}

/// Chain of fair binary gambles from constant wealth `c` to `target`
/// (which must have mean `c`). Each bet either drops to the smallest
/// remaining target value or continues upward with the conditional mean of
/// the rest, so the plan depth is the support size minus one.
pub fn plan_constant(c: f64, target: &DiscreteDistribution) -> Result<GamblePlan, SynthError> {
    let atoms = target.atoms();
    if atoms.len() == 1 {
        let x = atoms[0].0;
        if (x - c).abs() > 1e-9 {
            return Err(SynthError::SinglePointTargetNotEqualToC {
                start: c,
                target: x,
            });
        }
        let mut b = PlanBuilder::new();
        let leaf = b.leaf(c);
        return Ok(b.finish(leaf));
    }
    let mean = target.mean();
    if (mean - c).abs() > 1e-9 {
        return Err(SynthError::MeanMismatch {
            expected: c,
            actual: mean,
        });
    }

    // Wealth after surviving the first k bets is the conditional mean of the
    // remaining atoms, computed from suffix sums. The first entry is pinned
    // to the requested start and the last to the top atom so the boundary
    // gambles match their neighbors exactly.
    let n = atoms.len();
    let mut upper = vec![0.0f64; n];
    upper[0] = c;
    upper[n - 1] = atoms[n - 1].0;
    let mut suffix_mass = atoms[n - 1].1;
    let mut suffix_wealth = atoms[n - 1].1 * atoms[n - 1].0;
    for k in (1..n - 1).rev() {
        suffix_mass += atoms[k].1;
        suffix_wealth += atoms[k].1 * atoms[k].0;
        upper[k] = suffix_wealth / suffix_mass;
    }

    let mut b = PlanBuilder::new();
    let mut node = b.leaf(atoms[n - 1].0);
    for k in (0..n - 1).rev() {
        let leaf = b.leaf(atoms[k].0);
        let gamble = FairBinaryGamble::new(upper[k], atoms[k].0, upper[k + 1])?;
        node = b.bet(gamble, leaf, node)?;
    }
    Ok(b.finish(node))
}

/// A fair transition kernel: one outgoing distribution per source value, each
/// with mean equal to its source value. Rows are kept sorted by source value.
#[derive(Debug, Clone, PartialEq)]
pub struct FairKernel {
    rows: Vec<(f64, DiscreteDistribution)>,
}

impl FairKernel {
    /// Assembles a kernel from `(source value, row)` pairs. Structure only is
    /// validated here; fairness is diagnosed by [`verify_kernel`].
    pub fn from_rows(
        rows: impl IntoIterator<Item = (f64, DiscreteDistribution)>,
    ) -> Result<Self, SynthError> {
        let mut rows: Vec<(f64, DiscreteDistribution)> = rows.into_iter().collect();
        for &(v, _) in &rows {
            if !v.is_finite() || v < 0.0 {
                return Err(SynthError::InvalidKernel(format!(
                    "source value {v} must be finite and nonnegative"
                )));
            }
        }
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in rows.windows(2) {
            if w[1].0 - w[0].0 <= 1e-12 {
                return Err(SynthError::InvalidKernel(format!(
                    "duplicate rows for source value {}",
                    w[0].0
                )));
            }
        }
        if rows.is_empty() {
            return Err(SynthError::InvalidKernel("kernel has no rows".into()));
        }
        Ok(FairKernel { rows })
    }

    pub fn identity(values: &[f64]) -> Result<Self, SynthError> {
        let rows: Result<Vec<_>, _> = values
            .iter()
            .map(|&v| DiscreteDistribution::point_mass(v).map(|d| (v, d)))
            .collect();
        Self::from_rows(rows?)
    }

    pub fn rows(&self) -> &[(f64, DiscreteDistribution)] {
        &self.rows
    }

    pub fn row(&self, value: f64) -> Option<&DiscreteDistribution> {
        self.row_with(value, Tolerances::default().value_merge)
    }

    pub fn row_with(&self, value: f64, value_tol: f64) -> Option<&DiscreteDistribution> {
        let idx = self.rows.partition_point(|r| r.0 < value);
        for i in [idx.wrapping_sub(1), idx] {
            if let Some((v, d)) = self.rows.get(i) {
                if (v - value).abs() <= value_tol {
                    return Some(d);
                }
            }
        }
        None
    }

    /// Largest |row mean - source value| across rows.
    pub fn max_row_mean_err(&self) -> f64 {
        self.rows
            .iter()
            .map(|(v, d)| (d.mean() - v).abs())
            .fold(0.0, f64::max)
    }
}

/// Extends the second segment of `l1` (slope: second-smallest source value)
/// leftward from the first breakpoint and returns its last crossing
/// `(u_star, l_star)` with `l2` at or left of that breakpoint. Ties take the
/// largest crossing abscissa.
pub fn intersect_extension(l1: &LorenzCurve, l2: &LorenzCurve) -> Result<(f64, f64), SynthError> {
    let tol = Tolerances::default();
    if l1.breakpoints().len() < 3 {
        return Err(SynthError::DegenerateSupport);
    }
    if !l1.dominates_within(l2, tol.geometry) {
        return Err(SynthError::NotDominating);
    }
    Ok(intersect_core(l1, l2, &tol))
}

/// Core of [`intersect_extension`] without precondition checks; `l1` must
/// have at least two segments and dominate `l2` up to roundoff.
fn intersect_core(l1: &LorenzCurve, l2: &LorenzCurve, tol: &Tolerances) -> (f64, f64) {
    let bp = l1.breakpoints();
    let (p1, lp1) = bp[1];
    let x2 = (bp[2].1 - bp[1].1) / (bp[2].0 - bp[1].0);
    let ext = |u: f64| lp1 + x2 * (u - p1);

    let d_at = |u: f64| ext(u) - l2.eval_clamped(u);
    if d_at(p1) <= tol.geometry {
        return (p1, l2.eval_clamped(p1));
    }
    let mut hi_u = p1;
    let mut d_hi = d_at(p1);
    for &(u, l) in l2.breakpoints().iter().rev() {
        if u >= p1 {
            continue;
        }
        let d_lo = ext(u) - l;
        if d_lo <= tol.geometry {
            let u_star = if d_lo >= -tol.geometry {
                u
            } else {
                u + (hi_u - u) * (-d_lo) / (d_hi - d_lo)
            };
            let u_star = if p1 - u_star <= tol.geometry { p1 } else { u_star };
            return (u_star, l2.eval_clamped(u_star));
        }
        hi_u = u;
        d_hi = d_lo;
    }
    // Unreachable when l1 dominates l2: the extension is negative at u = 0.
    debug_assert!(false, "extension line never crossed the target curve");
    (0.0, 0.0)
}

/// Builds the fair kernel from `source` to `target` (both mean-one,
/// `source` dominating) as the composition of the per-stage kernels from
/// [`synthesize_stages`].
pub fn synthesize(
    source: &DiscreteDistribution,
    target: &DiscreteDistribution,
) -> Result<FairKernel, SynthError> {
    let stages = synthesize_stages(source, target)?;
    let mut iter = stages.into_iter();
    let first = iter.next().expect("at least one stage");
    Ok(iter.fold(first, |acc, k| compose(&acc, &k)))
}

/// The stage list of the synthesis, one kernel per source atom. Stage `t`
/// resolves the smallest remaining source value: its row sends that value to
/// the portion of the target below the extension crossing plus a remainder at
/// the next source value; every other value in the current marginal keeps a
/// point-mass row. Applying the stages in order carries `source` to `target`
/// through marginals whose Lorenz curves decrease monotonically.
pub fn synthesize_stages(
    source: &DiscreteDistribution,
    target: &DiscreteDistribution,
) -> Result<Vec<FairKernel>, SynthError> {
    let tol = Tolerances::default();
    for d in [source, target] {
        let m = d.mean();
        if (m - 1.0).abs() > tol.prob {
            return Err(SynthError::MeanMismatch {
                expected: 1.0,
                actual: m,
            });
        }
    }
    let ls = LorenzCurve::from_distribution_with(source, &tol)?;
    let lt = LorenzCurve::from_distribution_with(target, &tol)?;
    if !ls.dominates_within(&lt, tol.geometry) {
        return Err(SynthError::NotComparable);
    }

    // Absolute-mass bookkeeping: `active` is the not-yet-resolved part of the
    // current marginal, `remaining` the not-yet-produced part of the target,
    // `finalized` the part already in place. Active and remaining always hold
    // equal total mass and equal total wealth.
    let mut active: Vec<(f64, f64)> = source.atoms().to_vec();
    let mut remaining: Vec<(f64, f64)> = target.atoms().to_vec();
    let mut finalized: Vec<(f64, f64)> = Vec::new();
    let mut stages: Vec<FairKernel> = Vec::new();
    const DROP: f64 = 1e-12;

    // Finalized values arrive in nondecreasing order; the leftover of a
    // split atom can be finalized again later, so merge equal values to keep
    // one identity row per value.
    let push_finalized = |finalized: &mut Vec<(f64, f64)>, y: f64, py: f64| {
        if let Some(last) = finalized.last_mut() {
            if (last.0 - y).abs() <= tol.value_merge {
                last.1 += py;
                return;
            }
        }
        finalized.push((y, py));
    };

    while active.len() > 1 {
        let mass: f64 = active.iter().map(|&(_, m)| m).sum();
        let (x1, p1) = active[0];
        let x2 = active[1].0;

        let u_star = if remaining.len() == 1 {
            // Single remaining target atom: the extension meets the target
            // curve only at the stage boundary.
            p1
        } else {
            let cond_src = DiscreteDistribution::from_masses_with(&active, &tol)?;
            let cond_tgt = DiscreteDistribution::from_masses_with(&remaining, &tol)?;
            let mu = cond_src.mean();
            let lc_src =
                LorenzCurve::from_distribution_with(&cond_src.scale(1.0 / mu)?, &tol)?;
            let lc_tgt = LorenzCurve::from_distribution_with(
                &cond_tgt.scale(1.0 / cond_tgt.mean())?,
                &tol,
            )?;
            if lc_src.breakpoints().len() < 3 {
                p1
            } else {
                let (u_cond, _) = intersect_core(&lc_src, &lc_tgt, &tol);
                (u_cond * mass).min(p1)
            }
        };

        // Largest index m with Pr(target < remaining[m].0) <= u_star.
        let mut m = 0usize;
        let mut below = 0.0f64;
        while m + 1 < remaining.len() && below + remaining[m].1 <= u_star + DROP {
            below += remaining[m].1;
            m += 1;
        }
        let part = (u_star - below).clamp(0.0, remaining[m].1);
        let upper = (p1 - u_star).max(0.0);
        let ym_joins_active = (remaining[m].0 - x2).abs() <= tol.value_merge;

        let mut v_masses: Vec<(f64, f64)> = Vec::with_capacity(m + 2);
        v_masses.extend(remaining[..m].iter().copied());
        if part > DROP {
            v_masses.push((remaining[m].0, part));
        }
        if upper > DROP {
            v_masses.push((x2, upper));
        }
        let v = DiscreteDistribution::from_masses_with(&v_masses, &tol)?;
        debug_assert!(
            (v.mean() - x1).abs() <= 1e-9 * x1.max(1.0),
            "stage payout mean {} drifted from source value {}",
            v.mean(),
            x1
        );

        // Assemble the stage kernel over the whole current marginal.
        let mut rows: Vec<(f64, DiscreteDistribution)> = Vec::new();
        rows.push((x1, v));
        for &(x, _) in &active[1..] {
            rows.push((x, DiscreteDistribution::point_mass(x)?));
        }
        for &(y, _) in &finalized {
            if active[1..].iter().all(|&(x, _)| (x - y).abs() > tol.value_merge) {
                rows.push((y, DiscreteDistribution::point_mass(y)?));
            }
        }
        stages.push(FairKernel::from_rows(rows)?);

        // Advance the bookkeeping.
        for &(y, py) in &remaining[..m] {
            push_finalized(&mut finalized, y, py);
        }
        if !ym_joins_active && part > DROP {
            push_finalized(&mut finalized, remaining[m].0, part);
        }
        let mut next_remaining: Vec<(f64, f64)> = Vec::with_capacity(remaining.len());
        if ym_joins_active {
            next_remaining.push(remaining[m]);
        } else {
            let left = remaining[m].1 - part;
            if left > DROP {
                next_remaining.push((remaining[m].0, left));
            }
        }
        next_remaining.extend(remaining[m + 1..].iter().copied());
        remaining = next_remaining;

        let mut next_active: Vec<(f64, f64)> = Vec::with_capacity(active.len() - 1);
        let extra = upper + if ym_joins_active { part } else { 0.0 };
        next_active.push((x2, active[1].1 + extra));
        next_active.extend(active[2..].iter().copied());
        active = next_active;
        debug_assert!(!remaining.is_empty());
    }

    // Base stage: a single surviving source value gambles straight into the
    // remaining target.
    let (c, _) = active[0];
    let row = DiscreteDistribution::from_masses_with(&remaining, &tol)?;
    debug_assert!((row.mean() - c).abs() <= 1e-9 * c.max(1.0));
    let mut rows: Vec<(f64, DiscreteDistribution)> = vec![(c, row)];
    for &(y, _) in &finalized {
        if (c - y).abs() > tol.value_merge {
            rows.push((y, DiscreteDistribution::point_mass(y)?));
        }
    }
    stages.push(FairKernel::from_rows(rows)?);
    Ok(stages)
}

/// Two-step composition: `(k1 * k2)(x) = sum_y k1(x)(y) k2(y)`. Values
/// produced by `k1` that have no row in `k2` keep their wealth via an
/// implicit point-mass row.
pub fn compose(k1: &FairKernel, k2: &FairKernel) -> FairKernel {
    compose_impl(k1, k2, true).expect("auto-inserted rows cannot be missing")
}

/// Composition that fails with [`SynthError::MissingRow`] instead of
/// inserting point-mass rows.
pub fn compose_strict(k1: &FairKernel, k2: &FairKernel) -> Result<FairKernel, SynthError> {
    compose_impl(k1, k2, false)
}

fn compose_impl(
    k1: &FairKernel,
    k2: &FairKernel,
    auto_insert: bool,
) -> Result<FairKernel, SynthError> {
    let tol = Tolerances::default();
    let mut rows: Vec<(f64, DiscreteDistribution)> = Vec::new();
    for (x, row1) in k1.rows() {
        let mut masses: Vec<(f64, f64)> = Vec::new();
        for &(y, p) in row1.atoms() {
            match k2.row_with(y, tol.value_merge) {
                Some(row2) => {
                    masses.extend(row2.atoms().iter().map(|&(z, q)| (z, p * q)));
                }
                None if auto_insert => masses.push((y, p)),
                None => return Err(SynthError::MissingRow(y)),
            }
        }
        rows.push((*x, DiscreteDistribution::from_masses_with(&masses, &tol)?));
    }
    for (x, row2) in k2.rows() {
        if k1.row_with(*x, tol.value_merge).is_none() {
            rows.push((*x, row2.clone()));
        }
    }
    FairKernel::from_rows(rows)
}

/// Marginal after one kernel step. Every atom of `d` must have a row.
pub fn pushforward(
    d: &DiscreteDistribution,
    k: &FairKernel,
) -> Result<DiscreteDistribution, SynthError> {
    let tol = Tolerances::default();
    let mut masses: Vec<(f64, f64)> = Vec::new();
    for &(x, p) in d.atoms() {
        let row = k
            .row_with(x, tol.value_merge)
            .ok_or(SynthError::MissingRow(x))?;
        masses.extend(row.atoms().iter().map(|&(y, q)| (y, p * q)));
    }
    Ok(DiscreteDistribution::from_masses_with(&masses, &tol)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelReport {
    pub fair: bool,
    pub marginal_ok: bool,
    pub max_row_mean_err: f64,
    pub max_marginal_err: f64,
}

/// Diagnoses a kernel against a source/target pair: row fairness and the
/// pushforward marginal, each within the probability tolerance. Reports,
/// never fails.
pub fn verify_kernel(
    source: &DiscreteDistribution,
    target: &DiscreteDistribution,
    k: &FairKernel,
) -> KernelReport {
    let tol = Tolerances::default();
    let row_err = k.max_row_mean_err();
    let (marginal_err, marginal_ok) = match pushforward(source, k) {
        Ok(out) => {
            let err = out.prob_discrepancy(target, tol.value_merge);
            (err, err <= tol.prob)
        }
        Err(_) => (f64::INFINITY, false),
    };
    KernelReport {
        fair: row_err <= tol.prob,
        marginal_ok,
        max_row_mean_err: row_err,
        max_marginal_err: marginal_err,
    }
}
