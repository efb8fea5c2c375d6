//! Lattice structure of the fair-gamble reachability order.
//!
//! Curves are partially ordered by pointwise dominance. Any two curves have
//! a least upper bound (the pointwise maximum, itself convex) and a greatest
//! lower bound (the greatest convex minorant of the pointwise minimum), so the
//! order forms a lattice: the join is the most-degraded common ancestor, the
//! meet the least-degraded common descendant.

use crate::config::Tolerances;
use crate::lorenz::{merged_grid, LorenzCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Equal,
    AUpstream,
    BUpstream,
    Incomparable,
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Comparison::Equal => "Equal",
            Comparison::AUpstream => "AUpstream",
            Comparison::BUpstream => "BUpstream",
            Comparison::Incomparable => "Incomparable",
        };
        f.write_str(s)
    }
}

/// Least upper bound: the pointwise maximum of both curves.
///
/// Breakpoints of the result are the union of both curves' breakpoints plus
/// every crossing between their segments; crossings within the geometry
/// tolerance of an existing breakpoint snap to it.
pub fn join_upstream(a: &LorenzCurve, b: &LorenzCurve) -> LorenzCurve {
    join_upstream_with(a, b, &Tolerances::default())
}

pub fn join_upstream_with(a: &LorenzCurve, b: &LorenzCurve, tol: &Tolerances) -> LorenzCurve {
    let grid = merged_grid(a, b);
    let mut us: Vec<f64> = Vec::with_capacity(grid.len() * 2);
    for w in grid.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        us.push(u0);
        let d0 = a.eval_clamped(u0) - b.eval_clamped(u0);
        let d1 = a.eval_clamped(u1) - b.eval_clamped(u1);
        if (d0 > tol.geometry && d1 < -tol.geometry) || (d0 < -tol.geometry && d1 > tol.geometry) {
            let uc = u0 + (u1 - u0) * d0 / (d0 - d1);
            if uc - u0 > tol.geometry && u1 - uc > tol.geometry {
                us.push(uc);
            }
        }
    }
    us.push(*grid.last().unwrap());
    let pts: Vec<(f64, f64)> = us
        .into_iter()
        .map(|u| (u, a.eval_clamped(u).max(b.eval_clamped(u))))
        .collect();
    LorenzCurve::assemble(pts, tol)
}

/// Greatest lower bound: the greatest convex minorant of the pointwise
/// minimum, computed as the lower convex hull of both curves' breakpoints
/// (crossing points are included for completeness; they are never hull
/// vertices).
pub fn meet_downstream(a: &LorenzCurve, b: &LorenzCurve) -> LorenzCurve {
    meet_downstream_with(a, b, &Tolerances::default())
}

pub fn meet_downstream_with(a: &LorenzCurve, b: &LorenzCurve, tol: &Tolerances) -> LorenzCurve {
    let grid = merged_grid(a, b);
    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(grid.len() + 2);
    for w in grid.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        let d0 = a.eval_clamped(u0) - b.eval_clamped(u0);
        let d1 = a.eval_clamped(u1) - b.eval_clamped(u1);
        push_candidate(&mut candidates, u0, a.eval_clamped(u0).min(b.eval_clamped(u0)), tol);
        if (d0 > tol.geometry && d1 < -tol.geometry) || (d0 < -tol.geometry && d1 > tol.geometry) {
            let uc = u0 + (u1 - u0) * d0 / (d0 - d1);
            if uc - u0 > tol.geometry && u1 - uc > tol.geometry {
                push_candidate(&mut candidates, uc, a.eval_clamped(uc).min(b.eval_clamped(uc)), tol);
            }
        }
    }
    let last = *grid.last().unwrap();
    push_candidate(&mut candidates, last, 1.0, tol);

    // Monotone-chain lower hull. The pop tolerance is scaled by the chord
    // width so only points within the geometry tolerance of the chord (not
    // merely of zero cross product) are treated as collinear.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(candidates.len());
    for p in candidates {
        while hull.len() >= 2 {
            let a2 = hull[hull.len() - 2];
            let b2 = hull[hull.len() - 1];
            let cross = (b2.0 - a2.0) * (p.1 - a2.1) - (b2.1 - a2.1) * (p.0 - a2.0);
            if cross <= tol.geometry * (p.0 - a2.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    LorenzCurve::assemble(hull, tol)
}

fn push_candidate(out: &mut Vec<(f64, f64)>, u: f64, l: f64, tol: &Tolerances) {
    if let Some(last) = out.last_mut() {
        if u - last.0 <= tol.geometry {
            // Same abscissa: the lower point is the hull candidate.
            last.1 = last.1.min(l);
            return;
        }
    }
    out.push((u, l));
}

/// Classifies the pair by dominance in both directions.
pub fn compare(a: &LorenzCurve, b: &LorenzCurve) -> Comparison {
    compare_with(a, b, &Tolerances::default())
}

pub fn compare_with(a: &LorenzCurve, b: &LorenzCurve, tol: &Tolerances) -> Comparison {
    let ab = a.dominates_within(b, tol.geometry);
    let ba = b.dominates_within(a, tol.geometry);
    match (ab, ba) {
        (true, true) => Comparison::Equal,
        (true, false) => Comparison::AUpstream,
        (false, true) => Comparison::BUpstream,
        (false, false) => Comparison::Incomparable,
    }
}
