use crate::config::Tolerances;
use crate::distribution::DiscreteDistribution;
use serde::ser::{Serialize, SerializeSeq, SerializeStruct, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LorenzError {
    #[error("distribution mean is {0}, expected 1")]
    NotMeanOne(f64),
    #[error("{0} is outside the curve domain [0, 1]")]
    OutOfDomain(f64),
    #[error("points are not convex near u = {0}")]
    NotConvex(f64),
    #[error("u coordinates must be strictly increasing near u = {0}")]
    NotMonotone(f64),
    #[error("point ({u}, {l}) violates 0 <= l <= u <= 1")]
    OutOfRange { u: f64, l: f64 },
}

/// Piecewise-linear Lorenz curve of a mean-one wealth distribution.
///
/// Breakpoints run from (0, 0) to (1, 1) with strictly increasing u and
/// nondecreasing slopes; collinear breakpoints are compacted away so each
/// segment's slope is a distinct quantile value of the underlying
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve {
    points: Vec<(f64, f64)>,
}

impl LorenzCurve {
    /// Curve of a mean-one distribution: cumulative population share against
    /// cumulative wealth share over atoms in increasing value order.
    pub fn from_distribution(d: &DiscreteDistribution) -> Result<Self, LorenzError> {
        Self::from_distribution_with(d, &Tolerances::default())
    }

    pub fn from_distribution_with(
        d: &DiscreteDistribution,
        tol: &Tolerances,
    ) -> Result<Self, LorenzError> {
        let mean = d.mean();
        if (mean - 1.0).abs() > tol.prob {
            return Err(LorenzError::NotMeanOne(mean));
        }
        let mut pts = Vec::with_capacity(d.len() + 1);
        pts.push((0.0, 0.0));
        let (mut cu, mut cl) = (0.0, 0.0);
        for &(v, p) in d.atoms() {
            cu += p;
            cl += p * v;
            pts.push((cu, cl));
        }
        Ok(Self::assemble(pts, tol))
    }

    /// Curve through hand-specified interior points, augmented with the (0, 0)
    /// and (1, 1) anchors. Points must have increasing u, satisfy
    /// 0 <= l <= u, and form a convex sequence.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, LorenzError> {
        Self::from_points_with(points, &Tolerances::default())
    }

    pub fn from_points_with(points: &[(f64, f64)], tol: &Tolerances) -> Result<Self, LorenzError> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 2);
        pts.push((0.0, 0.0));
        for &(u, l) in points {
            if !u.is_finite()
                || !l.is_finite()
                || u < -tol.geometry
                || u > 1.0 + tol.geometry
                || l < -tol.geometry
                || l > u + tol.geometry
            {
                return Err(LorenzError::OutOfRange { u, l });
            }
            if u <= tol.geometry || u >= 1.0 - tol.geometry {
                // An explicit anchor: it must agree with the implied one.
                let anchor = if u <= tol.geometry { 0.0 } else { 1.0 };
                if (l - anchor).abs() > tol.geometry {
                    return Err(LorenzError::OutOfRange { u, l });
                }
                continue;
            }
            pts.push((u, l));
        }
        pts.push((1.0, 1.0));
        for i in 1..pts.len() {
            if pts[i].0 - pts[i - 1].0 <= 0.0 {
                return Err(LorenzError::NotMonotone(pts[i].0));
            }
        }
        for w in pts.windows(3) {
            if cross(w[0], w[1], w[2]) < -tol.geometry {
                return Err(LorenzError::NotConvex(w[1].0));
            }
        }
        Ok(Self::assemble(pts, tol))
    }

    /// Canonical form for a sorted breakpoint sequence that is already known
    /// to describe a valid curve up to roundoff: anchors are snapped exactly,
    /// wealth shares are clamped into [0, u], and collinear runs collapse.
    pub(crate) fn assemble(mut pts: Vec<(f64, f64)>, tol: &Tolerances) -> Self {
        let n = pts.len();
        pts[0] = (0.0, 0.0);
        pts[n - 1] = (1.0, 1.0);
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(n);
        for (u, l) in pts {
            let l = l.clamp(0.0, u);
            if let Some(&(pu, _)) = dedup.last() {
                if u - pu <= tol.geometry {
                    if u == 1.0 {
                        // The forced final anchor wins over a nearby point.
                        dedup.pop();
                    } else {
                        continue;
                    }
                }
            }
            dedup.push((u, l));
        }
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(dedup.len());
        for p in dedup {
            while out.len() >= 2 {
                let a = out[out.len() - 2];
                let b = out[out.len() - 1];
                // Dropping b replaces it by the chord from a to p; the cross
                // product divided by the chord's width is b's vertical
                // distance from that chord, which is what must stay small.
                if cross(a, b, p).abs() <= tol.geometry * (p.0 - a.0) {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(p);
        }
        debug_assert!(out.len() >= 2);
        LorenzCurve { points: out }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation at `u`; exact at breakpoints.
    pub fn evaluate(&self, u: f64) -> Result<f64, LorenzError> {
        self.evaluate_with(u, &Tolerances::default())
    }

    pub fn evaluate_with(&self, u: f64, tol: &Tolerances) -> Result<f64, LorenzError> {
        if !u.is_finite() || u < -tol.geometry || u > 1.0 + tol.geometry {
            return Err(LorenzError::OutOfDomain(u));
        }
        Ok(self.eval_clamped(u))
    }

    pub(crate) fn eval_clamped(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let idx = self.points.partition_point(|p| p.0 < u);
        if idx == 0 {
            return 0.0;
        }
        let (u1, l1) = self.points[idx];
        if u1 == u {
            return l1;
        }
        let (u0, l0) = self.points[idx - 1];
        l0 + (u - u0) * (l1 - l0) / (u1 - u0)
    }

    /// Recovers the distribution: one atom per maximal constant-slope run,
    /// with value the slope and probability the run's width.
    pub fn to_distribution(&self) -> DiscreteDistribution {
        let pairs: Vec<(f64, f64)> = self
            .points
            .windows(2)
            .map(|w| {
                let (u0, l0) = w[0];
                let (u1, l1) = w[1];
                (((l1 - l0) / (u1 - u0)).max(0.0), u1 - u0)
            })
            .collect();
        DiscreteDistribution::from_masses(&pairs)
            .expect("a valid Lorenz curve always yields a valid distribution")
    }

    /// True when this curve lies on or above `other` everywhere, meaning the
    /// other distribution is reachable from this one by fair gambles.
    pub fn dominates(&self, other: &LorenzCurve) -> bool {
        self.dominates_within(other, Tolerances::default().geometry)
    }

    /// Dominance with an explicit slack: checks `self >= other - slack` at
    /// every breakpoint of either curve, which suffices for piecewise-linear
    /// curves.
    pub fn dominates_within(&self, other: &LorenzCurve, slack: f64) -> bool {
        for &u in merged_grid(self, other).iter() {
            if self.eval_clamped(u) < other.eval_clamped(u) - slack {
                return false;
            }
        }
        true
    }

    /// Gini index 1 - 2 * integral of the curve (trapezoid rule is exact for
    /// piecewise-linear curves).
    pub fn gini(&self) -> f64 {
        let integral: f64 = self
            .points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum();
        1.0 - 2.0 * integral
    }

    /// Componentwise comparison of compacted breakpoint sequences.
    pub fn approx_eq(&self, other: &LorenzCurve, tol: f64) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(other.points.iter())
                .all(|(a, b)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol)
    }
}

fn cross(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Union of both curves' breakpoint abscissas, deduplicated.
pub(crate) fn merged_grid(a: &LorenzCurve, b: &LorenzCurve) -> Vec<f64> {
    let (pa, pb) = (a.breakpoints(), b.breakpoints());
    let mut out = Vec::with_capacity(pa.len() + pb.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < pa.len() || j < pb.len() {
        let next = match (pa.get(i), pb.get(j)) {
            (Some(&(ua, _)), Some(&(ub, _))) => {
                if ua <= ub {
                    i += 1;
                    ua
                } else {
                    j += 1;
                    ub
                }
            }
            (Some(&(ua, _)), None) => {
                i += 1;
                ua
            }
            (None, Some(&(ub, _))) => {
                j += 1;
                ub
            }
            (None, None) => break,
        };
        if out.last().map_or(true, |&last: &f64| next - last > 1e-15) {
            out.push(next);
        }
    }
    out
}

impl Serialize for LorenzCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Points<'a>(&'a [(f64, f64)]);
        impl Serialize for Points<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
                for &(u, l) in self.0 {
                    seq.serialize_element(&[u, l])?;
                }
                seq.end()
            }
        }
        let mut s = serializer.serialize_struct("LorenzCurve", 1)?;
        s.serialize_field("breakpoints", &Points(&self.points))?;
        s.end()
    }
}
