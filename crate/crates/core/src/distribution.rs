use crate::config::Tolerances;
use serde::ser::{Serialize, SerializeSeq, SerializeStruct, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("wealth values must be nonnegative and finite, got {0}")]
    NegativeValue(f64),
    #[error("bad probability: {0}")]
    BadProbability(String),
    #[error("scale factor must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("no probability mass at or above {0}")]
    EmptyTail(f64),
}

/// A finite-support distribution over nonnegative wealth values.
///
/// Atoms are kept sorted by strictly increasing value with strictly positive
/// probabilities. Construction merges values closer than the value-merge
/// tolerance, drops exact zero-probability entries, and renormalizes the
/// probabilities so they sum to one.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
    dropped_zero_atoms: bool,
}

impl PartialEq for DiscreteDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

impl DiscreteDistribution {
    /// Builds a distribution from `(value, probability)` pairs using the
    /// default tolerances. Probabilities must sum to one within the
    /// probability tolerance.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, DistError> {
        Self::from_pairs_with(pairs, &Tolerances::default())
    }

    pub fn from_pairs_with(pairs: &[(f64, f64)], tol: &Tolerances) -> Result<Self, DistError> {
        if pairs.is_empty() {
            return Err(DistError::BadProbability("no atoms given".into()));
        }
        let mut dropped = false;
        let mut kept: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for &(v, p) in pairs {
            if !v.is_finite() || v < 0.0 {
                return Err(DistError::NegativeValue(v));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(DistError::BadProbability(format!(
                    "probability {p} for value {v} is not a finite nonnegative number"
                )));
            }
            if p == 0.0 {
                dropped = true;
            } else {
                kept.push((v, p));
            }
        }
        if kept.is_empty() {
            return Err(DistError::BadProbability(
                "every atom has zero probability".into(),
            ));
        }
        let sum: f64 = kept.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > tol.prob {
            return Err(DistError::BadProbability(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        let mut dist = Self::assemble(kept, tol);
        dist.dropped_zero_atoms = dropped;
        Ok(dist)
    }

    /// Builds a distribution from arbitrary positive masses, normalizing by
    /// their total. Useful for empirical counts and mixture accumulation.
    pub fn from_masses(masses: &[(f64, f64)]) -> Result<Self, DistError> {
        Self::from_masses_with(masses, &Tolerances::default())
    }

    pub fn from_masses_with(masses: &[(f64, f64)], tol: &Tolerances) -> Result<Self, DistError> {
        let total: f64 = masses.iter().map(|&(_, m)| m).sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(DistError::BadProbability(format!(
                "masses total {total}, expected a positive number"
            )));
        }
        let scaled: Vec<(f64, f64)> = masses.iter().map(|&(v, m)| (v, m / total)).collect();
        Self::from_pairs_with(&scaled, tol)
    }

    /// Sorts, merges near-identical values, and renormalizes exactly.
    fn assemble(mut atoms: Vec<(f64, f64)>, tol: &Tolerances) -> Self {
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if v - last.0 <= tol.value_merge => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let sum: f64 = merged.iter().map(|&(_, p)| p).sum();
        if sum != 1.0 {
            for a in merged.iter_mut() {
                a.1 /= sum;
            }
            // Nudge the largest atom so the stored probabilities sum to one
            // bit-exactly; this makes construction idempotent.
            for _ in 0..4 {
                let s: f64 = merged.iter().map(|&(_, p)| p).sum();
                if s == 1.0 {
                    break;
                }
                merged.last_mut().unwrap().1 += 1.0 - s;
            }
        }
        DiscreteDistribution {
            atoms: merged,
            dropped_zero_atoms: false,
        }
    }

    pub fn point_mass(value: f64) -> Result<Self, DistError> {
        Self::from_pairs(&[(value, 1.0)])
    }

    pub fn uniform(values: &[f64]) -> Result<Self, DistError> {
        let p = 1.0 / values.len() as f64;
        let pairs: Vec<(f64, f64)> = values.iter().map(|&v| (v, p)).collect();
        Self::from_pairs(&pairs)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when construction discarded explicit zero-probability atoms.
    pub fn had_zero_prob_atoms(&self) -> bool {
        self.dropped_zero_atoms
    }

    pub fn min_value(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn max_value(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    /// Multiplies every wealth value by `c > 0`, leaving probabilities alone.
    pub fn scale(&self, c: f64) -> Result<Self, DistError> {
        if !c.is_finite() || c <= 0.0 {
            return Err(DistError::NonPositiveScale(c));
        }
        Ok(DiscreteDistribution {
            atoms: self.atoms.iter().map(|&(v, p)| (v * c, p)).collect(),
            dropped_zero_atoms: false,
        })
    }

    /// Conditional distribution given wealth at least `t`, renormalized.
    pub fn tail_conditional(&self, t: f64) -> Result<Self, DistError> {
        self.tail_conditional_with(t, &Tolerances::default())
    }

    pub fn tail_conditional_with(&self, t: f64, tol: &Tolerances) -> Result<Self, DistError> {
        let kept: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .copied()
            .filter(|&(v, _)| v >= t - tol.value_merge)
            .collect();
        if kept.is_empty() {
            return Err(DistError::EmptyTail(t));
        }
        Self::from_masses_with(&kept, tol)
    }

    /// Largest absolute probability difference after pairing atoms whose
    /// values agree within `value_tol`. Unpaired atoms contribute their whole
    /// probability.
    pub fn prob_discrepancy(&self, other: &Self, value_tol: f64) -> f64 {
        let a = &self.atoms;
        let b = &other.atoms;
        let (mut i, mut j) = (0usize, 0usize);
        let mut worst: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let (va, pa) = a[i];
            let (vb, pb) = b[j];
            if (va - vb).abs() <= value_tol {
                worst = worst.max((pa - pb).abs());
                i += 1;
                j += 1;
            } else if va < vb {
                worst = worst.max(pa);
                i += 1;
            } else {
                worst = worst.max(pb);
                j += 1;
            }
        }
        for &(_, p) in &a[i..] {
            worst = worst.max(p);
        }
        for &(_, p) in &b[j..] {
            worst = worst.max(p);
        }
        worst
    }
}

impl Serialize for DiscreteDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        struct Atoms<'a>(&'a [(f64, f64)]);
        impl Serialize for Atoms<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
                for &(v, p) in self.0 {
                    seq.serialize_element(&[v, p])?;
                }
                seq.end()
            }
        }
        let mut s = serializer.serialize_struct("DiscreteDistribution", 1)?;
        s.serialize_field("atoms", &Atoms(&self.atoms))?;
        s.end()
    }
}
