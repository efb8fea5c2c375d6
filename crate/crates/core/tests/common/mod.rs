//! Seeded generators shared by the integration test suites.
//!
//! Everything is driven by an explicit ChaCha stream so failures replay
//! exactly; no generator touches thread-local randomness.

#![allow(dead_code)]

use lorenz_lattice::distribution::DiscreteDistribution;
use lorenz_lattice::lattice::{compare, Comparison};
use lorenz_lattice::lorenz::LorenzCurve;
use lorenz_lattice::synth::{pushforward, FairKernel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn curve(d: &DiscreteDistribution) -> LorenzCurve {
    LorenzCurve::from_distribution(d).expect("mean-one by construction")
}

/// Random mean-one distribution with between 2 and `max_atoms` atoms.
pub fn random_mean_one(r: &mut ChaCha8Rng, max_atoms: usize) -> DiscreteDistribution {
    loop {
        let n = r.gen_range(2..=max_atoms.max(2));
        let masses: Vec<(f64, f64)> = (0..n)
            .map(|_| (r.gen_range(0.0..4.0), r.gen_range(0.05..1.0)))
            .collect();
        let Ok(d) = DiscreteDistribution::from_masses(&masses) else {
            continue;
        };
        let m = d.mean();
        if m < 1e-6 || d.len() < 2 {
            continue;
        }
        let scaled = d.scale(1.0 / m).expect("positive factor");
        // Canonicalize once more so values closer than the merge tolerance
        // collapse and the atoms are in the constructed normal form.
        if let Ok(canon) = DiscreteDistribution::from_pairs(scaled.atoms()) {
            if canon.len() >= 2 {
                return canon;
            }
        }
    }
}

/// Replaces random atoms by fair two-point splits, `splits` times. The
/// result has the same mean and a Lorenz curve lying below the input's.
pub fn mean_preserving_spread(
    r: &mut ChaCha8Rng,
    d: &DiscreteDistribution,
    splits: usize,
) -> DiscreteDistribution {
    let mut current = d.clone();
    for _ in 0..splits {
        let atoms = current.atoms();
        let i = r.gen_range(0..atoms.len());
        let (v, p) = atoms[i];
        if v <= 0.0 {
            continue;
        }
        let a = v * r.gen_range(0.0..0.9);
        let b = v + (v - a) * r.gen_range(0.1..1.5);
        let q_low = (b - v) / (b - a);
        if !(q_low > 0.0 && q_low < 1.0) {
            continue;
        }
        let mut pairs = atoms.to_vec();
        pairs[i] = (a, p * q_low);
        pairs.push((b, p * (1.0 - q_low)));
        if let Ok(next) = DiscreteDistribution::from_pairs(&pairs) {
            current = next;
        }
    }
    current
}

/// A strictly ordered pair: the second is reachable from the first.
pub fn comparable_pair(r: &mut ChaCha8Rng) -> (DiscreteDistribution, DiscreteDistribution) {
    let src = random_mean_one(r, 6);
    let splits = r.gen_range(1..=4);
    let tgt = mean_preserving_spread(r, &src, splits);
    (src, tgt)
}

/// Rejection-samples two mean-one distributions whose curves cross.
pub fn incomparable_pair(r: &mut ChaCha8Rng) -> (DiscreteDistribution, DiscreteDistribution) {
    loop {
        let a = random_mean_one(r, 6);
        let b = random_mean_one(r, 6);
        if compare(&curve(&a), &curve(&b)) == Comparison::Incomparable {
            return (a, b);
        }
    }
}

/// Fair kernel on the atoms of `d`: each positive value is either kept or
/// split into a fair two-point bet.
pub fn random_fair_kernel(r: &mut ChaCha8Rng, d: &DiscreteDistribution) -> FairKernel {
    let rows: Vec<(f64, DiscreteDistribution)> = d
        .atoms()
        .iter()
        .map(|&(v, _)| {
            if v > 0.0 && r.gen_bool(0.5) {
                let a = v * r.gen_range(0.0..0.9);
                let b = v + (v - a) * r.gen_range(0.1..1.5);
                let q_low = (b - v) / (b - a);
                if q_low > 0.0 && q_low < 1.0 {
                    if let Ok(row) =
                        DiscreteDistribution::from_pairs(&[(a, q_low), (b, 1.0 - q_low)])
                    {
                        if row.len() == 2 {
                            return (v, row);
                        }
                    }
                }
            }
            (v, DiscreteDistribution::point_mass(v).expect("finite value"))
        })
        .collect();
    FairKernel::from_rows(rows).expect("rows keyed by distinct atom values")
}

/// A random starting distribution plus `steps` fair kernels, each built on
/// the marginal reached so far.
pub fn random_kernel_chain(
    r: &mut ChaCha8Rng,
    steps: usize,
) -> (DiscreteDistribution, Vec<FairKernel>) {
    let d0 = random_mean_one(r, 5);
    let mut kernels = Vec::with_capacity(steps);
    let mut current = d0.clone();
    for _ in 0..steps {
        let k = random_fair_kernel(r, &current);
        current = pushforward(&current, &k).expect("kernel covers every atom");
        kernels.push(k);
    }
    (d0, kernels)
}

/// Kolmogorov distance between the CDFs of two finite distributions.
pub fn ks_distance(a: &DiscreteDistribution, b: &DiscreteDistribution) -> f64 {
    let mut values: Vec<f64> = a
        .atoms()
        .iter()
        .chain(b.atoms())
        .map(|&(v, _)| v)
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let cdf = |d: &DiscreteDistribution, t: f64| -> f64 {
        d.atoms()
            .iter()
            .take_while(|&&(v, _)| v <= t)
            .map(|&(_, p)| p)
            .sum()
    };
    values
        .into_iter()
        .map(|t| (cdf(a, t) - cdf(b, t)).abs())
        .fold(0.0, f64::max)
}
