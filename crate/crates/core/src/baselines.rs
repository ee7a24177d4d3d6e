//! Verification baselines: exact dense convolution and Monte Carlo.
//!
//! These exist to check the estimator, not to compete with it. The
//! convolution oracle is exact rational arithmetic over a dense array and is
//! deliberately guarded against large instances; the Monte-Carlo estimator is
//! the classic additive-error baseline whose failure on rare events motivates
//! the multiplicative scheme.

use num::{BigRational, One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::{DiscreteDistribution, NormalizedInstance};
use crate::engine::ExtValue;
use crate::error::{Error, Result};

/// Default ceiling on dense-convolution size (`n * (C' + 1)` cells).
pub const DEFAULT_MAX_EXACT_CELLS: u64 = 10_000_000;

/// Dense exact PMF of a partial sum, indexed `0..=max`.
#[derive(Clone, Debug)]
pub struct ExactPmf {
    masses: Vec<BigRational>,
}

impl ExactPmf {
    fn point_zero() -> Self {
        Self {
            masses: vec![BigRational::one()],
        }
    }

    fn convolve(&self, dist: &DiscreteDistribution) -> Self {
        debug_assert!(dist.min_value() >= 0);
        let len = self.masses.len() + dist.max_value() as usize;
        let mut masses = vec![BigRational::zero(); len];
        for (i, m) in self.masses.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            for (v, p) in dist.points() {
                masses[i + *v as usize] += m * p;
            }
        }
        Self { masses }
    }

    pub fn masses(&self) -> &[BigRational] {
        &self.masses
    }

    /// `Pr[S <= t]`.
    pub fn cdf(&self, t: i64) -> BigRational {
        if t < 0 {
            return BigRational::zero();
        }
        let hi = (t as usize + 1).min(self.masses.len());
        self.masses[..hi].iter().sum()
    }

    /// Inverse CDF: least `c >= 0` with `Pr[S <= c] >= a`, with the
    /// conventions `tau(0) = -inf` and `tau(a > 1) = +inf`. A linear scan is
    /// plenty at baseline scale.
    pub fn tau(&self, a: &BigRational) -> ExtValue {
        if a.is_zero() {
            return ExtValue::NegInf;
        }
        if *a > BigRational::one() {
            return ExtValue::PosInf;
        }
        let mut acc = BigRational::zero();
        for (c, m) in self.masses.iter().enumerate() {
            acc += m;
            if acc >= *a {
                return ExtValue::Fin(c as i64);
            }
        }
        // The masses sum to exactly 1 >= a, so the scan always lands above.
        unreachable!("CDF never reached {a}")
    }
}

/// Exact partial-sum PMFs `f_i` for `i = 1..=n`, computed once per instance.
pub struct ExactSums {
    pmfs: Vec<ExactPmf>,
}

impl ExactSums {
    /// Convolves the normalized distributions, refusing instances whose
    /// dense size `n * (C' + 1)` exceeds `max_cells`.
    pub fn new(instance: &NormalizedInstance, max_cells: u64) -> Result<Self> {
        let n = instance.n() as u128;
        let span = (instance.threshold().max(0) as u128) + 1;
        let cells = n * span;
        if cells > max_cells as u128 {
            return Err(Error::SizeGuard {
                cells,
                limit: max_cells,
            });
        }
        let mut pmfs = Vec::with_capacity(instance.n());
        let mut acc = ExactPmf::point_zero();
        for dist in instance.distributions() {
            acc = acc.convolve(dist);
            pmfs.push(acc.clone());
        }
        Ok(Self { pmfs })
    }

    /// PMF of `X_1 + ... + X_i` (`i` is 1-based).
    pub fn pmf(&self, i: usize) -> &ExactPmf {
        &self.pmfs[i - 1]
    }

    pub fn probability(&self, i: usize, threshold: i64) -> BigRational {
        self.pmf(i).cdf(threshold)
    }

    pub fn tau(&self, i: usize, a: &BigRational) -> ExtValue {
        self.pmf(i).tau(a)
    }
}

/// Ground-truth `F(threshold) = Pr[sum <= threshold]` by exact dense
/// convolution.
pub fn exact_probability(
    instance: &NormalizedInstance,
    threshold: i64,
    max_cells: u64,
) -> Result<BigRational> {
    Ok(ExactSums::new(instance, max_cells)?.probability(instance.n(), threshold))
}

/// Exact inverse CDF of the partial sum `X_1 + ... + X_i`.
pub fn exact_tau(
    instance: &NormalizedInstance,
    i: usize,
    a: &BigRational,
    max_cells: u64,
) -> Result<ExtValue> {
    assert!(i >= 1 && i <= instance.n(), "partial-sum index out of range");
    Ok(ExactSums::new(instance, max_cells)?.tau(i, a))
}

/// Monte-Carlo estimate with its Hoeffding confidence radius.
#[derive(Clone, Debug)]
pub struct McReport {
    pub estimate: f64,
    pub hits: u64,
    pub samples: u64,
    /// Hoeffding radius `sqrt(ln(2/delta) / (2K))`.
    pub radius: f64,
    /// Failure probability the radius is computed for.
    pub confidence_delta: f64,
    pub seed: u64,
    pub threshold: i64,
}

/// Samples are drawn in fixed-size shards, each from its own
/// deterministically derived generator, so the aggregate is reproducible for
/// a given seed no matter how shards are scheduled.
const MC_SHARD: u64 = 65_536;

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    // splitmix64 of (seed, shard): decorrelates shard streams.
    let mut z = seed ^ shard.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Unbiased estimate of `Pr[sum <= threshold]` from `samples` draws.
pub fn monte_carlo(
    instance: &NormalizedInstance,
    threshold: i64,
    samples: u64,
    seed: u64,
    confidence_delta: f64,
) -> Result<McReport> {
    if samples < 1 {
        return Err(Error::Parameter("sample count must be >= 1".into()));
    }
    if !(confidence_delta > 0.0 && confidence_delta < 1.0) {
        return Err(Error::Parameter("confidence delta must be in (0,1)".into()));
    }
    let dists = instance.distributions();
    let mut hits: u64 = 0;
    let shards = samples.div_ceil(MC_SHARD);
    for shard in 0..shards {
        let mut rng = shard_rng(seed, shard);
        let in_shard = MC_SHARD.min(samples - shard * MC_SHARD);
        for _ in 0..in_shard {
            let total: i64 = dists.iter().map(|d| d.sample(&mut rng)).sum();
            if total <= threshold {
                hits += 1;
            }
        }
    }
    let estimate = hits as f64 / samples as f64;
    let radius = ((2.0 / confidence_delta).ln() / (2.0 * samples as f64)).sqrt();
    Ok(McReport {
        estimate,
        hits,
        samples,
        radius,
        confidence_delta,
        seed,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::normalize;
    use num::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn die() -> DiscreteDistribution {
        DiscreteDistribution::from_triples(&(1..=6).map(|v| (v, 1, 6)).collect::<Vec<_>>())
            .unwrap()
    }

    fn coin() -> DiscreteDistribution {
        DiscreteDistribution::from_triples(&[(0, 1, 2), (1, 1, 2)]).unwrap()
    }

    /// Independent oracle: enumerate the full product of supports.
    fn enumerate_probability(dists: &[DiscreteDistribution], c: i64) -> BigRational {
        let mut acc = vec![(0i64, BigRational::one())];
        for d in dists {
            let mut next = Vec::new();
            for (sum, p) in &acc {
                for (v, m) in d.points() {
                    next.push((sum + v, p * m));
                }
            }
            acc = next;
        }
        acc.into_iter()
            .filter(|(s, _)| *s <= c)
            .map(|(_, p)| p)
            .sum()
    }

    #[test]
    fn two_dice_seven_twelfths() {
        let inst = normalize(vec![die(), die()], 7).unwrap();
        let p = exact_probability(&inst, inst.threshold(), DEFAULT_MAX_EXACT_CELLS).unwrap();
        assert_eq!(p, rat(7, 12));
        assert_eq!(enumerate_probability(&[die(), die()], 7), rat(7, 12));
    }

    #[test]
    fn bernoulli_tail_is_a_power_of_two() {
        for n in 1..8 {
            let inst = normalize(vec![coin(); n], 0).unwrap();
            let p = exact_probability(&inst, 0, DEFAULT_MAX_EXACT_CELLS).unwrap();
            assert_eq!(p, BigRational::new(BigInt::one(), BigInt::one() << n));
        }
    }

    #[test]
    fn threshold_at_max_support_gives_one() {
        let inst = normalize(vec![die()], 9).unwrap();
        assert!(
            exact_probability(&inst, inst.threshold(), DEFAULT_MAX_EXACT_CELLS)
                .unwrap()
                .is_one()
        );
    }

    #[test]
    fn tau_boundary_conventions() {
        let inst = normalize(vec![coin(), coin()], 2).unwrap();
        assert_eq!(
            exact_tau(&inst, 2, &rat(0, 1), DEFAULT_MAX_EXACT_CELLS).unwrap(),
            ExtValue::NegInf
        );
        assert_eq!(
            exact_tau(&inst, 2, &rat(3, 2), DEFAULT_MAX_EXACT_CELLS).unwrap(),
            ExtValue::PosInf
        );
        // sum CDF is {0: 1/4, 1: 3/4, 2: 1}
        assert_eq!(
            exact_tau(&inst, 2, &rat(1, 2), DEFAULT_MAX_EXACT_CELLS).unwrap(),
            ExtValue::Fin(1)
        );
    }

    #[test]
    fn tau_inverts_the_cdf() {
        let inst = normalize(vec![coin(), die()], 7).unwrap();
        let sums = ExactSums::new(&inst, DEFAULT_MAX_EXACT_CELLS).unwrap();
        let n = inst.n();
        for num in 1..=20i64 {
            let a = rat(num, 20);
            match sums.tau(n, &a) {
                ExtValue::Fin(c) => {
                    assert!(sums.probability(n, c) >= a);
                    assert!(sums.probability(n, c - 1) < a);
                }
                other => panic!("tau({a}) = {other:?}"),
            }
        }
    }

    #[test]
    fn convolution_is_permutation_invariant() {
        let a = vec![coin(), die()];
        let b = vec![die(), coin()];
        for c in 0..8 {
            let pa = exact_probability(&normalize(a.clone(), c).unwrap(), c, 1 << 20).unwrap();
            let pb = exact_probability(&normalize(b.clone(), c).unwrap(), c, 1 << 20).unwrap();
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn cdf_and_complement_sum_to_one() {
        let inst = normalize(vec![coin(), coin(), die()], 4).unwrap();
        let sums = ExactSums::new(&inst, 1 << 20).unwrap();
        let pmf = sums.pmf(inst.n());
        let below = pmf.cdf(inst.threshold());
        let above: BigRational = pmf
            .masses()
            .iter()
            .enumerate()
            .filter(|(c, _)| *c as i64 > inst.threshold())
            .map(|(_, m)| m)
            .sum();
        assert!((below + above).is_one());
    }

    #[test]
    fn size_guard_refuses_large_instances() {
        let inst = normalize(vec![die(); 4], 20).unwrap();
        match exact_probability(&inst, 20, 8) {
            Err(Error::SizeGuard { cells, limit }) => {
                assert!(cells > 8);
                assert_eq!(limit, 8);
            }
            other => panic!("expected size guard, got {other:?}"),
        }
    }

    #[test]
    fn mc_is_exact_on_deterministic_sums() {
        let inst = normalize(vec![DiscreteDistribution::from_triples(&[(3, 1, 1)]).unwrap()], 5)
            .unwrap();
        let hit = monte_carlo(&inst, inst.threshold(), 1000, 7, 1e-3).unwrap();
        assert_eq!(hit.estimate, 1.0);
        // the normalized sum is the constant 0, so any negative threshold misses
        let miss = monte_carlo(&inst, -1, 1000, 7, 1e-3).unwrap();
        assert_eq!(miss.estimate, 0.0);
    }

    #[test]
    fn mc_two_coins_lands_inside_the_hoeffding_radius() {
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let rep = monte_carlo(&inst, 1, 100_000, 42, 1e-3).unwrap();
        assert!((rep.radius - 0.0061648).abs() < 1e-6, "radius {}", rep.radius);
        assert!((rep.estimate - 0.75).abs() <= rep.radius, "estimate {}", rep.estimate);
    }

    #[test]
    fn mc_is_seed_reproducible_across_shard_boundaries() {
        let inst = normalize(vec![coin(); 3], 1).unwrap();
        let k = MC_SHARD + 12_345; // force a partial trailing shard
        let a = monte_carlo(&inst, 1, k, 9, 1e-2).unwrap();
        let b = monte_carlo(&inst, 1, k, 9, 1e-2).unwrap();
        assert_eq!(a.hits, b.hits);
        let c = monte_carlo(&inst, 1, k, 10, 1e-2).unwrap();
        assert_ne!(a.hits, c.hits, "different seeds should differ");
    }

    #[test]
    fn rare_event_defeats_mc() {
        let inst = normalize(vec![coin(); 40], 0).unwrap();
        let rep = monte_carlo(&inst, 0, 100_000, 1, 1e-3).unwrap();
        assert_eq!(rep.estimate, 0.0, "2^-40 event should never be sampled");
    }
}
