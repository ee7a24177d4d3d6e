//! Discrete integer distributions, interval-probability oracles and instance
//! normalization.
//!
//! The estimator never reads a probability mass function directly: every
//! distribution sits behind a [`DistributionOracle`] answering
//! `Pr[n1 <= X <= n2]` queries, optionally truncated to a fixed number of
//! binary digits. Normalization shifts each variable so its minimum is zero,
//! folds mass beyond the threshold onto a single point, and detects the two
//! trivial outcomes up front.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::truncate_dyadic;

/// Values this crate accepts for support points and thresholds.
///
/// Keeping inputs inside `|v| <= 2^40` means every derived quantity
/// (shifted supports, `n * (C' + 1)` search bounds, segment endpoints) fits
/// an `i64` with room to spare, so no later arithmetic can overflow.
pub const MAX_ABS_VALUE: i64 = 1 << 40;

/// A finite integer-support probability mass function with exact rational
/// masses and precomputed prefix sums.
#[derive(Clone, Debug)]
pub struct DiscreteDistribution {
    /// Strictly increasing support values with their (positive) masses.
    points: Vec<(i64, BigRational)>,
    /// prefix[k] = sum of masses[0..=k]; the last entry is exactly 1.
    prefix: Vec<BigRational>,
    /// f64 prefix sums for inverse-CDF sampling.
    prefix_f64: Vec<f64>,
}

impl PartialEq for DiscreteDistribution {
    fn eq(&self, other: &Self) -> bool {
        // prefix and prefix_f64 are derived from points
        self.points == other.points
    }
}

impl Eq for DiscreteDistribution {}

impl DiscreteDistribution {
    /// Validates and builds a distribution.
    ///
    /// Support values must be strictly increasing, every mass strictly
    /// positive (zero-mass points are rejected rather than dropped, so the
    /// "0 in support implies positive mass at 0" reasoning downstream stays
    /// airtight), and the masses must sum to exactly 1.
    pub fn new(points: Vec<(i64, BigRational)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut prefix = Vec::with_capacity(points.len());
        let mut acc = BigRational::zero();
        let mut prev: Option<i64> = None;
        for (value, mass) in &points {
            if value.unsigned_abs() > MAX_ABS_VALUE as u64 {
                return Err(Error::InvalidDistribution(format!(
                    "support value {value} outside +-{MAX_ABS_VALUE}"
                )));
            }
            if let Some(p) = prev {
                if *value <= p {
                    return Err(Error::InvalidDistribution(format!(
                        "support values not strictly increasing at {value}"
                    )));
                }
            }
            prev = Some(*value);
            if !mass.is_positive() {
                return Err(Error::InvalidDistribution(format!(
                    "nonpositive mass at value {value}"
                )));
            }
            acc += mass;
            prefix.push(acc.clone());
        }
        if !acc.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {acc}, not 1"
            )));
        }
        let mut running = 0.0f64;
        let prefix_f64 = points
            .iter()
            .map(|(_, m)| {
                running += rational_to_f64(m);
                running
            })
            .collect();
        Ok(Self {
            points,
            prefix,
            prefix_f64,
        })
    }

    /// Convenience constructor from `(value, numerator, denominator)` triples.
    pub fn from_triples(triples: &[(i64, i64, i64)]) -> Result<Self> {
        Self::new(
            triples
                .iter()
                .map(|&(v, n, d)| (v, BigRational::new(BigInt::from(n), BigInt::from(d))))
                .collect(),
        )
    }

    pub fn points(&self) -> &[(i64, BigRational)] {
        &self.points
    }

    pub fn min_value(&self) -> i64 {
        self.points[0].0
    }

    pub fn max_value(&self) -> i64 {
        self.points[self.points.len() - 1].0
    }

    /// Mass at exactly `v` (zero off support).
    pub fn mass_at(&self, v: i64) -> BigRational {
        match self.points.binary_search_by_key(&v, |(x, _)| *x) {
            Ok(k) => self.points[k].1.clone(),
            Err(_) => BigRational::zero(),
        }
    }

    /// `Pr[X <= v]` from the prefix sums.
    pub fn cdf(&self, v: i64) -> BigRational {
        match self.points.binary_search_by_key(&v, |(x, _)| *x) {
            Ok(k) => self.prefix[k].clone(),
            Err(0) => BigRational::zero(),
            Err(k) => self.prefix[k - 1].clone(),
        }
    }

    /// Shifts every support value by `delta`.
    fn shifted(&self, delta: i64) -> Self {
        let points = self
            .points
            .iter()
            .map(|(v, m)| (v + delta, m.clone()))
            .collect();
        Self {
            points,
            prefix: self.prefix.clone(),
            prefix_f64: self.prefix_f64.clone(),
        }
    }

    /// Folds all mass above `cap` onto the single point `cap + 1`.
    fn clamped_above(&self, cap: i64) -> Self {
        if self.max_value() <= cap {
            return self.clone();
        }
        let mut points: Vec<(i64, BigRational)> = Vec::new();
        let mut overflow = BigRational::zero();
        for (v, m) in &self.points {
            if *v <= cap {
                points.push((*v, m.clone()));
            } else {
                overflow += m;
            }
        }
        points.push((cap + 1, overflow));
        Self::new(points).expect("clamping preserves validity")
    }

    /// Draws one support value by inverse-CDF lookup on a uniform variate.
    ///
    /// Deterministic for a fixed generator state. The lookup runs on f64
    /// prefix sums; sampling feeds the Monte-Carlo baseline only, never a
    /// certified path.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen();
        let k = self.prefix_f64.partition_point(|p| *p <= u);
        self.points[k.min(self.points.len() - 1)].0
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(0.0)
}

/// Draws one value from `dist` using `rng`; the free-function spelling of
/// [`DiscreteDistribution::sample`].
pub fn sample<R: Rng + ?Sized>(dist: &DiscreteDistribution, rng: &mut R) -> i64 {
    dist.sample(rng)
}

#[derive(Clone, Debug)]
enum Backing {
    Explicit(Arc<DiscreteDistribution>),
    Truncated {
        inner: Box<DistributionOracle>,
        bits: u64,
    },
}

/// Interval-probability oracle: `query(n1, n2) = Pr[n1 <= X <= n2]`.
///
/// Exact oracles answer from prefix sums in `O(log |support|)`; truncating
/// wrappers round every answer down to the `2^-L` grid. Each query bumps an
/// atomic call counter so cost accounting works under concurrent use.
#[derive(Debug)]
pub struct DistributionOracle {
    backing: Backing,
    calls: AtomicU64,
}

impl Clone for DistributionOracle {
    /// Clones the backing; the clone starts with a fresh call counter.
    fn clone(&self) -> Self {
        Self {
            backing: self.backing.clone(),
            calls: AtomicU64::new(0),
        }
    }
}

impl DistributionOracle {
    fn from_backing(backing: Backing) -> Self {
        Self {
            backing,
            calls: AtomicU64::new(0),
        }
    }

    /// Builds an exact oracle over an explicit distribution.
    pub fn explicit(dist: Arc<DiscreteDistribution>) -> Self {
        Self::from_backing(Backing::Explicit(dist))
    }

    /// Queries `Pr[n1 <= X <= n2]`, applying this oracle's truncation if any.
    /// Inverted intervals (`n1 > n2`) answer zero.
    pub fn query(&self, n1: i64, n2: i64) -> BigRational {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.answer(n1, n2)
    }

    /// Queries at an explicit precision: the exact answer rounded down to a
    /// multiple of `2^-bits` (`bits = 0` keeps only the integer part, which
    /// distinguishes exactly the answer 1 from everything below it).
    pub fn query_bits(&self, n1: i64, n2: i64, bits: u64) -> BigRational {
        self.calls.fetch_add(1, Ordering::Relaxed);
        truncate_dyadic(&self.answer(n1, n2), bits)
    }

    fn answer(&self, n1: i64, n2: i64) -> BigRational {
        if n1 > n2 {
            return BigRational::zero();
        }
        match &self.backing {
            Backing::Explicit(dist) => {
                // Largest support value <= n2 minus everything below n1.
                let hi = dist.cdf(n2);
                let lo = if n1 <= dist.min_value() {
                    BigRational::zero()
                } else {
                    dist.cdf(n1 - 1)
                };
                hi - lo
            }
            Backing::Truncated { inner, bits } => {
                truncate_dyadic(&inner.query(n1, n2), *bits)
            }
        }
    }

    /// Number of queries answered by this oracle (wrappers count their own
    /// queries; the wrapped oracle counts pass-throughs).
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// The fixed truncation precision, if this oracle is a truncating
    /// wrapper.
    pub fn precision(&self) -> Option<u64> {
        match &self.backing {
            Backing::Explicit(_) => None,
            Backing::Truncated { bits, .. } => Some(*bits),
        }
    }
}

/// Builds an exact oracle from an explicit distribution.
pub fn explicit_oracle(dist: DiscreteDistribution) -> DistributionOracle {
    DistributionOracle::explicit(Arc::new(dist))
}

/// Wraps an oracle so every answer is truncated to `L` fractional bits.
///
/// The truncation error lands in `[0, 2^-L) ⊂ [0, 2^(-L+1))`; exact 0 and
/// exact 1 pass through unchanged. Truncation is toward zero, also for
/// answers already on the grid.
pub fn truncated_oracle(inner: &DistributionOracle, bits: u64) -> Result<DistributionOracle> {
    if bits < 1 {
        return Err(Error::Parameter("oracle precision L must be >= 1".into()));
    }
    Ok(DistributionOracle::from_backing(Backing::Truncated {
        inner: Box::new(inner.clone()),
        bits,
    }))
}

/// The two outcomes decidable during normalization without running anything.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TrivialAnswer {
    /// The threshold is below the smallest possible sum: F(C) = 0.
    Zero,
    /// Every possible sum is within the threshold: F(C) = 1.
    One,
}

/// A problem instance in canonical form: nonnegative supports containing 0,
/// supports folded into `[0, C' + 1]`, and the grid driver
/// `delta = prod_i Pr[X_i = 0]` precomputed.
#[derive(Debug)]
pub struct NormalizedInstance {
    oracles: Vec<DistributionOracle>,
    distributions: Vec<Arc<DiscreteDistribution>>,
    threshold: i64,
    shift_total: i64,
    delta: BigRational,
    trivial_answer: Option<TrivialAnswer>,
}

impl NormalizedInstance {
    pub fn n(&self) -> usize {
        self.oracles.len()
    }

    pub fn oracles(&self) -> &[DistributionOracle] {
        &self.oracles
    }

    /// The normalized (shifted, clamped) distributions behind the oracles.
    pub fn distributions(&self) -> &[Arc<DiscreteDistribution>] {
        &self.distributions
    }

    /// The shifted threshold `C' = C - sum_i min X_i`.
    pub fn threshold(&self) -> i64 {
        self.threshold
    }

    pub fn shift_total(&self) -> i64 {
        self.shift_total
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn trivial_answer(&self) -> Option<TrivialAnswer> {
        self.trivial_answer
    }

    /// Total queries answered so far across this instance's oracles.
    pub fn oracle_calls(&self) -> u64 {
        self.oracles.iter().map(|o| o.call_count()).sum()
    }
}

/// Shifts each distribution so its minimum is 0, folds mass above the
/// shifted threshold `C'` onto `C' + 1`, computes `delta`, and flags the
/// trivial outcomes.
///
/// The all-sums-fit check runs before clamping, so a certain answer of 1 is
/// reported as such instead of surfacing as an estimate that would need
/// capping.
pub fn normalize(raw: Vec<DiscreteDistribution>, threshold: i64) -> Result<NormalizedInstance> {
    if raw.is_empty() {
        return Err(Error::EmptyInstance);
    }
    if threshold.unsigned_abs() > MAX_ABS_VALUE as u64 {
        return Err(Error::Parameter(format!(
            "threshold {threshold} outside +-{MAX_ABS_VALUE}"
        )));
    }
    let shift_total: i64 = raw.iter().map(|d| d.min_value()).sum();
    let c_prime = threshold - shift_total;

    let shifted: Vec<DiscreteDistribution> =
        raw.iter().map(|d| d.shifted(-d.min_value())).collect();
    let delta: BigRational = shifted
        .iter()
        .map(|d| d.mass_at(0))
        .product();
    debug_assert!(delta.is_positive());

    let trivial_answer = if c_prime < 0 {
        Some(TrivialAnswer::Zero)
    } else {
        let max_sum: i64 = shifted.iter().map(|d| d.max_value()).sum();
        if max_sum <= c_prime {
            Some(TrivialAnswer::One)
        } else {
            None
        }
    };

    // Clamp only when the instance will actually be estimated; a trivial
    // instance keeps its shifted supports (the clamp target C' + 1 is not
    // even a valid value when C' < 0).
    let finalized: Vec<Arc<DiscreteDistribution>> = shifted
        .into_iter()
        .map(|d| {
            Arc::new(if trivial_answer.is_none() {
                d.clamped_above(c_prime)
            } else {
                d
            })
        })
        .collect();
    let oracles = finalized
        .iter()
        .map(|d| DistributionOracle::explicit(Arc::clone(d)))
        .collect();
    Ok(NormalizedInstance {
        oracles,
        distributions: finalized,
        threshold: c_prime,
        shift_total,
        delta,
        trivial_answer,
    })
}

/// Upper bound on `log2(1/delta)` obtained through the oracles alone.
///
/// For each oracle the probe asks for `Pr[X_i = 0]` at growing precision
/// until the answer shows a nonzero bit; at precision `l` the answer grid is
/// `2^-(l-1)`, so the loop stops at `l_i = ceil(-log2 Pr[X_i = 0]) + 1` and
/// the sum of the stopping precisions dominates `log2(1/delta)`.
pub fn estimate_log_delta(oracles: &[DistributionOracle]) -> Result<u64> {
    let mut total: u64 = 0;
    for oracle in oracles {
        let exact = oracle.query(0, 0);
        if exact.is_zero() {
            return Err(Error::Parameter(
                "oracle has zero mass at 0; instance is not normalized".into(),
            ));
        }
        let mut l: u64 = 1;
        loop {
            if !oracle.query_bits(0, 0, l - 1).is_zero() {
                break;
            }
            l += 1;
        }
        total += l;
    }
    Ok(total)
}
