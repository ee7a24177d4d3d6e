//! The discretized dynamic program behind the estimator.
//!
//! The quantile grid is `Q^-j` for `j = 0..=s` with `Q` just above 1. Row 1
//! inverts the first CDF directly; each later row is filled by a binary
//! search over the value range `[0, n(C'+1)]`, where feasibility of a guess
//! is decided from at most `s + 2` interval-oracle queries: the previous row
//! splits the integers into segments on which the feasibility weight of a
//! point is the constant `Q^(j-m)`, so only segment masses are needed.
//!
//! All comparisons reduce to integer inequalities of the form
//! `sum_m N_m * W_m >= D * W_j` with `W_k = u^(s+1-k) * v^k` (`Q = u/v`).
//! They are first attempted on certified magnitude enclosures and fall back
//! to exact big-integer arithmetic only when the enclosures overlap — which
//! is also what makes exact ties (`Z = Q^(s+1)`) come out inclusive, as the
//! recurrence requires.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num::{BigInt, BigRational, Integer, One, Signed, Zero};
use rayon::prelude::*;

use crate::distributions::{
    estimate_log_delta, truncated_oracle, DistributionOracle, NormalizedInstance,
};
use crate::error::{Error, Result};
use crate::magnitude::{certified_ge, Bounds};
use crate::rational::{ceil_log2, ceil_log_q, pow2_inv, truncate_dyadic};

/// An integer extended with the two infinities (ordered).
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtValue {
    NegInf,
    Fin(i64),
    PosInf,
}

/// A grid index extended with `+inf` (the lookup argument domain).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ExtIndex {
    Fin(i64),
    PosInf,
}

/// Arithmetic regime a report was produced under.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ArithmeticMode {
    /// Exact rationals end to end; the certificate is unconditional.
    ExactRational,
    /// Finite-precision oracles (truncated answers), certified by the
    /// widened-parameter analysis.
    Bit,
    /// Best-effort magnitude arithmetic without the exact fallback. Fast,
    /// deterministic, uncertified.
    Float,
}

impl ArithmeticMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithmeticMode::ExactRational => "exact-rational",
            ArithmeticMode::Bit => "bit",
            ArithmeticMode::Float => "float",
        }
    }
}

#[derive(Copy, Clone)]
enum Resolve {
    /// Overlapping enclosures fall back to exact integers.
    Certified,
    /// Overlapping enclosures are decided from the lower bounds.
    BestEffort,
}

/// Scaled powers `W_k = u^(s+1-k) * v^k` for `k in 0..=s+1`.
///
/// Only magnitude enclosures are kept resident; exact values are recomputed
/// (and memoized) on the rare fallback path.
struct WeightTable {
    u: BigInt,
    v: BigInt,
    s: usize,
    bounds: Vec<Bounds>,
    exact_memo: Mutex<HashMap<usize, Arc<BigInt>>>,
}

impl WeightTable {
    fn new(u: BigInt, v: BigInt, s: usize) -> Self {
        let mut bounds = Vec::with_capacity(s + 2);
        let mut cur = Bounds::from_biguint(u.pow(s as u32 + 1).magnitude());
        let ub = Bounds::from_biguint(u.magnitude());
        let vb = Bounds::from_biguint(v.magnitude());
        bounds.push(cur);
        for _ in 0..=s {
            cur = cur.mul(&vb).div(&ub);
            bounds.push(cur);
        }
        Self {
            u,
            v,
            s,
            bounds,
            exact_memo: Mutex::new(HashMap::new()),
        }
    }

    fn bounds(&self, k: usize) -> &Bounds {
        &self.bounds[k]
    }

    fn exact(&self, k: usize) -> Arc<BigInt> {
        if let Some(w) = self.exact_memo.lock().unwrap().get(&k) {
            return Arc::clone(w);
        }
        let w = Arc::new(self.u.pow((self.s + 1 - k) as u32) * self.v.pow(k as u32));
        self.exact_memo
            .lock()
            .unwrap()
            .entry(k)
            .or_insert(w)
            .clone()
    }
}

/// Discretization parameters: `epsilon`, the base `Q`, the grid depth `s`,
/// and the scaled power table used by every comparison.
pub struct FptasParams {
    n: usize,
    epsilon: BigRational,
    q: BigRational,
    s: usize,
    weights: WeightTable,
}

impl FptasParams {
    /// Exact-arithmetic parameters: `Q = 1 + eps/n`, `s = ceil(log_Q 1/delta)`.
    pub fn exact(epsilon: &BigRational, n: usize, delta: &BigRational) -> Result<Self> {
        validate_epsilon(epsilon)?;
        if n == 0 {
            return Err(Error::EmptyInstance);
        }
        if !(delta.is_positive() && *delta <= BigRational::one()) {
            return Err(Error::Parameter("delta must lie in (0, 1]".into()));
        }
        let q = BigRational::one() + epsilon / BigRational::from_integer(BigInt::from(n));
        let s = ceil_log_q(&q, &delta.recip());
        Self::with_q_s(epsilon, n, q, s as usize)
    }

    /// Parameters with an explicitly chosen base and depth (bit mode, tests).
    pub fn with_q_s(epsilon: &BigRational, n: usize, q: BigRational, s: usize) -> Result<Self> {
        validate_epsilon(epsilon)?;
        if q <= BigRational::one() {
            return Err(Error::Parameter("Q must exceed 1".into()));
        }
        let u = q.numer().clone();
        let v = q.denom().clone();
        Ok(Self {
            n,
            epsilon: epsilon.clone(),
            q,
            s,
            weights: WeightTable::new(u, v, s),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// `Q^k`, exact, for any exponent the recursion can mention
    /// (`0..=2s+2`; the scaled criterion never needs more).
    pub fn q_pow(&self, k: usize) -> BigRational {
        assert!(k <= 2 * self.s + 2, "exponent {k} outside the power table");
        BigRational::new(
            self.weights.u.pow(k as u32),
            self.weights.v.pow(k as u32),
        )
    }

    /// `Q^-(j-1)` capped at 1: the output value for a given `j*`.
    fn estimate_for_jstar(&self, j_star: usize) -> BigRational {
        if j_star == 0 {
            return BigRational::one();
        }
        let k = (j_star - 1) as u32;
        BigRational::new(self.weights.v.pow(k), self.weights.u.pow(k))
    }

    /// Decides `sum (N_k * W_k) >= D * W_j` for nonnegative `N_k`, `D`.
    fn weighted_ge(&self, terms: &[(BigInt, usize)], d: &BigInt, j: usize, resolve: Resolve) -> bool {
        debug_assert!(terms.iter().all(|(n, k)| !n.is_negative() && *k <= self.s + 1));
        debug_assert!(j <= self.s + 1 && d.is_positive());
        // A single term on the same grid column cancels the weight entirely;
        // this is the common exact-tie shape (point masses), kept off the
        // fallback path.
        if terms.len() == 1 && terms[0].1 == j {
            return terms[0].0 >= *d;
        }
        let mut lhs = Bounds::ZERO;
        for (n, k) in terms {
            if n.is_zero() {
                continue;
            }
            lhs = lhs.add(&Bounds::from_biguint(n.magnitude()).mul(self.weights.bounds(*k)));
        }
        let rhs = Bounds::from_biguint(d.magnitude()).mul(self.weights.bounds(j));
        match certified_ge(&lhs, &rhs) {
            Some(answer) => answer,
            None => match resolve {
                Resolve::Certified => {
                    let mut sum = BigInt::zero();
                    for (n, k) in terms {
                        sum += n * &*self.weights.exact(*k);
                    }
                    sum >= d * &*self.weights.exact(j)
                }
                Resolve::BestEffort => certified_ge(&lhs, &Bounds { lo: rhs.lo, hi: rhs.lo })
                    .unwrap_or(false),
            },
        }
    }

    /// Decides `Q^j * p >= 1` (the row-1 rule), scaled as
    /// `N * W_(s+1-j) >= D * W_(s+1)`.
    fn cdf_reaches_grid(&self, p: &BigRational, j: usize, resolve: Resolve) -> bool {
        if p.is_zero() {
            return false;
        }
        let terms = [(p.numer().clone(), self.s + 1 - j)];
        self.weighted_ge(&terms, p.denom(), self.s + 1, resolve)
    }
}

fn validate_epsilon(epsilon: &BigRational) -> Result<()> {
    if epsilon.is_positive() && *epsilon <= BigRational::one() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "epsilon must be a rational in (0, 1], got {epsilon}"
        )))
    }
}

/// Finite-precision parameters on top of [`FptasParams`].
pub struct BitModeParams {
    params: FptasParams,
    ell_q: u64,
    oracle_bits: u64,
    ell_ans: u64,
    eta: BigRational,
    sum_ell: u64,
}

/// Caller-supplied deviations from the derived bit-mode parameters.
#[derive(Clone, Debug, Default)]
pub struct BitModeOverrides {
    /// Oracle answer precision `L`; values below the derived floor are
    /// refused rather than silently degrading the certificate.
    pub oracle_bits: Option<u64>,
}

impl BitModeParams {
    /// Derives `l_q`, `Q`, `s`, `L` and `l_ans` from `epsilon`, `n` and the
    /// probed bound `sum_ell >= log2(1/delta)`.
    pub fn derive(
        epsilon: &BigRational,
        n: usize,
        sum_ell: u64,
        overrides: &BitModeOverrides,
    ) -> Result<Self> {
        validate_epsilon(epsilon)?;
        if n == 0 {
            return Err(Error::EmptyInstance);
        }
        let n_rat = BigRational::from_integer(BigInt::from(n));
        let ell_q = ceil_log2(&(&n_rat / epsilon)) + 2;
        let q = BigRational::one() + pow2_inv(ell_q);
        debug_assert!(
            q <= BigRational::one() + epsilon / (BigRational::from_integer(4.into()) * &n_rat)
        );
        let pow2_sum = BigRational::from_integer(BigInt::one() << sum_ell);
        let s = ceil_log_q(&q, &pow2_sum) as usize;

        // L floor: log2(32 n^2 Q / eps^2) + s + 1.
        let thirty_two = BigRational::from_integer(32.into());
        let l_arg = thirty_two * &n_rat * &n_rat * &q / (epsilon * epsilon);
        let l_floor = ceil_log2(&l_arg) + s as u64 + 1;
        let oracle_bits = match overrides.oracle_bits {
            Some(l) if l < l_floor => {
                return Err(Error::Parameter(format!(
                    "oracle precision override L = {l} is below the certified floor {l_floor}"
                )));
            }
            Some(l) => l,
            None => l_floor,
        };
        let ell_ans = s as u64 + ceil_log2(&(&q / epsilon));

        // eta = (Q^(s+1) - Q^-1) / (Q - 1) * 2^-(L-1)
        let q_pow = q.pow(s as i32 + 1);
        let eta = (q_pow - q.recip()) / (&q - BigRational::one()) * pow2_inv(oracle_bits - 1);

        // Certificate precondition: (1 + eta)^n * Q^(n+1) <= 1 + eps.
        // Checked through the cheap bound (1+x)^n <= 1 + 2nx for x <= 1/(2n),
        // with the exact power as a last resort.
        let one_plus_eps = BigRational::one() + epsilon;
        let q_n1 = q.pow(n as i32 + 1);
        let two_n_eta = BigRational::from_integer(BigInt::from(2 * n)) * &eta;
        let cheap = &eta * BigRational::from_integer(BigInt::from(2 * n)) <= BigRational::one()
            && (BigRational::one() + two_n_eta) * &q_n1 <= one_plus_eps;
        let holds = cheap
            || (BigRational::one() + &eta).pow(n as i32) * &q_n1 <= one_plus_eps;
        if !holds {
            return Err(Error::Parameter(
                "bit-mode parameters do not satisfy (1+eta)^n Q^(n+1) <= 1+eps".into(),
            ));
        }

        Ok(Self {
            params: FptasParams::with_q_s(epsilon, n, q, s)?,
            ell_q,
            oracle_bits,
            ell_ans,
            eta,
            sum_ell,
        })
    }

    pub fn params(&self) -> &FptasParams {
        &self.params
    }

    pub fn ell_q(&self) -> u64 {
        self.ell_q
    }

    pub fn oracle_bits(&self) -> u64 {
        self.oracle_bits
    }

    pub fn ell_ans(&self) -> u64 {
        self.ell_ans
    }

    pub fn eta(&self) -> &BigRational {
        &self.eta
    }

    pub fn sum_ell(&self) -> u64 {
        self.sum_ell
    }
}

/// The filled `T(i, j)` grid. Stored cells are finite; the extended-domain
/// values exist only through [`DpTable::extended_lookup`].
#[derive(Clone, Debug)]
pub struct DpTable {
    rows: Vec<Vec<i64>>,
    s: usize,
}

impl DpTable {
    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Row `i` (1-based), entries `T(i, 0..=s)`.
    pub fn row(&self, i: usize) -> &[i64] {
        &self.rows[i - 1]
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    /// `T(i, j)` over the extended domain: 0 beyond the grid, `+inf` below
    /// it, and `T(i, +inf) = -inf`. Panics if `i` is not in `1..=n`.
    pub fn extended_lookup(&self, i: usize, j: ExtIndex) -> ExtValue {
        assert!(i >= 1 && i <= self.rows.len(), "row index {i} out of range");
        match j {
            ExtIndex::PosInf => ExtValue::NegInf,
            ExtIndex::Fin(j) if j < 0 => ExtValue::PosInf,
            ExtIndex::Fin(j) if j as usize > self.s => ExtValue::Fin(0),
            ExtIndex::Fin(j) => ExtValue::Fin(self.rows[i - 1][j as usize]),
        }
    }
}

/// Free-function spelling of [`DpTable::extended_lookup`].
pub fn extended_lookup(table: &DpTable, i: usize, j: ExtIndex) -> ExtValue {
    table.extended_lookup(i, j)
}

/// A previous row reduced to its strict descents, which are the only places
/// a segment can be nonempty.
struct RowRuns {
    /// `T(i-1, 0)`.
    top: i64,
    /// `(m, T(i-1, m-1), T(i-1, m))` for each `m` with a strict descent,
    /// including the extension `T(i-1, s+1) = 0`.
    descents: Vec<(usize, i64, i64)>,
}

impl RowRuns {
    fn new(row: &[i64], s: usize) -> Self {
        debug_assert_eq!(row.len(), s + 1);
        let mut descents = Vec::new();
        let mut prev = row[0];
        for m in 1..=s + 1 {
            let t = if m <= s { row[m] } else { 0 };
            debug_assert!(t <= prev, "row must be nonincreasing");
            if t < prev {
                descents.push((m, prev, t));
            }
            prev = t;
        }
        Self {
            top: row[0],
            descents,
        }
    }
}

/// Segment masses of one distribution for one binary-search guess.
///
/// Only segments with nonzero mass are materialized; `prob` answers the full
/// index range `0..=s+2` (the last segment carries the leftover mass and has
/// feasibility weight zero).
pub struct SegmentWeights {
    nonzero: Vec<(usize, BigRational)>,
    j: usize,
    s: usize,
    queried: u64,
}

impl SegmentWeights {
    /// `P_i(m)`.
    pub fn prob(&self, m: usize) -> BigRational {
        assert!(m <= self.s + 2, "segment index {m} out of range");
        if m == self.s + 2 {
            return BigRational::one()
                - self.nonzero.iter().map(|(_, p)| p).sum::<BigRational>();
        }
        self.nonzero
            .iter()
            .find(|(k, _)| *k == m)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Number of oracle queries spent building these weights (at most
    /// `s + 2`).
    pub fn queried(&self) -> u64 {
        self.queried
    }

    /// The scaled criterion value `Z = sum_m Q^(j+s+1-m) P_i(m)`, exact.
    pub fn z_scaled(&self, params: &FptasParams) -> BigRational {
        self.nonzero
            .iter()
            .map(|(m, p)| params.q_pow(self.j + self.s + 1 - m) * p)
            .sum()
    }
}

fn segment_probs(
    oracle: &DistributionOracle,
    guess: i64,
    runs: &RowRuns,
    j: usize,
    s: usize,
) -> SegmentWeights {
    let mut nonzero = Vec::new();
    let mut queried = 0;
    // Seg_0 = (-inf, guess - T(i-1,0)]; nothing of a normalized support lies
    // below 0.
    let hi0 = guess - runs.top;
    if hi0 >= 0 {
        queried += 1;
        let p = oracle.query(0, hi0);
        if !p.is_zero() {
            nonzero.push((0, p));
        }
    }
    for (m, t_above, t_at) in &runs.descents {
        // Seg_m = (guess - T(i-1,m-1), guess - T(i-1,m)]
        let hi = guess - t_at;
        if hi < 0 {
            continue;
        }
        let lo = (guess - t_above + 1).max(0);
        queried += 1;
        let p = oracle.query(lo, hi);
        if !p.is_zero() {
            nonzero.push((*m, p));
        }
    }
    SegmentWeights {
        nonzero,
        j,
        s,
        queried,
    }
}

/// Segment masses `P_i(0..=s+2)` for guess `guess` against `prev_row`
/// (row `i-1`, with `T(i-1, s+1) = 0` supplied by the extended domain).
pub fn segment_probabilities(
    oracle: &DistributionOracle,
    guess: i64,
    prev_row: &[i64],
    params: &FptasParams,
    j: usize,
) -> SegmentWeights {
    segment_probs(oracle, guess, &RowRuns::new(prev_row, params.s()), j, params.s())
}

/// The feasibility test `Z >= Q^(s+1)` (ties feasible).
pub fn criterion(weights: &SegmentWeights, params: &FptasParams) -> bool {
    criterion_resolved(&weights.nonzero, weights.j, params, Resolve::Certified)
}

fn criterion_resolved(
    nonzero: &[(usize, BigRational)],
    j: usize,
    params: &FptasParams,
    resolve: Resolve,
) -> bool {
    if nonzero.is_empty() {
        // All mass beyond the last boundary: Z = 0.
        return false;
    }
    // Scale by a common denominator D: sum_m N_m W_m >= D W_j.
    let mut denom = BigInt::one();
    for (_, p) in nonzero {
        denom = denom.lcm(p.denom());
    }
    let terms: Vec<(BigInt, usize)> = nonzero
        .iter()
        .map(|(m, p)| (p.numer() * (&denom / p.denom()), *m))
        .collect();
    params.weighted_ge(&terms, &denom, j, resolve)
}

/// `T(1, j) = tau(1, Q^-j)`: least `t >= 0` with `Q^j Pr[X_1 <= t] >= 1`,
/// by binary search over `[0, C'+1]`.
pub fn base_case_tau(
    oracle: &DistributionOracle,
    j: usize,
    params: &FptasParams,
    c_prime: i64,
) -> i64 {
    base_case_tau_resolved(oracle, j, params, c_prime, Resolve::Certified).0
}

fn base_case_tau_resolved(
    oracle: &DistributionOracle,
    j: usize,
    params: &FptasParams,
    c_prime: i64,
    resolve: Resolve,
) -> (i64, u64) {
    debug_assert!(j <= params.s());
    let mut lo = 0i64;
    let mut hi = c_prime + 1; // tau(1, a <= 1) <= max support <= C' + 1
    let mut calls = 0;
    while hi > lo {
        let t = lo + (hi - lo) / 2;
        calls += 1;
        let p = oracle.query(0, t);
        if params.cdf_reaches_grid(&p, j, resolve) {
            hi = t;
        } else {
            lo = t + 1;
        }
    }
    (lo, calls)
}

/// `T(i, j)` for `i >= 2`: least guess in `[0, n(C'+1)]` passing the
/// criterion, by binary search. Errors if even the top of the range fails,
/// which no consistent oracle can produce.
pub fn recursion_cell(
    i: usize,
    j: usize,
    prev_row: &[i64],
    oracle: &DistributionOracle,
    params: &FptasParams,
    c_prime: i64,
) -> Result<i64> {
    let runs = RowRuns::new(prev_row, params.s());
    recursion_cell_resolved(i, j, &runs, oracle, params, c_prime, Resolve::Certified)
        .map(|(t, _)| t)
}

#[allow(clippy::too_many_arguments)]
fn recursion_cell_resolved(
    i: usize,
    j: usize,
    runs: &RowRuns,
    oracle: &DistributionOracle,
    params: &FptasParams,
    c_prime: i64,
    resolve: Resolve,
) -> Result<(i64, u64)> {
    debug_assert!(i >= 2 && i <= params.n());
    debug_assert!(j <= params.s());
    let top = params.n() as i64 * (c_prime + 1);
    let mut lo = 0i64;
    let mut hi = top;
    let mut calls = 0;
    while hi > lo {
        let guess = lo + (hi - lo) / 2;
        let weights = segment_probs(oracle, guess, runs, j, params.s());
        calls += weights.queried;
        if criterion_resolved(&weights.nonzero, j, params, resolve) {
            hi = guess;
        } else {
            lo = guess + 1;
        }
    }
    if lo == top {
        // The search never evaluated its upper endpoint; a distribution with
        // total mass 1 must satisfy the criterion there.
        let weights = segment_probs(oracle, top, runs, j, params.s());
        calls += weights.queried;
        if !criterion_resolved(&weights.nonzero, j, params, resolve) {
            return Err(Error::BrokenOracle(format!(
                "criterion failed at the top of the range for cell ({i}, {j})"
            )));
        }
    }
    Ok((lo, calls))
}

/// Least `j in [0, s]` with `T(n, j) <= C'`, or `s + 1` when none (the
/// extended domain supplies `T(n, s+1) = 0 <= C'`).
pub fn choose_jstar(final_row: &[i64], c_prime: i64, s: usize) -> usize {
    debug_assert_eq!(final_row.len(), s + 1);
    final_row.partition_point(|&t| t > c_prime)
}

/// Per-run diagnostics: the full table and the per-cell oracle-call tallies.
pub struct FptasTrace {
    pub table: DpTable,
    /// cell_calls[i-1][j] = oracle calls spent on cell (i, j).
    pub cell_calls: Vec<Vec<u64>>,
    pub j_star: usize,
}

/// The estimator's answer with its certificate.
pub struct EstimateReport {
    pub mode: ArithmeticMode,
    /// The point estimate, clamped to at most 1 and always positive.
    pub estimate: BigRational,
    pub j_star: usize,
    /// The true probability is certified to lie in
    /// `[certified_lower, certified_upper]` (exact and bit modes).
    pub certified_lower: BigRational,
    pub certified_upper: BigRational,
    pub oracle_calls: u64,
    pub epsilon: BigRational,
    pub q: BigRational,
    pub s: usize,
    pub n: usize,
    /// The normalized threshold `C'`.
    pub threshold: i64,
    /// Bit-mode precisions, when applicable: `(l_q, L, l_ans)`.
    pub bit_precisions: Option<(u64, u64, u64)>,
}

fn certified_interval(estimate: &BigRational, epsilon: &BigRational) -> (BigRational, BigRational) {
    let lower = estimate / (BigRational::one() + epsilon);
    let upper = if *epsilon == BigRational::one() {
        BigRational::one()
    } else {
        (estimate / (BigRational::one() - epsilon)).min(BigRational::one())
    };
    (lower, upper)
}

struct DpOutcome {
    table: DpTable,
    cell_calls: Vec<Vec<u64>>,
    j_star: usize,
    total_calls: u64,
}

fn run_dp(
    oracles: &[DistributionOracle],
    c_prime: i64,
    params: &FptasParams,
    parallelism: usize,
    resolve: Resolve,
) -> Result<DpOutcome> {
    let n = oracles.len();
    debug_assert_eq!(n, params.n());
    let s = params.s();
    let pool = if parallelism > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(parallelism)
                .build()
                .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let compute = |f: &(dyn Fn(usize) -> Result<(i64, u64)> + Sync)| -> Result<(Vec<i64>, Vec<u64>)> {
        let cells: Vec<(i64, u64)> = match &pool {
            Some(pool) => pool.install(|| (0..=s).into_par_iter().map(f).collect::<Result<_>>())?,
            None => (0..=s).map(f).collect::<Result<_>>()?,
        };
        Ok(cells.into_iter().unzip())
    };

    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(n);
    let mut cell_calls: Vec<Vec<u64>> = Vec::with_capacity(n);
    let (row1, calls1) =
        compute(&|j| Ok(base_case_tau_resolved(&oracles[0], j, params, c_prime, resolve)))?;
    rows.push(row1);
    cell_calls.push(calls1);
    for i in 2..=n {
        let runs = RowRuns::new(&rows[i - 2], s);
        let oracle = &oracles[i - 1];
        let (row, calls) = compute(&|j| {
            recursion_cell_resolved(i, j, &runs, oracle, params, c_prime, resolve)
        })?;
        debug_assert!(row.windows(2).all(|w| w[0] >= w[1]), "row {i} not monotone");
        rows.push(row);
        cell_calls.push(calls);
    }
    let j_star = choose_jstar(&rows[n - 1], c_prime, s);
    let total_calls = cell_calls.iter().flatten().sum();
    Ok(DpOutcome {
        table: DpTable { rows, s },
        cell_calls,
        j_star,
        total_calls,
    })
}

fn ensure_runnable(instance: &NormalizedInstance) -> Result<()> {
    if instance.trivial_answer().is_some() {
        return Err(Error::Parameter(
            "instance has a trivial answer; nothing to estimate".into(),
        ));
    }
    Ok(())
}

/// Runs the exact-rational estimator. The result is certified to satisfy
/// `estimate / F(C') in [1 - eps, 1 + eps]`.
pub fn run_fptas(instance: &NormalizedInstance, epsilon: &BigRational) -> Result<EstimateReport> {
    run_fptas_traced(instance, epsilon, 1).map(|(r, _)| r)
}

/// As [`run_fptas`], also returning the DP trace. `parallelism` spreads the
/// cells of each row over that many threads; results are identical to the
/// sequential run.
pub fn run_fptas_traced(
    instance: &NormalizedInstance,
    epsilon: &BigRational,
    parallelism: usize,
) -> Result<(EstimateReport, FptasTrace)> {
    ensure_runnable(instance)?;
    let params = FptasParams::exact(epsilon, instance.n(), instance.delta())?;
    finish_run(
        instance,
        &params,
        ArithmeticMode::ExactRational,
        parallelism,
        Resolve::Certified,
    )
}

/// Runs the estimator in the finite-precision oracle model: `Q = 1 + 2^-l_q`,
/// every oracle truncated to `L` bits, and the answer emitted to `l_ans`
/// bits. Certified to the same `(1 +- eps)` guarantee.
pub fn run_fptas_bit_mode(
    instance: &NormalizedInstance,
    epsilon: &BigRational,
    overrides: &BitModeOverrides,
) -> Result<EstimateReport> {
    run_fptas_bit_mode_traced(instance, epsilon, overrides, 1).map(|(r, _)| r)
}

/// As [`run_fptas_bit_mode`], also returning the trace.
pub fn run_fptas_bit_mode_traced(
    instance: &NormalizedInstance,
    epsilon: &BigRational,
    overrides: &BitModeOverrides,
    parallelism: usize,
) -> Result<(EstimateReport, FptasTrace)> {
    ensure_runnable(instance)?;
    let n = instance.n();
    // Probe an upper bound on log2(1/delta) through the oracles; the probe
    // itself costs sum_ell + n calls (one exactness guard per oracle).
    let sum_ell = estimate_log_delta(instance.oracles())?;
    let probe_calls = sum_ell + n as u64;
    let bit = BitModeParams::derive(epsilon, n, sum_ell, overrides)?;
    let wrapped: Vec<DistributionOracle> = instance
        .oracles()
        .iter()
        .map(|o| truncated_oracle(o, bit.oracle_bits()))
        .collect::<Result<_>>()?;
    let out = run_dp(
        &wrapped,
        instance.threshold(),
        bit.params(),
        parallelism,
        Resolve::Certified,
    )?;
    let raw = bit.params().estimate_for_jstar(out.j_star);
    let estimate = truncate_dyadic(&raw, bit.ell_ans());
    debug_assert!(estimate.is_positive());
    let (lower, upper) = certified_interval(&estimate, epsilon);
    let report = EstimateReport {
        mode: ArithmeticMode::Bit,
        estimate,
        j_star: out.j_star,
        certified_lower: lower,
        certified_upper: upper,
        oracle_calls: out.total_calls + probe_calls,
        epsilon: epsilon.clone(),
        q: bit.params().q().clone(),
        s: bit.params().s(),
        n,
        threshold: instance.threshold(),
        bit_precisions: Some((bit.ell_q(), bit.oracle_bits(), bit.ell_ans())),
    };
    Ok((
        report,
        FptasTrace {
            table: out.table,
            cell_calls: out.cell_calls,
            j_star: out.j_star,
        },
    ))
}

/// Best-effort floating-magnitude run: same algorithm, but comparisons that
/// the enclosures cannot separate are decided heuristically instead of
/// exactly. Fast and deterministic, with no accuracy certificate.
pub fn run_fptas_float(
    instance: &NormalizedInstance,
    epsilon: &BigRational,
    parallelism: usize,
) -> Result<EstimateReport> {
    ensure_runnable(instance)?;
    let params = FptasParams::exact(epsilon, instance.n(), instance.delta())?;
    finish_run(
        instance,
        &params,
        ArithmeticMode::Float,
        parallelism,
        Resolve::BestEffort,
    )
    .map(|(r, _)| r)
}

fn finish_run(
    instance: &NormalizedInstance,
    params: &FptasParams,
    mode: ArithmeticMode,
    parallelism: usize,
    resolve: Resolve,
) -> Result<(EstimateReport, FptasTrace)> {
    let out = run_dp(
        instance.oracles(),
        instance.threshold(),
        params,
        parallelism,
        resolve,
    )?;
    let estimate = params.estimate_for_jstar(out.j_star);
    let (lower, upper) = certified_interval(&estimate, params.epsilon());
    let report = EstimateReport {
        mode,
        estimate,
        j_star: out.j_star,
        certified_lower: lower,
        certified_upper: upper,
        oracle_calls: out.total_calls,
        epsilon: params.epsilon().clone(),
        q: params.q().clone(),
        s: params.s(),
        n: instance.n(),
        threshold: instance.threshold(),
        bit_precisions: None,
    };
    Ok((
        report,
        FptasTrace {
            table: out.table,
            cell_calls: out.cell_calls,
            j_star: out.j_star,
        },
    ))
}

/// Internal hook for tests: a full run with explicitly fixed parameters.
#[cfg(test)]
pub(crate) fn run_with_params(
    instance: &NormalizedInstance,
    params: &FptasParams,
) -> Result<(usize, DpTable)> {
    let out = run_dp(
        instance.oracles(),
        instance.threshold(),
        params,
        1,
        Resolve::Certified,
    )?;
    Ok((out.j_star, out.table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{normalize, DiscreteDistribution};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn dist(triples: &[(i64, i64, i64)]) -> DiscreteDistribution {
        DiscreteDistribution::from_triples(triples).unwrap()
    }

    fn coin() -> DiscreteDistribution {
        dist(&[(0, 1, 2), (1, 1, 2)])
    }

    fn params_q(n: usize, q: BigRational, s: usize) -> FptasParams {
        FptasParams::with_q_s(&rat(1, 2), n, q, s).unwrap()
    }

    #[test]
    fn epsilon_domain() {
        let delta = rat(1, 2);
        assert!(FptasParams::exact(&rat(0, 1), 2, &delta).is_err());
        assert!(FptasParams::exact(&rat(-1, 2), 2, &delta).is_err());
        assert!(FptasParams::exact(&rat(3, 2), 2, &delta).is_err());
        assert!(FptasParams::exact(&rat(1, 1), 2, &delta).is_ok());
    }

    #[test]
    fn exact_params_match_their_formulas() {
        // Q = 1 + (1/10)/2 = 21/20; s = ceil(log_Q 4) = 29
        // (1.05^28 = 3.92, 1.05^29 = 4.116).
        let p = FptasParams::exact(&rat(1, 10), 2, &rat(1, 4)).unwrap();
        assert_eq!(p.q(), &rat(21, 20));
        assert_eq!(p.s(), 29);
        // delta = 1: the grid collapses to j = 0.
        let p1 = FptasParams::exact(&rat(1, 10), 3, &rat(1, 1)).unwrap();
        assert_eq!(p1.s(), 0);
    }

    #[test]
    fn q_power_table_is_geometric() {
        let p = params_q(2, rat(21, 20), 7);
        for k in 0..(2 * 7 + 2) {
            assert_eq!(p.q_pow(k + 1), p.q_pow(k) * p.q());
        }
        assert_eq!(p.q_pow(0), rat(1, 1));
    }

    #[test]
    fn weight_table_exact_values() {
        let p = params_q(2, rat(3, 2), 4);
        for k in 0..=p.s() + 1 {
            let w = p.weights.exact(k);
            let want = BigInt::from(3).pow((p.s() + 1 - k) as u32)
                * BigInt::from(2).pow(k as u32);
            assert_eq!(*w, want);
        }
    }

    #[test]
    fn scaled_compare_agrees_with_exact_rationals() {
        // Randomized cross-check of the filtered comparison against a direct
        // rational evaluation of sum N_m Q^(j-m) >= D.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for q in [rat(21, 20), rat(257, 256), rat(3, 2)] {
            let s = 12;
            let p = params_q(3, q.clone(), s);
            for _ in 0..300 {
                let j = rng.gen_range(0..=s);
                let k_terms = rng.gen_range(0..4);
                let terms: Vec<(BigInt, usize)> = (0..k_terms)
                    .map(|_| (BigInt::from(rng.gen_range(0..50i64)), rng.gen_range(0..=s + 1)))
                    .collect();
                let d = BigInt::from(rng.gen_range(1..50i64));
                let got = p.weighted_ge(&terms, &d, j, Resolve::Certified);
                let lhs: BigRational = terms
                    .iter()
                    .map(|(n, k)| BigRational::from_integer(n.clone()) * p.q_pow(s + 1 - k))
                    .sum();
                let rhs = BigRational::from_integer(d.clone()) * p.q_pow(s + 1 - j);
                assert_eq!(got, lhs >= rhs, "terms {terms:?} d {d} j {j}");
            }
        }
    }

    #[test]
    fn base_case_inverts_the_first_cdf() {
        let inst = normalize(vec![dist(&[(0, 1, 4), (1, 1, 4), (2, 1, 2)])], 2).unwrap();
        let oracle = &inst.oracles()[0];
        // tau(1, Q^0) = max support, any Q.
        let p = params_q(1, rat(11, 10), 20);
        assert_eq!(base_case_tau(oracle, 0, &p, inst.threshold()), 2);
        // Q = 11/10, j = 1: Q^-1 = 10/11; CDF(1) = 1/2 < 10/11 <= CDF(2).
        assert_eq!(base_case_tau(oracle, 1, &p, inst.threshold()), 2);
        // j = 15: Q^-15 ~ 0.239 <= CDF(0) = 1/4.
        assert_eq!(base_case_tau(oracle, 15, &p, inst.threshold()), 0);
    }

    #[test]
    fn extended_lookup_covers_the_paper_domain() {
        let table = DpTable {
            rows: vec![vec![3, 1, 0]],
            s: 2,
        };
        assert_eq!(table.extended_lookup(1, ExtIndex::Fin(-1)), ExtValue::PosInf);
        assert_eq!(table.extended_lookup(1, ExtIndex::Fin(5)), ExtValue::Fin(0));
        assert_eq!(table.extended_lookup(1, ExtIndex::PosInf), ExtValue::NegInf);
        assert_eq!(table.extended_lookup(1, ExtIndex::Fin(1)), ExtValue::Fin(1));
    }

    #[test]
    #[should_panic(expected = "row index")]
    fn extended_lookup_rejects_bad_row() {
        let table = DpTable {
            rows: vec![vec![0]],
            s: 0,
        };
        table.extended_lookup(2, ExtIndex::Fin(0));
    }

    #[test]
    fn segment_masses_of_a_fair_coin() {
        // s = 1, prev row [1, 0], guess 1: P = [1/2, 1/2, 0, 0].
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let p = params_q(2, rat(21, 20), 1);
        let w = segment_probabilities(&inst.oracles()[1], 1, &[1, 0], &p, 0);
        assert_eq!(w.prob(0), rat(1, 2));
        assert_eq!(w.prob(1), rat(1, 2));
        assert_eq!(w.prob(2), rat(0, 1));
        assert_eq!(w.prob(3), rat(0, 1));
        assert!(w.queried() <= 3);
    }

    #[test]
    fn segments_partition_all_mass() {
        let d = dist(&[(0, 1, 6), (1, 1, 6), (3, 1, 3), (4, 1, 3)]);
        let inst = normalize(vec![d.clone(), d], 5).unwrap();
        let p = params_q(2, rat(21, 20), 3);
        for guess in 0..=10 {
            let w = segment_probabilities(&inst.oracles()[1], guess, &[4, 2, 1, 0], &p, 1);
            let total: BigRational = (0..=p.s() + 2).map(|m| w.prob(m)).sum();
            assert!(total.is_one(), "guess {guess}: total {total}");
        }
    }

    #[test]
    fn inverted_segment_yields_zero() {
        // Guess below the whole previous row: Seg_0 upper bound negative.
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let p = params_q(2, rat(21, 20), 1);
        let w = segment_probabilities(&inst.oracles()[1], 0, &[3, 2], &p, 0);
        assert_eq!(w.prob(0), rat(0, 1));
    }

    #[test]
    fn criterion_boundary_is_inclusive() {
        // Point mass at 0 against prev row [1, 0]: at guess = T(1, j) the
        // single nonzero segment sits exactly on column j, so Z = Q^(s+1).
        let inst = normalize(vec![coin(), dist(&[(0, 1, 1)])], 1).unwrap();
        let p = params_q(2, rat(21, 20), 1);
        let w = segment_probabilities(&inst.oracles()[1], 0, &[1, 0], &p, 1);
        assert_eq!(w.z_scaled(&p), p.q_pow(p.s() + 1));
        assert!(criterion(&w, &p));
    }

    #[test]
    fn criterion_false_when_all_mass_is_beyond_the_last_segment() {
        // Every segment up to s+1 empty: Z = 0, criterion must fail. (A
        // normalized instance can only produce this for guesses the search
        // never probes, so the weights are built directly.)
        let p = params_q(2, rat(21, 20), 2);
        let w = SegmentWeights {
            nonzero: vec![],
            j: 1,
            s: 2,
            queried: 0,
        };
        assert!(w.z_scaled(&p).is_zero());
        assert_eq!(w.prob(p.s() + 2), rat(1, 1));
        assert!(!criterion(&w, &p));
    }

    #[test]
    fn criterion_coin_example() {
        // Q = 2, s = 1, j = 1, P(0) = P(1) = 1/2:
        // Z = Q^3/2 + Q^2/2 = 6 >= Q^2 = 4.
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let p = params_q(2, rat(2, 1), 1);
        let w = segment_probabilities(&inst.oracles()[1], 1, &[1, 0], &p, 1);
        assert_eq!(w.z_scaled(&p), rat(6, 1));
        assert!(criterion(&w, &p));
    }

    #[test]
    fn recursion_cell_two_coins_q2() {
        // Q = 2, s = 2 (delta = 1/4): T(2, .) must sandwich against the
        // exact sum CDF {0: 1/4, 1: 3/4, 2: 1}.
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let p = params_q(2, rat(2, 1), 2);
        let row1: Vec<i64> = (0..=2)
            .map(|j| base_case_tau(&inst.oracles()[0], j, &p, 1))
            .collect();
        assert_eq!(row1, vec![1, 0, 0]);
        let row2: Vec<i64> = (0..=2)
            .map(|j| recursion_cell(2, j, &row1, &inst.oracles()[1], &p, 1).unwrap())
            .collect();
        assert_eq!(row2, vec![2, 1, 0]);
        // tau(2, Q^-j) and tau(2, Q^-(j-2)) from the hand CDF:
        let tau = |a: BigRational| -> ExtValue {
            if a > rat(1, 1) {
                ExtValue::PosInf
            } else if a > rat(3, 4) {
                ExtValue::Fin(2)
            } else if a > rat(1, 4) {
                ExtValue::Fin(1)
            } else if a > rat(0, 1) {
                ExtValue::Fin(0)
            } else {
                ExtValue::NegInf
            }
        };
        for (j, t) in row2.iter().enumerate() {
            let lo = tau(p.q_pow(j).recip());
            let hi = if j >= 2 {
                tau(p.q_pow(j - 2).recip())
            } else {
                ExtValue::PosInf
            };
            assert!(lo <= ExtValue::Fin(*t) && ExtValue::Fin(*t) <= hi, "j = {j}");
        }
    }

    #[test]
    fn adding_a_point_mass_at_zero_copies_the_row() {
        let d = dist(&[(0, 1, 4), (1, 1, 4), (2, 1, 2)]);
        let inst = normalize(vec![d, dist(&[(0, 1, 1)])], 2).unwrap();
        let p = params_q(2, rat(21, 20), 8);
        let row1: Vec<i64> = (0..=8)
            .map(|j| base_case_tau(&inst.oracles()[0], j, &p, 2))
            .collect();
        for j in 0..=8 {
            let t = recursion_cell(2, j, &row1, &inst.oracles()[1], &p, 2).unwrap();
            assert_eq!(t, row1[j], "j = {j}");
        }
    }

    #[test]
    fn rows_are_monotone_in_j() {
        let d = dist(&[(0, 1, 3), (2, 1, 3), (5, 1, 3)]);
        let inst = normalize(vec![d.clone(), d.clone(), d], 9).unwrap();
        let (_, trace) = run_fptas_traced(&inst, &rat(1, 4), 1).unwrap();
        for i in 1..=inst.n() {
            let row = trace.table.row(i);
            assert!(row.windows(2).all(|w| w[0] >= w[1]), "row {i}: {row:?}");
        }
    }

    #[test]
    fn choose_jstar_examples() {
        assert_eq!(choose_jstar(&[5, 3, 1, 0], 2, 3), 2);
        assert_eq!(choose_jstar(&[5, 3], 7, 1), 0);
        assert_eq!(choose_jstar(&[9, 8, 7, 6], 5, 3), 4); // fallback s + 1
    }

    #[test]
    fn two_fair_coins_estimate_within_a_tenth() {
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let rep = run_fptas(&inst, &rat(1, 10)).unwrap();
        // F = 3/4; the estimate must land in (1 +- 0.1) * 3/4.
        assert!(rep.estimate >= rat(675, 1000), "estimate {}", rep.estimate);
        assert!(rep.estimate <= rat(825, 1000), "estimate {}", rep.estimate);
        assert_eq!(
            rep.estimate,
            rep.q.pow(-(rep.j_star as i32 - 1)).min(rat(1, 1))
        );
        // the certificate brackets the truth
        assert!(rep.certified_lower <= rat(3, 4) && rat(3, 4) <= rep.certified_upper);
    }

    #[test]
    fn point_masses_at_zero_answer_one() {
        // All mass at 0 is decided during normalization (a certain 1), so
        // the engine never runs; the j* = 0 output rule still clamps to 1.
        let inst = normalize(vec![dist(&[(0, 1, 1)]); 4], 3).unwrap();
        assert_eq!(
            inst.trivial_answer(),
            Some(crate::distributions::TrivialAnswer::One)
        );
        let p = params_q(4, rat(21, 20), 6);
        assert!(p.estimate_for_jstar(0).is_one());
        assert_eq!(p.estimate_for_jstar(1), rat(1, 1));
        assert_eq!(p.estimate_for_jstar(2), rat(20, 21));
    }

    #[test]
    fn twenty_bernoulli_rare_tail() {
        let inst = normalize(vec![coin(); 20], 0).unwrap();
        let rep = run_fptas(&inst, &rat(1, 10)).unwrap();
        let truth = BigRational::new(BigInt::one(), BigInt::one() << 20);
        let ratio = &rep.estimate / &truth;
        assert!(ratio >= rat(9, 10) && ratio <= rat(11, 10), "ratio {ratio}");
    }

    #[test]
    fn trivial_instances_are_refused() {
        let inst = normalize(vec![dist(&[(2, 1, 1)])], 1).unwrap();
        assert!(matches!(
            run_fptas(&inst, &rat(1, 2)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn parallel_runs_match_sequential_runs() {
        let d = dist(&[(0, 1, 3), (1, 1, 3), (4, 1, 3)]);
        let inst = normalize(vec![d.clone(), d.clone(), d], 6).unwrap();
        let (seq, ts) = run_fptas_traced(&inst, &rat(1, 8), 1).unwrap();
        let (par, tp) = run_fptas_traced(&inst, &rat(1, 8), 4).unwrap();
        assert_eq!(seq.estimate, par.estimate);
        assert_eq!(seq.j_star, par.j_star);
        assert_eq!(seq.oracle_calls, par.oracle_calls);
        assert_eq!(ts.table.rows(), tp.table.rows());
        assert_eq!(ts.cell_calls, tp.cell_calls);
    }

    #[test]
    fn runs_are_deterministic() {
        let d = dist(&[(0, 2, 5), (3, 3, 5)]);
        let inst = normalize(vec![d.clone(), d], 4).unwrap();
        let a = run_fptas(&inst, &rat(1, 7)).unwrap();
        let b = run_fptas(&inst, &rat(1, 7)).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.j_star, b.j_star);
        assert_eq!(a.oracle_calls, b.oracle_calls);
    }

    #[test]
    fn zero_padding_leaves_jstar_unchanged_at_fixed_params() {
        let d = dist(&[(0, 1, 4), (2, 3, 4)]);
        let base = normalize(vec![d.clone(), d.clone()], 3).unwrap();
        let padded = normalize(vec![d.clone(), d, dist(&[(0, 1, 1)])], 3).unwrap();
        let q = rat(21, 20);
        let s = 30;
        let pb = FptasParams::with_q_s(&rat(1, 10), 2, q.clone(), s).unwrap();
        let pp = FptasParams::with_q_s(&rat(1, 10), 3, q, s).unwrap();
        let (j_base, _) = run_with_params(&base, &pb).unwrap();
        let (j_padded, _) = run_with_params(&padded, &pp).unwrap();
        assert_eq!(j_base, j_padded);
    }

    #[test]
    fn bit_mode_parameter_formulas() {
        // n = 2, eps = 1/10: l_q = ceil(log2 20) + 2 = 7, Q = 129/128.
        let bp = BitModeParams::derive(&rat(1, 10), 2, 4, &BitModeOverrides::default()).unwrap();
        assert_eq!(bp.ell_q(), 7);
        assert_eq!(bp.params().q(), &rat(129, 128));
        // s = ceil(log_Q 2^4) with Q = 129/128: 1/log2(129/128) * 4 ~ 356.1
        let s = bp.params().s();
        assert!(bp.params().q_pow(s) >= rat(16, 1));
        assert!(bp.params().q_pow(s - 1) < rat(16, 1));
        // eta matches its closed form.
        let q = bp.params().q().clone();
        let want = (q.pow(s as i32 + 1) - q.recip()) / (&q - rat(1, 1))
            * pow2_inv(bp.oracle_bits() - 1);
        assert_eq!(bp.eta(), &want);
        // (1 + eta)^n Q^(n+1) <= 1 + eps held at construction.
        assert!((rat(1, 1) + bp.eta()).pow(2) * q.pow(3) <= rat(11, 10));
    }

    #[test]
    fn bit_mode_rejects_l_below_the_floor() {
        let err = BitModeParams::derive(
            &rat(1, 10),
            2,
            4,
            &BitModeOverrides {
                oracle_bits: Some(8),
            },
        );
        assert!(matches!(err, Err(Error::Parameter(_))));
        // At or above the floor the override is accepted.
        let floor = BitModeParams::derive(&rat(1, 10), 2, 4, &BitModeOverrides::default())
            .unwrap()
            .oracle_bits();
        assert!(BitModeParams::derive(
            &rat(1, 10),
            2,
            4,
            &BitModeOverrides {
                oracle_bits: Some(floor + 5),
            },
        )
        .is_ok());
    }

    #[test]
    fn bit_mode_two_coins_certified() {
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let rep = run_fptas_bit_mode(&inst, &rat(1, 10), &BitModeOverrides::default()).unwrap();
        let ratio = &rep.estimate / rat(3, 4);
        assert!(ratio >= rat(9, 10) && ratio <= rat(11, 10), "ratio {ratio}");
        assert!(rep.bit_precisions.is_some());
    }

    #[test]
    fn huge_precision_reproduces_the_exact_run_at_equal_params() {
        // Dyadic masses: once L exceeds every denominator's bit length, no
        // truncation occurs and the bit run must equal an exact run with the
        // same Q and s.
        let d = dist(&[(0, 3, 8), (1, 1, 8), (3, 1, 2)]);
        let inst = normalize(vec![d.clone(), d], 4).unwrap();
        let eps = rat(1, 5);
        let sum_ell = estimate_log_delta(inst.oracles()).unwrap();
        let bp = BitModeParams::derive(&eps, 2, sum_ell, &BitModeOverrides::default()).unwrap();
        let (bit_rep, _) =
            run_fptas_bit_mode_traced(&inst, &eps, &BitModeOverrides::default(), 1).unwrap();
        let exact_params =
            FptasParams::with_q_s(&eps, 2, bp.params().q().clone(), bp.params().s()).unwrap();
        let (j_exact, _) = run_with_params(&inst, &exact_params).unwrap();
        assert_eq!(bit_rep.j_star, j_exact);
    }

    #[test]
    fn jstar_fallback_is_reachable_and_certified() {
        // C' = 0 pins F = delta; the upper sandwich slack can push every
        // stored T(n, j) above 0, exercising the j* = s + 1 branch.
        let mut seen_fallback = false;
        for den in 2..12i64 {
            let d = dist(&[(0, 1, den), (1, den - 1, den)]);
            let inst = normalize(vec![d.clone(), d], 0).unwrap();
            let eps = rat(1, 3);
            let rep = run_fptas(&inst, &eps).unwrap();
            let truth = rat(1, den * den);
            let ratio = &rep.estimate / &truth;
            assert!(
                ratio >= rat(2, 3) && ratio <= rat(4, 3),
                "den {den}: ratio {ratio}"
            );
            if rep.j_star == rep.s + 1 {
                seen_fallback = true;
                assert_eq!(rep.estimate, rep.q.pow(-(rep.s as i32)));
            }
        }
        assert!(seen_fallback, "no instance exercised the j* fallback");
    }

    #[test]
    fn float_mode_runs_and_reports_its_mode() {
        let inst = normalize(vec![coin(), coin()], 1).unwrap();
        let rep = run_fptas_float(&inst, &rat(1, 10), 1).unwrap();
        assert_eq!(rep.mode, ArithmeticMode::Float);
        assert!(rep.estimate.is_positive() && rep.estimate <= rat(1, 1));
    }
}
