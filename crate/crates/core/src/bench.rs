//! Deterministic instance generators and the benchmark sweep.
//!
//! The sweep drives the estimators over generated instance families and
//! emits a CSV table (one row per `(n, epsilon, method)` cell) for external
//! plotting. Instances are generated from seeds only, so repeated sweeps
//! reproduce the same table byte for byte (timing columns stay `-` unless
//! explicitly requested).

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use num::{BigInt, BigRational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{exact_probability, monte_carlo};
use crate::distributions::{normalize, DiscreteDistribution};
use crate::engine::{run_fptas_bit_mode_traced, run_fptas_traced, BitModeOverrides};
use crate::error::{Error, Result};
use crate::rational::decimal_string;

/// Estimation method selector, shared by the CLI and the sweep.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Fptas,
    FptasBit,
    Exact,
    Mc,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fptas => "fptas",
            Method::FptasBit => "fptas-bit",
            Method::Exact => "exact",
            Method::Mc => "mc",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fptas" => Ok(Method::Fptas),
            "fptas-bit" => Ok(Method::FptasBit),
            "exact" => Ok(Method::Exact),
            "mc" => Ok(Method::Mc),
            other => Err(Error::Parameter(format!(
                "unknown method {other:?} (expected fptas, fptas-bit, exact or mc)"
            ))),
        }
    }
}

/// Instance families the sweep can generate.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    /// iid fair coins on {0, 1}.
    Bernoulli,
    /// iid uniform on {0..=max_value}.
    Uniform,
    /// Independent draws of support points and rational masses.
    RandomSupport,
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(GeneratorKind::Bernoulli),
            "uniform" => Ok(GeneratorKind::Uniform),
            "random-support" => Ok(GeneratorKind::RandomSupport),
            other => Err(Error::Parameter(format!(
                "unknown generator {other:?} (expected bernoulli, uniform or random-support)"
            ))),
        }
    }
}

/// Bounds for the random-support generator.
#[derive(Copy, Clone, Debug)]
pub struct RandomSupportConfig {
    pub max_points: usize,
    pub min_value: i64,
    pub max_value: i64,
    pub max_weight: u64,
}

impl Default for RandomSupportConfig {
    fn default() -> Self {
        Self {
            max_points: 8,
            min_value: 0,
            max_value: 20,
            max_weight: 16,
        }
    }
}

pub fn fair_coin() -> DiscreteDistribution {
    DiscreteDistribution::from_triples(&[(0, 1, 2), (1, 1, 2)]).unwrap()
}

pub fn uniform_dist(max_value: i64) -> DiscreteDistribution {
    let den = max_value + 1;
    DiscreteDistribution::new(
        (0..=max_value)
            .map(|v| (v, BigRational::new(BigInt::from(1), BigInt::from(den))))
            .collect(),
    )
    .unwrap()
}

/// One random distribution: a sorted set of distinct values in
/// `[min_value, max_value]` with masses `w_i / sum(w)` for integer weights
/// `w_i in [1, max_weight]`.
pub fn random_support_dist<R: Rng>(rng: &mut R, cfg: &RandomSupportConfig) -> DiscreteDistribution {
    let span = (cfg.max_value - cfg.min_value + 1) as usize;
    let k = rng.gen_range(1..=cfg.max_points.min(span));
    let mut values = std::collections::BTreeSet::new();
    while values.len() < k {
        values.insert(rng.gen_range(cfg.min_value..=cfg.max_value));
    }
    let weights: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=cfg.max_weight)).collect();
    let total: u64 = weights.iter().sum();
    DiscreteDistribution::new(
        values
            .into_iter()
            .zip(weights)
            .map(|(v, w)| (v, BigRational::new(BigInt::from(w), BigInt::from(total))))
            .collect(),
    )
    .expect("generated masses are valid")
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator rng for instance `index` of size `n`.
pub fn instance_rng(seed: u64, n: usize, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, (n as u64) << 32 | index))
}

/// Generates the `index`-th instance of size `n` for a family.
pub fn generate(
    kind: GeneratorKind,
    n: usize,
    seed: u64,
    index: u64,
    cfg: &RandomSupportConfig,
) -> Vec<DiscreteDistribution> {
    let mut rng = instance_rng(seed, n, index);
    match kind {
        GeneratorKind::Bernoulli => vec![fair_coin(); n],
        GeneratorKind::Uniform => vec![uniform_dist(cfg.max_value.max(1)); n],
        GeneratorKind::RandomSupport => (0..n).map(|_| random_support_dist(&mut rng, cfg)).collect(),
    }
}

/// How the sweep picks the threshold for a generated instance.
#[derive(Copy, Clone, Debug)]
pub enum ThresholdRule {
    /// Half of the maximum possible sum (rounded down).
    HalfMax,
    /// A fixed threshold.
    Fixed(i64),
}

/// A benchmark sweep specification.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub generator: GeneratorKind,
    pub generator_cfg: RandomSupportConfig,
    pub ns: Vec<usize>,
    pub epsilons: Vec<BigRational>,
    pub methods: Vec<Method>,
    pub threshold: ThresholdRule,
    pub seed: u64,
    pub instances_per_n: u64,
    pub mc_samples: u64,
    pub mc_confidence_delta: f64,
    pub max_exact_cells: u64,
    pub parallelism: usize,
    /// Emit wall-clock milliseconds instead of `-` in the timing column.
    pub timings: bool,
}

pub const SWEEP_HEADER: &str =
    "generator,n,instance,epsilon,method,threshold,estimate,oracle_calls,wall_ms";

/// Runs the sweep, writing one CSV row per `(n, instance, epsilon, method)`.
pub fn run_sweep<W: Write>(sweep: &Sweep, out: &mut W) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for &n in &sweep.ns {
        for index in 0..sweep.instances_per_n {
            let dists = generate(sweep.generator, n, sweep.seed, index, &sweep.generator_cfg);
            let max_sum: i64 = dists.iter().map(|d| d.max_value()).sum();
            let threshold = match sweep.threshold {
                ThresholdRule::HalfMax => max_sum.div_euclid(2),
                ThresholdRule::Fixed(c) => c,
            };
            for epsilon in &sweep.epsilons {
                for &method in &sweep.methods {
                    let instance = normalize(dists.clone(), threshold)?;
                    let started = Instant::now();
                    let (estimate, calls) = if let Some(tr) = instance.trivial_answer() {
                        (
                            match tr {
                                crate::distributions::TrivialAnswer::Zero => "0".to_string(),
                                crate::distributions::TrivialAnswer::One => "1".to_string(),
                            },
                            0,
                        )
                    } else {
                        match method {
                            Method::Fptas => {
                                let (rep, _) =
                                    run_fptas_traced(&instance, epsilon, sweep.parallelism)?;
                                (decimal_string(&rep.estimate, 13), rep.oracle_calls)
                            }
                            Method::FptasBit => {
                                let (rep, _) = run_fptas_bit_mode_traced(
                                    &instance,
                                    epsilon,
                                    &BitModeOverrides::default(),
                                    sweep.parallelism,
                                )?;
                                (decimal_string(&rep.estimate, 13), rep.oracle_calls)
                            }
                            Method::Exact => {
                                let value = exact_probability(
                                    &instance,
                                    instance.threshold(),
                                    sweep.max_exact_cells,
                                )?;
                                (decimal_string(&value, 13), 0)
                            }
                            Method::Mc => {
                                let rep = monte_carlo(
                                    &instance,
                                    instance.threshold(),
                                    sweep.mc_samples,
                                    sweep.seed,
                                    sweep.mc_confidence_delta,
                                )?;
                                (format!("{}", rep.estimate), 0)
                            }
                        }
                    };
                    let wall = if sweep.timings {
                        format!("{:.3}", started.elapsed().as_secs_f64() * 1e3)
                    } else {
                        "-".to_string()
                    };
                    writeln!(
                        out,
                        "{},{n},{index},{},{},{threshold},{estimate},{calls},{wall}",
                        match sweep.generator {
                            GeneratorKind::Bernoulli => "bernoulli",
                            GeneratorKind::Uniform => "uniform",
                            GeneratorKind::RandomSupport => "random-support",
                        },
                        crate::rational::ratio_string(epsilon),
                        method.as_str(),
                    )?;
                }
            }
        }
    }
    Ok(())
}
