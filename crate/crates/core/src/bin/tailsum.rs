//! Command-line front end.
//!
//! `tailsum run` estimates one instance file; `tailsum bench` sweeps
//! generated instance families and prints a CSV table. Exit codes are part
//! of the interface:
//!
//! * 0 — success
//! * 1 — internal failure (inconsistent oracle, unexpected state)
//! * 2 — input problem (unreadable file, malformed instance)
//! * 3 — parameter problem (bad epsilon, method/flag combination, ...)
//! * 4 — exact-convolution size guard exceeded

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num::BigRational;

use tailsum::baselines::{exact_probability, monte_carlo, DEFAULT_MAX_EXACT_CELLS};
use tailsum::bench::{
    run_sweep, GeneratorKind, Method, RandomSupportConfig, Sweep, ThresholdRule,
};
use tailsum::distributions::normalize;
use tailsum::engine::{
    run_fptas_bit_mode_traced, run_fptas_float, run_fptas_traced, BitModeOverrides,
};
use tailsum::error::Error;
use tailsum::instance::read_instance;
use tailsum::rational::parse_rational;
use tailsum::report::{
    append_timing, render_estimate, render_exact, render_mc, render_trivial, trace_json,
    InstanceSummary,
};

#[derive(Parser)]
#[command(name = "tailsum", version, about = "Certified estimation of Pr[sum of independent integer random variables <= C]")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one instance file.
    Run(RunArgs),
    /// Sweep generated instance families and print a CSV table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Instance file (TOML, schema "tailsum/1").
    instance: PathBuf,

    /// Estimation method: fptas, fptas-bit, exact or mc.
    #[arg(long, default_value = "fptas")]
    method: String,

    /// Relative accuracy epsilon in (0, 1], as "1/10" or "0.1".
    #[arg(long, default_value = "1/10")]
    epsilon: String,

    /// Override the threshold C from the instance file.
    #[arg(long)]
    threshold: Option<i64>,

    /// Arithmetic for the fptas method: rational (certified) or float.
    #[arg(long, default_value = "rational")]
    arithmetic: String,

    /// Monte-Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,

    /// Seed for Monte-Carlo sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Monte-Carlo confidence failure probability (Hoeffding delta).
    #[arg(long, default_value_t = 1e-3)]
    mc_delta: f64,

    /// Override the bit-mode oracle precision L (refused below the
    /// certified floor).
    #[arg(long = "bit-L")]
    bit_l: Option<u64>,

    /// Dump the DP table as JSON to this file (fptas and fptas-bit only).
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Worker threads for DP rows (1 = sequential; results are identical).
    #[arg(long, default_value_t = 1)]
    parallelism: usize,

    /// Size guard for the exact method, in table cells.
    #[arg(long, default_value_t = DEFAULT_MAX_EXACT_CELLS)]
    max_exact_cells: u64,

    /// Append wall-clock timing as a trailing comment line.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance family: bernoulli, uniform or random-support.
    #[arg(long = "gen", default_value = "bernoulli")]
    generator: String,

    /// Comma-separated list of n values.
    #[arg(long = "n", default_value = "4,8,16", value_delimiter = ',')]
    ns: Vec<usize>,

    /// Comma-separated list of epsilon values.
    #[arg(long = "epsilon", default_value = "1/10", value_delimiter = ',')]
    epsilons: Vec<String>,

    /// Comma-separated list of methods.
    #[arg(long = "methods", default_value = "fptas", value_delimiter = ',')]
    methods: Vec<String>,

    /// Threshold rule: "half" (half the maximum sum) or an integer.
    #[arg(long = "c", default_value = "half")]
    threshold: String,

    /// Instances generated per n.
    #[arg(long, default_value_t = 1)]
    instances: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 100_000)]
    samples: u64,

    #[arg(long, default_value_t = 1e-3)]
    mc_delta: f64,

    #[arg(long, default_value_t = 1)]
    parallelism: usize,

    #[arg(long, default_value_t = DEFAULT_MAX_EXACT_CELLS)]
    max_exact_cells: u64,

    /// random-support generator: maximum support size.
    #[arg(long, default_value_t = 8)]
    max_points: usize,

    /// random-support generator: smallest support value.
    #[arg(long, default_value_t = 0)]
    min_value: i64,

    /// generator: largest support value.
    #[arg(long, default_value_t = 20)]
    max_value: i64,

    /// random-support generator: largest integer mass weight.
    #[arg(long, default_value_t = 16)]
    max_weight: u64,

    /// Emit wall-clock milliseconds in the timing column.
    #[arg(long)]
    timings: bool,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::EmptyInstance | Error::InvalidDistribution(_) | Error::Io(_) => 2,
        Error::Parameter(_) => 3,
        Error::SizeGuard { .. } => 4,
        Error::BrokenOracle(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("tailsum: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn parse_epsilon(text: &str) -> Result<BigRational, Error> {
    parse_rational(text).map_err(|_| Error::Parameter(format!("bad epsilon {text:?}")))
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let method: Method = args.method.parse()?;
    let parsed = read_instance(&args.instance)?;
    let threshold = args.threshold.unwrap_or(parsed.threshold);
    let instance = normalize(parsed.distributions, threshold)?;
    let summary = InstanceSummary::new(&instance, threshold);

    if args.trace.is_some() && !matches!(method, Method::Fptas | Method::FptasBit) {
        return Err(Error::Parameter(
            "--trace needs a DP method (fptas or fptas-bit)".into(),
        ));
    }
    let float_mode = match args.arithmetic.as_str() {
        "rational" => false,
        "float" => match method {
            Method::Fptas => true,
            _ => {
                return Err(Error::Parameter(
                    "--arithmetic float only applies to --method fptas".into(),
                ))
            }
        },
        other => {
            return Err(Error::Parameter(format!(
                "unknown arithmetic {other:?} (expected rational or float)"
            )))
        }
    };
    if float_mode && args.trace.is_some() {
        return Err(Error::Parameter("--trace is not available in float mode".into()));
    }

    let started = Instant::now();
    let mut doc = if let Some(answer) = instance.trivial_answer() {
        render_trivial(method.as_str(), &summary, answer)
    } else {
        match method {
            Method::Fptas if float_mode => {
                let epsilon = parse_epsilon(&args.epsilon)?;
                let rep = run_fptas_float(&instance, &epsilon, args.parallelism)?;
                render_estimate("fptas", &summary, &rep)
            }
            Method::Fptas => {
                let epsilon = parse_epsilon(&args.epsilon)?;
                let (rep, trace) = run_fptas_traced(&instance, &epsilon, args.parallelism)?;
                if let Some(path) = &args.trace {
                    std::fs::write(path, trace_json(&trace, &rep.q, &rep.epsilon))?;
                }
                render_estimate("fptas", &summary, &rep)
            }
            Method::FptasBit => {
                let epsilon = parse_epsilon(&args.epsilon)?;
                let overrides = BitModeOverrides {
                    oracle_bits: args.bit_l,
                };
                let (rep, trace) =
                    run_fptas_bit_mode_traced(&instance, &epsilon, &overrides, args.parallelism)?;
                if let Some(path) = &args.trace {
                    std::fs::write(path, trace_json(&trace, &rep.q, &rep.epsilon))?;
                }
                render_estimate("fptas-bit", &summary, &rep)
            }
            Method::Exact => {
                let value =
                    exact_probability(&instance, instance.threshold(), args.max_exact_cells)?;
                render_exact(&summary, &value)
            }
            Method::Mc => {
                let rep = monte_carlo(
                    &instance,
                    instance.threshold(),
                    args.samples,
                    args.seed,
                    args.mc_delta,
                )?;
                render_mc(&summary, &rep)
            }
        }
    };
    if args.timings {
        append_timing(&mut doc, started.elapsed().as_secs_f64() * 1e3);
    }
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(doc.as_bytes())?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let generator: GeneratorKind = args.generator.parse()?;
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<Vec<Method>, _>>()?;
    let epsilons = args
        .epsilons
        .iter()
        .map(|e| parse_epsilon(e))
        .collect::<Result<Vec<_>, _>>()?;
    let threshold = match args.threshold.as_str() {
        "half" => ThresholdRule::HalfMax,
        text => ThresholdRule::Fixed(
            text.parse::<i64>()
                .map_err(|_| Error::Parameter(format!("bad threshold rule {text:?}")))?,
        ),
    };
    if args.ns.is_empty() {
        return Err(Error::Parameter("need at least one n".into()));
    }
    let sweep = Sweep {
        generator,
        generator_cfg: RandomSupportConfig {
            max_points: args.max_points,
            min_value: args.min_value,
            max_value: args.max_value,
            max_weight: args.max_weight,
        },
        ns: args.ns,
        epsilons,
        methods,
        threshold,
        seed: args.seed,
        instances_per_n: args.instances.max(1),
        mc_samples: args.samples,
        mc_confidence_delta: args.mc_delta,
        max_exact_cells: args.max_exact_cells,
        parallelism: args.parallelism,
        timings: args.timings,
    };
    let mut stdout = std::io::stdout().lock();
    run_sweep(&sweep, &mut stdout)?;
    Ok(())
}
