//! Report documents.
//!
//! Every run emits a line-oriented `key: value` text document with a schema
//! tag on the first line. All keys are deterministic functions of the run
//! configuration and the instance; wall-clock timing, being inherently
//! volatile, is only appended on request and as a `#`-prefixed comment line,
//! so default documents are byte-identical across repeated runs.

use num::BigRational;
use std::fmt::Write as _;

use crate::baselines::McReport;
use crate::distributions::{NormalizedInstance, TrivialAnswer};
use crate::engine::{EstimateReport, FptasTrace};
use crate::rational::{decimal_string, ratio_string};

pub const REPORT_SCHEMA: &str = "tailsum-report/1";
pub const TRACE_SCHEMA: &str = "tailsum-trace/1";

const DECIMAL_DIGITS: usize = 13;

/// Instance-level fields shared by every method's report.
#[derive(Clone, Debug)]
pub struct InstanceSummary {
    pub n: usize,
    pub threshold: i64,
    pub shifted_threshold: i64,
    pub shift_total: i64,
}

impl InstanceSummary {
    pub fn new(instance: &NormalizedInstance, raw_threshold: i64) -> Self {
        Self {
            n: instance.n(),
            threshold: raw_threshold,
            shifted_threshold: instance.threshold(),
            shift_total: instance.shift_total(),
        }
    }
}

fn header(out: &mut String, method: &str, inst: &InstanceSummary) {
    let _ = writeln!(out, "schema: {REPORT_SCHEMA}");
    let _ = writeln!(out, "method: {method}");
    let _ = writeln!(out, "n: {}", inst.n);
    let _ = writeln!(out, "threshold: {}", inst.threshold);
    let _ = writeln!(out, "shift-total: {}", inst.shift_total);
    let _ = writeln!(out, "threshold-shifted: {}", inst.shifted_threshold);
}

/// Renders an estimator report.
pub fn render_estimate(method: &str, inst: &InstanceSummary, rep: &EstimateReport) -> String {
    let mut out = String::new();
    header(&mut out, method, inst);
    let _ = writeln!(out, "trivial: none");
    let _ = writeln!(out, "mode: {}", rep.mode.as_str());
    let _ = writeln!(out, "epsilon: {}", ratio_string(&rep.epsilon));
    let _ = writeln!(out, "q: {}", ratio_string(&rep.q));
    let _ = writeln!(out, "s: {}", rep.s);
    let _ = writeln!(out, "j-star: {}", rep.j_star);
    if let Some((ell_q, bits, ell_ans)) = rep.bit_precisions {
        let _ = writeln!(out, "bit-lq: {ell_q}");
        let _ = writeln!(out, "bit-L: {bits}");
        let _ = writeln!(out, "bit-lans: {ell_ans}");
    }
    let _ = writeln!(out, "estimate: {}", ratio_string(&rep.estimate));
    let _ = writeln!(
        out,
        "estimate-decimal: {}",
        decimal_string(&rep.estimate, DECIMAL_DIGITS)
    );
    let _ = writeln!(
        out,
        "certified-lower: {}",
        decimal_string(&rep.certified_lower, DECIMAL_DIGITS)
    );
    let _ = writeln!(
        out,
        "certified-upper: {}",
        decimal_string(&rep.certified_upper, DECIMAL_DIGITS)
    );
    let _ = writeln!(out, "oracle-calls: {}", rep.oracle_calls);
    out
}

/// Renders the short-circuit report for a trivially decided instance.
pub fn render_trivial(method: &str, inst: &InstanceSummary, answer: TrivialAnswer) -> String {
    let mut out = String::new();
    header(&mut out, method, inst);
    let (tag, value) = match answer {
        TrivialAnswer::Zero => ("zero", "0"),
        TrivialAnswer::One => ("one", "1"),
    };
    let _ = writeln!(out, "trivial: {tag}");
    let _ = writeln!(out, "estimate: {value}");
    let _ = writeln!(out, "estimate-decimal: {value}");
    let _ = writeln!(out, "certified-lower: {value}");
    let _ = writeln!(out, "certified-upper: {value}");
    out
}

/// Renders an exact-convolution report.
pub fn render_exact(inst: &InstanceSummary, value: &BigRational) -> String {
    let mut out = String::new();
    header(&mut out, "exact", inst);
    let _ = writeln!(out, "trivial: none");
    let _ = writeln!(out, "estimate: {}", ratio_string(value));
    let _ = writeln!(out, "estimate-decimal: {}", decimal_string(value, DECIMAL_DIGITS));
    out
}

/// Renders a Monte-Carlo report.
pub fn render_mc(inst: &InstanceSummary, rep: &McReport) -> String {
    let mut out = String::new();
    header(&mut out, "mc", inst);
    let _ = writeln!(out, "trivial: none");
    let _ = writeln!(out, "estimate-decimal: {}", rep.estimate);
    let _ = writeln!(out, "hits: {}", rep.hits);
    let _ = writeln!(out, "samples: {}", rep.samples);
    let _ = writeln!(out, "radius: {}", rep.radius);
    let _ = writeln!(out, "confidence-delta: {}", rep.confidence_delta);
    let _ = writeln!(out, "seed: {}", rep.seed);
    out
}

/// Appends the volatile timing line (comment-prefixed; see module docs).
pub fn append_timing(doc: &mut String, wall_ms: f64) {
    let _ = writeln!(doc, "# wall-ms: {wall_ms:.3}");
}

/// Machine-readable trace of a DP run as a JSON document.
pub fn trace_json(trace: &FptasTrace, q: &BigRational, epsilon: &BigRational) -> String {
    let value = serde_json::json!({
        "schema": TRACE_SCHEMA,
        "q": ratio_string(q),
        "epsilon": ratio_string(epsilon),
        "s": trace.table.s(),
        "n": trace.table.n(),
        "j_star": trace.j_star,
        "rows": trace.table.rows(),
        "cell_calls": trace.cell_calls,
    });
    serde_json::to_string_pretty(&value).expect("trace serialization cannot fail")
}
