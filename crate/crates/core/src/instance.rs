//! The instance file format.
//!
//! Instances are TOML documents with a schema tag, an integer threshold and
//! one `[[distribution]]` table per variable:
//!
//! ```toml
//! schema = "tailsum/1"
//! threshold = 7
//!
//! [[distribution]]
//! points = [{ value = 1, p = "1/6" }, { value = 2, p = "1/6" }]
//! ```
//!
//! Probabilities are strings — `"num/den"` fractions or terminating decimals
//! — and parse to exact rationals. TOML floats are deliberately not accepted
//! for probabilities: a binary float is already a rounding of what the user
//! wrote, and exactness of the masses is load-bearing for the rational mode.

use num::BigRational;
use serde::Deserialize;

use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::rational::{parse_rational, ratio_string};

pub const INSTANCE_SCHEMA: &str = "tailsum/1";

/// A parsed instance: raw (pre-normalization) distributions and threshold.
#[derive(Clone, Debug)]
pub struct Instance {
    pub distributions: Vec<DiscreteDistribution>,
    pub threshold: i64,
}

#[derive(Deserialize)]
struct InstanceDoc {
    schema: String,
    threshold: i64,
    #[serde(rename = "distribution", default)]
    distributions: Vec<DistributionDoc>,
}

#[derive(Deserialize)]
struct DistributionDoc {
    points: Vec<PointDoc>,
}

#[derive(Deserialize)]
struct PointDoc {
    value: i64,
    p: String,
}

/// Parses an instance document.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let doc: InstanceDoc =
        toml::from_str(text).map_err(|e| Error::Parse(format!("instance file: {e}")))?;
    if doc.schema != INSTANCE_SCHEMA {
        return Err(Error::Parse(format!(
            "unsupported schema {:?}, expected {INSTANCE_SCHEMA:?}",
            doc.schema
        )));
    }
    if doc.distributions.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let distributions = doc
        .distributions
        .into_iter()
        .enumerate()
        .map(|(idx, d)| {
            let points: Vec<(i64, BigRational)> = d
                .points
                .into_iter()
                .map(|pt| Ok((pt.value, parse_rational(&pt.p)?)))
                .collect::<Result<_>>()?;
            DiscreteDistribution::new(points).map_err(|e| match e {
                Error::InvalidDistribution(msg) => {
                    Error::InvalidDistribution(format!("distribution {}: {msg}", idx + 1))
                }
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Instance {
        distributions,
        threshold: doc.threshold,
    })
}

/// Reads and parses an instance file.
pub fn read_instance(path: &std::path::Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text)
}

/// Serializes an instance back to its document form. Probabilities come out
/// as canonical reduced fractions; values and masses survive a round trip
/// exactly.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("schema = \"{INSTANCE_SCHEMA}\"\n"));
    out.push_str(&format!("threshold = {}\n", instance.threshold));
    for dist in &instance.distributions {
        out.push_str("\n[[distribution]]\npoints = [\n");
        for (value, mass) in dist.points() {
            out.push_str(&format!(
                "  {{ value = {value}, p = \"{}\" }},\n",
                ratio_string(mass)
            ));
        }
        out.push_str("]\n");
    }
    out
}
