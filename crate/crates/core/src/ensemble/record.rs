use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    #[serde(rename = "2-atom")]
    TwoAtom,
    #[serde(rename = "4-atom")]
    FourAtom,
    #[serde(rename = "ordered")]
    Ordered,
}

impl ModelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::TwoAtom => "2-atom",
            ModelTag::FourAtom => "4-atom",
            ModelTag::Ordered => "ordered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub model: ModelTag,
    /// Sequence or protocol label.
    pub label: String,
    pub seed: u64,
    pub samples: usize,
    /// Hash of everything the record was computed from.
    pub config_hash: String,
}

/// Populations on a time grid. `s_population` and `s_prime_population` are
/// per-atom fractions, so `p + s + s' = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRecord {
    /// µs.
    pub times: Vec<f64>,
    pub p_population: Vec<f64>,
    pub s_population: Vec<f64>,
    pub s_prime_population: Vec<f64>,
    /// Standard error of the Monte Carlo mean of `p_population`.
    pub p_stderr: Vec<f64>,
    pub metadata: RecordMetadata,
}

/// First 16 hex digits of the SHA-256 of the value's JSON form.
pub fn config_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config types serialise to JSON");
    hex::encode(Sha256::digest(&json))[..16].to_string()
}

fn write_failed<E: std::fmt::Display>(e: E) -> Error {
    Error::invalid(format!("write failed: {e}"))
}

pub(crate) fn write_header<W: Write>(w: &mut W, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(w, "# {k}: {v}").map_err(write_failed)?;
    }
    Ok(())
}

impl RecordMetadata {
    pub fn header(&self) -> Vec<(String, String)> {
        vec![
            ("model".into(), self.model.as_str().into()),
            ("label".into(), self.label.clone()),
            ("seed".into(), self.seed.to_string()),
            ("samples".into(), self.samples.to_string()),
            ("config_hash".into(), self.config_hash.clone()),
            ("qpm_core_version".into(), env!("CARGO_PKG_VERSION").into()),
        ]
    }
}

impl EvolutionRecord {
    /// CSV with a `#` header block: metadata first, then `extra`.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[(String, String)]) -> Result<()> {
        write_header(&mut w, &self.metadata.header())?;
        write_header(&mut w, extra)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "time_us",
            "p_population",
            "s_population",
            "s_prime_population",
            "p_stderr",
        ])
        .map_err(write_failed)?;
        for i in 0..self.times.len() {
            csv.write_record([
                self.times[i].to_string(),
                self.p_population[i].to_string(),
                self.s_population[i].to_string(),
                self.s_prime_population[i].to_string(),
                self.p_stderr[i].to_string(),
            ])
            .map_err(write_failed)?;
        }
        csv.flush().map_err(write_failed)
    }
}
