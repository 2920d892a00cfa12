//! The merged run configuration: defaults, then the config file, then flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sfcoeff_core::threshold::ScanEntry;
use sfcoeff_core::weights::WeightFamily;

use crate::Failure;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Plotdata,
}

/// Everything that determines an artifact. Thread count and execution mode are not part of
/// it because they never change the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub k: Vec<u32>,
    #[serde(rename = "N")]
    pub level: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    pub weight_family: WeightFamily,
    pub beta: f64,
    pub weight_tolerance: f64,
    pub x: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    /// Dirichlet cutoff of the contour oracle; ⌈x⌉ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_cutoff: Option<u64>,
    /// Prime cutoff for the constant C(f, ω).
    pub c_cutoff: u64,
    pub t_max: f64,
    pub sigma0: f64,
    pub eps: f64,
    pub a0: f64,
    pub search_limit: usize,
    pub prec: usize,
    pub validation_tolerance: f64,
    pub grid: Vec<ScanEntry>,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nf_output: Option<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            k: Vec::new(),
            level: Vec::new(),
            spec: None,
            f: None,
            g: None,
            data: None,
            weight_family: WeightFamily::ExpBump,
            beta: 1.0,
            weight_tolerance: sfcoeff_core::weights::DEFAULT_TOLERANCE,
            x: vec![50.0, 100.0, 500.0],
            x_min: 1e3,
            x_max: 1e5,
            x_points: 12,
            p_cutoff: None,
            c_cutoff: 100_000,
            t_max: 400.0,
            sigma0: 2.0,
            eps: sfcoeff_core::threshold::DEFAULT_EPS,
            a0: 1.0,
            search_limit: 200,
            prec: 60,
            validation_tolerance: sfcoeff_core::newform_io::DEFAULT_TOLERANCE,
            grid: Vec::new(),
            format: Format::Csv,
            output: None,
            nf_output: None,
            seed: 0,
        }
    }
}

/// Flag values that were given on the command line, keyed like the config file.
#[derive(Default)]
pub struct Overrides(toml::Table);

impl Overrides {
    pub fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.0.insert(key.into(), toml::Value::try_from(v).expect("flag values are representable in TOML"));
        }
    }

    pub fn set_list<T: Serialize>(&mut self, key: &str, values: &[T]) {
        if !values.is_empty() {
            self.set(key, Some(values));
        }
    }
}

impl RunConfig {
    pub fn merge(command: &str, file: Option<&Path>, flags: Overrides) -> Result<Self, Failure> {
        let mut table = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
            let parsed: toml::Table = toml::from_str(&text).map_err(|e| Failure::Usage(format!("config file {}: {e}", path.display())))?;
            table.extend(parsed);
        }
        table.extend(flags.0);
        table.insert("command".into(), toml::Value::String(command.into()));
        table.try_into().map_err(|e: toml::de::Error| Failure::Usage(format!("invalid configuration: {}", e.message())))
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json()))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn single_k(&self) -> Result<u32, Failure> {
        single(&self.k, "--k")
    }

    pub fn single_level(&self) -> Result<u64, Failure> {
        single(&self.level, "--N")
    }
}

fn single<T: Copy>(v: &[T], flag: &str) -> Result<T, Failure> {
    match v {
        [x] => Ok(*x),
        [] => Err(Failure::Usage(format!("missing required {flag}"))),
        _ => Err(Failure::Usage(format!("{flag} takes a single value for this command"))),
    }
}

/// Parses `k:N:spec` entries separated by `;`.
pub fn parse_grid(text: &str) -> Result<Vec<ScanEntry>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let mut parts = item.splitn(3, ':');
            let (k, n, spec) = (parts.next(), parts.next(), parts.next());
            match (k.and_then(|k| k.trim().parse().ok()), n.and_then(|n| n.trim().parse().ok()), spec) {
                (Some(weight), Some(level), Some(spec)) if !spec.trim().is_empty() => Ok(ScanEntry { weight, level, spec: spec.trim().into() }),
                _ => Err(format!("grid entry {item:?} is not of the form k:N:spec")),
            }
        })
        .collect()
}
