//! Flags, config files and their merge.

use clap::Args;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};
use std::path::PathBuf;

use crate::CliError;

/// Options shared by every subcommand.  A JSON config file uses the same
/// keys as the long flags; flags given on the command line win.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Opts {
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Matrix weight file.
    #[arg(long)]
    pub weight: Option<PathBuf>,
    /// Set-function file.
    #[arg(long)]
    pub setfn: Option<PathBuf>,
    /// Output path (a directory for `factorize`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG rendering of the output bodies (d = 2).
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub w0: Option<PathBuf>,
    #[arg(long)]
    pub w1: Option<PathBuf>,
    /// Vector field file for `f`.
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// Vector field file for `g`.
    #[arg(long)]
    pub g: Option<PathBuf>,
    /// Scalar field used as the iteration seed.
    #[arg(long)]
    pub seed_field: Option<PathBuf>,

    #[arg(long, value_parser = parse_exponent)]
    #[serde(default, with = "opt_exponent")]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    #[serde(default, with = "opt_exponent")]
    pub p0: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    #[serde(default, with = "opt_exponent")]
    pub q0: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    #[serde(default, with = "opt_exponent")]
    pub q1: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,

    /// reducing, roudenko, a1, ainfty, a1k or scalar-oracle.
    #[arg(long)]
    pub variant: Option<String>,
    /// Weight family for `gen-weight`: identity, power or rotating.
    #[arg(long)]
    pub kind: Option<String>,
    /// Pair generator for `demo` and `extrapolate`.
    #[arg(long)]
    pub op: Option<String>,

    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub origin: Option<Vec<f64>>,
    #[arg(long)]
    pub size: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_slope: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_slope: Option<f64>,

    #[arg(long)]
    pub directions: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub safety: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid shift in unit coordinates, e.g. `0.3333333333333333`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub shift: Option<Vec<f64>>,
    /// Leave the base cube out of the maximal operator.
    #[arg(long)]
    #[serde(default)]
    pub no_base_cube: bool,
    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    mwlab::io::exponent::parse(s)
}

mod opt_exponent {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match p {
            Some(p) => mwlab::io::exponent::serialize(p, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "mwlab::io::exponent")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

impl Opts {
    /// Overlays the flags onto the config file named by `--config`.
    pub fn resolve(self) -> Result<Opts, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut base: Map<String, Value> = match serde_json::from_str(&text) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(CliError::Validation("config file must hold a JSON object".into())),
            Err(e) => return Err(CliError::Validation(format!("config parse error: {e}"))),
        };
        let flags = match serde_json::to_value(&self) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("options serialize to an object"),
        };
        for (k, v) in flags {
            let unset = v.is_null() || v == Value::Bool(false);
            if !unset {
                base.insert(k, v);
            }
        }
        let mut merged: Opts = serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Validation(format!("config error: {e}")))?;
        merged.config = Some(path);
        Ok(merged)
    }

    /// The resolved options as embedded in reports, unset keys omitted.
    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("options serialize");
        if let Value::Object(m) = &mut v {
            m.retain(|_, x| !x.is_null());
            if let Some(c) = &self.config {
                m.insert("config".into(), Value::String(c.display().to_string()));
            }
        }
        v
    }
}

/// Fetches a required option or fails with a usage error.
pub fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing required option --{flag}")))
}
