//! Command line and key=value configuration handling.
//!
//! A run is described by an optional plain-text config file plus flags;
//! flags win over file entries. Mesh sizes accept `2^-3`, `1/8` or `0.125`.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::Parser;
use newton_schur::{Error, MeshSize};

#[derive(Parser, Debug, Clone)]
#[command(
    name = "newton-schur",
    about = "Smallest-eigenvalue experiments via the Newton-Schur interface iteration"
)]
pub struct Cli {
    /// Optional key=value config file; flags override its entries.
    pub config: Option<PathBuf>,

    /// Domain: square | cube | lshape.
    #[arg(long)]
    pub domain: Option<String>,

    /// Coarse mesh sizes, comma separated (e.g. "2^-1,2^-2").
    #[arg(long = "H", value_name = "LIST")]
    pub coarse: Option<String>,

    /// Fine mesh sizes, comma separated.
    #[arg(long = "h", value_name = "LIST")]
    pub fine: Option<String>,

    /// Sweep kind: fixed-H | fixed-h | single.
    #[arg(long)]
    pub sweep: Option<String>,

    /// Relative-error stopping threshold.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Newton step cap.
    #[arg(long)]
    pub max_steps: Option<usize>,

    /// Coefficient: laplace | varcoef.
    #[arg(long)]
    pub coefficient: Option<String>,

    /// Start-vector seed for the eigensolvers.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Record per-step gap and extension-ratio measurements in the report.
    #[arg(long)]
    pub diagnostics: bool,

    /// Dump the assembled free-node matrices in coordinate format.
    #[arg(long)]
    pub dump_matrices: bool,

    /// Dump the mesh in plain-text node/element format.
    #[arg(long)]
    pub dump_mesh: bool,

    /// Dump the dense interface operator at the initial shift (small
    /// interfaces only).
    #[arg(long)]
    pub dump_schur: bool,

    /// Lift the default fine-mesh caps (2D 2^-8, 3D 2^-5) by one level.
    #[arg(long)]
    pub allow_large: bool,

    /// Output directory for CSV and report files.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Parsed key=value file. Unknown keys are rejected so typos do not pass
/// silently.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub entries: HashMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "domain",
    "H",
    "h",
    "sweep",
    "tol",
    "max-steps",
    "coefficient",
    "seed",
    "diagnostics",
    "dump-matrices",
    "dump-mesh",
    "dump-schur",
    "allow-large",
    "out",
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut entries = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {} is not key=value: {raw}", lineno + 1))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "unknown config key `{key}` on line {}",
                    lineno + 1
                )));
            }
            entries.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, Error> {
        match self.get(key) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => Err(Error::Config(format!(
                "config key `{key}` has non-boolean value `{other}`"
            ))),
        }
    }
}

/// Accepts `2^-3`, `1/8` or `0.125`.
pub fn parse_mesh_size(text: &str) -> Result<MeshSize, Error> {
    let t = text.trim();
    if let Some(exp) = t.strip_prefix("2^-") {
        let j: u32 = exp
            .parse()
            .map_err(|_| Error::Config(format!("bad mesh size `{t}`")))?;
        return MeshSize::new(j);
    }
    if let Some(denom) = t.strip_prefix("1/") {
        let d: f64 = denom
            .parse()
            .map_err(|_| Error::Config(format!("bad mesh size `{t}`")))?;
        return MeshSize::from_f64(1.0 / d);
    }
    let v: f64 = t
        .parse()
        .map_err(|_| Error::Config(format!("bad mesh size `{t}`")))?;
    MeshSize::from_f64(v)
}

pub fn parse_mesh_size_list(text: &str) -> Result<Vec<MeshSize>, Error> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_mesh_size)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_size_forms() {
        assert_eq!(parse_mesh_size("2^-3").unwrap().value(), 0.125);
        assert_eq!(parse_mesh_size("1/8").unwrap().value(), 0.125);
        assert_eq!(parse_mesh_size("0.125").unwrap().value(), 0.125);
        assert!(parse_mesh_size("0.3").is_err());
        assert!(parse_mesh_size("2^-0").is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(ConfigFile::parse("domain=cube\n# comment\nH=2^-1\n").is_ok());
        assert!(ConfigFile::parse("doman=cube\n").is_err());
        assert!(ConfigFile::parse("domain cube\n").is_err());
    }
}
