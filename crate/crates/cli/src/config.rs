use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Settings shared by every command. Loaded from `--config`, then
/// overridden by flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub epsilon: f64,
    pub quadrature_tol: f64,
    pub solver_tol: f64,
    pub output_dir: PathBuf,
    pub format: Format,
    /// Rejection-sampling proposals for the figures that use them.
    pub proposals: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: qassign_core::validation::DEFAULT_SEED,
            epsilon: qassign_core::montecarlo::DEFAULT_EPSILON,
            quadrature_tol: qassign_core::aam::su2::DEFAULT_QUAD_TOL,
            solver_tol: qassign_core::mep::DEFAULT_TOL,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            proposals: 10_000_000,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("quadrature_tol", self.quadrature_tol),
            ("solver_tol", self.solver_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bail!("{name} must be positive (got {v})");
            }
        }
        if self.proposals == 0 {
            bail!("proposals must be at least 1");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config is serializable");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self) -> Vec<(String, String)> {
        vec![
            ("tool".into(), format!("qassign {}", env!("CARGO_PKG_VERSION"))),
            ("config_sha256".into(), self.hash()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 7, "format": "json"}"#).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.epsilon, 0.025);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 7}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_bad_tolerances() {
        let c = RunConfig {
            solver_tol: 0.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
