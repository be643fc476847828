//! Run configuration: an optional TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use szego_core::experiments::Params;

/// Contents of a `--config` file.
///
/// ```toml
/// out = "results"
/// threads = 2
///
/// [params]
/// seed = 7
/// s = 0.9
/// cutoffs = [16, 32, 64]
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub verbosity: Option<u8>,
    pub params: Option<toml::Table>,
}

pub fn load(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow::anyhow!("config {}: {}", path.display(), e.message()))
}

/// Overlays a TOML table on experiment parameters. Unknown keys are errors
/// that name the key.
pub fn apply_params(base: &Params, table: &toml::Table) -> Result<Params> {
    let mut value = serde_json::to_value(base)?;
    let obj = value.as_object_mut().expect("params serialize to an object");
    for (key, v) in table {
        if !obj.contains_key(key) {
            bail!("unknown parameter key `{key}`");
        }
        let json = serde_json::to_value(v).with_context(|| format!("parameter `{key}`"))?;
        if key == "tolerances" {
            let tol = obj.get_mut("tolerances").and_then(|t| t.as_object_mut()).expect("tolerances object");
            let given = json.as_object().with_context(|| "parameter `tolerances` must be a table")?;
            for (tk, tv) in given {
                if !tol.contains_key(tk) {
                    bail!("unknown tolerance key `{tk}`");
                }
                tol.insert(tk.clone(), tv.clone());
            }
        } else {
            obj.insert(key.clone(), json);
        }
    }
    serde_json::from_value(value).map_err(|e| anyhow::anyhow!("invalid parameters: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_and_rejection() {
        let base = Params::default();
        let t: toml::Table = toml::from_str("seed = 9\ns = 0.9\n[tolerances]\nmean_z = 4.0").unwrap();
        let p = apply_params(&base, &t).unwrap();
        assert_eq!(p.seed, 9);
        assert_eq!(p.s, 0.9);
        assert_eq!(p.tolerances.mean_z, 4.0);
        let bad: toml::Table = toml::from_str("sead = 9").unwrap();
        let err = apply_params(&base, &bad).unwrap_err().to_string();
        assert!(err.contains("sead"), "{err}");
        let bad_tol: toml::Table = toml::from_str("[tolerances]\nfoo = 1.0").unwrap();
        assert!(apply_params(&base, &bad_tol).unwrap_err().to_string().contains("foo"));
    }

    #[test]
    fn file_rejects_unknown_top_level_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "outt = \"x\"\n").unwrap();
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("outt"), "{err}");
    }
}
