//! Report types and their CSV / JSON manifest serialization.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Params;
use crate::bump::phi_fingerprint;
use crate::stats::PowerFit;

pub const CSV_HEADER: &str = "sample,N,t,quantity,value";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub sample: usize,
    pub n: u64,
    pub t: f64,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub quantity: String,
    pub exponent: f64,
    pub prefactor: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reference: Option<f64>,
}

impl FitRecord {
    pub fn new(quantity: &str, fit: PowerFit, reference: Option<f64>) -> Self {
        Self {
            quantity: quantity.to_string(),
            exponent: fit.exponent,
            prefactor: fit.prefactor,
            ci_low: fit.ci_low,
            ci_high: fit.ci_high,
            reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub passed: bool,
    /// Subject to Monte Carlo noise, and so eligible for a rerun.
    pub statistical: bool,
}

impl CheckRecord {
    pub fn at_most(name: &str, value: f64, bound: f64, statistical: bool) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: format!("<= {bound:e}"),
            passed: value <= bound,
            statistical,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64, statistical: bool) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: format!(">= {bound:e}"),
            passed: value >= bound,
            statistical,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64, statistical: bool) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: format!("in [{lo:e}, {hi:e}]"),
            passed: lo <= value && value <= hi,
            statistical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: Params,
    pub rows: Vec<ObservableRecord>,
    pub fits: Vec<FitRecord>,
    pub checks: Vec<CheckRecord>,
    /// Set when the parameters fall on an excluded case such as `s = 3/4`.
    pub degenerate: bool,
    pub notes: Vec<String>,
    pub reruns: u32,
    pub phi_fingerprint: String,
    pub integrator: String,
    /// Bound on the Gaussian variance beyond the largest cutoff used.
    pub tail_bound: f64,
}

impl ExperimentReport {
    pub fn new(name: &str, params: &Params, integrator: String, tail_bound: f64) -> Self {
        Self {
            name: name.into(),
            params: params.clone(),
            rows: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            degenerate: false,
            notes: Vec::new(),
            reruns: 0,
            phi_fingerprint: phi_fingerprint(),
            integrator,
            tail_bound,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn row(&mut self, sample: usize, n: u64, t: f64, quantity: &str, value: f64) {
        self.rows.push(ObservableRecord {
            sample,
            n,
            t,
            quantity: quantity.into(),
            value,
        });
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, quantity: &str) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }

    /// Values of one quantity at one `(N, t)`, in sample order.
    pub fn values(&self, quantity: &str, n: u64, t: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.quantity == quantity && r.n == n && r.t == t)
            .map(|r| r.value)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.16e},{},{:.16e}", r.sample, r.n, r.t, r.quantity, r.value);
        }
        out
    }

    /// Manifest document; `status` is `"running"` before results exist.
    pub fn manifest(&self, status: &str, environment: &Environment) -> serde_json::Value {
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "status": status,
            "csv": { "file": format!("{}.csv", self.name), "header": CSV_HEADER },
            "params": self.params,
            "fits": self.fits,
            "checks": self.checks,
            "passed": self.passed(),
            "degenerate": self.degenerate,
            "notes": self.notes,
            "reruns": self.reruns,
            "phi_fingerprint": self.phi_fingerprint,
            "integrator": self.integrator,
            "tail_bound": self.tail_bound,
            "environment": environment,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package_version: String,
    pub threads: usize,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

pub fn manifest_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.manifest.json"))
}

pub fn csv_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.csv"))
}

pub fn write_manifest(dir: &Path, report: &ExperimentReport, status: &str, env: &Environment) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = manifest_path(dir, &report.name);
    let text = serde_json::to_string_pretty(&report.manifest(status, env))?;
    let mut f = std::fs::File::create(&path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(path)
}

pub fn write_csv(dir: &Path, report: &ExperimentReport) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = csv_path(dir, &report.name);
    std::fs::write(&path, report.to_csv())?;
    Ok(path)
}
