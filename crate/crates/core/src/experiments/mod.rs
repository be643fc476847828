//! Monte Carlo studies over ensembles of Gaussian data, each returning an
//! [`ExperimentReport`] with per-sample rows, fits and threshold checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gaussian::EnsembleSpec;

mod conservation;
mod density_lp;
mod fn_scaling;
mod gn_limit;
mod liouville;
mod paradec;
mod q_integrability;
pub mod report;
mod transition;

pub use report::{CheckRecord, ExperimentReport, FitRecord, ObservableRecord};

/// Acceptance thresholds, in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub conservation_drift: f64,
    pub single_mode_drift: f64,
    pub exact_solution_error: f64,
    pub rk4_order: f64,
    pub rk4_order_slack: f64,
    pub mean_z: f64,
    pub fn_slope_slack: f64,
    pub gn_median_error: f64,
    pub transition_fraction: f64,
    pub taylor_factor: f64,
    pub q_flat_max: f64,
    pub q_growth_slack: f64,
    pub liouville_z: f64,
    pub density_repr_rel: f64,
    pub density_ratio_low: f64,
    pub density_ratio_high: f64,
    pub paradec_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            conservation_drift: 1e-8,
            single_mode_drift: 1e-12,
            exact_solution_error: 1e-10,
            rk4_order: 4.0,
            rk4_order_slack: 0.3,
            mean_z: 3.0,
            fn_slope_slack: 0.3,
            gn_median_error: 0.15,
            transition_fraction: 0.9,
            taylor_factor: 0.3,
            q_flat_max: 0.2,
            q_growth_slack: 0.3,
            liouville_z: 3.0,
            density_repr_rel: 1e-6,
            density_ratio_low: 0.7,
            density_ratio_high: 1.4,
            paradec_slack: 0.3,
        }
    }
}

/// Parameters shared by all experiments. Fields an experiment does not use
/// are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub seed: u64,
    pub samples: usize,
    pub s: f64,
    /// Dyadic truncation levels `N`.
    pub cutoffs: Vec<u64>,
    /// Absolute times, or multiples of the adaptive `t0` for `transition`.
    pub times: Vec<f64>,
    pub galerkin_factor: usize,
    pub rtol: f64,
    /// Regularity of the test functional and of `E_{N,R,t}`; `s - 0.55` when absent.
    pub sigma: Option<f64>,
    /// Integrability exponent: `L^p` for densities, `L^{p/3}` for `v_N`.
    pub p: f64,
    /// `R` as a multiple of the median `H^sigma` norm.
    pub radius_factor: f64,
    /// Ratio behind the `<<` relation.
    pub ratio: f64,
    pub rerun: bool,
    pub tolerances: Tolerances,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            seed: 2024,
            samples: 20,
            s: 0.6,
            cutoffs: vec![64],
            times: vec![0.1],
            galerkin_factor: 8,
            rtol: 1e-10,
            sigma: None,
            p: 2.0,
            radius_factor: 2.0,
            ratio: 1.0 / 32.0,
            rerun: true,
            tolerances: Tolerances::default(),
        }
    }
}

impl Params {
    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.s - 0.55)
    }

    pub fn max_cutoff(&self) -> u64 {
        self.cutoffs.iter().copied().max().unwrap_or(1)
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec {
            seed: self.seed,
            sample_count: self.samples,
            s: self.s,
            cutoffs: self.cutoffs.clone(),
            times: self.times.clone(),
            galerkin_factor: self.galerkin_factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble().validate()?;
        if self.cutoffs.is_empty() {
            return Err(invalid("cutoffs", "at least one N is required"));
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("times", "must be finite"));
        }
        if !(self.rtol > 0.0) {
            return Err(invalid("rtol", "must be positive"));
        }
        if !(self.p >= 1.0) {
            return Err(invalid("p", "must be at least 1"));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(invalid("ratio", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

fn dyadic(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 1u64 << k).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Conservation,
    FnScaling,
    GnLimit,
    Transition,
    QIntegrability,
    Liouville,
    DensityLp,
    ParadecScaling,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Conservation,
        Experiment::FnScaling,
        Experiment::GnLimit,
        Experiment::Transition,
        Experiment::QIntegrability,
        Experiment::Liouville,
        Experiment::DensityLp,
        Experiment::ParadecScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Conservation => "conservation",
            Experiment::FnScaling => "fn-scaling",
            Experiment::GnLimit => "gn-limit",
            Experiment::Transition => "transition",
            Experiment::QIntegrability => "q-integrability",
            Experiment::Liouville => "liouville",
            Experiment::DensityLp => "density-lp",
            Experiment::ParadecScaling => "paradec-scaling",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::Conservation => "drift of mass, momentum and Hamiltonian; rk4 order",
            Experiment::FnScaling => "ensemble mean and variance exponent of F_N",
            Experiment::GnLimit => "G_N against 8(4s-3) I_s ||u0||^2",
            Experiment::Transition => "sign of h_N(t)/(4s-3) and the Taylor residual",
            Experiment::QIntegrability => "growth of E|Q_{pi_N}|^2 in N",
            Experiment::Liouville => "change of variables for the truncated flow",
            Experiment::DensityLp => "L^p norm of f_{t,N} on E_{N,R,t} as N doubles",
            Experiment::ParadecScaling => "decay of the paralinear remainder v_N",
        }
    }

    pub fn default_params(self) -> Params {
        let base = Params::default();
        match self {
            Experiment::Conservation => Params { samples: 4, s: 0.8, cutoffs: vec![256], times: vec![1.0], ..base },
            Experiment::FnScaling => Params { samples: 200, s: 0.6, cutoffs: dyadic(4, 10), times: vec![0.0], ..base },
            Experiment::GnLimit => Params {
                samples: 20,
                s: 0.6,
                cutoffs: dyadic(8, 12).into_iter().step_by(2).collect(),
                times: vec![0.0],
                galerkin_factor: 32,
                ..base
            },
            Experiment::Transition => Params { samples: 20, s: 0.6, cutoffs: dyadic(6, 10), times: vec![0.5, 1.0, 2.0], ..base },
            Experiment::QIntegrability => Params { samples: 200, s: 1.2, cutoffs: dyadic(6, 12), times: vec![0.0], ..base },
            Experiment::Liouville => Params { samples: 10_000, s: 1.2, cutoffs: vec![64], times: vec![0.3], ..base },
            Experiment::DensityLp => Params { samples: 2000, s: 1.2, cutoffs: dyadic(4, 7), times: vec![0.2], p: 2.0, ..base },
            Experiment::ParadecScaling => Params { samples: 8, s: 0.7, cutoffs: dyadic(4, 9), times: vec![0.05], p: 6.0, ..base },
        }
    }

    fn run_once(self, params: &Params) -> Result<ExperimentReport> {
        params.validate()?;
        match self {
            Experiment::Conservation => conservation::run(params),
            Experiment::FnScaling => fn_scaling::run(params),
            Experiment::GnLimit => gn_limit::run(params),
            Experiment::Transition => transition::run(params),
            Experiment::QIntegrability => q_integrability::run(params),
            Experiment::Liouville => liouville::run(params),
            Experiment::DensityLp => density_lp::run(params),
            Experiment::ParadecScaling => paradec::run(params),
        }
    }

    /// Runs the experiment; when a statistical check fails and `rerun` is
    /// set, runs once more with four times the samples and reports that.
    pub fn run(self, params: &Params) -> Result<ExperimentReport> {
        let first = self.run_once(params)?;
        let failed_stat = first.checks.iter().any(|c| c.statistical && !c.passed);
        if !(params.rerun && failed_stat) {
            return Ok(first);
        }
        let bigger = Params {
            samples: params.samples * 4,
            ..params.clone()
        };
        let mut second = self.run_once(&bigger)?;
        second.reruns = 1;
        second.notes.push(format!("statistical check failed with {} samples; rerun with {}", params.samples, bigger.samples));
        Ok(second)
    }
}

/// Evaluates `f` on every sample index in parallel, keeping index order.
pub(crate) fn per_sample<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(|i| f(i)).collect()
}
