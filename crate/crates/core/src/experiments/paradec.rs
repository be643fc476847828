use num_complex::Complex64;

use super::{per_sample, CheckRecord, ExperimentReport, FitRecord, Params};
use crate::error::Result;
use crate::flow::FlowConfig;
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::norms::lp;
use crate::para::remainder_at;
use crate::projector::FrequencyRelations;
use crate::spectrum::PlusSpectrum;
use crate::stats::{fit_power_law_ensemble, mean};

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let kmax = p.galerkin_factor * p.max_cutoff() as usize;
    let t = p.times.iter().copied().fold(0.0, f64::max);
    let q = p.p / 3.0;
    let config = |k: usize| {
        let mut c = FlowConfig::dp54(k, p.rtol);
        c.relations = FrequencyRelations { ratio: p.ratio };
        c
    };
    let mut rep = ExperimentReport::new("paradec-scaling", p, format!("{:?}", config(kmax).integrator), tail_variance_bound(p.s, kmax));
    rep.notes.push(format!("remainder measured in L^{q}"));
    let spec = p.ensemble();
    let table = per_sample(p.samples, |i| {
        let full = sample_mu(&spec, i, kmax)?;
        p.cutoffs
            .iter()
            .map(|&n| {
                let k = p.galerkin_factor * n as usize;
                let v = remainder_at(&full.resized(k), t, n, &config(k))?;
                lp(&v, q)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    for (i, row) in table.iter().enumerate() {
        for (&n, &v) in p.cutoffs.iter().zip(row) {
            rep.row(i, n, t, "v_N_norm", v);
        }
    }
    let n0 = p.cutoffs[0];
    if t == 0.0 {
        let worst = table.iter().flatten().copied().fold(0.0, f64::max);
        rep.checks.push(CheckRecord::at_most("v_N_at_zero", worst, 1e-12, false));
    } else {
        let ns: Vec<f64> = p.cutoffs.iter().map(|&n| n as f64).collect();
        let fit = fit_power_law_ensemble(&ns, &table, mean, p.seed)?;
        let rate = 1.0 - 2.0 * p.s;
        rep.fits.push(FitRecord::new("v_N_norm", fit, Some(rate)));
        rep.checks.push(CheckRecord::at_most("decay_exponent", fit.exponent, rate + p.tolerances.paradec_slack, true));
    }
    let constant = PlusSpectrum::new(vec![Complex64::new(0.8, 0.1)])?;
    let k0 = p.galerkin_factor * n0 as usize;
    let v = remainder_at(&constant, t, n0.max(4), &config(k0))?;
    rep.checks.push(CheckRecord::at_most("constant_datum", lp(&v, q)?, 1e-14, false));
    Ok(rep)
}
