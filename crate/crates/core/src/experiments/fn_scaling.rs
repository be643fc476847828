use super::{per_sample, CheckRecord, ExperimentReport, FitRecord, Params};
use crate::error::Result;
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::observables::f_n;
use crate::stats::{fit_power_law_ensemble, mean_se};

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let kmax = p.galerkin_factor * p.max_cutoff() as usize;
    let mut rep = ExperimentReport::new("fn-scaling", p, "none".into(), tail_variance_bound(p.s, p.galerkin_factor * p.cutoffs[0] as usize));
    let spec = p.ensemble();
    let table = per_sample(p.samples, |i| {
        let u = sample_mu(&spec, i, kmax)?;
        Ok(p.cutoffs
            .iter()
            .map(|&n| f_n(&u.resized(p.galerkin_factor * n as usize), p.s, n))
            .collect::<Vec<f64>>())
    })?;
    for (i, row) in table.iter().enumerate() {
        for (&n, &v) in p.cutoffs.iter().zip(row) {
            rep.row(i, n, 0.0, "F_N", v);
        }
    }
    let mut worst_z: f64 = 0.0;
    for (j, _) in p.cutoffs.iter().enumerate() {
        let col: Vec<f64> = table.iter().map(|r| r[j]).collect();
        worst_z = worst_z.max(mean_se(&col).z_score(0.0));
    }
    rep.checks.push(CheckRecord::at_most("max_mean_z", worst_z, p.tolerances.mean_z, true));

    let ns: Vec<f64> = p.cutoffs.iter().map(|&n| n as f64).collect();
    let second_moment = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64;
    let target = 2.0 * p.s - 2.0;
    let fit = fit_power_law_ensemble(&ns, &table, second_moment, p.seed)?;
    rep.fits.push(FitRecord::new("E|F_N|^2", fit, Some(target)));
    rep.checks.push(CheckRecord::at_most("variance_exponent_error", (fit.exponent - target).abs(), p.tolerances.fn_slope_slack, true));
    Ok(rep)
}
