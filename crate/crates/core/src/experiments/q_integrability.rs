use num_complex::Complex64;

use super::{per_sample, CheckRecord, ExperimentReport, FitRecord, Params};
use crate::error::Result;
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::observables::q_pi;
use crate::spectrum::PlusSpectrum;
use crate::stats::fit_power_law_ensemble;

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let nmax = p.max_cutoff();
    let mut rep = ExperimentReport::new("q-integrability", p, "none".into(), tail_variance_bound(p.s, nmax as usize));
    let spec = p.ensemble();
    let table = per_sample(p.samples, |i| {
        let u = sample_mu(&spec, i, nmax as usize)?;
        Ok(p.cutoffs.iter().map(|&n| q_pi(&u.resized(n as usize), p.s, n as usize)).collect::<Vec<f64>>())
    })?;
    for (i, row) in table.iter().enumerate() {
        for (&n, &v) in p.cutoffs.iter().zip(row) {
            rep.row(i, n, 0.0, "Q_pi", v);
        }
    }
    let ns: Vec<f64> = p.cutoffs.iter().map(|&n| n as f64).collect();
    let second_moment = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>() / c.len() as f64;
    let fit = fit_power_law_ensemble(&ns, &table, second_moment, p.seed)?;
    if p.s > 1.0 {
        rep.fits.push(FitRecord::new("E|Q_pi|^2", fit, None));
        rep.checks.push(CheckRecord::at_most("growth_exponent", fit.exponent, p.tolerances.q_flat_max, true));
    } else {
        let rate = 2.0 - 2.0 * p.s;
        rep.fits.push(FitRecord::new("E|Q_pi|^2", fit, Some(rate)));
        rep.checks.push(CheckRecord::at_least("growth_exponent", fit.exponent, rate - p.tolerances.q_growth_slack, true));
    }
    let single = PlusSpectrum::single_mode(3, Complex64::new(1.0, 2.0));
    let q = q_pi(&single, p.s, nmax as usize);
    rep.row(0, nmax, 0.0, "Q_pi_single_mode", q);
    rep.checks.push(CheckRecord::at_most("single_mode_abs", q.abs(), 1e-12, false));
    Ok(rep)
}
