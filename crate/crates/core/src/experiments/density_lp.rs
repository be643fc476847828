use super::{per_sample, CheckRecord, ExperimentReport, Params};
use crate::error::Result;
use crate::flow::{evolve, FlowConfig, Record};
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::norms::{hs, hs_sq};
use crate::stats::median;

/// Points on `[0, t]` where the ball condition is checked.
const BALL_CHECKS: usize = 20;

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let nmax = p.max_cutoff();
    let t = p.times.iter().copied().fold(0.0, f64::max);
    let sigma = p.sigma();
    let cfg0 = FlowConfig::dp54(nmax as usize, p.rtol);
    let mut rep = ExperimentReport::new("density-lp", p, format!("{:?}", cfg0.integrator), tail_variance_bound(p.s, nmax as usize));
    let spec = p.ensemble();
    let norms: Vec<f64> = per_sample(p.samples, |i| Ok(hs(&sample_mu(&spec, i, nmax as usize)?, sigma)))?;
    let radius = p.radius_factor * median(&norms);
    rep.notes.push(format!("R = {radius} ({} x median H^sigma norm at N = {nmax}), sigma = {sigma}", p.radius_factor));

    let table = per_sample(p.samples, |i| {
        let full = sample_mu(&spec, i, nmax as usize)?;
        p.cutoffs
            .iter()
            .map(|&n| {
                let k = n as usize;
                let u = full.resized(k);
                if t == 0.0 {
                    return Ok((1.0, hs(&u, sigma)));
                }
                let cfg = FlowConfig::dp54(k, p.rtol).with_record(Record::Every(t / BALL_CHECKS as f64));
                let traj = evolve(&u, -t, &cfg)?;
                let sup = traj.states.iter().map(|v| hs(v, sigma)).fold(0.0, f64::max);
                let f = (hs_sq(&u, p.s) - hs_sq(traj.final_state(), p.s)).exp();
                Ok((f, sup))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut estimates = Vec::new();
    for (j, &n) in p.cutoffs.iter().enumerate() {
        let mut acc = 0.0;
        let mut unrestricted = 0.0;
        for (i, row) in table.iter().enumerate() {
            let (f, sup) = row[j];
            rep.row(i, n, t, "density", f);
            rep.row(i, n, t, "sup_norm_sigma", sup);
            let fp = f.powf(p.p);
            unrestricted += fp;
            if sup <= radius {
                acc += fp;
            }
        }
        let est = (acc / p.samples as f64).powf(1.0 / p.p);
        let full = (unrestricted / p.samples as f64).powf(1.0 / p.p);
        rep.notes.push(format!("N = {n}: restricted estimate {est:.6}, unrestricted {full:.6}"));
        estimates.push(est);
    }
    if t == 0.0 {
        let mass = estimates[estimates.len() - 1].powf(p.p);
        rep.checks.push(CheckRecord::within("ball_mass_at_zero", mass, f64::MIN_POSITIVE, 1.0, false));
    }
    for (j, w) in estimates.windows(2).enumerate() {
        rep.checks.push(CheckRecord::within(
            &format!("ratio_N{}_to_N{}", p.cutoffs[j + 1], p.cutoffs[j]),
            w[1] / w[0],
            p.tolerances.density_ratio_low,
            p.tolerances.density_ratio_high,
            true,
        ));
    }
    Ok(rep)
}
