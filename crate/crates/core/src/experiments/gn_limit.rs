use num_complex::Complex64;

use super::{per_sample, CheckRecord, ExperimentReport, Params};
use crate::constant::i_s;
use crate::error::Result;
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::norms::l2_sq;
use crate::observables::g_n;
use crate::spectrum::PlusSpectrum;
use crate::stats::median;

const DEGENERATE_GAP: f64 = 1e-9;

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let kmax = p.galerkin_factor * p.max_cutoff() as usize;
    let mut rep = ExperimentReport::new("gn-limit", p, "none".into(), tail_variance_bound(p.s, kmax));
    let degenerate = (4.0 * p.s - 3.0).abs() < DEGENERATE_GAP;
    rep.degenerate = degenerate;
    let limit = if degenerate || !(p.s < 1.0) { f64::NAN } else { 8.0 * (4.0 * p.s - 3.0) * i_s(p.s)? };
    let spec = p.ensemble();
    let table = per_sample(p.samples, |i| {
        let u = sample_mu(&spec, i, kmax)?;
        Ok(p.cutoffs
            .iter()
            .map(|&n| {
                let v = u.resized(p.galerkin_factor * n as usize);
                (g_n(&v, p.s, n), l2_sq(&v))
            })
            .collect::<Vec<_>>())
    })?;
    for (i, row) in table.iter().enumerate() {
        for (&n, &(g, m)) in p.cutoffs.iter().zip(row) {
            rep.row(i, n, 0.0, "G_N", g);
            rep.row(i, n, 0.0, "l2_sq", m);
            if limit.is_finite() {
                rep.row(i, n, 0.0, "ratio", g / (limit * m));
            }
        }
    }
    let last = p.cutoffs.len() - 1;
    let nmax = p.cutoffs[last];
    if degenerate {
        rep.notes.push("s = 3/4: the limit constant vanishes; reporting |G_N| only".into());
        let first: Vec<f64> = table.iter().map(|r| r[0].0.abs()).collect();
        let final_: Vec<f64> = table.iter().map(|r| r[last].0.abs()).collect();
        rep.checks.push(CheckRecord::at_most("median_abs_G_N_ratio_last_first", median(&final_) / median(&first), 1.0, true));
    } else if limit.is_finite() {
        for (j, &n) in p.cutoffs.iter().enumerate() {
            let errs: Vec<f64> = table.iter().map(|r| (r[j].0 / (limit * r[j].1) - 1.0).abs()).collect();
            rep.notes.push(format!("N = {n}: median |ratio - 1| = {:.4}", median(&errs)));
        }
        let errs: Vec<f64> = table.iter().map(|r| (r[last].0 / (limit * r[last].1) - 1.0).abs()).collect();
        rep.checks.push(CheckRecord::at_most(&format!("median_ratio_error_N{nmax}"), median(&errs), p.tolerances.gn_median_error, true));
    }
    let constant = PlusSpectrum::new(vec![Complex64::new(1.3, -0.4)])?;
    let g0 = g_n(&constant, p.s, nmax.max(4));
    rep.row(0, nmax, 0.0, "G_N_constant_datum", g0);
    rep.checks.push(CheckRecord::at_most("constant_datum_abs", g0.abs(), 0.0, false));
    Ok(rep)
}
