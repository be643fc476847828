use super::{per_sample, CheckRecord, ExperimentReport, Params};
use crate::error::Result;
use crate::flow::{evolve, FlowConfig, Record};
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::norms::linf_grid;
use crate::observables::{f_n, g_n, h_n_from_states};
use crate::stats::median;

const DEGENERATE_GAP: f64 = 1e-9;

/// `0.02 / (1 + ||u0||_{L^inf}^2)` on a four-times oversampled grid.
pub fn adaptive_t0(u0: &crate::spectrum::PlusSpectrum) -> f64 {
    let m = linf_grid(u0, 4);
    0.02 / (1.0 + m * m)
}

struct Cell {
    t: f64,
    h: f64,
    f: f64,
    g: f64,
}

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let kmax = p.galerkin_factor * p.max_cutoff() as usize;
    let cfg0 = FlowConfig::dp54(kmax, p.rtol);
    let mut rep = ExperimentReport::new("transition", p, format!("{:?}", cfg0.integrator), tail_variance_bound(p.s, kmax));
    let gap = 4.0 * p.s - 3.0;
    if gap.abs() < DEGENERATE_GAP {
        rep.degenerate = true;
        rep.notes.push("s = 3/4 is excluded: h_N / (4s - 3) is undefined".into());
        return Ok(rep);
    }
    let spec = p.ensemble();
    let table = per_sample(p.samples, |i| {
        let full = sample_mu(&spec, i, kmax)?;
        let t0 = adaptive_t0(&full);
        let times: Vec<f64> = p.times.iter().map(|f| f * t0).collect();
        let mut cells = Vec::new();
        for &n in &p.cutoffs {
            let k = p.galerkin_factor * n as usize;
            let u0 = full.resized(k);
            let tmax = times.iter().copied().fold(0.0, f64::max);
            let cfg = FlowConfig::dp54(k, p.rtol).with_record(Record::Times(times.clone()));
            let traj = evolve(&u0, tmax, &cfg)?;
            let (f, g) = (f_n(&u0, p.s, n), g_n(&u0, p.s, n));
            let row: Vec<Cell> = times
                .iter()
                .map(|&t| {
                    let h = if t == 0.0 {
                        0.0
                    } else {
                        let idx = traj.times.iter().position(|&x| x == t).expect("recorded time");
                        h_n_from_states(&u0, &traj.states[idx], p.s, n)
                    };
                    Cell { t, h, f, g }
                })
                .collect();
            cells.push(row);
        }
        Ok(cells)
    })?;

    let mut positive = 0usize;
    let mut total = 0usize;
    let last = p.cutoffs.len() - 1;
    let mut residual_ratios = Vec::new();
    for (i, per_n) in table.iter().enumerate() {
        for (j, row) in per_n.iter().enumerate() {
            let n = p.cutoffs[j];
            for (c, &factor) in row.iter().zip(&p.times) {
                let resid = c.h - c.t * c.f - 0.5 * c.t * c.t * c.g;
                rep.row(i, n, c.t, "h_N", c.h);
                rep.row(i, n, c.t, "t_over_t0", factor);
                rep.row(i, n, c.t, "F_N", c.f);
                rep.row(i, n, c.t, "G_N", c.g);
                rep.row(i, n, c.t, "taylor_residual", resid);
                if c.t != 0.0 {
                    total += 1;
                    if c.h / gap > 0.0 {
                        positive += 1;
                    }
                    if j == last {
                        residual_ratios.push(resid.abs() / (0.5 * c.t * c.t * c.g.abs()));
                    }
                }
            }
        }
    }
    if total > 0 {
        rep.checks.push(CheckRecord::at_least(
            "positive_sign_fraction",
            positive as f64 / total as f64,
            p.tolerances.transition_fraction,
            true,
        ));
        rep.checks.push(CheckRecord::at_most(
            &format!("median_taylor_ratio_N{}", p.cutoffs[last]),
            median(&residual_ratios),
            p.tolerances.taylor_factor,
            true,
        ));
    }
    let zero = table.iter().flatten().flatten().filter(|c| c.t == 0.0).map(|c| c.h.abs()).fold(0.0, f64::max);
    rep.checks.push(CheckRecord::at_most("h_at_zero", zero, 0.0, false));
    Ok(rep)
}
