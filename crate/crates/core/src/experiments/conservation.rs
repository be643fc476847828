use num_complex::Complex64;

use super::{per_sample, CheckRecord, ExperimentReport, FitRecord, Params};
use crate::error::Result;
use crate::flow::{default_dt, evolve, Conserved, FlowConfig, Record};
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::norms::l2;
use crate::spectrum::PlusSpectrum;
use crate::stats::fit_power_law;

const SINGLE_MODE_RTOL: f64 = 1e-13;

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let n = p.max_cutoff();
    let k = n as usize;
    let t = p.times.iter().copied().fold(0.0, f64::max);
    let cfg = FlowConfig::dp54(k, p.rtol).with_record(Record::Every(t / 10.0));
    let mut rep = ExperimentReport::new("conservation", p, format!("{:?}", cfg.integrator), tail_variance_bound(p.s, k));
    let spec = p.ensemble();

    let drifts = per_sample(p.samples, |i| {
        let u0 = sample_mu(&spec, i, k)?;
        let traj = evolve(&u0, t, &cfg)?;
        let c0 = traj.conserved_log[0];
        Ok(traj
            .times
            .iter()
            .zip(&traj.conserved_log)
            .map(|(&time, c)| (time, rel(c.mass, c0.mass), rel(c.momentum, c0.momentum), rel(c.energy, c0.energy)))
            .collect::<Vec<_>>())
    })?;
    let mut worst: f64 = 0.0;
    for (i, series) in drifts.iter().enumerate() {
        for &(time, m, mo, e) in series {
            rep.row(i, n, time, "drift_mass", m);
            rep.row(i, n, time, "drift_momentum", mo);
            rep.row(i, n, time, "drift_energy", e);
            worst = worst.max(m).max(mo).max(e);
        }
    }
    rep.checks.push(CheckRecord::at_most("max_relative_drift", worst, p.tolerances.conservation_drift, false));

    let amp = Complex64::new(2.0, 0.0);
    let single = PlusSpectrum::single_mode(5, amp);
    let straj = evolve(&single, 1.0, &FlowConfig::dp54(8, SINGLE_MODE_RTOL))?;
    let exact = single.resized(8).scale(Complex64::from_polar(1.0, -4.0));
    let err = l2(&straj.final_state().sub(&exact));
    let drift = straj.max_conservation_drift();
    rep.row(0, 8, 1.0, "single_mode_error", err);
    rep.row(0, 8, 1.0, "single_mode_drift", drift);
    rep.checks.push(CheckRecord::at_most("single_mode_drift", drift, p.tolerances.single_mode_drift, false));
    rep.checks.push(CheckRecord::at_most("single_mode_error", err, p.tolerances.exact_solution_error, false));

    let u0 = sample_mu(&spec, 0, k)?;
    let base = default_dt(&u0) * 4.0;
    let dts: Vec<f64> = (0..4).map(|j| base / 2f64.powi(j)).collect();
    let rk = per_sample(dts.len(), |j| {
        let traj = evolve(&u0, t, &FlowConfig::rk4(k, Some(dts[j])))?;
        let c0 = Conserved::of(&u0);
        Ok(rel_drift(traj.final_state(), &c0))
    })?;
    for (dt, d) in dts.iter().zip(&rk) {
        rep.row(0, n, *dt, "rk4_drift", *d);
    }
    let fit = fit_power_law(&dts, &rk, p.seed)?;
    rep.fits.push(FitRecord::new("rk4_drift", fit, Some(p.tolerances.rk4_order)));
    rep.checks.push(CheckRecord::at_most(
        "rk4_order_error",
        (fit.exponent - p.tolerances.rk4_order).abs(),
        p.tolerances.rk4_order_slack,
        false,
    ));
    Ok(rep)
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn rel_drift(u: &PlusSpectrum, c0: &Conserved) -> f64 {
    Conserved::of(u).max_rel_drift(c0)
}
