use super::{per_sample, CheckRecord, ExperimentReport, Params};
use crate::error::Result;
use crate::flow::{flow_map, FlowConfig};
use crate::gaussian::{sample_mu, tail_variance_bound};
use crate::norms::hs_sq;
use crate::observables::density_f_tn;
use crate::stats::{bootstrap_se, mean, mean_se};

/// Number of samples on which both density representations are compared.
const REPRESENTATION_SAMPLES: usize = 8;
const BOOTSTRAP_REPS: usize = 1000;

pub(super) fn run(p: &Params) -> Result<ExperimentReport> {
    let n = p.max_cutoff();
    let k = n as usize;
    let t = p.times.iter().copied().fold(0.0, f64::max);
    let sigma = p.sigma();
    let cfg = FlowConfig::dp54(k, p.rtol);
    let mut rep = ExperimentReport::new("liouville", p, format!("{:?}", cfg.integrator), tail_variance_bound(p.s, k));
    rep.notes.push(format!("test functional exp(-||u||_{{H^sigma}}^2), sigma = {sigma}"));
    let spec = p.ensemble();
    let functional = |u: &crate::spectrum::PlusSpectrum| (-hs_sq(u, sigma)).exp();
    let rows = per_sample(p.samples, |i| {
        let u = sample_mu(&spec, i, k)?;
        let pushed = functional(&flow_map(&u, t, &cfg)?);
        let back = flow_map(&u, -t, &cfg)?;
        let f = (hs_sq(&u, p.s) - hs_sq(&back, p.s)).exp();
        let repr = if i < REPRESENTATION_SAMPLES {
            let d = density_f_tn(&u, t, p.s, k, &cfg)?;
            Some(((d.log_formula - d.log_integral).exp() - 1.0).abs())
        } else {
            None
        };
        Ok((pushed, functional(&u) * f, f, repr))
    })?;
    let mut diffs = Vec::with_capacity(rows.len());
    let mut dens = Vec::with_capacity(rows.len());
    let mut worst_repr: f64 = 0.0;
    for (i, &(lhs, rhs, f, repr)) in rows.iter().enumerate() {
        rep.row(i, n, t, "F_pushed", lhs);
        rep.row(i, n, t, "F_times_density", rhs);
        rep.row(i, n, t, "density", f);
        if let Some(r) = repr {
            rep.row(i, n, t, "density_repr_rel_diff", r);
            worst_repr = worst_repr.max(r);
        }
        diffs.push(lhs - rhs);
        dens.push(f);
    }
    let se = bootstrap_se(&diffs, mean, BOOTSTRAP_REPS, p.seed);
    let z = mean(&diffs).abs() / se;
    rep.notes.push(format!("E[F o Phi_t] - E[F f_t] = {:.3e} with bootstrap SE {:.3e}", mean(&diffs), se));
    rep.checks.push(CheckRecord::at_most("change_of_variables_z", z, p.tolerances.liouville_z, true));
    rep.checks.push(CheckRecord::at_most("mass_z", mean_se(&dens).z_score(1.0), p.tolerances.liouville_z, true));
    rep.checks.push(CheckRecord::at_most("representation_rel_diff", worst_repr, p.tolerances.density_repr_rel, false));
    let u = sample_mu(&spec, 0, k)?;
    let d0 = density_f_tn(&u, 0.0, p.s, k, &cfg)?;
    rep.checks.push(CheckRecord::at_most("density_at_zero_minus_one", (d0.formula() - 1.0).abs(), 0.0, false));
    Ok(rep)
}
