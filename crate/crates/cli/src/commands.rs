use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde_json::json;
use szego_core::constant::{is_quadrature, Profile};
use szego_core::experiments::report::{write_csv, write_manifest, Environment, ExperimentReport};
use szego_core::experiments::{Experiment, Params};
use szego_core::flow::{evolve, reversibility_check, FlowConfig, Record};
use szego_core::gaussian::{sample_mu, EnsembleSpec};
use szego_core::norms::l2_sq;
use szego_core::observables::{density_f_tn, f_n, g_n, h_n_profile, q_n, q_pi};
use szego_core::spectrum::PlusSpectrum;

use crate::config::{self, FileConfig};
use crate::{Cli, Command, EvolveArgs, EvolveMode, ExperimentArgs, ObservableArgs, ObservableKind, QuadratureArgs, SampleArgs};

const EXACT_TOLERANCE: f64 = 1e-10;
const RANDOM_DRIFT_TOLERANCE: f64 = 1e-8;
const THREADS_ENV: &str = "SZEGO_LAB_THREADS";

pub enum Outcome {
    Passed,
    CheckFailed,
}

impl Outcome {
    fn from_pass(ok: bool) -> Self {
        if ok {
            Outcome::Passed
        } else {
            Outcome::CheckFailed
        }
    }
}

/// Settings after merging flags, the config file and the environment.
struct Resolved {
    out: PathBuf,
    verbosity: u8,
    params: Option<toml::Table>,
}

fn resolve(cli: &Cli) -> Result<Resolved> {
    let file = match &cli.config {
        Some(path) => config::load(path)?,
        None => FileConfig::default(),
    };
    let threads = match cli.threads.or(file.threads) {
        Some(k) => Some(k),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().with_context(|| format!("{THREADS_ENV} = `{v}` is not a thread count"))?),
            Err(_) => None,
        },
    };
    if let Some(k) = threads {
        if k == 0 {
            bail!("threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(Resolved {
        out: cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("results")),
        verbosity: cli.verbose.max(file.verbosity.unwrap_or(0)),
        params: file.params,
    })
}

pub fn dispatch(cli: Cli) -> Result<Outcome> {
    let resolved = resolve(&cli)?;
    match &cli.command {
        Command::Sample(a) => sample(a),
        Command::Evolve(a) => evolve_cmd(a, cli.out.as_deref().map(|_| resolved.out.as_path())),
        Command::Observable(a) => observable(a),
        Command::Quadrature(a) => quadrature(a),
        Command::Experiment(a) => experiment(a, &resolved),
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<16} {}", e.name(), e.summary());
            }
            Ok(Outcome::Passed)
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn sample(a: &SampleArgs) -> Result<Outcome> {
    let spec = EnsembleSpec::new(a.seed, a.index + 1, a.s);
    let u = sample_mu(&spec, a.index, a.cutoff)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "n,re,im")?;
    for (n, c) in u.coeffs().iter().enumerate() {
        writeln!(out, "{n},{},{}", num(c.re), num(c.im))?;
    }
    Ok(Outcome::Passed)
}

fn flow_config(a: &EvolveArgs) -> FlowConfig {
    let cfg = if a.rk4 { FlowConfig::rk4(a.cutoff, a.dt) } else { FlowConfig::dp54(a.cutoff, a.rtol) };
    match a.record_every {
        Some(h) => cfg.with_record(Record::Every(h)),
        None => cfg,
    }
}

fn evolve_cmd(a: &EvolveArgs, dump: Option<&Path>) -> Result<Outcome> {
    let cfg = flow_config(a);
    let amp = Complex64::new(a.amp, 0.0);
    let u0 = match a.mode {
        EvolveMode::Single => {
            if a.n >= a.cutoff {
                bail!("mode n = {} must lie below the cutoff {}", a.n, a.cutoff);
            }
            PlusSpectrum::single_mode(a.n, amp)
        }
        EvolveMode::Constant => PlusSpectrum::single_mode(0, amp),
        EvolveMode::Random => sample_mu(&EnsembleSpec::new(a.seed, 1, a.s), 0, a.cutoff)?,
    };
    let traj = evolve(&u0, a.t, &cfg)?;
    let drift = traj.max_conservation_drift();
    println!("steps = {}", traj.stats.accepted);
    println!("max_conservation_drift = {}", num(drift));
    let passed = match a.mode {
        EvolveMode::Single | EvolveMode::Constant => {
            let freq = if a.mode == EvolveMode::Single { a.n } else { 0 };
            let mut worst: f64 = 0.0;
            for (&t, state) in traj.times.iter().zip(&traj.states) {
                let exact = PlusSpectrum::single_mode(freq, amp * Complex64::from_polar(1.0, -a.amp * a.amp * t));
                worst = worst.max(l2_sq(&state.sub(&exact.resized(state.len()))).sqrt());
            }
            println!("max_error_vs_exact = {}", num(worst));
            println!("tolerance = {}", num(EXACT_TOLERANCE));
            worst <= EXACT_TOLERANCE
        }
        EvolveMode::Random => {
            let back = reversibility_check(&u0, a.t, &FlowConfig { record: Record::Endpoints, ..cfg.clone() })?;
            println!("reversibility = {}", num(back));
            println!("tolerance = {}", num(RANDOM_DRIFT_TOLERANCE));
            drift <= RANDOM_DRIFT_TOLERANCE && back <= RANDOM_DRIFT_TOLERANCE
        }
    };
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut csv = String::from("t,n,re,im\n");
        for (&t, state) in traj.times.iter().zip(&traj.states) {
            for (n, c) in state.coeffs().iter().enumerate() {
                csv.push_str(&format!("{},{n},{},{}\n", num(t), num(c.re), num(c.im)));
            }
        }
        let csv_path = dir.join("evolve.csv");
        std::fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
        let meta = json!({
            "schema_version": szego_core::experiments::report::SCHEMA_VERSION,
            "config": cfg,
            "mode": format!("{:?}", a.mode),
            "t": a.t,
            "conserved_log": traj.conserved_log,
            "stats": traj.stats,
            "passed": passed,
        });
        let meta_path = dir.join("evolve.json");
        std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?).with_context(|| format!("writing {}", meta_path.display()))?;
    }
    Ok(Outcome::from_pass(passed))
}

fn observable(a: &ObservableArgs) -> Result<Outcome> {
    if !a.n.is_power_of_two() && !matches!(a.kind, ObservableKind::QPi | ObservableKind::Density) {
        bail!("block N = {} is not dyadic", a.n);
    }
    let k = a.cutoff.unwrap_or(8 * a.n as usize);
    let spec = EnsembleSpec::new(a.seed, a.index + 1, a.s);
    let u = sample_mu(&spec, a.index, k)?;
    let cfg = FlowConfig::dp54(k, a.rtol);
    let value = match a.kind {
        ObservableKind::Fn => f_n(&u, a.s, a.n),
        ObservableKind::Gn => g_n(&u, a.s, a.n),
        ObservableKind::QPi => q_pi(&u, a.s, a.n as usize),
        ObservableKind::QN => q_n(&u, a.n),
        ObservableKind::HN => h_n_profile(&u, a.t, a.s, a.n, &cfg)?,
        ObservableKind::Density => {
            let n = a.n as usize;
            let u = szego_core::spectrum::sharp_truncate(&u, n).resized(n);
            let d = density_f_tn(&u, a.t, a.s, n, &FlowConfig::dp54(n, a.rtol))?;
            println!("log_formula = {}", num(d.log_formula));
            println!("log_integral = {}", num(d.log_integral));
            d.formula()
        }
    };
    println!("value = {}", num(value));
    Ok(Outcome::Passed)
}

fn quadrature(a: &QuadratureArgs) -> Result<Outcome> {
    let r = is_quadrature(a.s, Profile::Annular)?;
    println!("s = {}", num(a.s));
    println!("I_s = {}", num(r.one_dim.value));
    println!("triple = {}", num(r.triple.value));
    println!("double = {}", num(r.double.value));
    println!("one_dim = {}", num(r.one_dim.value));
    let spread = r.max_rel_spread();
    println!("max_rel_spread = {}", num(spread));
    Ok(Outcome::from_pass(spread <= a.tol && r.one_dim.value > 0.0))
}

fn experiment_params(exp: Experiment, a: &ExperimentArgs, file: Option<&toml::Table>) -> Result<Params> {
    let mut p = exp.default_params();
    if let Some(table) = file {
        p = config::apply_params(&p, table)?;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    if let Some(v) = a.samples {
        p.samples = v;
    }
    if let Some(v) = a.s {
        p.s = v;
    }
    if let Some(v) = &a.cutoffs {
        p.cutoffs = v.clone();
    }
    if let Some(v) = &a.times {
        p.times = v.clone();
    }
    if let Some(v) = a.galerkin_factor {
        p.galerkin_factor = v;
    }
    if let Some(v) = a.rtol {
        p.rtol = v;
    }
    if let Some(v) = a.p {
        p.p = v;
    }
    if let Some(v) = a.ratio {
        p.ratio = v;
    }
    if a.no_rerun {
        p.rerun = false;
    }
    p.validate()?;
    Ok(p)
}

fn experiment(a: &ExperimentArgs, r: &Resolved) -> Result<Outcome> {
    let Some(exp) = Experiment::from_name(&a.name) else {
        let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
        bail!("unknown experiment `{}` (expected one of {})", a.name, names.join(", "));
    };
    let params = experiment_params(exp, a, r.params.as_ref())?;
    let env = Environment::current();
    let pending = ExperimentReport::new(exp.name(), &params, String::new(), 0.0);
    let path = write_manifest(&r.out, &pending, "running", &env).with_context(|| format!("writing manifest in {}", r.out.display()))?;
    if r.verbosity > 0 {
        eprintln!("running {} ({} samples, {} threads)", exp.name(), params.samples, env.threads);
    }
    let report = match exp.run(&params) {
        Ok(rep) => rep,
        Err(e) => {
            let _ = write_manifest(&r.out, &pending, "error", &env);
            return Err(e.into());
        }
    };
    let status = if report.degenerate {
        "degenerate"
    } else if report.passed() {
        "passed"
    } else {
        "failed"
    };
    let csv = write_csv(&r.out, &report).with_context(|| format!("writing CSV in {}", r.out.display()))?;
    write_manifest(&r.out, &report, status, &env).with_context(|| format!("writing {}", path.display()))?;
    for note in &report.notes {
        println!("note: {note}");
    }
    for fit in &report.fits {
        println!("fit {}: exponent {} [{}, {}]", fit.quantity, num(fit.exponent), num(fit.ci_low), num(fit.ci_high));
    }
    for c in &report.checks {
        println!(
            "{} {}: value {} threshold {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            num(c.value),
            c.threshold
        );
    }
    println!("status = {status}");
    println!("csv = {}", csv.display());
    println!("manifest = {}", path.display());
    Ok(Outcome::from_pass(report.degenerate || report.passed()))
}
