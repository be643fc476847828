//! The truncated cubic Szego flow `i u_t = pi_N Pi(|u|^2 u)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{grid_size, CubicWorkspace, GridSignal};
use crate::norms::{l2_sq, l4_hamiltonian, linf_grid, momentum};
use crate::ode::{integrate, Integrator, OdeSystem, StepStats};
use crate::projector::{lp_symbol, FrequencyRelations, LpMode};
use crate::spectrum::{sharp_truncate, PlusSpectrum};

const NEG_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

/// Which times a trajectory stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Record {
    Endpoints,
    /// Every multiple of the given spacing plus the final time.
    Every(f64),
    /// The listed times, which must lie between zero and the final time.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub cutoff: usize,
    pub integrator: Integrator,
    pub padding_factor: usize,
    pub track_phase: bool,
    /// Block `N` whose low part `P_{<<N} u` drives the phase.
    pub phase_block: u64,
    pub relations: FrequencyRelations,
    pub record: Record,
}

impl FlowConfig {
    pub fn new(cutoff: usize, integrator: Integrator) -> Self {
        Self {
            cutoff,
            integrator,
            padding_factor: 4,
            track_phase: false,
            phase_block: 1,
            relations: FrequencyRelations::default(),
            record: Record::Endpoints,
        }
    }

    pub fn rk4(cutoff: usize, dt: Option<f64>) -> Self {
        Self::new(cutoff, Integrator::Rk4 { dt })
    }

    pub fn dp54(cutoff: usize, rtol: f64) -> Self {
        Self::new(cutoff, Integrator::Dp54 { rtol, atol: rtol * 1e-2 })
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    pub fn with_phase(mut self, block: u64, relations: FrequencyRelations) -> Self {
        self.track_phase = true;
        self.phase_block = block;
        self.relations = relations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff == 0 {
            return Err(invalid("cutoff", "must be positive"));
        }
        if self.padding_factor < 4 {
            return Err(invalid("padding_factor", "must be at least 4"));
        }
        match self.integrator {
            Integrator::Rk4 { dt: Some(dt) } if !(dt > 0.0) => Err(invalid("dt", "must be positive")),
            Integrator::Dp54 { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => Err(invalid("rtol/atol", "must be positive")),
            _ => Ok(()),
        }
    }
}

/// Default fixed step `0.1 / (1 + ||u0||_{L^inf}^2)`.
pub fn default_dt(u0: &PlusSpectrum) -> f64 {
    let m = linf_grid(u0, 4);
    0.1 / (1.0 + m * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl Conserved {
    pub fn of(u: &PlusSpectrum) -> Self {
        Self {
            mass: l2_sq(u),
            momentum: momentum(u),
            energy: l4_hamiltonian(u),
        }
    }

    /// Largest relative change of the three quantities.
    pub fn max_rel_drift(&self, reference: &Conserved) -> f64 {
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
        rel(self.mass, reference.mass)
            .max(rel(self.momentum, reference.momentum))
            .max(rel(self.energy, reference.energy))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PlusSpectrum>,
    #[serde(skip)]
    pub phase: Option<Vec<GridSignal>>,
    pub conserved_log: Vec<Conserved>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn final_state(&self) -> &PlusSpectrum {
        self.states.last().expect("trajectory holds the initial datum")
    }

    pub fn final_phase(&self) -> Option<&GridSignal> {
        self.phase.as_ref().and_then(|p| p.last())
    }

    pub fn max_conservation_drift(&self) -> f64 {
        let first = self.conserved_log[0];
        self.conserved_log.iter().map(|c| c.max_rel_drift(&first)).fold(0.0, f64::max)
    }
}

pub(crate) struct SzegoSystem {
    k: usize,
    ws: CubicWorkspace,
    phase: Option<PhaseChannel>,
}

struct PhaseChannel {
    symbol: Vec<f64>,
    buf: Vec<Complex64>,
    low: Vec<Complex64>,
}

impl SzegoSystem {
    pub(crate) fn new(k: usize, padding: usize) -> Self {
        Self {
            k,
            ws: CubicWorkspace::new(k, padding),
            phase: None,
        }
    }

    fn with_phase(mut self, block: u64, rel: &FrequencyRelations) -> Self {
        let symbol = (0..self.k).map(|n| lp_symbol(n as u64, block, LpMode::MuchLess, rel)).collect();
        self.phase = Some(PhaseChannel {
            symbol,
            buf: Vec::new(),
            low: vec![Complex64::new(0.0, 0.0); self.k],
        });
        self
    }

    pub(crate) fn grid_len(&mut self) -> usize {
        self.ws.grid().size()
    }

    fn state_len(&mut self) -> usize {
        self.k + if self.phase.is_some() { self.grid_len() } else { 0 }
    }
}

impl OdeSystem for SzegoSystem {
    fn rhs(&mut self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let k = self.k;
        self.ws.cubic_into(&y[..k], &mut dy[..k]);
        for d in dy[..k].iter_mut() {
            *d *= NEG_I;
        }
        if let Some(ph) = self.phase.as_mut() {
            for n in 0..k {
                ph.low[n] = y[n] * ph.symbol[n];
            }
            self.ws.grid().synthesize_into(&ph.low, 0, &mut ph.buf);
            for (d, z) in dy[k..].iter_mut().zip(&ph.buf) {
                *d = Complex64::new(z.norm_sqr(), 0.0);
            }
        }
    }
}

fn checkpoints(t: f64, record: &Record) -> Result<Vec<f64>> {
    let mut pts = match record {
        Record::Endpoints => vec![],
        Record::Every(dt) => {
            if !(*dt > 0.0) {
                return Err(invalid("record spacing", "must be positive"));
            }
            let n = (t.abs() / dt).floor() as usize;
            (1..=n).map(|i| t.signum() * i as f64 * dt).collect()
        }
        Record::Times(ts) => {
            let mut v = ts.clone();
            if v.iter().any(|&x| x * t < 0.0 || x.abs() > t.abs() || !x.is_finite()) {
                return Err(invalid("record times", "must lie between 0 and t"));
            }
            v.sort_by(|a, b| (a.abs()).total_cmp(&b.abs()));
            v
        }
    };
    pts.retain(|&x| x != 0.0 && x != t);
    pts.dedup();
    if t != 0.0 {
        pts.push(t);
    }
    Ok(pts)
}

/// Right-hand side `-i pi_N Pi(|u|^2 u)` for `u` supported below `N`.
pub fn rhs_truncated(u: &PlusSpectrum, cutoff: usize) -> PlusSpectrum {
    let u = sharp_truncate(&u.resized(cutoff), cutoff);
    let mut sys = SzegoSystem::new(cutoff, 4);
    let mut out = vec![Complex64::new(0.0, 0.0); cutoff];
    sys.rhs(0.0, u.coeffs(), &mut out);
    PlusSpectrum::from_vec(out)
}

/// Resolves the default step size for fixed-step integration.
pub(crate) fn resolved_integrator(u0: &PlusSpectrum, integrator: Integrator) -> Integrator {
    match integrator {
        Integrator::Rk4 { dt: None } => Integrator::Rk4 { dt: Some(default_dt(u0)) },
        other => other,
    }
}

/// Integrates the truncated flow from `u0` to time `t` (backward when `t < 0`).
pub fn evolve(u0: &PlusSpectrum, t: f64, cfg: &FlowConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !t.is_finite() {
        return Err(invalid("t", "must be finite"));
    }
    if u0.support_len() > cfg.cutoff {
        return Err(invalid("u0", format!("support {} exceeds cutoff {}", u0.support_len(), cfg.cutoff)));
    }
    let k = cfg.cutoff;
    let start = u0.resized(k);
    let mut sys = SzegoSystem::new(k, cfg.padding_factor);
    if cfg.track_phase {
        sys = sys.with_phase(cfg.phase_block, &cfg.relations);
    }
    let mut y0 = start.coeffs().to_vec();
    y0.resize(sys.state_len(), Complex64::new(0.0, 0.0));
    let pts = checkpoints(t, &cfg.record)?;
    let method = resolved_integrator(&start, cfg.integrator);
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        phase: cfg.track_phase.then(Vec::new),
        conserved_log: Vec::new(),
        stats: StepStats::default(),
    };
    let stats = integrate(&mut sys, &y0, 0.0, &pts, method, |time, y| {
        let state = PlusSpectrum::from_vec(y[..k].to_vec());
        traj.conserved_log.push(Conserved::of(&state));
        traj.times.push(time);
        traj.states.push(state);
        if let Some(ph) = traj.phase.as_mut() {
            ph.push(GridSignal { samples: y[k..].to_vec() });
        }
    })?;
    traj.states[0] = start;
    traj.stats = stats;
    Ok(traj)
}

/// Final state of the truncated flow.
pub fn flow_map(u0: &PlusSpectrum, t: f64, cfg: &FlowConfig) -> Result<PlusSpectrum> {
    let cfg = FlowConfig {
        record: Record::Endpoints,
        track_phase: false,
        ..cfg.clone()
    };
    Ok(evolve(u0, t, &cfg)?.final_state().clone())
}

/// `||Phi_{-t}(Phi_t(u0)) - u0||_{L^2}`.
pub fn reversibility_check(u0: &PlusSpectrum, t: f64, cfg: &FlowConfig) -> Result<f64> {
    let forward = flow_map(u0, t, cfg)?;
    let back = flow_map(&forward, -t, cfg)?;
    Ok(l2_sq(&back.sub(&u0.resized(cfg.cutoff))).sqrt())
}

/// Grid size used for the phase channel of a flow with this configuration.
pub fn phase_grid_size(cfg: &FlowConfig) -> usize {
    grid_size(cfg.cutoff, cfg.padding_factor.max(4))
}
