//! Low-low-high paraproducts, the paralinear system `(u, X, Y)` and the
//! explicit modulated profile `X_N` with its remainder `v_N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SzegoError};
use crate::flow::{FlowConfig, Record, Trajectory};
use crate::grid::{grid_size, CubicWorkspace, Grid, GridSignal};
use crate::norms::l2;
use crate::ode::{integrate, OdeSystem, StepStats};
use crate::projector::{blocks_up_to, lp_project, lp_symbol, FrequencyRelations, LpMode};
use crate::spectrum::PlusSpectrum;
use crate::flow::resolved_integrator;

const NEG_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

/// Symbols of `P_{<<N3}` and `P_{N3}` for every block `N3` that has at
/// least one block much below it.
struct LlhSymbols {
    k: usize,
    blocks: Vec<(Vec<f64>, Vec<f64>)>,
}

impl LlhSymbols {
    fn new(k: usize, rel: &FrequencyRelations) -> Self {
        let blocks = blocks_up_to(k)
            .into_iter()
            .filter(|&b| rel.much_less(1, b))
            .map(|b| {
                let low = (0..k).map(|n| lp_symbol(n as u64, b, LpMode::MuchLess, rel)).collect();
                let high = (0..k).map(|n| lp_symbol(n as u64, b, LpMode::Block, rel)).collect();
                (low, high)
            })
            .collect();
        Self { k, blocks }
    }
}

/// Buffers for repeated evaluation of `Pi_{LLH}(f, g, w_j)` at fixed size.
struct LlhWorkspace {
    symbols: LlhSymbols,
    grid: Grid,
    coeff: Vec<Complex64>,
    lf: Vec<Complex64>,
    lg: Vec<Complex64>,
    hw: Vec<Complex64>,
    acc: Vec<Vec<Complex64>>,
}

impl LlhWorkspace {
    fn new(k: usize, rel: &FrequencyRelations) -> Self {
        Self {
            symbols: LlhSymbols::new(k, rel),
            grid: Grid::new(grid_size(3 * k, 1)),
            coeff: vec![Complex64::new(0.0, 0.0); k],
            lf: Vec::new(),
            lg: Vec::new(),
            hw: Vec::new(),
            acc: Vec::new(),
        }
    }

    /// Writes `Pi_{LLH}(f, g, ws[j])` on `0..outs[j].len()` into `outs[j]`.
    fn apply(&mut self, f: &[Complex64], g: &[Complex64], ws: &[&[Complex64]], outs: &mut [&mut [Complex64]]) {
        let k = self.symbols.k;
        let m = self.grid.size();
        self.acc.resize(ws.len(), Vec::new());
        for a in self.acc.iter_mut() {
            a.clear();
            a.resize(m, Complex64::new(0.0, 0.0));
        }
        for (low, high) in &self.symbols.blocks {
            for n in 0..k {
                self.coeff[n] = f[n] * low[n];
            }
            self.grid.synthesize_into(&self.coeff, 0, &mut self.lf);
            for n in 0..k {
                self.coeff[n] = g[n] * low[n];
            }
            self.grid.synthesize_into(&self.coeff, 0, &mut self.lg);
            for (lf, lg) in self.lf.iter_mut().zip(&self.lg) {
                *lf *= lg.conj();
            }
            for (j, w) in ws.iter().enumerate() {
                for n in 0..k {
                    self.coeff[n] = w[n] * high[n];
                }
                self.grid.synthesize_into(&self.coeff, 0, &mut self.hw);
                for ((a, lf), hw) in self.acc[j].iter_mut().zip(&self.lf).zip(&self.hw) {
                    *a += lf * hw;
                }
            }
        }
        for (j, out) in outs.iter_mut().enumerate() {
            self.grid.analyze_in_place(&mut self.acc[j]);
            for (n, o) in out.iter_mut().enumerate() {
                *o = if n < m / 2 { self.acc[j][n] } else { Complex64::new(0.0, 0.0) };
            }
        }
    }
}

/// `Pi_{LLH}(f, g, w) = sum over N1, N2 << N3 of Pi(P_{N1} f conj(P_{N2} g) P_{N3} w)`,
/// returned on every frequency it reaches.
pub fn paraproduct_llh(f: &PlusSpectrum, g: &PlusSpectrum, w: &PlusSpectrum, rel: &FrequencyRelations) -> PlusSpectrum {
    let k = f.len().max(g.len()).max(w.len());
    let (f, g, w) = (f.resized(k), g.resized(k), w.resized(k));
    let mut ws = LlhWorkspace::new(k, rel);
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * k - 1];
    ws.apply(f.coeffs(), g.coeffs(), &[w.coeffs()], &mut [&mut out[..]]);
    PlusSpectrum::from_vec(out)
}

/// Local time allowed for the paralinear system, `min(1, 0.5 / (1 + ||u0||^5))`.
pub fn para_window(u0: &PlusSpectrum) -> f64 {
    (0.5 / (1.0 + l2(u0).powi(5))).min(1.0)
}

struct ParaSystem {
    k: usize,
    cubic: CubicWorkspace,
    llh: LlhWorkspace,
    c: Vec<Complex64>,
    lu: Vec<Complex64>,
    ly: Vec<Complex64>,
}

impl OdeSystem for ParaSystem {
    fn rhs(&mut self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        let k = self.k;
        let (u, rest) = y.split_at(k);
        let yy = &rest[k..];
        self.cubic.cubic_into(u, &mut self.c);
        self.llh.apply(u, u, &[u, yy], &mut [&mut self.lu[..], &mut self.ly[..]]);
        let (du, drest) = dy.split_at_mut(k);
        let (dx, dyy) = drest.split_at_mut(k);
        for n in 0..k {
            du[n] = NEG_I * self.c[n];
            dx[n] = NEG_I * 2.0 * (self.lu[n] - self.ly[n]);
            dyy[n] = NEG_I * (self.c[n] - 2.0 * self.lu[n] + 2.0 * self.ly[n]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaTrajectory {
    pub times: Vec<f64>,
    pub u: Vec<PlusSpectrum>,
    pub x: Vec<PlusSpectrum>,
    pub y: Vec<PlusSpectrum>,
    pub window: f64,
    pub stats: StepStats,
}

impl ParaTrajectory {
    /// Largest `||Y - (u - X)||_{L^2}` over the stored times.
    pub fn max_identity_defect(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.x)
            .zip(&self.y)
            .map(|((u, x), y)| l2(&y.sub(&u.sub(x))))
            .fold(0.0, f64::max)
    }
}

/// Integrates `(u, X, Y)` with `i X_t = 2 Pi_{LLH}(u, u, X)` and `Y = u - X`
/// carried as its own unknown, starting from `(u0, u0, 0)`.
pub fn evolve_para_system(u0: &PlusSpectrum, t: f64, cfg: &FlowConfig) -> Result<ParaTrajectory> {
    cfg.validate()?;
    if u0.support_len() > cfg.cutoff {
        return Err(invalid("u0", "support exceeds the cutoff"));
    }
    let window = para_window(u0);
    if !(t.abs() <= window) {
        return Err(SzegoError::OutsideWindow { t, window });
    }
    let k = cfg.cutoff;
    let start = u0.resized(k);
    let zero = Complex64::new(0.0, 0.0);
    let mut sys = ParaSystem {
        k,
        cubic: CubicWorkspace::new(k, cfg.padding_factor),
        llh: LlhWorkspace::new(k, &cfg.relations),
        c: vec![zero; k],
        lu: vec![zero; k],
        ly: vec![zero; k],
    };
    let mut y0 = start.coeffs().to_vec();
    y0.extend_from_slice(start.coeffs());
    y0.resize(3 * k, zero);
    let pts = match &cfg.record {
        Record::Endpoints if t != 0.0 => vec![t],
        Record::Endpoints => vec![],
        Record::Every(dt) => {
            if !(*dt > 0.0) {
                return Err(invalid("record spacing", "must be positive"));
            }
            let n = (t.abs() / dt).floor() as usize;
            let mut v: Vec<f64> = (1..=n).map(|i| t.signum() * i as f64 * dt).filter(|&x| x != t).collect();
            v.push(t);
            v
        }
        Record::Times(ts) => {
            let mut v = ts.clone();
            v.retain(|&x| x != 0.0 && x != t);
            v.push(t);
            v
        }
    };
    let method = resolved_integrator(&start, cfg.integrator);
    let mut out = ParaTrajectory {
        times: Vec::new(),
        u: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
        window,
        stats: StepStats::default(),
    };
    let stats = integrate(&mut sys, &y0, 0.0, &pts, method, |time, y| {
        out.times.push(time);
        out.u.push(PlusSpectrum::from_vec(y[..k].to_vec()));
        out.x.push(PlusSpectrum::from_vec(y[k..2 * k].to_vec()));
        out.y.push(PlusSpectrum::from_vec(y[2 * k..].to_vec()));
    })?;
    out.stats = stats;
    Ok(out)
}

/// `Pi X_N(t)` on frequencies `0..cutoff`, where
/// `X_N = exp(-2i Theta(t)) P_{~N} u0` and `Theta` is the phase stored in a
/// trajectory of `P_{<<N} u0` run with phase tracking at block `N`.
pub fn profile_xn(phase_traj: &Trajectory, u0: &PlusSpectrum, block: u64, rel: &FrequencyRelations) -> Result<PlusSpectrum> {
    let theta = phase_traj.final_phase().ok_or(SzegoError::MissingPhase)?;
    modulated_profile(theta, u0, block, rel, phase_traj.final_state().len())
}

fn modulated_profile(theta: &GridSignal, u0: &PlusSpectrum, block: u64, rel: &FrequencyRelations, cutoff: usize) -> Result<PlusSpectrum> {
    let m = theta.len();
    let near = lp_project(u0, block, LpMode::Close, rel);
    if 2 * near.support_len() > m {
        return Err(invalid("phase grid", "too coarse for the datum"));
    }
    let mut grid = Grid::new(m);
    let mut g = grid.synthesize(&near);
    for (z, th) in g.samples.iter_mut().zip(&theta.samples) {
        *z *= Complex64::from_polar(1.0, -2.0 * th.re);
    }
    Ok(grid.analyze_plus(&g, cutoff))
}

/// `v_N = P_N u(t) - P_N X_N(t)`.
pub fn remainder_vn(u_t: &PlusSpectrum, xn: &PlusSpectrum, block: u64) -> PlusSpectrum {
    let k = u_t.len().max(xn.len());
    let diff = u_t.resized(k).sub(&xn.resized(k));
    crate::projector::block_project(&diff, block)
}

/// Runs both flows needed for `v_N(t)`: the full Galerkin flow of `u0` and
/// the phase-tracked flow of `P_{<<N} u0`.
pub fn remainder_at(u0: &PlusSpectrum, t: f64, block: u64, cfg: &FlowConfig) -> Result<PlusSpectrum> {
    let cfg = FlowConfig {
        record: Record::Endpoints,
        ..cfg.clone()
    };
    let plain = FlowConfig { track_phase: false, ..cfg.clone() };
    let ut = crate::flow::flow_map(u0, t, &plain)?;
    let low = lp_project(u0, block, LpMode::MuchLess, &cfg.relations);
    let phased = cfg.clone().with_phase(block, cfg.relations);
    let traj = crate::flow::evolve(&low, t, &phased)?;
    let xn = profile_xn(&traj, u0, block, &cfg.relations)?;
    Ok(remainder_vn(&ut, &xn, block))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::phi_block;
    use crate::grid::cubic_szego_term;
    use crate::testing::{decaying_spectrum, random_spectrum};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn block_piece(u: &PlusSpectrum, b: u64) -> PlusSpectrum {
        u.map_indexed(|n, z| z * phi_block(n as f64, b))
    }

    fn triple_sum(f: &PlusSpectrum, g: &PlusSpectrum, w: &PlusSpectrum, len: usize) -> Vec<Complex64> {
        let mut out = vec![c(0.0, 0.0); len];
        for a in 0..f.len() {
            for b in 0..g.len() {
                for d in 0..w.len() {
                    let n = a as i64 - b as i64 + d as i64;
                    if n >= 0 && (n as usize) < len {
                        out[n as usize] += f.get(a) * g.get(b).conj() * w.get(d);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn llh_matches_blockwise_oracle() {
        let rel = FrequencyRelations { ratio: 0.25 };
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let k = 32;
        let f = random_spectrum(&mut rng, k);
        let g = random_spectrum(&mut rng, k);
        let w = random_spectrum(&mut rng, k);
        let fast = paraproduct_llh(&f, &g, &w, &rel);
        let mut slow = vec![c(0.0, 0.0); 2 * k - 1];
        let blocks = blocks_up_to(k);
        for &b3 in &blocks {
            for &b1 in &blocks {
                for &b2 in &blocks {
                    if rel.much_less(b1, b3) && rel.much_less(b2, b3) {
                        let part = triple_sum(&block_piece(&f, b1), &block_piece(&g, b2), &block_piece(&w, b3), 2 * k - 1);
                        for (s, p) in slow.iter_mut().zip(part) {
                            *s += p;
                        }
                    }
                }
            }
        }
        let scale = slow.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in fast.coeffs().iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12 * scale);
        }
    }

    #[test]
    fn llh_trivial_cases() {
        let rel = FrequencyRelations::default();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = random_spectrum(&mut rng, 2);
        let zero = PlusSpectrum::zeros(128);
        assert!(paraproduct_llh(&f, &f, &zero, &rel).coeffs().iter().all(|z| z.norm() == 0.0));

        let w = PlusSpectrum::single_mode(100, c(1.0, 0.0));
        let fast = paraproduct_llh(&f, &f, &w, &rel);
        let full = cubic_like(&f, &w);
        for (a, b) in fast.coeffs().iter().zip(&full) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    fn cubic_like(f: &PlusSpectrum, w: &PlusSpectrum) -> Vec<Complex64> {
        triple_sum(f, f, w, 2 * w.len().max(f.len()) - 1)
    }

    #[test]
    fn para_system_at_zero_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let u0 = decaying_spectrum(&mut rng, 64, 1.5).scale(c(0.3, 0.0));
        let cfg = FlowConfig::dp54(64, 1e-11).with_record(Record::Every(0.01));
        let z = evolve_para_system(&u0, 0.0, &cfg).unwrap();
        assert_eq!(z.u[0], u0);
        assert_eq!(z.x[0], u0);
        assert!(z.y[0].coeffs().iter().all(|v| v.norm() == 0.0));
        let t = 0.9 * para_window(&u0);
        let traj = evolve_para_system(&u0, t, &cfg).unwrap();
        assert!(traj.max_identity_defect() < 1e-10, "{}", traj.max_identity_defect());
        let direct = crate::flow::flow_map(&u0, t, &FlowConfig::dp54(64, 1e-11)).unwrap();
        assert!(l2(&direct.sub(traj.u.last().unwrap())) < 1e-9);
    }

    #[test]
    fn para_system_rejects_long_times() {
        let u0 = PlusSpectrum::single_mode(3, c(2.0, 0.0));
        let cfg = FlowConfig::dp54(8, 1e-10);
        assert!(matches!(evolve_para_system(&u0, 0.5, &cfg), Err(SzegoError::OutsideWindow { .. })));
    }

    #[test]
    fn single_mode_profile_is_frozen() {
        let a = c(0.4, 0.3);
        let u0 = PlusSpectrum::single_mode(40, a);
        let cfg = FlowConfig::dp54(64, 1e-12);
        let t = 0.3;
        let traj = evolve_para_system(&u0, t, &cfg).unwrap();
        assert!(l2(&traj.x.last().unwrap().sub(&u0.resized(64))) < 1e-12);
        let expect = u0.resized(64).scale(Complex64::from_polar(1.0, -a.norm_sqr() * t) - 1.0);
        assert!(l2(&traj.y.last().unwrap().sub(&expect)) < 1e-10);
    }

    #[test]
    fn y_derivative_matches_taylor() {
        let rel = FrequencyRelations::default();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let mut u0 = decaying_spectrum(&mut rng, 80, 1.0).scale(c(0.2, 0.0));
        u0 = u0.map_indexed(|n, z| if n < 3 || n > 60 { z * 8.0 } else { z });
        let cfg = FlowConfig::dp54(80, 1e-13);
        let h = 1e-4;
        let yh = |t: f64| evolve_para_system(&u0, t, &cfg).unwrap().y.last().unwrap().clone();
        let fd = yh(h).sub(&yh(-h)).scale(c(0.5 / h, 0.0));
        let cub = cubic_szego_term(&u0).resized(80);
        let llh = paraproduct_llh(&u0, &u0, &u0, &rel).resized(80);
        assert!(l2(&llh) > 1e-3);
        let expect = cub.sub(&llh.scale(c(2.0, 0.0))).scale(NEG_I);
        assert!(l2(&fd.sub(&expect)) < 1e-6 * l2(&expect));
    }

    #[test]
    fn profile_trivial_cases() {
        let rel = FrequencyRelations::default();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let u0 = decaying_spectrum(&mut rng, 256, 0.8);
        let cfg = FlowConfig::dp54(256, 1e-10);
        for block in [16u64, 64] {
            let v = remainder_at(&u0, 0.0, block, &cfg).unwrap();
            assert!(l2(&v) < 1e-13, "{}", l2(&v));
        }
        let cst = PlusSpectrum::new(vec![c(0.7, -0.2)]).unwrap();
        let low = lp_project(&cst, 64, LpMode::MuchLess, &rel);
        let traj = crate::flow::evolve(&low, 0.4, &FlowConfig::dp54(64, 1e-12).with_phase(64, rel)).unwrap();
        let theta = traj.final_phase().unwrap();
        for z in &theta.samples {
            assert!((z.re - cst.get(0).norm_sqr() * 0.4).abs() < 1e-10);
        }
        let xn = profile_xn(&traj, &cst, 64, &rel).unwrap();
        assert!(l2(&xn) == 0.0);
        assert!(l2(&remainder_at(&cst, 0.4, 64, &FlowConfig::dp54(64, 1e-12)).unwrap()) < 1e-14);
        let no_phase = crate::flow::evolve(&low, 0.4, &FlowConfig::dp54(64, 1e-12)).unwrap();
        assert!(matches!(profile_xn(&no_phase, &cst, 64, &rel), Err(SzegoError::MissingPhase)));
    }
}
