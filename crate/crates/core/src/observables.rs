//! Scalar observables of measure transport: `Q_{pi_N}`, `Q_N`, `F_N`,
//! `G_N`, the densities `f_{t,N}` and the profile `h_N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bump::block_weight;
use crate::error::{invalid, Result};
use crate::flow::{evolve, flow_map, FlowConfig, Record};
use crate::grid::{cubic_szego_term, grid_size, quartic_mean, Grid};
use crate::norms::hs_sq;
use crate::quadrature::gauss7;
use crate::spectrum::{sharp_truncate, PlusSpectrum};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `n^2 phi_N(n)^2` for `n < k`.
pub fn block_weights(k: usize, block: u64) -> Vec<f64> {
    (0..k).map(|n| block_weight(n as u64, block)).collect()
}

fn weighted(u: &PlusSpectrum, w: &[f64]) -> PlusSpectrum {
    u.map_indexed(|n, c| c * w.get(n).copied().unwrap_or(0.0))
}

/// `||P_N u||_{H^1 homogeneous}^2 = sum n^2 phi_N(n)^2 |u(n)|^2`.
pub fn block_energy(u: &PlusSpectrum, block: u64) -> f64 {
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| block_weight(n as u64, block) * c.norm_sqr())
        .sum()
}

/// `2 Im <pi_N Pi(|pi_N u|^2 pi_N u), <D>^{2s} pi_N u>`, the derivative of
/// `||u||_{H^s}^2` along the flow truncated at `cutoff`.
pub fn q_pi(u: &PlusSpectrum, s: f64, cutoff: usize) -> f64 {
    let v = sharp_truncate(&u.resized(cutoff), cutoff);
    let c = cubic_szego_term(&v);
    let total: Complex64 = (0..cutoff)
        .map(|n| (1.0 + (n * n) as f64).powf(s) * c.get(n) * v.get(n).conj())
        .sum();
    2.0 * total.im
}

/// The quadrilinear form with multiplier `(i/2) Psi_N`.
pub fn q_n_multilinear(f: [&PlusSpectrum; 4], block: u64) -> Complex64 {
    let k = f.iter().map(|x| x.len()).max().unwrap_or(1);
    let w = block_weights(k, block);
    let wf: Vec<PlusSpectrum> = f.iter().map(|x| weighted(x, &w)).collect();
    let t1 = quartic_mean(&wf[0], f[1], f[2], f[3]);
    let t2 = quartic_mean(f[0], &wf[1], f[2], f[3]);
    let t3 = quartic_mean(f[0], f[1], &wf[2], f[3]);
    let t4 = quartic_mean(f[0], f[1], f[2], &wf[3]);
    I * 0.5 * (t1 - t2 + t3 - t4)
}

/// Diagonal `Q_N(u, u, u, u) = 2 Im sum w(n) Pi(|u|^2 u)(n) conj(u(n))`.
pub fn q_n(u: &PlusSpectrum, block: u64) -> f64 {
    let c = cubic_szego_term(u);
    let total: Complex64 = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, &un)| block_weight(n as u64, block) * c.get(n) * un.conj())
        .sum();
    2.0 * total.im
}

fn scale(s: f64, block: u64) -> f64 {
    (block as f64).powf(4.0 * s - 4.0)
}

/// `F_N = N^{4s-4} Q_N(u0)`.
pub fn f_n(u0: &PlusSpectrum, s: f64, block: u64) -> f64 {
    scale(s, block) * q_n(u0, block)
}

/// `G_N = N^{4s-4} d^2/dt^2 ||P_N u(t)||^2` at `t = 0`, by differentiating
/// `2 Im sum w C(u) conj(u)` along `u' = V = -i Pi(|u|^2 u)`.
pub fn g_n(u0: &PlusSpectrum, s: f64, block: u64) -> f64 {
    let k = u0.len();
    let c = cubic_szego_term(u0);
    let v = c.scale(-I);
    let wu = weighted(u0, &block_weights(k, block));

    let mut grid = Grid::new(grid_size(3 * k + 1, 1));
    let gu = grid.synthesize(u0);
    let gv = grid.synthesize(&v);
    let gw = grid.synthesize(&wu);
    let m = grid.size() as f64;
    let mut t1 = Complex64::new(0.0, 0.0);
    for j in 0..grid.size() {
        let u = gu.samples[j];
        let dv = u * u.conj() * gv.samples[j] * 2.0 + u * u * gv.samples[j].conj();
        t1 += dv * gw.samples[j].conj();
    }
    t1 /= m;
    let t2: Complex64 = (0..c.len())
        .map(|n| block_weight(n as u64, block) * c.get(n) * v.get(n).conj())
        .sum();
    scale(s, block) * 2.0 * (t1 + t2).im
}

/// `G_N` from the quadrilinear form with `V` inserted in each slot in turn.
pub fn g_n_slots(u0: &PlusSpectrum, s: f64, block: u64) -> f64 {
    let v = cubic_szego_term(u0).scale(-I);
    let u = u0.resized(v.len());
    let total = q_n_multilinear([&v, &u, &u, &u], block)
        + q_n_multilinear([&u, &v, &u, &u], block)
        + q_n_multilinear([&u, &u, &v, &u], block)
        + q_n_multilinear([&u, &u, &u, &v], block);
    scale(s, block) * total.re
}

/// Centered difference of `t -> ||P_N Phi_t u0||^2` at `t = 0`.
pub fn energy_derivative_fd(u0: &PlusSpectrum, block: u64, h: f64, cfg: &FlowConfig) -> Result<f64> {
    let plus = flow_map(u0, h, cfg)?;
    let minus = flow_map(u0, -h, cfg)?;
    Ok((block_energy(&plus, block) - block_energy(&minus, block)) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub log_formula: f64,
    pub log_integral: f64,
}

impl DensityValue {
    pub fn formula(&self) -> f64 {
        self.log_formula.exp()
    }

    pub fn integral(&self) -> f64 {
        self.log_integral.exp()
    }
}

/// Number of seven-point panels used along the trajectory.
const DENSITY_PANELS: usize = 16;

/// `f_{t,N}(u) = exp(||u||_{H^s}^2 - ||Phi_{-t,N} u||_{H^s}^2)` together with
/// `exp(-int_0^{-t} Q_{pi_N}(Phi_tau u) dtau)`, both kept in log form.
pub fn density_f_tn(u0: &PlusSpectrum, t: f64, s: f64, cutoff: usize, cfg: &FlowConfig) -> Result<DensityValue> {
    if u0.support_len() > cutoff {
        return Err(invalid("u0", "must be supported below the truncation"));
    }
    if t == 0.0 {
        return Ok(DensityValue { log_formula: 0.0, log_integral: 0.0 });
    }
    let u = u0.resized(cutoff);
    let span = -t;
    let rule = gauss7();
    let mut nodes = Vec::with_capacity(DENSITY_PANELS * rule.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    let panel = span / DENSITY_PANELS as f64;
    for p in 0..DENSITY_PANELS {
        let a = p as f64 * panel;
        for &(x, w) in &rule {
            nodes.push(a + 0.5 * (x + 1.0) * panel);
            weights.push(0.5 * w * panel);
        }
    }
    let cfg = FlowConfig {
        cutoff,
        track_phase: false,
        record: Record::Times(nodes.clone()),
        ..cfg.clone()
    };
    let traj = evolve(&u, span, &cfg)?;
    let mut integral = 0.0;
    for (time, state) in traj.times.iter().zip(&traj.states) {
        if let Some(i) = nodes.iter().position(|x| x == time) {
            integral += weights[i] * q_pi(state, s, cutoff);
        }
    }
    let back = traj.final_state();
    Ok(DensityValue {
        log_formula: hs_sq(&u, s) - hs_sq(back, s),
        log_integral: -integral,
    })
}

/// `h_N(t) = (||P_N Phi_t u0||^2 - ||P_N u0||^2) / N^{4-4s}`.
pub fn h_n_profile(u0: &PlusSpectrum, t: f64, s: f64, block: u64, cfg: &FlowConfig) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let ut = flow_map(u0, t, cfg)?;
    Ok(h_n_from_states(u0, &ut, s, block))
}

/// `h_N` from an already evolved state.
pub fn h_n_from_states(u0: &PlusSpectrum, ut: &PlusSpectrum, s: f64, block: u64) -> f64 {
    (block_energy(ut, block) - block_energy(u0, block)) * scale(s, block)
}

/// `h_N(t) - t F_N - (t^2/2) G_N`.
pub fn taylor_residual(u0: &PlusSpectrum, t: f64, s: f64, block: u64, cfg: &FlowConfig) -> Result<f64> {
    let h = h_n_profile(u0, t, s, block, cfg)?;
    Ok(h - t * f_n(u0, s, block) - 0.5 * t * t * g_n(u0, s, block))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{psi_n, psi_s};
    use crate::testing::{decaying_spectrum, random_spectrum, rel_err as rel};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quartic_oracle(f: [&PlusSpectrum; 4], mult: impl Fn([i64; 4]) -> f64) -> Complex64 {
        let k: Vec<i64> = f.iter().map(|x| x.len() as i64).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for n1 in 0..k[0] {
            for n2 in 0..k[1] {
                for n3 in 0..k[2] {
                    let n4 = n1 - n2 + n3;
                    if n4 < 0 || n4 >= k[3] {
                        continue;
                    }
                    let m = mult([n1, n2, n3, n4]);
                    if m != 0.0 {
                        total += m * f[0].get(n1 as usize) * f[1].get(n2 as usize).conj() * f[2].get(n3 as usize) * f[3].get(n4 as usize).conj();
                    }
                }
            }
        }
        I * 0.5 * total
    }

    /// Sum over `n1 - n2 + n3 - n4 + n5 - n6 = 0` of `f_N` against the sextic
    /// monomial, with `f_N` the average of `Psi_N(n1 - n2 + n3, n4, n5, n6)`
    /// over the 72 index permutations preserving or swapping odd and even slots.
    fn sextic_symmetrized(u: &PlusSpectrum, block: u64) -> f64 {
        let k = u.len() as i64;
        let mut perms = Vec::new();
        let mut p = [0usize, 1, 2, 3, 4, 5];
        heap_permutations(&mut p, 6, &mut perms);
        let group: Vec<[usize; 6]> = perms
            .into_iter()
            .filter(|p| {
                let odd: Vec<usize> = [0, 2, 4].iter().map(|&i| p[i] % 2).collect();
                odd.iter().all(|&x| x == 0) || odd.iter().all(|&x| x == 1)
            })
            .collect();
        assert_eq!(group.len(), 72);
        let psi_tilde = |n: [i64; 6]| {
            let first = n[0] - n[1] + n[2];
            if first < 0 {
                0.0
            } else {
                psi_n([first, n[3], n[4], n[5]], block)
            }
        };
        let mut total = Complex64::new(0.0, 0.0);
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        for e in 0..k {
                            let f = a - b + c - d + e;
                            if f < 0 || f >= k {
                                continue;
                            }
                            let n = [a, b, c, d, e, f];
                            let sym: f64 = group.iter().map(|g| psi_tilde(g.map(|i| n[i]))).sum::<f64>() / 72.0;
                            if sym == 0.0 {
                                continue;
                            }
                            let mono = u.get(a as usize) * u.get(b as usize).conj() * u.get(c as usize) * u.get(d as usize).conj() * u.get(e as usize) * u.get(f as usize).conj();
                            total += sym * mono;
                        }
                    }
                }
            }
        }
        2.0 * total.re
    }

    /// `2 Re sum Psi_N(n1, n2, n3, n4) C(n1) conj(u(n2)) u(n3) conj(u(n4))`
    /// with `C(n1)` expanded as its own triple sum.
    fn sextic_direct(u: &PlusSpectrum, block: u64) -> f64 {
        let k = u.len() as i64;
        let mut total = Complex64::new(0.0, 0.0);
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let n1 = a - b + c;
                    if n1 < 0 {
                        continue;
                    }
                    let cu = u.get(a as usize) * u.get(b as usize).conj() * u.get(c as usize);
                    for n2 in 0..k {
                        for n3 in 0..k {
                            let n4 = n1 - n2 + n3;
                            if n4 < 0 || n4 >= k {
                                continue;
                            }
                            let m = psi_n([n1, n2, n3, n4], block);
                            if m != 0.0 {
                                total += m * cu * u.get(n2 as usize).conj() * u.get(n3 as usize) * u.get(n4 as usize).conj();
                            }
                        }
                    }
                }
            }
        }
        2.0 * total.re
    }

    fn heap_permutations(p: &mut [usize; 6], k: usize, out: &mut Vec<[usize; 6]>) {
        if k == 1 {
            out.push(*p);
            return;
        }
        heap_permutations(p, k - 1, out);
        for i in 0..k - 1 {
            if k % 2 == 0 {
                p.swap(i, k - 1);
            } else {
                p.swap(0, k - 1);
            }
            heap_permutations(p, k - 1, out);
        }
    }

    #[test]
    fn q_pi_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..100 {
            let n = 2 + trial % 15;
            let mut u = random_spectrum(&mut rng, n);
            if trial % 3 == 0 {
                u = u.map_indexed(|_, c| Complex64::new(c.re, 0.0));
            }
            let fast = q_pi(&u, 0.8, n);
            let slow = quartic_oracle([&u, &u, &u, &u], |m| psi_s(m, 0.8)).re;
            let size = crate::norms::hs_sq(&u, 0.8).powi(2);
            assert!((fast - slow).abs() < 1e-10 * slow.abs() + 1e-13 * size, "n = {n}: {fast} {slow}");
        }
    }

    #[test]
    fn q_pi_trivial_cases() {
        let single = PlusSpectrum::single_mode(6, Complex64::new(1.0, 2.0));
        assert!(q_pi(&single, 0.7, 8).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_spectrum(&mut rng, 12);
        let rotated = u.scale(Complex64::from_polar(1.0, 0.9));
        assert!((q_pi(&u, 0.7, 12) - q_pi(&rotated, 0.7, 12)).abs() < 1e-12);
    }

    #[test]
    fn q_n_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for trial in 0..100 {
            let k = 4 + trial % 13;
            let block = [1u64, 2, 4, 8][trial % 4];
            let f: Vec<PlusSpectrum> = (0..4).map(|_| random_spectrum(&mut rng, k)).collect();
            let fast = q_n_multilinear([&f[0], &f[1], &f[2], &f[3]], block);
            let slow = quartic_oracle([&f[0], &f[1], &f[2], &f[3]], |m| psi_n(m, block));
            assert!((fast - slow).norm() < 1e-10 * slow.norm().max(1e-12), "k = {k}, N = {block}");
            let diag = q_n_multilinear([&f[0], &f[0], &f[0], &f[0]], block);
            assert!(diag.im.abs() <= 1e-12 * diag.re.abs() + 1e-14);
            assert!(rel(q_n(&f[0], block), diag.re) < 1e-10 || diag.re.abs() < 1e-14);
        }
        let single = PlusSpectrum::single_mode(8, Complex64::new(1.0, 0.0));
        assert!(q_n_multilinear([&single, &single, &single, &single], 8).norm() < 1e-14);
    }

    #[test]
    fn g_n_matches_sextic_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for trial in 0..100 {
            let k = 4 + trial % 9;
            let block = [1u64, 2, 4, 8][trial % 4];
            let u = random_spectrum(&mut rng, k);
            let fast = g_n(&u, 1.0, block);
            let slow = sextic_direct(&u, block);
            assert!(rel(fast, slow) < 1e-10, "k = {k}, N = {block}: {fast} {slow}");
            if trial < 3 {
                let sym = sextic_symmetrized(&u, block);
                assert!(rel(fast, sym) < 1e-8, "symmetrized: {fast} {sym}");
            }
            let slots = g_n_slots(&u, 1.0, block);
            assert!(rel(slots, slow) < 1e-10);
        }
    }

    #[test]
    fn g_n_vanishes_on_constants() {
        let u = PlusSpectrum::new(vec![Complex64::new(0.3, 1.1)]).unwrap();
        for block in [4u64, 8, 64] {
            assert_eq!(g_n(&u, 0.6, block), 0.0);
        }
    }

    #[test]
    fn f_n_against_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let u0 = decaying_spectrum(&mut rng, 64, 0.8);
        let cfg = FlowConfig::dp54(64, 1e-13);
        for block in [4u64, 8, 16] {
            let fd = energy_derivative_fd(&u0, block, 1e-4, &cfg).unwrap();
            let exact = q_n(&u0, block);
            assert!(rel(fd, exact) < 1e-6, "N = {block}: {fd} {exact}");
            let s = 0.7;
            assert!(rel(f_n(&u0, s, block) * (block as f64).powf(4.0 - 4.0 * s), exact) < 1e-12);
        }
        let single = PlusSpectrum::single_mode(5, Complex64::new(2.0, 0.0));
        assert!(f_n(&single, 0.7, 4).abs() < 1e-12);
    }

    #[test]
    fn energy_derivative_along_trajectory() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let u0 = decaying_spectrum(&mut rng, 32, 1.0);
        let cfg = FlowConfig::dp54(32, 1e-13).with_record(Record::Every(0.1));
        let traj = evolve(&u0, 0.5, &cfg).unwrap();
        for state in traj.states.iter().skip(1) {
            let fd = energy_derivative_fd(state, 8, 1e-4, &cfg).unwrap();
            assert!(rel(fd, q_n(state, 8)) < 1e-6);
        }
    }

    #[test]
    fn g_n_is_second_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let u0 = decaying_spectrum(&mut rng, 24, 0.8);
        let cfg = FlowConfig::dp54(2 * 24 - 1, 1e-13);
        let e = |t: f64| block_energy(&flow_map(&u0, t, &cfg).unwrap(), 8);
        let d2 = |h: f64| (e(h) - 2.0 * e(0.0) + e(-h)) / (h * h);
        let fd = (4.0 * d2(1e-3) - d2(2e-3)) / 3.0;
        assert!(rel(fd, g_n(&u0, 1.0, 8)) < 1e-5, "{fd} {}", g_n(&u0, 1.0, 8));
    }

    #[test]
    fn density_two_representations() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let u0 = decaying_spectrum(&mut rng, 32, 1.0);
        let cfg = FlowConfig::dp54(32, 1e-12);
        let d = density_f_tn(&u0, 0.3, 1.2, 32, &cfg).unwrap();
        assert!(rel(d.formula(), d.integral()) < 1e-6, "{d:?}");
        let z = density_f_tn(&u0, 0.0, 1.2, 32, &cfg).unwrap();
        assert_eq!(z.formula(), 1.0);
        let cst = PlusSpectrum::new(vec![Complex64::new(1.0, 1.0)]).unwrap();
        let d = density_f_tn(&cst, 0.5, 1.2, 8, &cfg).unwrap();
        assert!((d.formula() - 1.0).abs() < 1e-12 && (d.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let u = decaying_spectrum(&mut rng, 16, 1.0);
        let cfg = FlowConfig::dp54(16, 1e-12);
        let (a, b) = (0.2, 0.15);
        let whole = density_f_tn(&u, a + b, 1.1, 16, &cfg).unwrap().log_formula;
        let first = density_f_tn(&u, b, 1.1, 16, &cfg).unwrap().log_formula;
        let back = flow_map(&u, -b, &cfg).unwrap();
        let second = density_f_tn(&back, a, 1.1, 16, &cfg).unwrap().log_formula;
        assert!((whole - first - second).abs() < 1e-8);
    }

    #[test]
    fn h_n_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let u0 = decaying_spectrum(&mut rng, 16, 1.0);
        let cfg = FlowConfig::dp54(31, 1e-12);
        assert_eq!(h_n_profile(&u0, 0.0, 0.6, 4, &cfg).unwrap(), 0.0);
        let single = PlusSpectrum::single_mode(4, Complex64::new(1.5, 0.0));
        assert!(h_n_profile(&single, 0.3, 0.6, 4, &cfg).unwrap().abs() < 1e-9);
        let t = 1e-3;
        let r = taylor_residual(&u0, t, 0.6, 4, &cfg).unwrap();
        assert!(r.abs() < 0.3 * 0.5 * t * t * g_n(&u0, 0.6, 4).abs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn observables_phase_invariant(seed in 0u64..1000, theta in 0.0f64..std::f64::consts::TAU) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_spectrum(&mut rng, 12);
            let r = u.scale(Complex64::from_polar(1.0, theta));
            for (a, b) in [
                (q_pi(&u, 0.7, 12), q_pi(&r, 0.7, 12)),
                (q_n(&u, 4), q_n(&r, 4)),
                (g_n(&u, 0.7, 4), g_n(&r, 0.7, 4)),
            ] {
                prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            }
        }
    }
}
