//! Sampling the truncated Gaussian measures `mu_{s,K}`.
//!
//! Coefficient `n` of sample `i` reads a fixed window of the ChaCha20 key
//! stream selected by `(seed, i, n)`, so samples are independent of order and
//! nested truncations agree bit for bit.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::norms::besov_blocks;
use crate::spectrum::PlusSpectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub seed: u64,
    pub sample_count: usize,
    pub s: f64,
    pub cutoffs: Vec<u64>,
    pub times: Vec<f64>,
    pub galerkin_factor: usize,
}

impl EnsembleSpec {
    pub fn new(seed: u64, sample_count: usize, s: f64) -> Self {
        Self {
            seed,
            sample_count,
            s,
            cutoffs: Vec::new(),
            times: Vec::new(),
            galerkin_factor: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.5) {
            return Err(invalid("s", format!("Gaussian data need s > 1/2, got {}", self.s)));
        }
        if self.sample_count == 0 {
            return Err(invalid("sample_count", "must be positive"));
        }
        if self.galerkin_factor == 0 {
            return Err(invalid("galerkin_factor", "must be positive"));
        }
        if let Some(n) = self.cutoffs.iter().find(|n| !n.is_power_of_two()) {
            return Err(invalid("cutoffs", format!("{n} is not dyadic")));
        }
        Ok(())
    }

    /// Galerkin cutoff `galerkin_factor * max N`.
    pub fn full_cutoff(&self) -> usize {
        self.galerkin_factor * self.cutoffs.iter().copied().max().unwrap_or(1) as usize
    }
}

fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard complex Gaussians `g_0, ..., g_{k-1}` of sample `index`.
pub fn gaussian_coefficients(seed: u64, index: u64, k: usize) -> Vec<Complex64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.set_word_pos(0);
    (0..k)
        .map(|_| {
            let u1 = unit_open(rng.next_u64());
            let u2 = unit_open(rng.next_u64());
            let r = (-u1.ln()).sqrt();
            let (sin, cos) = (2.0 * std::f64::consts::PI * u2).sin_cos();
            Complex64::new(r * cos, r * sin)
        })
        .collect()
}

/// Sample `index` of `mu_{s,K}`: `u(n) = g_n / <n>^s` for `n < K`.
pub fn sample_mu(spec: &EnsembleSpec, index: usize, k: usize) -> Result<PlusSpectrum> {
    if !(spec.s > 0.5) {
        return Err(invalid("s", format!("Gaussian data need s > 1/2, got {}", spec.s)));
    }
    if k == 0 {
        return Err(invalid("K", "must be positive"));
    }
    let g = gaussian_coefficients(spec.seed, index as u64, k);
    Ok(PlusSpectrum::from_vec(
        g.into_iter()
            .enumerate()
            .map(|(n, z)| z * (1.0 + (n * n) as f64).powf(-spec.s / 2.0))
            .collect(),
    ))
}

/// Upper bound for `sum_{n >= K} <n>^{-2s}`, the neglected variance.
pub fn tail_variance_bound(s: f64, k: usize) -> f64 {
    let k = k.max(2) as f64;
    (k - 1.0).powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)
}

/// Sequence `(N, N^{s-1/2} ||P_N u||_{L^p})` over the blocks `N <= K`.
pub fn besov_diagnostic(u: &PlusSpectrum, s: f64, p: u32) -> Result<Vec<(u64, f64)>> {
    if p == 0 || p % 2 == 1 {
        return Err(invalid("p", "diagnostic uses even p"));
    }
    let k = u.len() as u64;
    Ok(besov_blocks(u, s - 0.5, p as f64)?
        .into_iter()
        .filter(|&(n, _)| n <= k.max(1))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bump::phi_block;
    use crate::norms::l2_sq;
    use crate::projector::block_project;
    use rayon::prelude::*;

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn rejects_low_regularity() {
        let spec = EnsembleSpec::new(1, 10, 0.5);
        assert!(sample_mu(&spec, 0, 8).is_err());
        assert!(spec.validate().is_err());
    }

    #[test]
    fn nested_truncations_agree() {
        let spec = EnsembleSpec::new(42, 10, 0.8);
        let short = sample_mu(&spec, 3, 16).unwrap();
        let long = sample_mu(&spec, 3, 64).unwrap();
        assert_eq!(short.coeffs(), &long.coeffs()[..16]);
    }

    #[test]
    fn order_independent() {
        let spec = EnsembleSpec::new(9, 64, 0.7);
        let seq: Vec<_> = (0..64).map(|i| sample_mu(&spec, i, 32).unwrap()).collect();
        let par: Vec<_> = (0..64).into_par_iter().rev().map(|i| (i, sample_mu(&spec, i, 32).unwrap())).collect();
        for (i, u) in par {
            assert_eq!(u, seq[i]);
        }
        assert_ne!(seq[0], seq[1]);
    }

    #[test]
    fn second_moments() {
        let spec = EnsembleSpec::new(2024, 100_000, 0.8);
        let samples: Vec<_> = (0..spec.sample_count).map(|i| sample_mu(&spec, i, 32).unwrap()).collect();
        for n in [0usize, 5, 31] {
            let xs: Vec<f64> = samples.iter().map(|u| u.get(n).norm_sqr()).collect();
            let (m, se) = mean_se(&xs);
            let want = (1.0 + (n * n) as f64).powf(-0.8);
            assert!((m - want).abs() < 3.0 * se, "n = {n}: {m} vs {want}");
        }
        let g: Vec<Vec<Complex64>> = (0..100_000).map(|i| gaussian_coefficients(2024, i, 3)).collect();
        for n in 0..3 {
            let re: Vec<f64> = g.iter().map(|v| (v[n] * v[n]).re).collect();
            let im: Vec<f64> = g.iter().map(|v| (v[n] * v[n]).im).collect();
            let abs: Vec<f64> = g.iter().map(|v| v[n].norm_sqr()).collect();
            for xs in [&re, &im] {
                let (m, se) = mean_se(xs);
                assert!(m.abs() < 3.0 * se);
            }
            let (m, se) = mean_se(&abs);
            assert!((m - 1.0).abs() < 3.0 * se);
        }
    }

    #[test]
    fn expected_mass_matches_partial_sum() {
        let spec = EnsembleSpec::new(5, 4000, 0.6);
        let xs: Vec<f64> = (0..spec.sample_count).map(|i| l2_sq(&sample_mu(&spec, i, 256).unwrap())).collect();
        let (m, se) = mean_se(&xs);
        let mut want = 0.0;
        for n in (0..256).rev() {
            want += (1.0 + (n * n) as f64).powf(-0.6);
        }
        assert!((m - want).abs() < 3.0 * se, "{m} vs {want}");
    }

    #[test]
    fn block_mass_matches_symbol_sum() {
        let spec = EnsembleSpec::new(6, 4000, 0.7);
        for block in [1u64, 8, 32] {
            let xs: Vec<f64> = (0..spec.sample_count)
                .map(|i| l2_sq(&block_project(&sample_mu(&spec, i, 64).unwrap(), block)))
                .collect();
            let (m, se) = mean_se(&xs);
            let want: f64 = (0..64)
                .map(|n| phi_block(n as f64, block).powi(2) * (1.0 + (n * n) as f64).powf(-0.7))
                .sum();
            assert!((m - want).abs() < 3.0 * se, "N = {block}: {m} vs {want}");
        }
    }

    #[test]
    fn diagnostic_examples() {
        let e = PlusSpectrum::single_mode(16, Complex64::new(1.0, 0.0));
        let d = besov_diagnostic(&e, 0.8, 4).unwrap();
        let at16 = d.iter().find(|&&(n, _)| n == 16).unwrap().1;
        assert!((at16 - 16f64.powf(0.3)).abs() < 1e-12);
        let z = besov_diagnostic(&PlusSpectrum::zeros(10), 0.8, 4).unwrap();
        assert!(z.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn diagnostic_sup_stable_in_cutoff() {
        let spec = EnsembleSpec::new(77, 100, 0.8);
        let median = |k: usize| {
            let mut v: Vec<f64> = (0..spec.sample_count)
                .into_par_iter()
                .map(|i| {
                    let u = sample_mu(&spec, i, k).unwrap();
                    besov_diagnostic(&u, 0.8, 4).unwrap().iter().map(|p| p.1).fold(0.0, f64::max)
                })
                .collect();
            v.sort_by(f64::total_cmp);
            0.5 * (v[49] + v[50])
        };
        let a = median(1 << 12);
        let b = median(1 << 13);
        assert!(a.is_finite() && (0.8..=1.25).contains(&(b / a)), "{a} {b}");
    }
}
