use crate::error::{invalid, Result};
use crate::grid::{grid_size, Grid};
use crate::projector::{block_project, blocks_up_to};
use crate::spectrum::PlusSpectrum;

/// Oversampling factor for `L^p` quadrature at non-even `p`.
pub const DEFAULT_OVERSAMPLE: usize = 8;

pub fn japanese(n: f64) -> f64 {
    (1.0 + n * n).sqrt()
}

pub fn l2_sq(u: &PlusSpectrum) -> f64 {
    u.coeffs().iter().map(|c| c.norm_sqr()).sum()
}

pub fn l2(u: &PlusSpectrum) -> f64 {
    l2_sq(u).sqrt()
}

/// `sum <n>^{2s} |u(n)|^2`
pub fn hs_sq(u: &PlusSpectrum, s: f64) -> f64 {
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| (1.0 + (n * n) as f64).powf(s) * c.norm_sqr())
        .sum()
}

pub fn hs(u: &PlusSpectrum, s: f64) -> f64 {
    hs_sq(u, s).sqrt()
}

/// `sum n^{2 sigma} |u(n)|^2`, with `0^0 = 1`.
pub fn homog_sq(u: &PlusSpectrum, sigma: f64) -> f64 {
    u.coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| (n as f64).powf(2.0 * sigma) * c.norm_sqr())
        .sum()
}

/// Momentum `sum n |u(n)|^2`.
pub fn momentum(u: &PlusSpectrum) -> f64 {
    homog_sq(u, 0.5)
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("need 1 <= p < inf, got {p}")));
    }
    Ok(())
}

fn is_even_integer(p: f64) -> bool {
    p.fract() == 0.0 && (p as u64) % 2 == 0
}

/// Grid size used for the `L^p` quadrature of a spectrum with `k` coefficients.
pub fn lp_grid_size(k: usize, p: f64, oversample: usize) -> usize {
    if is_even_integer(p) {
        grid_size((p as usize / 2) * k + 1, 1).max(grid_size(k, 2))
    } else {
        grid_size(k, oversample)
    }
}

/// `(1/2pi int |u|^p)^{1/p}` by trapezoidal quadrature; exact for even `p`.
pub fn lp_with(u: &PlusSpectrum, p: f64, oversample: usize) -> Result<f64> {
    check_p(p)?;
    let mut grid = Grid::new(lp_grid_size(u.len(), p, oversample));
    let g = grid.synthesize(u);
    let mean = g.samples.iter().map(|z| z.norm().powf(p)).sum::<f64>() / g.len() as f64;
    Ok(mean.powf(1.0 / p))
}

pub fn lp(u: &PlusSpectrum, p: f64) -> Result<f64> {
    lp_with(u, p, DEFAULT_OVERSAMPLE)
}

/// Hamiltonian `E(u) = ||u||_{L^4}^4`.
pub fn l4_hamiltonian(u: &PlusSpectrum) -> f64 {
    let mut grid = Grid::new(lp_grid_size(u.len(), 4.0, 1));
    let g = grid.synthesize(u);
    g.samples.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / g.len() as f64
}

/// Sup of `|u|` over a grid oversampled by `oversample`.
pub fn linf_grid(u: &PlusSpectrum, oversample: usize) -> f64 {
    Grid::new(grid_size(u.len(), oversample)).synthesize(u).max_abs()
}

/// Per-block sequence `N^sigma ||P_N u||_{L^p}`.
pub fn besov_blocks(u: &PlusSpectrum, sigma: f64, p: f64) -> Result<Vec<(u64, f64)>> {
    check_p(p)?;
    blocks_up_to(u.len())
        .into_iter()
        .map(|b| Ok((b, (b as f64).powf(sigma) * lp(&block_project(u, b), p)?)))
        .collect()
}

/// `B^sigma_{p,q}` norm; `q = f64::INFINITY` gives the supremum.
pub fn besov(u: &PlusSpectrum, sigma: f64, p: f64, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(invalid("q", format!("need q >= 1 or q = inf, got {q}")));
    }
    let blocks = besov_blocks(u, sigma, p)?;
    if q.is_infinite() {
        Ok(blocks.iter().map(|&(_, v)| v).fold(0.0, f64::max))
    } else {
        Ok(blocks.iter().map(|&(_, v)| v.powf(q)).sum::<f64>().powf(1.0 / q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_spectrum;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_values() {
        let u = PlusSpectrum::new(vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        assert!((hs_sq(&u, 1.0) - 3.0).abs() < 1e-14);
        assert!((hs_sq(&u, 0.3) - (1.0 + 2f64.powf(0.3))).abs() < 1e-14);

        let five = PlusSpectrum::single_mode(5, Complex64::new(2.0, 0.0));
        assert!((l4_hamiltonian(&five) - 16.0).abs() < 1e-12);

        for j in 1..8 {
            let n = 1usize << j;
            let e = PlusSpectrum::single_mode(n, Complex64::new(0.0, 1.0));
            let b = besov(&e, 0.7, 4.0, f64::INFINITY).unwrap();
            assert!((b - (n as f64).powf(0.7)).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn rejects_bad_exponents() {
        let u = PlusSpectrum::zeros(3);
        assert!(lp(&u, 0.5).is_err());
        assert!(besov(&u, 0.0, 2.0, 0.5).is_err());
        assert!(besov(&u, 0.0, 2.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn even_lp_is_exact() {
        // ||1 + e^{ix}||_{L^4}^4 = 1/2pi int |1+e^{ix}|^4 = 6
        let u = PlusSpectrum::new(vec![Complex64::new(1.0, 0.0); 2]).unwrap();
        assert!((lp(&u, 4.0).unwrap().powi(4) - 6.0).abs() < 1e-12);
        assert!((lp(&u, 6.0).unwrap().powi(6) - 20.0).abs() < 1e-12);
        assert!((l4_hamiltonian(&u) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn grid_l2_is_plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_spectrum(&mut rng, 37);
        assert!((lp(&u, 2.0).unwrap().powi(2) - l2_sq(&u)).abs() < 1e-12 * l2_sq(&u));
    }

    proptest! {
        #[test]
        fn hs_monotone_in_s(coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20), s in 0.0f64..2.0) {
            let u = PlusSpectrum::new(coeffs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap();
            prop_assert!(hs_sq(&u, s) >= l2_sq(&u) - 1e-12);
            prop_assert!(hs_sq(&u, s + 0.5) >= hs_sq(&u, s) - 1e-12);
        }
    }
}
