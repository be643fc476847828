use num_complex::Complex64;
use rand::Rng;

use crate::spectrum::PlusSpectrum;

pub fn random_spectrum<R: Rng>(rng: &mut R, k: usize) -> PlusSpectrum {
    PlusSpectrum::new(
        (0..k)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

/// Random spectrum with coefficients decaying like `<n>^{-decay}`.
pub fn decaying_spectrum<R: Rng>(rng: &mut R, k: usize, decay: f64) -> PlusSpectrum {
    let base = random_spectrum(rng, k);
    base.map_indexed(|n, c| c * (1.0 + (n * n) as f64).powf(-decay / 2.0))
}

pub fn rel_err_vec(got: &[Complex64], want: &[Complex64]) -> f64 {
    let k = got.len().max(want.len());
    let at = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_default();
    let num: f64 = (0..k).map(|i| (at(got, i) - at(want, i)).norm_sqr()).sum();
    let den: f64 = want.iter().map(|z| z.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}
