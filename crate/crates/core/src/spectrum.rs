use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SzegoError};

/// Fourier coefficients `u(0), ..., u(K-1)` of a function with nonnegative
/// frequencies only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlusSpectrum {
    coeffs: Vec<Complex64>,
}

impl PlusSpectrum {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(SzegoError::EmptySpectrum);
        }
        if let Some(i) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SzegoError::NonFinite(i));
        }
        Ok(Self { coeffs })
    }

    /// Internal constructor for values produced by finite arithmetic.
    pub(crate) fn from_vec(coeffs: Vec<Complex64>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    pub fn zeros(k: usize) -> Self {
        Self::from_vec(vec![Complex64::new(0.0, 0.0); k.max(1)])
    }

    /// `amp * e^{i n x}` stored with `K = n + 1`.
    pub fn single_mode(n: usize, amp: Complex64) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = amp;
        Self::from_vec(c)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at frequency `n`, zero beyond the stored range.
    pub fn get(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    /// Zero-extend or cut to exactly `k` coefficients.
    pub fn resized(&self, k: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(k.max(1), Complex64::new(0.0, 0.0));
        Self::from_vec(c)
    }

    /// Largest frequency with a nonzero coefficient plus one.
    pub fn support_len(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.norm_sqr() != 0.0)
            .map_or(0, |i| i + 1)
    }

    pub fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self::from_vec(self.coeffs.iter().enumerate().map(|(n, &c)| f(n, c)).collect())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map_indexed(|_, c| c * a)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.len().max(other.len());
        Self::from_vec((0..k).map(|n| self.get(n) + other.get(n)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let k = self.len().max(other.len());
        Self::from_vec((0..k).map(|n| self.get(n) - other.get(n)).collect())
    }

    /// Sum of `conj(self(n)) * other(n)`, the normalized `L^2` pairing.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Coefficients on the frequency window `[min_freq, min_freq + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedSpectrum {
    pub min_freq: i64,
    pub coeffs: Vec<Complex64>,
}

impl TwoSidedSpectrum {
    pub fn get(&self, n: i64) -> Complex64 {
        let i = n - self.min_freq;
        if i < 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(i as usize).copied().unwrap_or_default()
    }

    pub fn max_freq(&self) -> i64 {
        self.min_freq + self.coeffs.len() as i64 - 1
    }
}

/// Szego projection: keep the nonnegative frequencies.
pub fn szego_project(f: &TwoSidedSpectrum) -> PlusSpectrum {
    let top = f.max_freq();
    if top < 0 {
        return PlusSpectrum::zeros(1);
    }
    PlusSpectrum::from_vec((0..=top).map(|n| f.get(n)).collect())
}

/// Sharp truncation `pi_N`: zero every frequency `n >= N`.
pub fn sharp_truncate(u: &PlusSpectrum, n: usize) -> PlusSpectrum {
    assert!(n >= 1, "truncation cutoff must be positive");
    u.map_indexed(|k, c| if k < n { c } else { Complex64::new(0.0, 0.0) })
}
