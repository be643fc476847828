//! Quartic multipliers `Psi_s` and `Psi_N` with their size certificates.

use serde::{Deserialize, Serialize};

use crate::bump::block_weight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierQuery {
    pub s: f64,
    pub block: u64,
    pub n: [i64; 4],
}

fn jb_pow(n: i64, s: f64) -> f64 {
    (1.0 + (n * n) as f64).powf(s)
}

/// `<n1>^{2s} - <n2>^{2s} + <n3>^{2s} - <n4>^{2s}`.
pub fn psi_s(n: [i64; 4], s: f64) -> f64 {
    jb_pow(n[0], s) - jb_pow(n[1], s) + jb_pow(n[2], s) - jb_pow(n[3], s)
}

/// `n1^2 phi_N(n1)^2 - ... - n4^2 phi_N(n4)^2`, zero if any entry is negative.
pub fn psi_n(n: [i64; 4], block: u64) -> f64 {
    if n.iter().any(|&k| k < 0) {
        return 0.0;
    }
    let w = |k: i64| block_weight(k as u64, block);
    w(n[0]) - w(n[1]) + w(n[2]) - w(n[3])
}

impl MultiplierQuery {
    pub fn psi_s(&self) -> f64 {
        psi_s(self.n, self.s)
    }

    pub fn psi_n(&self) -> f64 {
        psi_n(self.n, self.block)
    }
}

/// Largest power of two not exceeding `max(n, 1)`.
pub fn dyadic_scale(n: i64) -> u64 {
    let m = n.unsigned_abs().max(1);
    1u64 << (63 - m.leading_zeros())
}

fn ordered_scales(n: [i64; 4]) -> [f64; 4] {
    let mut d = n.map(|k| dyadic_scale(k) as f64);
    d.sort_by(|a, b| b.total_cmp(a));
    d
}

/// `|Psi_s| / ((N^(1))^{2s-1} N^(3))` for the ordered dyadic scales.
pub fn psi_s_bound_ratio(n: [i64; 4], s: f64) -> f64 {
    let d = ordered_scales(n);
    psi_s(n, s).abs() / (d[0].powf(2.0 * s - 1.0) * d[2])
}

/// `|Psi_N| / (N min(N, N^(3)))`.
pub fn psi_n_bound_ratio(n: [i64; 4], block: u64) -> f64 {
    let d = ordered_scales(n);
    let b = block as f64;
    psi_n(n, block).abs() / (b * b.min(d[2]))
}
