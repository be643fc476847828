//! Littlewood-Paley projectors and the dyadic comparison relations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bump::{blocks_touching, phi_block};
use crate::spectrum::PlusSpectrum;

/// Ratio behind `M << N` (meaning `M < ratio * N`) and its relatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRelations {
    pub ratio: f64,
}

impl Default for FrequencyRelations {
    fn default() -> Self {
        Self { ratio: 1.0 / 32.0 }
    }
}

impl FrequencyRelations {
    pub fn strict() -> Self {
        Self { ratio: 2f64.powi(-20) }
    }

    /// `m << n`
    pub fn much_less(&self, m: u64, n: u64) -> bool {
        (m as f64) < self.ratio * n as f64
    }

    /// `m <~ n`, the negation of `m >> n`.
    pub fn less_equiv(&self, m: u64, n: u64) -> bool {
        !self.much_less(n, m)
    }

    /// `m ~ n`
    pub fn comparable(&self, m: u64, n: u64) -> bool {
        self.less_equiv(m, n) && self.less_equiv(n, m)
    }

    /// `m ~= n`, meaning `n/4 <= m <= 4n`.
    pub fn close(&self, m: u64, n: u64) -> bool {
        4 * m >= n && m <= 4 * n
    }

    pub fn holds(&self, mode: LpMode, m: u64, n: u64) -> bool {
        match mode {
            LpMode::Block => m == n,
            LpMode::MuchLess => self.much_less(m, n),
            LpMode::LessEquiv => self.less_equiv(m, n),
            LpMode::Comparable => self.comparable(m, n),
            LpMode::Close => self.close(m, n),
            LpMode::GreaterEquiv => self.less_equiv(n, m),
            LpMode::MuchGreater => self.much_less(n, m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpMode {
    Block,
    MuchLess,
    LessEquiv,
    Comparable,
    Close,
    GreaterEquiv,
    MuchGreater,
}

/// Symbol `sum over blocks M related to N of phi_M(n)`.
pub fn lp_symbol(n: u64, block: u64, mode: LpMode, rel: &FrequencyRelations) -> f64 {
    if mode == LpMode::Block {
        return phi_block(n as f64, block);
    }
    blocks_touching(n)
        .filter(|&m| rel.holds(mode, m, block))
        .map(|m| phi_block(n as f64, m))
        .sum()
}

pub fn lp_project(u: &PlusSpectrum, block: u64, mode: LpMode, rel: &FrequencyRelations) -> PlusSpectrum {
    assert!(block.is_power_of_two(), "block index must be dyadic");
    u.map_indexed(|n, c| {
        let s = lp_symbol(n as u64, block, mode, rel);
        if s == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            c * s
        }
    })
}

/// `P_N` with the block symbol.
pub fn block_project(u: &PlusSpectrum, block: u64) -> PlusSpectrum {
    lp_project(u, block, LpMode::Block, &FrequencyRelations::default())
}

/// Dyadic blocks meeting the frequency range `0..k`.
pub fn blocks_up_to(k: usize) -> Vec<u64> {
    let mut out = vec![1u64];
    let mut b = 2u64;
    while 0.625 * (b as f64) < k as f64 - 1.0 {
        out.push(b);
        b *= 2;
    }
    out
}
