//! Physical-space evaluation on padded equispaced grids.
//!
//! Synthesis is the unnormalized inverse DFT, analysis divides by the grid
//! size, so the mean over grid points is the `(1/2pi)` integral.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::spectrum::{PlusSpectrum, TwoSidedSpectrum};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Smallest power of two `>= max(padding * k, 4)`.
pub fn grid_size(k: usize, padding: usize) -> usize {
    (padding.max(1) * k.max(1)).next_power_of_two().max(4)
}

/// Grid values of a function on `M` equispaced points of `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    pub samples: Vec<Complex64>,
}

impl GridSignal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Cached forward and inverse transforms of one size.
#[derive(Clone)]
pub struct Grid {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("m", &self.m).finish()
    }
}

impl Grid {
    pub fn new(m: usize) -> Self {
        assert!(m.is_power_of_two(), "grid size must be a power of two");
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(m), p.plan_fft_inverse(m))
        });
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            m,
            fwd,
            inv,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// Grid values of `sum_n c[n] e^{i (offset + n) x}`.
    pub fn synthesize_into(&mut self, coeffs: &[Complex64], offset: i64, out: &mut Vec<Complex64>) {
        out.clear();
        out.resize(self.m, Complex64::new(0.0, 0.0));
        let m = self.m as i64;
        for (i, &c) in coeffs.iter().enumerate() {
            let idx = (offset + i as i64).rem_euclid(m) as usize;
            out[idx] += c;
        }
        self.inv.process_with_scratch(out, &mut self.scratch);
    }

    /// Replace grid values by their Fourier coefficients (index `k` holds
    /// frequency `k` for `k < M/2` and `k - M` otherwise).
    pub fn analyze_in_place(&mut self, buf: &mut [Complex64]) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
        let inv_m = 1.0 / self.m as f64;
        for z in buf.iter_mut() {
            *z *= inv_m;
        }
    }

    pub fn synthesize(&mut self, u: &PlusSpectrum) -> GridSignal {
        let mut out = Vec::new();
        self.synthesize_into(u.coeffs(), 0, &mut out);
        GridSignal { samples: out }
    }

    /// Nonnegative frequencies `0..k` of grid values.
    pub fn analyze_plus(&mut self, g: &GridSignal, k: usize) -> PlusSpectrum {
        let mut buf = g.samples.clone();
        self.analyze_in_place(&mut buf);
        buf.truncate(k.min(self.m));
        buf.resize(k.max(1), Complex64::new(0.0, 0.0));
        PlusSpectrum::from_vec(buf)
    }

    /// All frequencies in `[-M/2, M/2)`.
    pub fn analyze_two_sided(&mut self, g: &GridSignal) -> TwoSidedSpectrum {
        let mut buf = g.samples.clone();
        self.analyze_in_place(&mut buf);
        let half = self.m / 2;
        let mut coeffs = Vec::with_capacity(self.m);
        coeffs.extend_from_slice(&buf[half..]);
        coeffs.extend_from_slice(&buf[..half]);
        TwoSidedSpectrum {
            min_freq: -(half as i64),
            coeffs,
        }
    }
}

/// Synthesis on a grid of size `m`.
pub fn synthesize(u: &PlusSpectrum, m: usize) -> GridSignal {
    Grid::new(m).synthesize(u)
}

/// Analysis of grid values back to frequencies `0..k`.
pub fn analyze(g: &GridSignal, k: usize) -> PlusSpectrum {
    Grid::new(g.len()).analyze_plus(g, k)
}

/// Reusable buffers for repeated dealiased cubic products at one size.
#[derive(Debug, Clone)]
pub struct CubicWorkspace {
    grid: Grid,
    buf: Vec<Complex64>,
}

impl CubicWorkspace {
    /// Workspace for inputs with at most `k` coefficients.
    pub fn new(k: usize, padding: usize) -> Self {
        Self {
            grid: Grid::new(grid_size(k, padding.max(4))),
            buf: Vec::new(),
        }
    }

    pub fn grid(&mut self) -> &mut Grid {
        &mut self.grid
    }

    /// Writes `Pi(|u|^2 u)` restricted to `0..out.len()` into `out`.
    pub fn cubic_into(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        debug_assert!(3 * u.len() <= self.grid.size() + 2);
        self.grid.synthesize_into(u, 0, &mut self.buf);
        for z in self.buf.iter_mut() {
            *z *= z.norm_sqr();
        }
        self.grid.analyze_in_place(&mut self.buf);
        let top = (2 * u.len()).saturating_sub(1);
        for (n, o) in out.iter_mut().enumerate() {
            *o = if n < top { self.buf[n] } else { Complex64::new(0.0, 0.0) };
        }
    }
}

/// `Pi(|u|^2 u)` without aliasing. The result has `2K - 1` coefficients,
/// which covers every frequency `n1 - n2 + n3 >= 0` with `n_i < K`.
pub fn cubic_szego_term(u: &PlusSpectrum) -> PlusSpectrum {
    let k = u.len();
    let mut ws = CubicWorkspace::new(k, 4);
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * k - 1];
    ws.cubic_into(u.coeffs(), &mut out);
    PlusSpectrum::from_vec(out)
}

/// `sum over n1 - n2 + n3 - n4 = 0` of `a(n1) conj(b(n2)) c(n3) conj(d(n4))`,
/// evaluated as an exact grid mean.
pub fn quartic_mean(a: &PlusSpectrum, b: &PlusSpectrum, c: &PlusSpectrum, d: &PlusSpectrum) -> Complex64 {
    let span = (a.len() + c.len()).max(b.len() + d.len());
    let mut grid = Grid::new(grid_size(span + 1, 1));
    let ga = grid.synthesize(a);
    let gb = grid.synthesize(b);
    let gc = grid.synthesize(c);
    let gd = grid.synthesize(d);
    let total: Complex64 = (0..grid.size())
        .map(|j| ga.samples[j] * gb.samples[j].conj() * gc.samples[j] * gd.samples[j].conj())
        .sum();
    total / grid.size() as f64
}
