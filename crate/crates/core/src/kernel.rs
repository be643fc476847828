//! The data-independent kernel `A_N(n)` appearing in the limit of `G_N`.
//!
//! After cancelling the `Psi_N` symbols, each summand reduces to
//! `w(n1 - n2 + n) + w(n1 + n2 - n) - 2 w(n1)` over `<n1>^{2s} <n2>^{2s}`,
//! with `w(m) = m^2 phi_N(m)^2`. For `n1` past the support of `w` only the
//! first term survives; that tail is summed per value of `m = n1 - n2 + n`.

use crate::bump::block_weight;
use crate::error::{invalid, Result};
use crate::quadrature::{integrate_to_infinity, QuadOptions};

fn bracket(x: f64, s: f64) -> f64 {
    (1.0 + x * x).powf(-s)
}

fn bracket_deriv(x: f64, s: f64) -> f64 {
    -2.0 * s * x * (1.0 + x * x).powf(-s - 1.0)
}

/// First index with `w(n1) = 0` for all `n1 >= U`.
pub fn support_end(block: u64) -> u64 {
    (1.6 * block as f64).ceil() as u64 + 1
}

/// `sum_{k >= start} <k>^{-2s} <k - d>^{-2s}` for `0 < d < start`.
pub fn shifted_tail(start: u64, d: u64, s: f64, exact_terms: u64) -> Result<f64> {
    let mut sum = 0.0;
    for k in start..start + exact_terms {
        sum += bracket(k as f64, s) * bracket((k - d) as f64, s);
    }
    let k0 = (start + exact_terms) as f64;
    let d = d as f64;
    let f = |x: f64| bracket(x, s) * bracket(x - d, s);
    let df = |x: f64| bracket_deriv(x, s) * bracket(x - d, s) + bracket(x, s) * bracket_deriv(x - d, s);
    let h = 0.05 * k0;
    let d3f = (df(k0 + h) - 2.0 * df(k0) + df(k0 - h)) / (h * h);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-13, ..QuadOptions::default() };
    let integral = integrate_to_infinity(f, k0, &opts);
    if !integral.converged {
        return Err(crate::error::SzegoError::QuadratureFailure { value: integral.value, error: integral.error });
    }
    Ok(sum + integral.value + 0.5 * f(k0) - df(k0) / 12.0 + d3f / 720.0)
}

/// `A_N(n)` including the tail beyond the support of the weights.
pub fn a_n_kernel(n: u64, s: f64, block: u64) -> Result<f64> {
    if !(s > 0.5) || !s.is_finite() {
        return Err(invalid("s", "the kernel sum converges for s > 1/2"));
    }
    if block == 0 || !block.is_power_of_two() {
        return Err(invalid("N", "must be a positive power of two"));
    }
    let end = support_end(block);
    if n + 1 >= end {
        return Ok(0.0);
    }
    let table_len = (2 * end + n + 2) as usize;
    let w: Vec<f64> = (0..table_len as u64).map(|m| block_weight(m, block)).collect();
    let inv: Vec<f64> = (0..table_len).map(|m| bracket(m as f64, s)).collect();

    let mut core = 0.0;
    for n1 in (n + 2)..end {
        let mut row = 0.0;
        for n2 in (n + 1)..n1 {
            let num = w[(n1 - n2 + n) as usize] + w[(n1 + n2 - n) as usize] - 2.0 * w[n1 as usize];
            row += num * inv[n2 as usize];
        }
        core += row * inv[n1 as usize];
    }

    let exact_terms = 4 * block;
    let mut tail = 0.0;
    for m in (n + 1)..end {
        let wm = w[m as usize];
        if wm != 0.0 {
            tail += wm * shifted_tail(end, m - n, s, exact_terms)?;
        }
    }
    Ok((block as f64).powf(4.0 * s - 4.0) * (core + tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constant::i_s;
    use crate::multiplier::psi_n;

    /// Literal double sum with the symbols evaluated from their definition,
    /// truncated at `n1 < limit`.
    fn brute(n: u64, s: f64, block: u64, limit: u64) -> f64 {
        let reach = 2 * support_end(block) as i64;
        let n = n as i64;
        let mut total = 0.0;
        for n1 in (n + 2)..limit as i64 {
            let lo = (n + 1).max(n1 - reach);
            for n2 in lo..n1 {
                let a = psi_n([n1 - n2 + n, n1, n2, n], block) + psi_n([n1 - n + n2, n1, n, n2], block);
                if a != 0.0 {
                    total += a * bracket(n1 as f64, s) * bracket(n2 as f64, s);
                }
            }
        }
        (block as f64).powf(4.0 * s - 4.0) * total
    }

    #[test]
    fn matches_brute_force() {
        for (s, limit) in [(0.9, 400_000u64), (0.75, 400_000)] {
            for block in [2u64, 4, 8] {
                for n in [0u64, 1, 3] {
                    let fast = a_n_kernel(n, s, block).unwrap();
                    let slow = brute(n, s, block, limit);
                    assert!((fast - slow).abs() < 1e-6 * fast.abs().max(1e-3), "s {s} N {block} n {n}: {fast} {slow}");
                }
            }
        }
    }

    #[test]
    fn shifted_tail_against_long_sum() {
        let s = 0.8;
        let exact: f64 = (40u64..3_000_000).map(|k| bracket(k as f64, s) * bracket((k - 7) as f64, s)).sum();
        let rest = 3_000_000f64.powf(1.0 - 4.0 * s) / (4.0 * s - 1.0);
        let fast = shifted_tail(40, 7, s, 16).unwrap();
        assert!((fast - exact - rest).abs() < 1e-9 * fast, "{fast} {}", exact + rest);
    }

    #[test]
    fn bounded_and_converging() {
        let s = 0.6;
        let target = (4.0 * s - 3.0) * i_s(s).unwrap();
        let errs: Vec<f64> = [64u64, 128, 256, 512]
            .iter()
            .map(|&b| (a_n_kernel(0, s, b).unwrap() / target - 1.0).abs())
            .collect();
        assert!(errs.windows(2).all(|e| e[1] < e[0]), "{errs:?}");
        assert!(errs[3] < 0.1, "{errs:?}");
    }

    #[test]
    fn degenerate_exponent_vanishes() {
        let a: Vec<f64> = [64u64, 256, 1024].iter().map(|&b| a_n_kernel(0, 0.75, b).unwrap().abs()).collect();
        assert!(a[2] < a[0] && a[2] < 0.05, "{a:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(a_n_kernel(0, 0.4, 8).is_err());
        assert!(a_n_kernel(0, 0.7, 6).is_err());
        assert_eq!(a_n_kernel(100, 0.7, 8).unwrap(), 0.0);
    }
}
