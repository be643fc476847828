//! The smooth cutoff behind every Littlewood-Paley symbol.
//!
//! `phi` equals one on `[-5/4, 5/4]`, vanishes outside `(-8/5, 8/5)` and is
//! built from the standard `exp(-1/t)` transition.

const INNER: f64 = 1.25;
const OUTER: f64 = 1.6;

fn s_fn(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

fn theta(t: f64) -> f64 {
    if t >= 1.0 {
        return 1.0;
    }
    if t <= 0.0 {
        return 0.0;
    }
    let a = s_fn(t);
    a / (a + s_fn(1.0 - t))
}

/// The bump `phi(x)`.
pub fn phi(x: f64) -> f64 {
    theta((OUTER - x.abs()) / (OUTER - INNER))
}

/// Annular profile `phi(x) - phi(2x)`, the block symbol at unit scale.
pub fn annulus(x: f64) -> f64 {
    phi(x) - phi(2.0 * x)
}

/// Block symbol `phi_N` for dyadic `N`.
pub fn phi_block(xi: f64, n: u64) -> f64 {
    debug_assert!(n.is_power_of_two());
    if n == 1 {
        phi(xi.abs())
    } else {
        let nf = n as f64;
        phi(xi / nf) - phi(2.0 * xi / nf)
    }
}

/// Profile `h(x) = x^2 psi(x)^2` with `psi` the annular symbol.
pub fn h_profile(x: f64) -> f64 {
    let p = annulus(x);
    x * x * p * p
}

/// Discrete weight `w_N(n) = n^2 phi_N(n)^2`.
pub fn block_weight(n: u64, block: u64) -> f64 {
    let p = phi_block(n as f64, block);
    let nf = n as f64;
    nf * nf * p * p
}

/// Closed support of `phi_N` on the nonnegative axis.
pub fn block_support(block: u64) -> (f64, f64) {
    if block == 1 {
        (0.0, OUTER)
    } else {
        let nf = block as f64;
        (0.625 * nf, OUTER * nf)
    }
}

/// Dyadic blocks whose symbol can be nonzero at frequency `n`.
pub fn blocks_touching(n: u64) -> impl Iterator<Item = u64> {
    let mut out = [0u64; 3];
    let mut len = 0;
    let mut b = 1u64;
    while b <= 2 * n.max(1) {
        let (lo, hi) = block_support(b);
        let x = n as f64;
        if x < hi && (b == 1 || x > lo) {
            out[len] = b;
            len += 1;
        }
        b *= 2;
    }
    out.into_iter().take(len)
}

/// Hash of the bump tabulated on a fixed mesh, embedded in run manifests.
pub fn phi_fingerprint() -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(b"phi=theta((8/5-|x|)/(8/5-5/4));theta(t)=S(t)/(S(t)+S(1-t));S(t)=exp(-1/t)");
    for i in 0..=256 {
        let x = 2.0 * i as f64 / 256.0;
        hasher.update(phi(x).to_bits().to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
