//! Ensemble statistics: means with standard errors, bootstrap, power-law fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

impl MeanSe {
    /// `|mean| / se`, infinite when the spread vanishes but the mean does not.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = (self.mean - reference).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let count = xs.len();
    let se = if count > 1 { (variance(xs) / count as f64).sqrt() } else { f64::INFINITY };
    MeanSe { mean: mean(xs), se, count }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical quantile with linear interpolation, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Bootstrap standard error of `stat` over resamples of `xs`.
pub fn bootstrap_se(xs: &[f64], stat: impl Fn(&[f64]) -> f64, reps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; xs.len()];
    let vals: Vec<f64> = (0..reps)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.gen_range(0..xs.len())];
            }
            stat(&buf)
        })
        .collect();
    variance(&vals).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PowerFit {
    pub fn ci_contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn check_points(ns: &[f64], values: &[f64]) -> Result<()> {
    if ns.len() != values.len() || ns.len() < 2 {
        return Err(invalid("fit", "needs at least two matched points"));
    }
    if ns.iter().chain(values).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("fit", "log-log fit needs positive finite data"));
    }
    if ns.iter().all(|&n| n == ns[0]) {
        return Err(invalid("fit", "abscissae must not all coincide"));
    }
    Ok(())
}

pub const BOOTSTRAP_REPS: usize = 2000;

const T975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120, 2.110,
    2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
];

/// Two-sided 95% Student quantile over the normal one, for `dof` degrees of freedom.
fn small_sample_widening(dof: usize) -> f64 {
    let t = match dof {
        0 => return f64::INFINITY,
        d if d <= 30 => T975[d - 1],
        _ => 1.96,
    };
    t / 1.96
}

/// Least squares on `log value = exponent * log N + c`, with a 95% interval
/// from a bootstrap of rescaled residuals, widened by the Student factor for
/// few points.
pub fn fit_power_law(ns: &[f64], values: &[f64], seed: u64) -> Result<PowerFit> {
    check_points(ns, values)?;
    let lx: Vec<f64> = ns.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|y| y.ln()).collect();
    let (slope, icpt) = line_fit(&lx, &ly);
    let n = lx.len();
    let inflate = if n > 2 { (n as f64 / (n as f64 - 2.0)).sqrt() } else { 1.0 };
    let resid: Vec<f64> = lx.iter().zip(&ly).map(|(x, y)| (y - slope * x - icpt) * inflate).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut yb = vec![0.0; n];
    let slopes: Vec<f64> = (0..BOOTSTRAP_REPS)
        .map(|_| {
            for (i, y) in yb.iter_mut().enumerate() {
                *y = slope * lx[i] + icpt + resid[rng.gen_range(0..n)];
            }
            line_fit(&lx, &yb).0
        })
        .collect();
    let widen = small_sample_widening(n - 2);
    let lo = slope - widen * (slope - quantile(&slopes, 0.025)).max(0.0);
    let hi = slope + widen * (quantile(&slopes, 0.975) - slope).max(0.0);
    Ok(PowerFit {
        exponent: slope,
        prefactor: icpt.exp(),
        ci_low: if lo.is_nan() { f64::NEG_INFINITY } else { lo },
        ci_high: if hi.is_nan() { f64::INFINITY } else { hi },
    })
}

/// Power-law fit of `stat(samples at N)` against `N`, with a 95% interval
/// from resampling whole samples. `table[i][j]` is sample `i` at `ns[j]`.
pub fn fit_power_law_ensemble(ns: &[f64], table: &[Vec<f64>], stat: impl Fn(&[f64]) -> f64, seed: u64) -> Result<PowerFit> {
    if table.is_empty() || table.iter().any(|row| row.len() != ns.len()) {
        return Err(invalid("fit", "every sample needs one value per N"));
    }
    let column = |rows: &[&Vec<f64>], j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let all: Vec<&Vec<f64>> = table.iter().collect();
    let point: Vec<f64> = (0..ns.len()).map(|j| stat(&column(&all, j))).collect();
    check_points(ns, &point)?;
    let lx: Vec<f64> = ns.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = point.iter().map(|y| y.ln()).collect();
    let (slope, icpt) = line_fit(&lx, &ly);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_REPS);
    let mut rows: Vec<&Vec<f64>> = Vec::with_capacity(table.len());
    for _ in 0..BOOTSTRAP_REPS {
        rows.clear();
        rows.extend((0..table.len()).map(|_| &table[rng.gen_range(0..table.len())]));
        let ys: Vec<f64> = (0..ns.len()).map(|j| stat(&column(&rows, j)).ln()).collect();
        if ys.iter().all(|y| y.is_finite()) {
            slopes.push(line_fit(&lx, &ys).0);
        }
    }
    let (lo, hi) = if slopes.is_empty() {
        (f64::NEG_INFINITY, f64::INFINITY)
    } else {
        (quantile(&slopes, 0.025), quantile(&slopes, 0.975))
    };
    Ok(PowerFit {
        exponent: slope,
        prefactor: icpt.exp(),
        ci_low: lo.min(slope),
        ci_high: hi.max(slope),
    })
}
