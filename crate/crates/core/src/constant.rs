//! The limiting constant `I_s` of the second-order transport coefficient.
//!
//! Three representations are evaluated independently:
//! the product of a radial moment and a triple integral,
//! a double integral of second differences of `h`,
//! and a one-dimensional integral in `u`.

use serde::{Deserialize, Serialize};

use crate::bump::{annulus, phi};
use crate::error::{Result, SzegoError};
use crate::quadrature::{integrate, integrate_to_infinity, integrate_with_breaks, QuadOptions, QuadResult};

/// Which cutoff enters `h(x) = x^2 chi(x)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Profile {
    /// `chi = phi(x) - phi(2x)`, the unit-scale block symbol.
    #[default]
    Annular,
    /// `chi = phi`, the plateau bump itself.
    Plateau,
}

impl Profile {
    pub fn chi(self, x: f64) -> f64 {
        match self {
            Profile::Annular => annulus(x),
            Profile::Plateau => phi(x),
        }
    }

    pub fn h(self, x: f64) -> f64 {
        let c = self.chi(x);
        x * x * c * c
    }

    fn lower(self) -> f64 {
        match self {
            Profile::Annular => 0.625,
            Profile::Plateau => 0.0,
        }
    }

    /// Points where `h` changes analytic form.
    fn kinks(self) -> Vec<f64> {
        match self {
            Profile::Annular => vec![0.625, 0.8, 1.25, 1.6],
            Profile::Plateau => vec![0.0, 1.25, 1.6],
        }
    }
}

const SUPPORT_TOP: f64 = 1.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsValue {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsRoutes {
    pub s: f64,
    pub triple: IsValue,
    pub double: IsValue,
    pub one_dim: IsValue,
}

impl IsRoutes {
    /// Largest pairwise relative discrepancy between the routes.
    pub fn max_rel_spread(&self) -> f64 {
        let v = [self.triple.value, self.double.value, self.one_dim.value];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in (i + 1)..3 {
                worst = worst.max((v[i] - v[j]).abs() / v[i].abs().max(v[j].abs()));
            }
        }
        worst
    }
}

fn check(r: QuadResult) -> Result<QuadResult> {
    if r.converged && r.value.is_finite() {
        Ok(r)
    } else {
        Err(SzegoError::QuadratureFailure {
            value: r.value,
            error: r.error,
        })
    }
}

fn opts(rel: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-15,
        rel_tol: rel,
        max_intervals: 20_000,
    }
}

/// `expm1(x) / x`, continuous at zero.
pub fn exprel(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        x.exp_m1() / x
    }
}

/// Radial moment `int_0^inf h(x) x^{1-4s} dx`.
pub fn radial_moment(s: f64, profile: Profile) -> Result<IsValue> {
    let r = check(integrate_with_breaks(
        |x| if x <= 0.0 { 0.0 } else { profile.h(x) * x.powf(1.0 - 4.0 * s) },
        &profile.kinks(),
        &opts(1e-13),
    ))?;
    Ok(IsValue { value: r.value, error: r.error })
}

/// `int_0^1 int_0^1 int_0^1 y^{2-2s} (1 - y + (sigma + tau) y)^{4s-4}`.
pub fn triple_integral(s: f64) -> Result<IsValue> {
    let p = 4.0 * s - 4.0;
    let mut failed = false;
    let mut err_acc = 0.0;
    let outer = integrate(
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            let base = 1.0 - y;
            let middle = integrate(
                |sigma| {
                    let c = base + sigma * y;
                    let inner = integrate(|tau| (c + tau * y).powf(p), 0.0, 1.0, &opts(1e-10));
                    if !inner.converged {
                        failed = true;
                    }
                    inner.value
                },
                0.0,
                1.0,
                &opts(1e-10),
            );
            if !middle.converged {
                failed = true;
            }
            err_acc += middle.error;
            y.powf(2.0 - 2.0 * s) * middle.value
        },
        0.0,
        1.0,
        &opts(1e-9),
    );
    if failed || !outer.converged {
        return Err(SzegoError::QuadratureFailure {
            value: outer.value,
            error: outer.error,
        });
    }
    Ok(IsValue {
        value: outer.value,
        error: outer.error + err_acc * 1e-3,
    })
}

/// `I_s` from the product representation.
pub fn is_triple(s: f64, profile: Profile) -> Result<IsValue> {
    let h = radial_moment(s, profile)?;
    let t = triple_integral(s)?;
    let a = 4.0 * s - 2.0;
    Ok(IsValue {
        value: a * h.value * t.value,
        error: a.abs() * (h.error * t.value.abs() + t.error * h.value.abs()),
    })
}

/// `S(q, r) = (1-r)^{-q} + (1+r)^{-q} - 2` and its `q`-derivative.
fn symmetric_power_defect(q: f64, r: f64) -> (f64, f64) {
    if r <= 0.5 {
        // 2 sum_k (q)_{2k} r^{2k} / (2k)!
        let mut coef = 1.0;
        let mut dcoef = 0.0;
        let mut value = 0.0;
        let mut deriv = 0.0;
        let r2 = r * r;
        let mut pow = 1.0;
        for k in 0..40 {
            let j = 2.0 * k as f64;
            let f1 = (q + j) / (j + 1.0);
            let f2 = (q + j + 1.0) / (j + 2.0);
            dcoef = dcoef * f1 * f2 + coef * (f2 / (j + 1.0) + f1 / (j + 2.0));
            coef *= f1 * f2;
            pow *= r2;
            value += 2.0 * coef * pow;
            deriv += 2.0 * dcoef * pow;
            if coef * pow < 1e-19 * value.abs() {
                break;
            }
        }
        (value, deriv)
    } else {
        let lm = (-r).ln_1p();
        let lp = r.ln_1p();
        let am = (-q * lm).exp();
        let ap = (-q * lp).exp();
        (am + ap - 2.0, -am * lm - ap * lp)
    }
}

/// `y^{-2s} K(z, y)` with
/// `K = 1{z>2y}(z-y)^{-2s} - 2 * 1{z>y} z^{-2s} + (z+y)^{-2s}`,
/// or its derivative in `s` when `deriv` is set.
fn difference_kernel(z: f64, y: f64, s: f64, deriv: bool) -> f64 {
    let q = 2.0 * s;
    let ly = y.ln();
    let yw = (-q * ly).exp();
    let (k, dk) = if z > 2.0 * y {
        let r = y / z;
        let (sv, ds) = symmetric_power_defect(q, r);
        let lz = z.ln();
        let zq = (-q * lz).exp();
        (zq * sv, zq * (ds - lz * sv))
    } else {
        let term = |w: f64| {
            let l = w.ln();
            let p = (-q * l).exp();
            (p, -l * p)
        };
        let (p3, d3) = term(z + y);
        if z > y {
            let (p2, d2) = term(z);
            (p3 - 2.0 * p2, d3 - 2.0 * d2)
        } else {
            (p3, d3)
        }
    };
    if deriv {
        // d/ds = 2 d/dq
        2.0 * yw * (dk - ly * k)
    } else {
        yw * k
    }
}

/// `int_{x >= y >= 0} [h(x+y) - 2h(x) + h(x-y)] x^{-2s} y^{-2s}` after
/// moving each translate onto the kernel, or its `s`-derivative.
fn double_integral(s: f64, profile: Profile, deriv: bool) -> Result<IsValue> {
    let lo = profile.lower();
    let mut failed = false;
    let mut inner_at = |y: f64| -> f64 {
        let mut pts = profile.kinks();
        for cand in [y, 2.0 * y] {
            if cand > lo && cand < SUPPORT_TOP {
                pts.push(cand);
            }
        }
        let r = integrate_with_breaks(
            |z| {
                if z <= 0.0 {
                    return 0.0;
                }
                profile.h(z) * difference_kernel(z, y, s, deriv)
            },
            &pts,
            &opts(1e-12),
        );
        if !r.converged {
            failed = true;
        }
        r.value
    };
    let mut pts = vec![0.0, SUPPORT_TOP];
    for k in profile.kinks() {
        for cand in [k, k / 2.0] {
            if cand > 0.0 && cand < SUPPORT_TOP {
                pts.push(cand);
            }
        }
    }
    let near = integrate_with_breaks(|y| if y <= 0.0 { 0.0 } else { inner_at(y) }, &pts, &opts(1e-11));
    let far = integrate_to_infinity(&mut inner_at, SUPPORT_TOP, &opts(1e-11));
    if failed || !near.converged || !far.converged {
        return Err(SzegoError::QuadratureFailure {
            value: near.value + far.value,
            error: near.error + far.error,
        });
    }
    Ok(IsValue {
        value: near.value + far.value,
        error: near.error + far.error,
    })
}

/// The second-difference double integral itself, equal to `(4s-3) I_s`.
pub fn second_difference_integral(s: f64, profile: Profile) -> Result<IsValue> {
    double_integral(s, profile, false)
}

/// `I_s` from the double integral; at `s = 3/4` the `s`-derivative is used.
pub fn is_double(s: f64, profile: Profile) -> Result<IsValue> {
    let d = 4.0 * s - 3.0;
    if d.abs() < 1e-12 {
        let r = double_integral(s, profile, true)?;
        return Ok(IsValue {
            value: r.value / 4.0,
            error: r.error / 4.0,
        });
    }
    let r = double_integral(s, profile, false)?;
    Ok(IsValue {
        value: r.value / d,
        error: r.error / d.abs(),
    })
}

/// `u^{-2s} [(1+u)^{4s-2} - 2 + (1-u)^{4s-2}]`.
pub fn u_integrand(s: f64, u: f64) -> f64 {
    let a = 4.0 * s - 2.0;
    u.powf(-2.0 * s) * ((1.0 + u).powf(a) - 2.0 + (1.0 - u).powf(a))
}

/// The bracket above divided by `a - 1` with `a = 4s - 2`, finite at `a = 1`.
fn reduced_bracket(a: f64, u: f64) -> f64 {
    if u < 0.02 {
        // 2 sum_k binom(a, 2k) u^{2k} / (a - 1)
        let mut term = a / 2.0;
        let mut total = 0.0;
        let u2 = u * u;
        let mut pow = u2;
        let mut k = 1.0;
        for _ in 0..8 {
            total += 2.0 * term * pow;
            let j = 2.0 * k;
            term *= (a - j) * (a - j - 1.0) / ((j + 1.0) * (j + 2.0));
            pow *= u2;
            k += 1.0;
        }
        return total;
    }
    let lp = u.ln_1p();
    let lm = (-u).ln_1p();
    let b = a - 1.0;
    let plus = (1.0 + u) * lp * exprel(b * lp);
    let minus = if u >= 1.0 { 0.0 } else { (1.0 - u) * lm * exprel(b * lm) };
    plus + minus
}

/// `I_s` from the one-dimensional representation.
pub fn is_one_dim(s: f64, profile: Profile) -> Result<IsValue> {
    let h = radial_moment(s, profile)?;
    let a = 4.0 * s - 2.0;
    let r = check(integrate(
        |u| if u <= 0.0 { 0.0 } else { u.powf(-2.0 * s) * reduced_bracket(a, u) },
        0.0,
        1.0,
        &opts(1e-13),
    ))?;
    Ok(IsValue {
        value: h.value * r.value,
        error: h.error * r.value.abs() + r.error * h.value.abs(),
    })
}

/// `I_s` by the product representation, with the other two as cross-checks.
pub fn is_quadrature(s: f64, profile: Profile) -> Result<IsRoutes> {
    if !(s > 0.5 && s < 1.0) {
        return Err(crate::error::invalid("s", format!("need 1/2 < s < 1, got {s}")));
    }
    Ok(IsRoutes {
        s,
        triple: is_triple(s, profile)?,
        double: is_double(s, profile)?,
        one_dim: is_one_dim(s, profile)?,
    })
}

/// Fast evaluation of `I_s` (one-dimensional route).
pub fn i_s(s: f64) -> Result<f64> {
    Ok(is_one_dim(s, Profile::Annular)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_agree_at_threshold() {
        let r = is_quadrature(0.75, Profile::Annular).unwrap();
        assert!(r.max_rel_spread() < 1e-6, "{r:?}");
        let d = second_difference_integral(0.75, Profile::Annular).unwrap();
        assert!(d.value.abs() < 1e-9);
    }

    #[test]
    fn positive_across_range() {
        for k in 0..9 {
            let s = 0.55 + 0.05 * k as f64;
            let v = is_one_dim(s, Profile::Annular).unwrap().value;
            assert!(v > 0.0, "s = {s}");
            assert!(is_one_dim(s, Profile::Plateau).unwrap().value > 0.0);
        }
    }

    #[test]
    fn double_route_handles_plateau_profile() {
        let a = is_double(0.6, Profile::Plateau).unwrap().value;
        let b = is_one_dim(0.6, Profile::Plateau).unwrap().value;
        assert!((a - b).abs() < 1e-6 * b, "{a} {b}");
    }

    #[test]
    fn small_u_leading_coefficient() {
        for s in [0.6, 0.9] {
            let us: Vec<f64> = (0..10).map(|i| 1e-3 * (1.0 + i as f64)).collect();
            let ratios: Vec<f64> = us.iter().map(|&u| u_integrand(s, u) / u.powf(2.0 - 2.0 * s)).collect();
            // least squares of ratio against u^2, keep the intercept
            let xs: Vec<f64> = us.iter().map(|u| u * u).collect();
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ratios.iter().sum::<f64>() / n;
            let sxy: f64 = xs.iter().zip(&ratios).map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let intercept = my - sxy / sxx * mx;
            let want = (4.0 * s - 2.0) * (4.0 * s - 3.0);
            assert!((intercept / want - 1.0).abs() < 0.02, "s = {s}: {intercept} vs {want}");
        }
    }

    #[test]
    fn reduced_bracket_matches_direct_form() {
        for s in [0.55, 0.6, 0.9] {
            let a = 4.0 * s - 2.0;
            for u in [0.01f64, 0.019, 0.021, 0.3, 0.9, 0.999] {
                let direct = (1.0 + u).powf(a) - 2.0 + (1.0 - u).powf(a);
                let reduced = reduced_bracket(a, u) * (a - 1.0);
                assert!((direct - reduced).abs() < 1e-12 * direct.abs().max(1e-3), "s = {s}, u = {u}");
            }
        }
    }

    #[test]
    fn power_defect_series_matches_closed_form() {
        for q in [1.1f64, 1.5, 1.8] {
            for r in [0.1f64, 0.3, 0.5] {
                let (v, d) = symmetric_power_defect(q, r);
                let direct = (1.0 - r).powf(-q) + (1.0 + r).powf(-q) - 2.0;
                let h = 1e-6;
                let fd = ((1.0 - r).powf(-q - h) + (1.0 + r).powf(-q - h) - (1.0 - r).powf(-q + h) - (1.0 + r).powf(-q + h)) / (2.0 * h);
                assert!((v - direct).abs() < 1e-13 * direct, "q = {q}, r = {r}");
                assert!((d - fd).abs() < 1e-7 * fd.abs(), "q = {q}, r = {r}: {d} vs {fd}");
            }
        }
    }
}
