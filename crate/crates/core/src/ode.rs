//! Explicit Runge-Kutta integrators on complex state vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SzegoError};

pub trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Integrator {
    /// Classical RK4; `dt = None` selects the data-adaptive default.
    Rk4 { dt: Option<f64> },
    /// Dormand-Prince 5(4) with error control.
    Dp54 { rtol: f64, atol: f64 },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Dp54 { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
}

fn axpy(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for i in 0..out.len() {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(c, k) in terms {
            if c != 0.0 {
                acc += k[i] * c;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates from `t0` through every checkpoint in order, calling
/// `observe(t, y)` at `t0` and at each checkpoint. Checkpoints must be
/// monotone in the direction of integration.
pub fn integrate<S: OdeSystem>(
    sys: &mut S,
    y0: &[Complex64],
    t0: f64,
    checkpoints: &[f64],
    method: Integrator,
    mut observe: impl FnMut(f64, &[Complex64]),
) -> Result<StepStats> {
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stats = StepStats::default();
    observe(t, &y);
    let mut dp = Dp54State::new(y.len());
    for &target in checkpoints {
        match method {
            Integrator::Rk4 { dt } => {
                let dt = dt.expect("rk4 step must be resolved before integration");
                rk4_span(sys, &mut y, t, target, dt, &mut stats);
            }
            Integrator::Dp54 { rtol, atol } => {
                dp.span(sys, &mut y, t, target, rtol, atol, &mut stats)?;
            }
        }
        t = target;
        observe(t, &y);
    }
    Ok(stats)
}

fn rk4_span<S: OdeSystem>(sys: &mut S, y: &mut Vec<Complex64>, t0: f64, t1: f64, dt: f64, stats: &mut StepStats) {
    let span = t1 - t0;
    if span == 0.0 {
        return;
    }
    let steps = (span.abs() / dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let n = y.len();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        sys.rhs(t, y, &mut k1);
        axpy(&mut tmp, y, 0.5 * h, &[(1.0, &k1)]);
        sys.rhs(t + 0.5 * h, &tmp, &mut k2);
        axpy(&mut tmp, y, 0.5 * h, &[(1.0, &k2)]);
        sys.rhs(t + 0.5 * h, &tmp, &mut k3);
        axpy(&mut tmp, y, h, &[(1.0, &k3)]);
        sys.rhs(t + h, &tmp, &mut k4);
        for j in 0..n {
            y[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (h / 6.0);
        }
        stats.accepted += 1;
        stats.rhs_evaluations += 4;
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Dp54State {
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    ynew: Vec<Complex64>,
    fsal_valid: bool,
    h: f64,
}

impl Dp54State {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            ynew: z,
            fsal_valid: false,
            h: 0.0,
        }
    }

    fn error_norm(&self, y: &[Complex64], rtol: f64, atol: f64, h: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..y.len() {
            let e = (self.k[0][i] * E1 + self.k[2][i] * E3 + self.k[3][i] * E4 + self.k[4][i] * E5 + self.k[5][i] * E6 + self.k[6][i] * E7) * h;
            let sc = atol + rtol * y[i].norm().max(self.ynew[i].norm());
            acc += (e.norm() / sc).powi(2);
        }
        (acc / y.len().max(1) as f64).sqrt()
    }

    fn initial_step<S: OdeSystem>(&mut self, sys: &mut S, y: &[Complex64], t: f64, span: f64, rtol: f64, atol: f64) -> f64 {
        let scale = |v: &Complex64| atol + rtol * v.norm();
        let n = y.len().max(1) as f64;
        let d0 = (y.iter().map(|v| (v.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self.k[0].iter().zip(y).map(|(f, v)| (f.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span.abs());
        let dir = span.signum();
        axpy(&mut self.tmp, y, dir * h0, &[(1.0, &self.k[0])]);
        sys.rhs(t + dir * h0, &self.tmp, &mut self.k[1]);
        let d2 = (self.k[1].iter().zip(&self.k[0]).zip(y).map(|((a, b), v)| ((a - b).norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span.abs())
    }

    #[allow(clippy::too_many_arguments)]
    fn span<S: OdeSystem>(&mut self, sys: &mut S, y: &mut Vec<Complex64>, t0: f64, t1: f64, rtol: f64, atol: f64, stats: &mut StepStats) -> Result<()> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut t = t0;
        if !self.fsal_valid {
            sys.rhs(t, y, &mut self.k[0]);
            stats.rhs_evaluations += 1;
            self.fsal_valid = true;
        }
        if self.h == 0.0 {
            self.h = self.initial_step(sys, y, t, span, rtol, atol);
            stats.rhs_evaluations += 1;
        }
        let mut h = self.h.abs();
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                break;
            }
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            let hs = dir * step;
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(SzegoError::StepUnderflow { t, h: step });
            }
            {
                let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
                axpy(&mut self.tmp, y, hs, &[(A21, k1)]);
                sys.rhs(t + C2 * hs, &self.tmp, k2);
                axpy(&mut self.tmp, y, hs, &[(A31, k1), (A32, k2)]);
                sys.rhs(t + C3 * hs, &self.tmp, k3);
                axpy(&mut self.tmp, y, hs, &[(A41, k1), (A42, k2), (A43, k3)]);
                sys.rhs(t + C4 * hs, &self.tmp, k4);
                axpy(&mut self.tmp, y, hs, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
                sys.rhs(t + C5 * hs, &self.tmp, k5);
                axpy(&mut self.tmp, y, hs, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
                sys.rhs(t + hs, &self.tmp, k6);
                axpy(&mut self.ynew, y, hs, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
                sys.rhs(t + hs, &self.ynew, k7);
            }
            stats.rhs_evaluations += 6;
            let err = self.error_norm(y, rtol, atol, hs);
            if err <= 1.0 {
                t = if last { t1 } else { t + hs };
                std::mem::swap(y, &mut self.ynew);
                self.k.swap(0, 6);
                stats.accepted += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = step * factor;
                } else {
                    h = h.max(step * factor.min(1.0));
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        self.h = h;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation;

    impl OdeSystem for Rotation {
        fn rhs(&mut self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
            for (d, v) in dy.iter_mut().zip(y) {
                *d = Complex64::new(0.0, -1.0) * v * v.norm_sqr();
            }
        }
    }

    fn exact(y0: Complex64, t: f64) -> Complex64 {
        y0 * Complex64::from_polar(1.0, -y0.norm_sqr() * t)
    }

    #[test]
    fn both_methods_follow_exact_rotation() {
        let y0 = [Complex64::new(1.2, -0.4), Complex64::new(0.1, 0.3)];
        for method in [Integrator::Rk4 { dt: Some(1e-3) }, Integrator::Dp54 { rtol: 1e-12, atol: 1e-14 }] {
            let mut last = Vec::new();
            integrate(&mut Rotation, &y0, 0.0, &[0.5, 2.0], method, |_, y| last = y.to_vec()).unwrap();
            for (a, b) in last.iter().zip(&y0) {
                assert!((a - exact(*b, 2.0)).norm() < 1e-10, "{method:?}");
            }
        }
    }

    #[test]
    fn backward_integration() {
        let y0 = [Complex64::new(0.7, 0.2)];
        let mut last = Vec::new();
        integrate(&mut Rotation, &y0, 0.0, &[-1.5], Integrator::Dp54 { rtol: 1e-12, atol: 1e-14 }, |_, y| last = y.to_vec()).unwrap();
        assert!((last[0] - exact(y0[0], -1.5)).norm() < 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let y0 = [Complex64::new(1.5, 0.0)];
        let err = |dt: f64| {
            let mut last = Vec::new();
            integrate(&mut Rotation, &y0, 0.0, &[1.0], Integrator::Rk4 { dt: Some(dt) }, |_, y| last = y.to_vec()).unwrap();
            (last[0] - exact(y0[0], 1.0)).norm()
        };
        let order = (err(0.02) / err(0.01)).log2();
        assert!((order - 4.0).abs() < 0.2, "{order}");
    }
}
