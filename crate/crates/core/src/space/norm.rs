//! Weighted ℓ^α Minkowski norms and their proximal calculus.
//!
//! `F(v) = ‖diag(s) v‖_α` with per-axis scales `s_i > 0` and `α ∈ [1, ∞]`.
//! The dual norm is the weighted ℓ^{α'} norm with reciprocal scales,
//! `1/α + 1/α' = 1`. Everything the solver needs — dual-saturating vectors,
//! `prox` of `(1/q) F(·)^q`, and projection onto `{F <= 1}` — reduces to
//! monotone scalar root-finding because the dimension is 1 or 2. These run in
//! the inner loop of the primal–dual iteration for every node, so the α = 2
//! family gets closed-form/Newton fast paths and nothing here allocates.

// The prox routines walk 1-2 element stack buffers that are read and written
// at the same index; iterator rewrites obscure that.
#![allow(clippy::needless_range_loop)]

use crate::{conjugate, Error, Result};

/// Grids are 1-D or 2-D, and the stack-allocated work buffers below rely on it.
const MAX_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiNorm {
    alpha: f64,
    scales: Vec<f64>,
}

/// Solve `x + beta * x^(gamma) = z` for `x >= 0`, given `beta >= 0`, `gamma > 0`,
/// `z >= 0`. The left side is strictly increasing, so the root is unique and
/// lies in `[0, z]`. Newton with a bisection safeguard; tolerance 1e-14.
pub(crate) fn solve_power_eq(z: f64, beta: f64, gamma: f64) -> f64 {
    if z == 0.0 || beta == 0.0 {
        return if beta == 0.0 { z } else { 0.0 };
    }
    if gamma == 1.0 {
        return z / (1.0 + beta);
    }
    let tol = 1e-14 * z.max(1.0);
    let (mut lo, mut hi) = (0.0_f64, z);
    // Good starting point: ignore the power term or the linear term.
    let mut x = if beta * z.powf(gamma) < z { z / (1.0 + beta * z.powf(gamma - 1.0)) } else { (z / beta).powf(1.0 / gamma) }
        .clamp(0.0, z);
    for _ in 0..60 {
        let phi = x + beta * x.powf(gamma) - z;
        if phi.abs() <= tol {
            return x;
        }
        if phi > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dphi = 1.0 + beta * gamma * x.powf(gamma - 1.0);
        let mut next = x - phi / dphi;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        x = next;
    }
    x
}

impl MinkowskiNorm {
    /// `alpha` in `[1, ∞]` (use `f64::INFINITY`), strictly positive scales,
    /// at most two axes.
    pub fn new(alpha: f64, scales: Vec<f64>) -> Result<Self> {
        if alpha.is_nan() || alpha < 1.0 {
            return Err(Error::InvalidExponent(format!("norm exponent alpha = {alpha}")));
        }
        if scales.is_empty() || scales.len() > MAX_DIM {
            return Err(Error::InvalidSpace(format!("norm needs 1 or 2 axes, got {}", scales.len())));
        }
        if scales.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidSpace(format!("norm scales {scales:?} must be positive")));
        }
        Ok(Self { alpha, scales })
    }

    /// Euclidean norm, unit scales.
    pub fn euclidean(dim: usize) -> Self {
        Self { alpha: 2.0, scales: vec![1.0; dim] }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    /// `F` multiplied by `factor` (realized on the scales).
    pub fn scaled(&self, factor: f64) -> Self {
        Self { alpha: self.alpha, scales: self.scales.iter().map(|s| s * factor).collect() }
    }

    /// F(v).
    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        if self.alpha.is_infinite() {
            v.iter().zip(&self.scales).map(|(x, s)| (s * x).abs()).fold(0.0, f64::max)
        } else if self.alpha == 1.0 {
            v.iter().zip(&self.scales).map(|(x, s)| (s * x).abs()).sum()
        } else if self.alpha == 2.0 {
            v.iter().zip(&self.scales).map(|(x, s)| (s * x) * (s * x)).sum::<f64>().sqrt()
        } else {
            let sum: f64 = v.iter().zip(&self.scales).map(|(x, s)| (s * x).abs().powf(self.alpha)).sum();
            sum.powf(1.0 / self.alpha)
        }
    }

    /// F*(xi) = sup { xi·v : F(v) <= 1 }, the weighted ℓ^{α'} norm with
    /// reciprocal scales.
    pub fn dual_eval(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim());
        let ap = conjugate(self.alpha);
        if ap.is_infinite() {
            xi.iter().zip(&self.scales).map(|(x, s)| (x / s).abs()).fold(0.0, f64::max)
        } else if ap == 1.0 {
            xi.iter().zip(&self.scales).map(|(x, s)| (x / s).abs()).sum()
        } else if ap == 2.0 {
            xi.iter().zip(&self.scales).map(|(x, s)| (x / s) * (x / s)).sum::<f64>().sqrt()
        } else {
            let sum: f64 = xi.iter().zip(&self.scales).map(|(x, s)| (x / s).abs().powf(ap)).sum();
            sum.powf(1.0 / ap)
        }
    }

    /// A vector `v` with `F(v) = 1` and `xi·v = F*(xi)`; zero vector for `xi = 0`.
    /// Ties in the ℓ^1/ℓ^∞ cases break to the lowest axis for determinism.
    pub fn dual_saturator(&self, xi: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let eta: Vec<f64> = xi.iter().zip(&self.scales).map(|(x, s)| x / s).collect();
        let m = self.dual_eval(xi);
        if m == 0.0 {
            return vec![0.0; d];
        }
        let mut y = vec![0.0; d];
        if self.alpha == 1.0 {
            // dual is ℓ^∞: put everything on a maximizing axis
            let mut best = 0;
            for i in 1..d {
                if eta[i].abs() > eta[best].abs() {
                    best = i;
                }
            }
            y[best] = eta[best].signum();
        } else if self.alpha.is_infinite() {
            // dual is ℓ^1: sign vector on the support
            for i in 0..d {
                if eta[i] != 0.0 {
                    y[i] = eta[i].signum();
                }
            }
        } else {
            let ap = conjugate(self.alpha);
            for i in 0..d {
                if eta[i] != 0.0 {
                    y[i] = eta[i].signum() * (eta[i].abs() / m).powf(ap - 1.0);
                }
            }
        }
        y.iter().zip(&self.scales).map(|(yi, s)| yi / s).collect()
    }

    /// `argmin_v |v - z|^2 / (2 sigma) + F(v)^q / q`, for `q` in `(1, ∞)`.
    pub fn prox_power(&self, z: &[f64], sigma: f64, q: f64) -> Vec<f64> {
        let mut out = z.to_vec();
        self.prox_power_into(&mut out, sigma, q);
        out
    }

    /// In-place version of [`Self::prox_power`]; `v` holds `z` on entry.
    pub fn prox_power_into(&self, v: &mut [f64], sigma: f64, q: f64) {
        debug_assert_eq!(v.len(), self.dim());
        let fz = self.eval(v);
        if fz == 0.0 || sigma == 0.0 {
            return;
        }
        let a = self.alpha;
        let d = self.dim();
        if a == 2.0 && q == 2.0 {
            for i in 0..d {
                let s = self.scales[i];
                v[i] /= 1.0 + sigma * s * s;
            }
            return;
        }
        if a.is_infinite() {
            self.prox_power_linf(v, sigma, q);
            return;
        }
        if a == 1.0 {
            self.prox_power_l1(v, sigma, q);
            return;
        }
        let mut z = [0.0_f64; MAX_DIM];
        z[..d].copy_from_slice(v);
        // Stationarity: v_i + sigma t^{q-a} s_i^a |v_i|^{a-1} sgn(v_i) = z_i
        // with t = F(v). For q = a the system decouples.
        let components = |t_pow: f64, out: &mut [f64]| {
            for i in 0..d {
                let s = self.scales[i];
                let beta = sigma * t_pow * if a == 2.0 { s * s } else { s.powf(a) };
                out[i] = if a == 2.0 {
                    z[i] / (1.0 + beta)
                } else {
                    z[i].signum() * solve_power_eq(z[i].abs(), beta, a - 1.0)
                };
            }
        };
        if (q - a).abs() < 1e-15 {
            components(1.0, v);
            return;
        }
        let e = q - a;
        // Unique fixed point t* of F(v(t)) = t in (0, F(z)]; sign change bracketed.
        let (mut lo, mut hi) = (1e-300_f64, fz);
        let mut buf = [0.0_f64; MAX_DIM];
        for _ in 0..200 {
            let t = 0.5 * (lo + hi);
            components(t.powf(e), &mut buf[..d]);
            if self.eval(&buf[..d]) > t {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= 1e-15 * hi.max(1e-300) {
                break;
            }
        }
        components((0.5 * (lo + hi)).powf(e), v);
    }

    fn prox_power_l1(&self, v: &mut [f64], sigma: f64, q: f64) {
        // F = sum s_i |v_i|: soft threshold at sigma t^{q-1} s_i, t = F(v).
        let d = self.dim();
        let mut z = [0.0_f64; MAX_DIM];
        z[..d].copy_from_slice(v);
        let fz = self.eval(&z[..d]);
        let value = |t: f64, out: &mut [f64]| {
            let thr = sigma * t.powf(q - 1.0);
            for i in 0..d {
                out[i] = z[i].signum() * (z[i].abs() - thr * self.scales[i]).max(0.0);
            }
        };
        let (mut lo, mut hi) = (0.0_f64, fz);
        let mut buf = [0.0_f64; MAX_DIM];
        for _ in 0..200 {
            let t = 0.5 * (lo + hi);
            value(t, &mut buf[..d]);
            if self.eval(&buf[..d]) > t {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= 1e-15 * hi.max(1e-300) {
                break;
            }
        }
        value(0.5 * (lo + hi), v);
    }

    fn prox_power_linf(&self, v: &mut [f64], sigma: f64, q: f64) {
        // For fixed t = F(v) the optimal v clamps each |v_i| at t/s_i; minimize
        // the resulting 1-D convex function of t via its increasing derivative.
        let d = self.dim();
        let mut z = [0.0_f64; MAX_DIM];
        z[..d].copy_from_slice(v);
        let tmax = self.eval(&z[..d]);
        let dpsi = |t: f64| -> f64 {
            let mut pulled = 0.0;
            for i in 0..d {
                let s = self.scales[i];
                pulled += (z[i].abs() - t / s).max(0.0) / s;
            }
            t.powf(q - 1.0) - pulled / sigma
        };
        let (mut lo, mut hi) = (0.0_f64, tmax);
        for _ in 0..200 {
            let t = 0.5 * (lo + hi);
            if dpsi(t) < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= 1e-15 * hi.max(1e-300) {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        for i in 0..d {
            let cap = t / self.scales[i];
            v[i] = v[i].clamp(-cap, cap);
        }
    }

    /// Euclidean projection onto `{F <= 1}`.
    pub fn project_unit_ball(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        self.project_unit_ball_into(&mut out);
        out
    }

    /// In-place version of [`Self::project_unit_ball`]; `v` holds `z` on entry.
    pub fn project_unit_ball_into(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        let fz = self.eval(v);
        if fz <= 1.0 {
            return;
        }
        let a = self.alpha;
        let d = self.dim();
        if a.is_infinite() {
            for i in 0..d {
                let cap = 1.0 / self.scales[i];
                v[i] = v[i].clamp(-cap, cap);
            }
            return;
        }
        if a == 2.0 {
            self.project_ellipse(v, fz);
        } else if a == 1.0 {
            self.project_l1(v);
        } else {
            self.project_general(v, fz);
        }
        // Exact feasibility matters more than the last ulp of optimality.
        let f = self.eval(v);
        if f > 1.0 {
            for x in v.iter_mut() {
                *x /= f;
            }
        }
    }

    fn project_ellipse(&self, v: &mut [f64], fz: f64) {
        let d = self.dim();
        // Equal scales: the ball is round and the projection is radial.
        if d == 1 || self.scales.windows(2).all(|w| w[0] == w[1]) {
            for x in v.iter_mut() {
                *x /= fz;
            }
            return;
        }
        // Secular equation: phi(lam) = sum (s_i z_i / (1 + 2 lam s_i^2))^2 - 1.
        // phi is decreasing and convex, so Newton from 0 converges monotonically.
        let mut z = [0.0_f64; MAX_DIM];
        z[..d].copy_from_slice(v);
        let mut lam = 0.0_f64;
        for _ in 0..100 {
            let mut phi = -1.0;
            let mut dphi = 0.0;
            for i in 0..d {
                let s2 = self.scales[i] * self.scales[i];
                let den = 1.0 + 2.0 * lam * s2;
                let term = self.scales[i] * z[i] / den;
                phi += term * term;
                dphi -= 4.0 * term * term * s2 / den;
            }
            if phi.abs() <= 1e-15 {
                break;
            }
            let step = phi / dphi;
            if !step.is_finite() {
                break;
            }
            lam -= step;
        }
        for i in 0..d {
            v[i] = z[i] / (1.0 + 2.0 * lam * self.scales[i] * self.scales[i]);
        }
    }

    fn project_l1(&self, v: &mut [f64]) {
        let d = self.dim();
        let mut z = [0.0_f64; MAX_DIM];
        z[..d].copy_from_slice(v);
        let value = |lam: f64, out: &mut [f64]| {
            for i in 0..d {
                out[i] = z[i].signum() * (z[i].abs() - lam * self.scales[i]).max(0.0);
            }
        };
        let mut hi = (0..d).map(|i| (z[i] / self.scales[i]).abs()).fold(0.0, f64::max);
        let mut lo = 0.0_f64;
        let mut buf = [0.0_f64; MAX_DIM];
        for _ in 0..200 {
            let lam = 0.5 * (lo + hi);
            value(lam, &mut buf[..d]);
            if self.eval(&buf[..d]) > 1.0 {
                lo = lam;
            } else {
                hi = lam;
            }
            if hi - lo <= 1e-16 * hi.max(1e-300) {
                break;
            }
        }
        value(0.5 * (lo + hi), v);
    }

    fn project_general(&self, v: &mut [f64], _fz: f64) {
        let a = self.alpha;
        let d = self.dim();
        let mut z = [0.0_f64; MAX_DIM];
        z[..d].copy_from_slice(v);
        // KKT: v_i + lam a s_i^a |v_i|^{a-1} sgn(v_i) = z_i with F(v) = 1.
        let value = |lam: f64, out: &mut [f64]| {
            for i in 0..d {
                out[i] = z[i].signum() * solve_power_eq(z[i].abs(), lam * a * self.scales[i].powf(a), a - 1.0);
            }
        };
        let mut buf = [0.0_f64; MAX_DIM];
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        loop {
            value(hi, &mut buf[..d]);
            if self.eval(&buf[..d]) <= 1.0 || hi > 1e300 {
                break;
            }
            hi *= 2.0;
        }
        for _ in 0..200 {
            let lam = 0.5 * (lo + hi);
            value(lam, &mut buf[..d]);
            if self.eval(&buf[..d]) > 1.0 {
                lo = lam;
            } else {
                hi = lam;
            }
            if hi - lo <= 1e-16 * hi.max(1e-300) {
                break;
            }
        }
        value(0.5 * (lo + hi), v);
    }
}
