//! Forward-mode automatic differentiation for the closed-form fields.
//!
//! [`Jet`] carries a value together with its gradient and Hessian with respect
//! to three independent variables, which is exactly what is needed to evaluate
//! `-ΔU + U·∇U + ∇P` from stream-function formulas without finite differences.
//! [`Taylor3`] is a univariate truncated power series used for the smooth
//! cutoff profiles, whose first three derivatives feed [`Scalar::chain`].
//!
//! Formulas are written once against the [`Scalar`] trait and evaluated either
//! with plain `f64` or with `Jet`.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the closed-form evaluators.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;

    /// Composes with a scalar function `f`, given `f`, `f'`, `f''` at `self.value()`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self;

    fn recip(self) -> Self {
        let v = self.value();
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn chain(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// Second-order jet in three variables: value, gradient and (symmetric) Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub const ZERO: Jet = Jet { v: 0.0, g: [0.0; 3], h: [[0.0; 3]; 3] };

    /// The independent variable number `index` (0, 1 or 2) at `value`.
    pub fn variable(value: f64, index: usize) -> Self {
        let mut g = [0.0; 3];
        g[index] = 1.0;
        Jet { v: value, g, h: [[0.0; 3]; 3] }
    }

    /// Seeds all three coordinates of a point.
    pub fn point(x: [f64; 3]) -> [Jet; 3] {
        [Jet::variable(x[0], 0), Jet::variable(x[1], 1), Jet::variable(x[2], 2)]
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1] + self.h[2][2]
    }
}

impl Scalar for Jet {
    #[inline]
    fn constant(v: f64) -> Self {
        Jet { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Jet { v: f0, g: [0.0; 3], h: [[0.0; 3]; 3] };
        for i in 0..3 {
            out.g[i] = f1 * self.g[i];
            for j in 0..3 {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
            }
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        self.v += rhs.v;
        for i in 0..3 {
            self.g[i] += rhs.g[i];
            for j in 0..3 {
                self.h[i][j] += rhs.h[i][j];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Jet { v: self.v * rhs.v, g: [0.0; 3], h: [[0.0; 3]; 3] };
        for i in 0..3 {
            out.g[i] = self.g[i] * rhs.v + self.v * rhs.g[i];
            for j in 0..3 {
                out.h[i][j] = self.h[i][j] * rhs.v
                    + self.g[i] * rhs.g[j]
                    + self.g[j] * rhs.g[i]
                    + self.v * rhs.h[i][j];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.v += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.v -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.v *= rhs;
        for i in 0..3 {
            self.g[i] *= rhs;
            for j in 0..3 {
                self.h[i][j] *= rhs;
            }
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

/// Univariate Taylor polynomial truncated after the cubic term.
///
/// `c[k]` is the k-th Taylor coefficient, so the k-th derivative is `k! c[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taylor3 {
    pub c: [f64; 4],
}

impl Taylor3 {
    pub fn constant(v: f64) -> Self {
        Taylor3 { c: [v, 0.0, 0.0, 0.0] }
    }

    pub fn variable(v: f64) -> Self {
        Taylor3 { c: [v, 1.0, 0.0, 0.0] }
    }

    /// `[f, f', f'', f''']`.
    pub fn derivatives(&self) -> [f64; 4] {
        [self.c[0], self.c[1], 2.0 * self.c[2], 6.0 * self.c[3]]
    }

    pub fn exp(self) -> Self {
        let a = self.c;
        let mut b = [a[0].exp(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * b[k - j];
            }
            b[k] = s / k as f64;
        }
        Taylor3 { c: b }
    }

    pub fn recip(self) -> Self {
        let a = self.c;
        let mut b = [1.0 / a[0], 0.0, 0.0, 0.0];
        for k in 1..4 {
            let mut s = 0.0;
            for j in 1..=k {
                s += a[j] * b[k - j];
            }
            b[k] = -s / a[0];
        }
        Taylor3 { c: b }
    }
}

impl Add for Taylor3 {
    type Output = Taylor3;
    fn add(self, rhs: Taylor3) -> Taylor3 {
        let mut c = self.c;
        for (ci, ri) in c.iter_mut().zip(rhs.c) {
            *ci += ri;
        }
        Taylor3 { c }
    }
}

impl Sub for Taylor3 {
    type Output = Taylor3;
    fn sub(self, rhs: Taylor3) -> Taylor3 {
        self + rhs * -1.0
    }
}

impl Mul for Taylor3 {
    type Output = Taylor3;
    fn mul(self, rhs: Taylor3) -> Taylor3 {
        let mut c = [0.0; 4];
        for (k, ck) in c.iter_mut().enumerate() {
            for j in 0..=k {
                *ck += self.c[j] * rhs.c[k - j];
            }
        }
        Taylor3 { c }
    }
}

impl Mul<f64> for Taylor3 {
    type Output = Taylor3;
    fn mul(self, rhs: f64) -> Taylor3 {
        Taylor3 { c: self.c.map(|v| v * rhs) }
    }
}

impl Div for Taylor3 {
    type Output = Taylor3;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Taylor3) -> Taylor3 {
        self * rhs.recip()
    }
}

/// C^∞ step: 0 on (-∞, 0], 1 on [1, ∞), built from `exp(-1/t)`.
///
/// Returns `[s, s', s'', s''']` at `t`.
pub fn smoothstep(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        return [0.0; 4];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let x = Taylor3::variable(t);
    let one = Taylor3::constant(1.0);
    let left = (one / x * -1.0).exp();
    let right = (one / (one - x) * -1.0).exp();
    (left / (left + right)).derivatives()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample<S: Scalar>(x: [S; 3]) -> S {
        // x0^2 x1 / (1 + x2^2) + sqrt(x0^2 + x1^2 + x2^2)
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        x[0] * x[0] * x[1] / (x[2] * x[2] + 1.0) + r2.sqrt()
    }

    #[test]
    fn jet_matches_central_differences() {
        let p = [0.7, -0.4, 1.3];
        let jet = sample(Jet::point(p));
        let h = 1e-4;
        let f = |q: [f64; 3]| sample(q);
        for i in 0..3 {
            let mut a = p;
            let mut b = p;
            a[i] += h;
            b[i] -= h;
            let d = (f(a) - f(b)) / (2.0 * h);
            assert!((jet.g[i] - d).abs() < 1e-7, "grad {i}: {} vs {d}", jet.g[i]);
            for j in 0..3 {
                let mut pp = p;
                let mut pm = p;
                let mut mp = p;
                let mut mm = p;
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                let d2 = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
                assert!((jet.h[i][j] - d2).abs() < 1e-5, "hess {i}{j}: {} vs {d2}", jet.h[i][j]);
            }
        }
        assert_eq!(jet.v, f(p));
    }

    #[test]
    fn taylor_exp_and_recip() {
        let t = Taylor3::variable(0.3);
        let e = t.exp().derivatives();
        for d in e {
            assert!((d - 0.3f64.exp()).abs() < 1e-14);
        }
        let r = t.recip().derivatives();
        let x: f64 = 0.3;
        assert!((r[1] + 1.0 / (x * x)).abs() < 1e-12);
        assert!((r[2] - 2.0 / x.powi(3)).abs() < 1e-10);
        assert!((r[3] + 6.0 / x.powi(4)).abs() < 1e-8);
    }

    #[test]
    fn smoothstep_plateaus_and_symmetry() {
        assert_eq!(smoothstep(-0.5), [0.0; 4]);
        assert_eq!(smoothstep(1.5), [1.0, 0.0, 0.0, 0.0]);
        let mid = smoothstep(0.5);
        assert!((mid[0] - 0.5).abs() < 1e-15);
        for t in [0.1, 0.25, 0.4] {
            let a = smoothstep(t);
            let b = smoothstep(1.0 - t);
            assert!((a[0] + b[0] - 1.0).abs() < 1e-14);
            assert!((a[1] - b[1]).abs() < 1e-12);
        }
        // derivative consistency by finite differences
        let h = 1e-5;
        for t in [0.05, 0.3, 0.77] {
            let s = smoothstep(t);
            for k in 0..3 {
                let d = (smoothstep(t + h)[k] - smoothstep(t - h)[k]) / (2.0 * h);
                assert!((s[k + 1] - d).abs() < 1e-5 * (1.0 + d.abs()), "k={k} t={t}");
            }
        }
    }
}
