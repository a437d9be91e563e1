//! Selberg majorant/minorant of `[-1/M, 1/M]`, the Fejér density
//! `a(x) = sin^2(pi x) / (pi x)^2` and sampling from it.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelbergSign {
    Plus,
    Minus,
}

/// Real, even trigonometric polynomial `sum_{|j| < M} c_j e(jx)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelbergPolynomial<T> {
    pub m: usize,
    pub sign: SelbergSign,
    /// `c_0 .. c_(M-1)`; `c_(-j) = c_j`.
    pub coeffs: Vec<T>,
}

/// Transform of Vaaler's function on `0 < t < 1`.
fn vaaler_weight(t: f64) -> f64 {
    let pt = std::f64::consts::PI * t;
    pt * (1.0 - t) / pt.tan() + t
}

/// Selberg's degree `M - 1` polynomial for the interval `[-1/M, 1/M]`:
/// the truncated indicator smoothed by Vaaler's kernel, shifted by
/// `+-1/M` Fejér kernels at both endpoints.
pub fn selberg_polynomial<T: Real>(m: usize, sign: SelbergSign) -> Result<SelbergPolynomial<T>> {
    if m < 2 {
        return Err(Error::Input(format!("Selberg polynomial needs M >= 2, got {m}")));
    }
    let s = match sign {
        SelbergSign::Plus => 1.0,
        SelbergSign::Minus => -1.0,
    };
    let mf = m as f64;
    let pi = std::f64::consts::PI;
    let mut coeffs = Vec::with_capacity(m);
    coeffs.push(T::of((2.0 + s) / mf));
    for h in 1..m {
        let hf = h as f64;
        let t = hf / mf;
        let smooth = vaaler_weight(t) * (2.0 * pi * t).sin() / (pi * hf);
        let fejer = (1.0 - t) * (2.0 * pi * t).cos() / mf;
        coeffs.push(T::of(smooth + s * fejer));
    }
    Ok(SelbergPolynomial { m, sign, coeffs })
}

impl<T: Real> SelbergPolynomial<T> {
    pub fn coeff(&self, j: i64) -> T {
        let a = j.unsigned_abs() as usize;
        if a < self.m {
            self.coeffs[a]
        } else {
            T::zero()
        }
    }

    /// `c_0 + 2 sum_{h >= 1} c_h cos(2 pi h x)`.
    pub fn eval(&self, x: T) -> T {
        let two_pi_x = T::TAU() * (x - x.round());
        let mut acc = T::zero();
        for (h, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc + c * (two_pi_x * T::of_usize(h)).cos();
        }
        self.coeffs[0] + acc + acc
    }

    /// Full complex sum over `|j| < M`.
    pub fn eval_complex(&self, x: T) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        let m = self.m as i64;
        for j in (1 - m)..m {
            acc = acc + Complex::from_polar(self.coeff(j), T::TAU() * T::of(j as f64) * x);
        }
        acc
    }

    /// Bound on the rounding error of [`SelbergPolynomial::eval`]: each term
    /// carries a few ulps from the argument `2 pi h x` and the cosine.
    pub fn eval_error_bound(&self) -> T {
        let u = T::epsilon();
        let mut acc = T::zero();
        for (h, &c) in self.coeffs.iter().enumerate() {
            acc = acc + c.abs() * T::of_usize(8 * h + 4);
        }
        acc * u * T::of(2.0)
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, &c| a.max(c.abs()))
    }
}

/// Fejér density, `a(0) = 1`.
pub fn fejer_density(x: f64) -> f64 {
    let px = std::f64::consts::PI * x;
    if px.abs() < 1e-4 {
        let p2 = px * px;
        return 1.0 - p2 / 3.0 + 2.0 * p2 * p2 / 45.0;
    }
    let s = px.sin() / px;
    s * s
}

/// `a^(y) = max((2 pi - |y|) / (2 pi), 0)`.
pub fn fejer_density_ft(y: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    ((tau - y.abs()) / tau).max(0.0)
}

/// One draw from `a(x) dx` by rejection from `min(1, 1/(pi x)^2)`, which has
/// mass `4/pi`; each proposal is accepted with probability `pi/4`.
pub fn sample_fejer<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let pi = std::f64::consts::PI;
    loop {
        let centre = rng.random::<bool>();
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        if centre {
            let x = (2.0 * u - 1.0) / pi;
            if v < fejer_density(x) {
                return x;
            }
        } else {
            let r = 1.0 / (pi * (1.0 - u));
            let x = if rng.random::<bool>() { r } else { -r };
            let s = (pi * x).sin();
            if v < s * s {
                return x;
            }
        }
    }
}

/// `int_x^inf a` for large `x`, with error `O(x^-3)`.
fn tail_asymptotic(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    1.0 / (2.0 * pi * pi * x) + (2.0 * pi * x).sin() / (4.0 * pi * pi * pi * x * x)
}

/// Distribution function of the Fejér measure: cumulative quadrature on
/// `[0, 64]` and the tail expansion beyond.
#[derive(Clone, Debug)]
pub struct FejerCdf {
    step: f64,
    cumulative: Vec<f64>,
}

impl FejerCdf {
    pub const LIMIT: f64 = 64.0;

    pub fn new() -> Self {
        let step = 1.0 / 32.0;
        let cells = (Self::LIMIT / step) as usize;
        let cfg = QuadConfig { rel_tol: 1e-13, abs_tol: 1e-16, max_intervals: 1000 };
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..cells {
            let a = i as f64 * step;
            let part = integrate(fejer_density, a, a + step, cfg).expect("smooth integrand").value;
            acc += part;
            cumulative.push(acc);
        }
        Self { step, cumulative }
    }

    /// `int_0^x a` for `x >= 0`.
    fn half(&self, x: f64) -> f64 {
        if x >= Self::LIMIT {
            return 0.5 - tail_asymptotic(x);
        }
        let i = (x / self.step).floor() as usize;
        let a = i as f64 * self.step;
        let cfg = QuadConfig { rel_tol: 1e-12, abs_tol: 1e-15, max_intervals: 100 };
        self.cumulative[i] + integrate(fejer_density, a, x, cfg).expect("smooth integrand").value
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            0.5 + self.half(x)
        } else {
            0.5 - self.half(-x)
        }
    }

    /// `P(|X| > x)`.
    pub fn two_sided_tail(&self, x: f64) -> f64 {
        1.0 - 2.0 * self.half(x.abs())
    }
}

impl Default for FejerCdf {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_terms() {
        let minus: SelbergPolynomial<f64> = selberg_polynomial(4, SelbergSign::Minus).unwrap();
        let plus: SelbergPolynomial<f64> = selberg_polynomial(4, SelbergSign::Plus).unwrap();
        assert_eq!(minus.coeffs[0], 0.25);
        assert_eq!(plus.coeffs[0], 0.75);
        assert!(selberg_polynomial::<f64>(1, SelbergSign::Plus).is_err());
    }

    #[test]
    fn coefficient_bound() {
        for m in [2usize, 4, 16, 64, 257] {
            for sign in [SelbergSign::Plus, SelbergSign::Minus] {
                let p: SelbergPolynomial<f64> = selberg_polynomial(m, sign).unwrap();
                let mf = m as f64;
                for (j, &c) in p.coeffs.iter().enumerate().skip(1) {
                    let bound = (2.0 / mf).min(1.0 / (std::f64::consts::PI * j as f64)) + 1.0 / mf;
                    assert!(c.abs() <= bound + 1e-15, "M={m} j={j}");
                }
            }
        }
    }

    #[test]
    fn complex_eval_is_real() {
        let p: SelbergPolynomial<f64> = selberg_polynomial(16, SelbergSign::Plus).unwrap();
        for i in 0..100 {
            let x = i as f64 / 37.0 - 1.3;
            let z = p.eval_complex(x);
            assert!(z.im.abs() < 1e-12);
            assert!((z.re - p.eval(x)).abs() < 1e-12);
            assert!((p.eval(x) - p.eval(x + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_polynomial() {
        let p: SelbergPolynomial<f32> = selberg_polynomial(8, SelbergSign::Minus).unwrap();
        assert!(p.eval(0.0) <= 1.0);
        assert!(p.eval(0.5) <= 1e-6);
    }

    #[test]
    fn density_and_transform() {
        assert_eq!(fejer_density(0.0), 1.0);
        assert_eq!(fejer_density_ft(0.0), 1.0);
        assert_eq!(fejer_density_ft(std::f64::consts::TAU), 0.0);
        assert_eq!(fejer_density_ft(-std::f64::consts::TAU), 0.0);
        assert!((fejer_density_ft(std::f64::consts::PI) - 0.5).abs() < 1e-15);
        assert!((fejer_density(1e-5) - fejer_density(2e-4) ).abs() < 1e-6);
    }

    #[test]
    fn cdf_is_continuous_at_the_cutover() {
        let c = FejerCdf::new();
        assert!((c.cdf(0.0) - 0.5).abs() < 1e-15);
        let below = c.cdf(FejerCdf::LIMIT - 1e-9);
        let above = c.cdf(FejerCdf::LIMIT);
        assert!((below - above).abs() < 1e-6, "{below} {above}");
        assert!((c.cdf(3.0) + c.cdf(-3.0) - 1.0).abs() < 1e-14);
    }
}
