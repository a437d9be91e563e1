//! Double-word ("double-double") arithmetic over any [`Real`].
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`. This
//! roughly doubles the working precision of the underlying scalar, which is
//! what keeps fractional parts of `alpha * x` meaningful when the product is
//! many orders of magnitude larger than the gaps being measured.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Real;

#[inline]
pub fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

/// Exact product `a * b = p + e` using a fused multiply-add.
#[inline]
pub fn two_prod<T: Real>(a: T, b: T) -> (T, T) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd<T> {
    pub hi: T,
    pub lo: T,
}

impl<T: Real> Dd<T> {
    pub fn new(hi: T, lo: T) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn from_scalar(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    pub fn zero() -> Self {
        Self::from_scalar(T::zero())
    }

    /// Exact product of two scalars.
    pub fn product(a: T, b: T) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    pub fn value(self) -> T {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < T::zero() || (self.hi == T::zero() && self.lo < T::zero()) {
            -self
        } else {
            self
        }
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            let fl = self.lo.floor();
            let (hi, lo) = quick_two_sum(fh, fl);
            Self { hi, lo }
        } else {
            Self { hi: fh, lo: T::zero() }
        }
    }

    /// Nearest integer, ties away from zero.
    pub fn round(self) -> Self {
        let half = T::of(0.5);
        (self + Dd::from_scalar(half)).floor()
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(self) -> Self {
        let f = self - self.floor();
        let one = Dd::from_scalar(T::one());
        if f.hi < T::zero() {
            f + one
        } else if f >= one {
            f - one
        } else {
            f
        }
    }

    pub fn scale(self, s: T) -> Self {
        let (p, e) = two_prod(self.hi, s);
        let e = self.lo.mul_add(s, e);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn recip(self) -> Self {
        Dd::from_scalar(T::one()) / self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= T::zero() {
            return Self::zero();
        }
        let s = self.hi.sqrt();
        let sq = Dd::product(s, s);
        let r = self - sq;
        let corr = r.hi / (s + s);
        Dd::new(s, corr)
    }

    pub fn powi(self, k: u32) -> Self {
        let mut acc = Dd::from_scalar(T::one());
        let mut base = self;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Principal `k`-th root of a non-negative value, refined by one Newton
    /// step in double-word precision.
    pub fn root(self, k: u32) -> Self {
        if k == 2 {
            return self.sqrt();
        }
        if self.hi <= T::zero() {
            return Self::zero();
        }
        let kk = T::of(f64::from(k));
        let y = self.hi.powf(T::one() / kk);
        let yk = Dd::from_scalar(y).powi(k);
        let r = self - yk;
        let deriv = kk * y.powi(k as i32 - 1);
        Dd::new(y, r.hi / deriv)
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) | None => self.lo.partial_cmp(&other.lo).unwrap_or(Ordering::Equal),
            Some(o) => o,
        }
    }
}

impl<T: Real> PartialOrd for Dd<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl<T: Real> Add for Dd<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Self { hi, lo }
    }
}

impl<T: Real> Neg for Dd<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl<T: Real> Sub for Dd<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<T: Real> Mul for Dd<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

impl<T: Real> std::ops::Div for Dd<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs.scale(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs.scale(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_scalar(q3)
    }
}

/// Distance to the nearest integer, `||x||`, in double-word precision.
pub fn dist_to_int<T: Real>(x: Dd<T>) -> Dd<T> {
    (x - x.round()).abs()
}

/// Circular distance between two fractional parts in `[0, 1)`.
pub fn circular_gap<T: Real>(a: Dd<T>, b: Dd<T>) -> Dd<T> {
    let d = (a - b).abs();
    let alt = Dd::from_scalar(T::one()) - d;
    if alt < d {
        alt
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_is_exact() {
        let a = 1.0 + f64::EPSILON;
        let p = Dd::product(a, a);
        assert_eq!(p.hi, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(p.lo, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn frac_of_large_product_keeps_low_bits() {
        // 3 * (2^40 + 0.25) = 3 * 2^40 + 0.75
        let x = Dd::product(3.0_f64, 2f64.powi(40) + 0.25);
        let f = x.frac();
        assert_eq!(f.value(), 0.75);
        let neg = (-x).frac();
        assert_eq!(neg.value(), 0.25);
    }

    #[test]
    fn sqrt_residual_is_tiny() {
        let two = Dd::from_scalar(2.0_f64);
        let r = two.sqrt();
        let back = r * r - two;
        assert!(back.value().abs() < 1e-30);
    }

    #[test]
    fn cube_root_refined() {
        let x = Dd::from_scalar(508.0_f64);
        let r = x.root(3);
        let back = r.powi(3) - x;
        assert!(back.value().abs() < 1e-27, "{:?}", back);
    }

    #[test]
    fn circular_gap_wraps() {
        let a = Dd::from_scalar(0.05_f64);
        let b = Dd::from_scalar(0.95_f64);
        assert!((circular_gap(a, b).value() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn division_roundtrip() {
        let a = Dd::new(1.0_f64, 1e-20);
        let b = Dd::from_scalar(3.0_f64);
        let q = a / b;
        let back = q * b - a;
        assert!(back.value().abs() < 1e-31);
    }

    #[test]
    fn works_for_f32() {
        let x = Dd::product(3.0_f32, 4097.25_f32);
        assert_eq!(x.frac().value(), 0.75);
    }
}
