//! Exact sign decisions for integer combinations of square roots.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Roots;

/// Squarefree decomposition `n = s^2 * f`, returned as `(s, f)`.
pub fn squarefree_split(mut n: u64) -> (u64, u64) {
    if n == 0 {
        return (0, 1);
    }
    let mut s = 1u64;
    let mut f = 1u64;
    let mut p = 2u64;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        s *= p.pow(e / 2);
        if e % 2 == 1 {
            f *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (s, f * n)
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = n.sqrt();
    r * r == n
}

pub fn is_perfect_power(n: u64, k: u32) -> bool {
    let r = n.nth_root(k);
    r.checked_pow(k) == Some(n)
}

/// `sum c_i sqrt(r_i)`; a radicand of 1 is the integer part.
#[derive(Clone, Debug, Default)]
pub struct SurdSum {
    terms: Vec<(i64, u64)>,
}

impl SurdSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sqrt(mut self, coeff: i64, radicand: u64) -> Self {
        self.terms.push((coeff, radicand));
        self
    }

    pub fn int(self, value: i64) -> Self {
        self.sqrt(value, 1)
    }

    pub fn add(mut self, other: &SurdSum) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn neg(mut self) -> Self {
        for t in &mut self.terms {
            t.0 = -t.0;
        }
        self
    }

    /// Collects like radicals over squarefree parts. Square roots of distinct
    /// squarefree integers are linearly independent over the rationals, so
    /// the sum is zero exactly when every collected coefficient is.
    fn canonical(&self) -> Vec<(BigInt, u64)> {
        let mut out: Vec<(BigInt, u64)> = Vec::new();
        for &(c, r) in &self.terms {
            if c == 0 || r == 0 {
                continue;
            }
            let (s, f) = squarefree_split(r);
            let v = BigInt::from(c) * BigInt::from(s);
            match out.iter_mut().find(|(_, g)| *g == f) {
                Some(slot) => slot.0 += v,
                None => out.push((v, f)),
            }
        }
        out.retain(|(c, _)| c.sign() != Sign::NoSign);
        out
    }

    pub fn is_integer(&self) -> bool {
        self.canonical().iter().all(|(_, f)| *f == 1)
    }

    pub fn signum(&self) -> Ordering {
        let terms = self.canonical();
        if terms.is_empty() {
            return Ordering::Equal;
        }
        let irrational = terms.iter().any(|(_, f)| *f != 1);
        let mut bits = 128u64;
        loop {
            // floor(sqrt(f * 4^bits)) < sqrt(f) * 2^bits < floor + 1 for non-square f
            let (mut lo, mut hi) = (BigInt::from(0), BigInt::from(0));
            for (c, f) in &terms {
                if *f == 1 {
                    let exact = c << bits;
                    lo += &exact;
                    hi += exact;
                    continue;
                }
                let scaled = (BigInt::from(*f) << (2 * bits)).sqrt();
                let a = c * &scaled;
                let b = c * (&scaled + 1u32);
                if c.sign() == Sign::Plus {
                    lo += a;
                    hi += b;
                } else {
                    lo += b;
                    hi += a;
                }
            }
            if !irrational {
                return lo.sign().cmp_zero();
            }
            if lo.sign() != Sign::Minus {
                return Ordering::Greater;
            }
            if hi.sign() != Sign::Plus {
                return Ordering::Less;
            }
            bits *= 2;
        }
    }
}

trait SignExt {
    fn cmp_zero(self) -> Ordering;
}

impl SignExt for Sign {
    fn cmp_zero(self) -> Ordering {
        match self {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }
}

/// Sign of `sqrt(4 m n) - (m + n - k^2)` decided in integers by comparing
/// `(m + n - k^2)^2` with `4 m n`. Since `(sqrt m - sqrt n)^2 = m + n - sqrt(4mn)`,
/// this is the sign of `k - |sqrt m - sqrt n|` for `k >= 0`.
pub fn sqrt_pair_excess_sign(m: u64, n: u64, k: u64) -> Ordering {
    let t = i128::from(m) + i128::from(n) - i128::from(k) * i128::from(k);
    let four_mn = 4 * i128::from(m) * i128::from(n);
    if t < 0 {
        return Ordering::Greater;
    }
    let t = t as u128;
    let t2 = t.checked_mul(t).expect("operands below 2^40") as i128;
    four_mn.cmp(&t2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits() {
        assert_eq!(squarefree_split(72), (6, 2));
        assert_eq!(squarefree_split(97), (1, 97));
        assert_eq!(squarefree_split(1), (1, 1));
        assert_eq!(squarefree_split(4), (2, 1));
    }

    #[test]
    fn exact_zero_and_signs() {
        // sqrt 8 - 2 sqrt 2 = 0
        assert_eq!(SurdSum::new().sqrt(1, 8).sqrt(-2, 2).signum(), Ordering::Equal);
        // sqrt 98 - sqrt 24 - 5 > 0
        assert_eq!(SurdSum::new().sqrt(1, 98).sqrt(-1, 24).int(-5).signum(), Ordering::Greater);
        // sqrt 2 + sqrt 3 < sqrt 10
        assert_eq!(SurdSum::new().sqrt(1, 2).sqrt(1, 3).sqrt(-1, 10).signum(), Ordering::Less);
        assert!(SurdSum::new().sqrt(3, 9).int(-1).is_integer());
    }

    #[test]
    fn excess_sign_matches_floats() {
        for m in 2..60u64 {
            for n in (m + 1)..60 {
                let d = (n as f64).sqrt() - (m as f64).sqrt();
                for k in 0..8u64 {
                    let expect = (k as f64).partial_cmp(&d).unwrap();
                    assert_eq!(sqrt_pair_excess_sign(m, n, k), expect, "{m} {n} {k}");
                }
            }
        }
    }

    #[test]
    fn perfect_powers() {
        assert!(is_perfect_square(144));
        assert!(!is_perfect_square(143));
        assert!(is_perfect_power(4096, 3));
        assert!(!is_perfect_power(4095, 3));
    }
}
