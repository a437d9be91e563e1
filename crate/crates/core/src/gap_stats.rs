//! Minimal gaps of `alpha * x_n mod 1`, including the square-root and k-th
//! root index sequences with exact verification of the reported minimum.

use std::cmp::Ordering;

use num_integer::Roots;
use serde::Serialize;

use crate::dd::{dist_to_int, Dd};
use crate::error::{Error, Result};
use crate::exact::{is_perfect_power, is_perfect_square, sqrt_pair_excess_sign, SurdSum};
use crate::scalar::Real;

/// Candidates closer than this to the floating minimum are re-ranked exactly.
pub const CERTIFY_WINDOW: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapResult<T> {
    pub n: usize,
    pub delta: T,
    pub witness_m: usize,
    pub witness_n: usize,
    /// Integer `k` with `||alpha (x_m - x_n)|| = |alpha (x_m - x_n) - k|`.
    pub nearest_k: i128,
    pub certified: bool,
}

fn dd_to_i128<T: Real>(x: Dd<T>) -> Result<i128> {
    match (x.hi.to_i128(), x.lo.to_i128()) {
        (Some(h), Some(l)) => Ok(h + l),
        _ => Err(Error::Numerical(format!("nearest integer {} does not fit in i128", x.hi))),
    }
}

fn pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Adjacent circular gaps of sorted fractional parts: `(gap, i, j)` where
/// `i`, `j` index `fracs`.
fn circular_adjacent<T: Real>(fracs: &[Dd<T>]) -> Vec<(Dd<T>, usize, usize)> {
    let mut order: Vec<usize> = (0..fracs.len()).collect();
    order.sort_by(|&a, &b| fracs[a].total_cmp(&fracs[b]).then(a.cmp(&b)));
    let one = Dd::from_scalar(T::one());
    let mut out = Vec::with_capacity(fracs.len());
    for w in order.windows(2) {
        out.push((fracs[w[1]] - fracs[w[0]], w[0], w[1]));
    }
    let (first, last) = (order[0], order[order.len() - 1]);
    out.push((one - fracs[last] + fracs[first], last, first));
    out
}

/// Smallest circular gap among fractional parts in `[0, 1)`, with the
/// 0-based pair `(i, j)`, `i < j`; ties go to the smallest pair.
pub fn min_circular_gap<T: Real>(fracs: &[Dd<T>]) -> Option<(Dd<T>, usize, usize)> {
    if fracs.len() < 2 {
        return None;
    }
    circular_adjacent(fracs)
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(pair(a.1, a.2).cmp(&pair(b.1, b.2))))
        .map(|(g, i, j)| {
            let (i, j) = pair(i, j);
            (g, i, j)
        })
}

/// `min_{m != n} ||alpha x_m - alpha x_n||` via sorted fractional parts.
/// Witness indices are 1-based with `witness_m < witness_n`; exact ties go to
/// the lexicographically smallest pair.
pub fn min_gap<T: Real>(values: &[T], alpha: T) -> Result<GapResult<T>> {
    if values.len() < 2 {
        return Err(Error::Input(format!("min_gap needs N >= 2, got {}", values.len())));
    }
    if !alpha.is_finite() || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("min_gap inputs must be finite".into()));
    }
    let fracs: Vec<Dd<T>> = values.iter().map(|&x| Dd::product(alpha, x).frac()).collect();
    let (gap, m, n) = min_circular_gap(&fracs).expect("at least two points");
    let diff = Dd::product(alpha, values[m]) - Dd::product(alpha, values[n]);
    let k = diff.round();
    let delta = if gap.hi > T::of(0.5) { dist_to_int(diff) } else { gap };
    Ok(GapResult {
        n: values.len(),
        delta: delta.value(),
        witness_m: m + 1,
        witness_n: n + 1,
        nearest_k: dd_to_i128(k)?,
        certified: false,
    })
}

/// All-pairs reference for [`min_gap`].
pub fn min_gap_brute<T: Real>(values: &[T], alpha: T) -> Result<GapResult<T>> {
    if values.len() < 2 {
        return Err(Error::Input("min_gap needs N >= 2".into()));
    }
    let mut best: Option<(Dd<T>, usize, usize, Dd<T>)> = None;
    for m in 0..values.len() {
        for n in (m + 1)..values.len() {
            let d = Dd::product(alpha, values[m]) - Dd::product(alpha, values[n]);
            let g = dist_to_int(d);
            if best.as_ref().is_none_or(|b| g < b.0) {
                best = Some((g, m, n, d.round()));
            }
        }
    }
    let (g, m, n, k) = best.expect("N >= 2");
    Ok(GapResult {
        n: values.len(),
        delta: g.value(),
        witness_m: m + 1,
        witness_n: n + 1,
        nearest_k: dd_to_i128(k)?,
        certified: false,
    })
}

fn isqrt_i64(n: u64) -> i64 {
    n.sqrt() as i64
}

#[derive(Clone, Copy, Debug)]
struct SqrtCandidate {
    gap: Dd<f64>,
    /// Sorted neighbours `lo_idx`, `hi_idx` with `frac(sqrt hi) - frac(sqrt lo) (+1 on wrap)`.
    lo_idx: u64,
    hi_idx: u64,
    wrap: bool,
}

impl SqrtCandidate {
    /// Exact value of the gap as a surd sum.
    fn surd(&self) -> SurdSum {
        let c = isqrt_i64(self.hi_idx) - isqrt_i64(self.lo_idx) - i64::from(self.wrap);
        SurdSum::new().sqrt(1, self.hi_idx).sqrt(-1, self.lo_idx).int(-c)
    }

    fn key(&self) -> (u64, u64) {
        (self.lo_idx.min(self.hi_idx), self.lo_idx.max(self.hi_idx))
    }
}

fn exact_cmp(a: &SqrtCandidate, b: &SqrtCandidate) -> Ordering {
    a.surd().add(&b.surd().neg()).signum().then(a.key().cmp(&b.key()))
}

/// `min ||sqrt m - sqrt n||` over distinct non-square `m, n <= N`, with the
/// minimum and its witness confirmed in exact integer arithmetic.
pub fn sqrt_min_gap(n_max: usize) -> Result<GapResult<f64>> {
    if n_max < 5 {
        return Err(Error::Input(format!("sqrt_min_gap needs N >= 5, got {n_max}")));
    }
    if n_max as u64 > 1u64 << 40 {
        return Err(Error::Parameter("sqrt_min_gap supports N <= 2^40".into()));
    }
    let idx: Vec<u64> = (2..=n_max as u64).filter(|&i| !is_perfect_square(i)).collect();
    let fracs: Vec<Dd<f64>> = idx.iter().map(|&i| Dd::from_scalar(i as f64).sqrt().frac()).collect();
    let gaps = circular_adjacent(&fracs);
    let min = gaps.iter().map(|g| g.0).fold(Dd::from_scalar(f64::INFINITY), |a, b| if b < a { b } else { a });
    let limit = min + Dd::from_scalar(CERTIFY_WINDOW);
    let candidates: Vec<SqrtCandidate> = gaps
        .iter()
        .filter(|g| g.0 <= limit)
        .map(|&(gap, i, j)| SqrtCandidate { gap, lo_idx: idx[i], hi_idx: idx[j], wrap: fracs[j] < fracs[i] })
        .collect();
    let best = candidates
        .iter()
        .copied()
        .min_by(exact_cmp)
        .expect("at least one adjacent gap");
    let exact = best.surd();
    if exact.signum() != Ordering::Greater {
        return Err(Error::Numerical("minimal square-root gap is not positive".into()));
    }
    if exact.clone().int(-1).add(&SurdSum::new()).signum() != Ordering::Less {
        return Err(Error::Numerical("minimal square-root gap exceeds 1".into()));
    }
    let (m, n) = best.key();
    // sqrt(hi) - sqrt(lo) = kk + gap with 0 < gap < 1/2
    let kk = isqrt_i64(best.hi_idx) - isqrt_i64(best.lo_idx) - i64::from(best.wrap);
    let nearest_k = if best.hi_idx == n { -kk } else { kk };
    // independent integer check: |sqrt n - sqrt m| vs |nearest_k|
    let expect = if best.hi_idx == n { Ordering::Less } else { Ordering::Greater };
    if sqrt_pair_excess_sign(m, n, nearest_k.unsigned_abs()) != expect {
        return Err(Error::Numerical(format!("integer certificate disagrees for pair ({m}, {n})")));
    }
    Ok(GapResult {
        n: n_max,
        delta: best.gap.value(),
        witness_m: m as usize,
        witness_n: n as usize,
        nearest_k: i128::from(nearest_k),
        certified: true,
    })
}

/// Reference for [`sqrt_min_gap`] over all pairs (small `N` only).
pub fn sqrt_min_gap_brute(n_max: usize) -> (f64, usize, usize) {
    let idx: Vec<usize> = (2..=n_max).filter(|&i| !is_perfect_square(i as u64)).collect();
    let mut best = (f64::INFINITY, 0, 0);
    for (a, &m) in idx.iter().enumerate() {
        for &n in &idx[a + 1..] {
            let d = Dd::from_scalar(m as f64).sqrt() - Dd::from_scalar(n as f64).sqrt();
            let g = dist_to_int(d).value();
            if g < best.0 {
                best = (g, m, n);
            }
        }
    }
    best
}

/// Minimal gap of `n^(1/k)` over indices that are not perfect k-th powers.
/// Only `k = 2` is certified exactly.
pub fn kth_root_min_gap(n_max: usize, k: u32) -> Result<GapResult<f64>> {
    if k < 2 {
        return Err(Error::Parameter(format!("k must be >= 2, got {k}")));
    }
    if k == 2 {
        return sqrt_min_gap(n_max);
    }
    let idx: Vec<u64> = (2..=n_max as u64).filter(|&i| !is_perfect_power(i, k)).collect();
    if idx.len() < 2 {
        return Err(Error::Input(format!("N={n_max} holds fewer than two non-{k}-th powers")));
    }
    let roots: Vec<Dd<f64>> = idx.iter().map(|&i| Dd::from_scalar(i as f64).root(k)).collect();
    let fracs: Vec<Dd<f64>> = roots.iter().map(|r| r.frac()).collect();
    let key = |i: usize, j: usize| pair(idx[i] as usize, idx[j] as usize);
    let (gap, i, j) = circular_adjacent(&fracs)
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(key(a.1, a.2).cmp(&key(b.1, b.2))))
        .expect("two indices");
    let (ia, ib) = if idx[i] < idx[j] { (i, j) } else { (j, i) };
    let kk = (roots[ia] - roots[ib]).round();
    Ok(GapResult {
        n: n_max,
        delta: gap.value(),
        witness_m: idx[ia] as usize,
        witness_n: idx[ib] as usize,
        nearest_k: dd_to_i128(kk)?,
        certified: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionPair {
    pub n: u64,
    pub m: u64,
    pub gap: f64,
}

/// The pair `n = 2^k d^k - 2^(k-1)`, `m = d^k - 1` and `||n^(1/k) - m^(1/k)||`.
pub fn kth_root_construction(d: u64, k: u32) -> Result<ConstructionPair> {
    if d < 2 || k < 2 {
        return Err(Error::Parameter(format!("construction needs d >= 2 and k >= 2, got d={d}, k={k}")));
    }
    let overflow = || Error::Parameter(format!("construction indices overflow for d={d}, k={k}"));
    let dk = d.checked_pow(k).ok_or_else(overflow)?;
    let n = 2u64
        .checked_pow(k)
        .and_then(|p| p.checked_mul(dk))
        .and_then(|v| v.checked_sub(1u64 << (k - 1)))
        .ok_or_else(overflow)?;
    let m = dk - 1;
    if n > 1u64 << 53 {
        return Err(overflow());
    }
    let diff = Dd::from_scalar(n as f64).root(k) - Dd::from_scalar(m as f64).root(k);
    Ok(ConstructionPair { n, m, gap: dist_to_int(diff).value() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeTermMin {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub value: f64,
    pub certified: bool,
}

#[derive(Clone, Copy)]
struct Triple {
    v: Dd<f64>,
    a: u64,
    b: u64,
    c: u64,
}

impl Triple {
    /// `s * (sqrt a - sqrt b - sqrt c)` with the sign making it non-negative.
    fn surd(&self) -> SurdSum {
        let s = SurdSum::new().sqrt(1, self.a).sqrt(-1, self.b).sqrt(-1, self.c);
        if s.signum() == Ordering::Less {
            s.neg()
        } else {
            s
        }
    }
}

/// `min |sqrt a - sqrt b - sqrt c|` over `1 <= a, b, c <= N` where the
/// expression is not an integer.
pub fn three_term_sqrt_min(n_max: usize) -> Result<ThreeTermMin> {
    if n_max < 3 {
        return Err(Error::Input(format!("three_term_sqrt_min needs N >= 3, got {n_max}")));
    }
    let nm = n_max as u64;
    let roots: Vec<Dd<f64>> = (0..=nm).map(|i| Dd::from_scalar(i as f64).sqrt()).collect();
    let window = Dd::from_scalar(CERTIFY_WINDOW);
    let mut best = Dd::from_scalar(f64::INFINITY);
    let mut near: Vec<Triple> = Vec::new();
    for b in 1..=nm {
        for c in b..=nm {
            let s = roots[b as usize] + roots[c as usize];
            let s2 = s * s;
            if s2.hi > (nm + 2) as f64 {
                break;
            }
            let base = s2.hi.floor() as i64;
            for a in (base - 1)..=(base + 2) {
                if a < 1 || a as u64 > nm {
                    continue;
                }
                let a = a as u64;
                let v = (roots[a as usize] - s).abs();
                if v > best + window {
                    continue;
                }
                let t = Triple { v, a, b, c };
                if v.hi < 1e-20 && t.surd().is_integer() {
                    continue;
                }
                if v < best {
                    best = v;
                    near.retain(|x| x.v <= best + window);
                }
                near.push(t);
            }
        }
    }
    let pick = near
        .iter()
        .copied()
        .min_by(|x, y| x.surd().add(&y.surd().neg()).signum().then((x.a, x.b, x.c).cmp(&(y.a, y.b, y.c))))
        .ok_or_else(|| Error::Numerical("no non-integral triple found".into()))?;
    Ok(ThreeTermMin { a: pick.a, b: pick.b, c: pick.c, value: pick.v.value(), certified: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equally_spaced_mod_one() {
        let r = min_gap(&[10.0, 10.25, 10.5, 10.75], 1.0).unwrap();
        assert_eq!(r.delta, 0.25);
        assert!(r.witness_m < r.witness_n);
    }

    #[test]
    fn half_dilation_hits_zero() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = min_gap(&v, 0.5).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!((r.witness_m, r.witness_n), (1, 3));
        assert_eq!(r.nearest_k, -1);
    }

    #[test]
    fn too_short_or_non_finite() {
        assert_eq!(min_gap(&[1.0], 0.3).unwrap_err().kind(), "input");
        assert_eq!(min_gap(&[1.0, f64::NAN], 0.3).unwrap_err().kind(), "input");
        assert_eq!(sqrt_min_gap(4).unwrap_err().kind(), "input");
    }

    #[test]
    fn f32_min_gap() {
        let r = min_gap(&[0.0f32, 0.3, 0.7], 1.0).unwrap();
        assert!((r.delta - 0.3).abs() < 1e-6);
    }

    #[test]
    fn sqrt_small_matches_pairs() {
        for n in 5..=60 {
            let r = sqrt_min_gap(n).unwrap();
            let (g, m, nn) = sqrt_min_gap_brute(n);
            assert!((r.delta - g).abs() < 1e-15, "N={n}");
            assert!(r.certified);
            if (r.witness_m, r.witness_n) != (m, nn) {
                // an exact tie; the reported pair must be lexicographically smaller
                assert!((r.witness_m, r.witness_n) < (m, nn), "N={n}");
            }
        }
    }

    #[test]
    fn construction_k2_d5() {
        let p = kth_root_construction(5, 2).unwrap();
        assert_eq!((p.n, p.m), (98, 24));
        assert!((p.gap - 5.15e-4).abs() < 1e-6, "{}", p.gap);
        let p = kth_root_construction(4, 3).unwrap();
        assert_eq!((p.n, p.m), (508, 63));
        assert!(kth_root_construction(1, 2).is_err());
    }

    #[test]
    fn construction_gap_orientation() {
        let r = sqrt_min_gap(98).unwrap();
        let p = kth_root_construction(5, 2).unwrap();
        assert!(r.delta <= p.gap);
    }

    #[test]
    fn three_term_small() {
        let r = three_term_sqrt_min(20).unwrap();
        assert!(r.value > 0.0);
        assert!(r.b <= r.c);
    }
}
