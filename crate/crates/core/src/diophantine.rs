//! Counting solutions of `|j1 z - j2 z'| < 1` over differences `z, z'`,
//! admissible pairs, continued fractions and the Dirichlet-polynomial check.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{integrate_panels, QuadConfig};

/// Default cap on the number of stored products `j |z|`.
pub const DEFAULT_MAX_PRODUCTS: usize = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JRange {
    /// `1 <= j < m`.
    Full { m: u64 },
    /// `2^(u-1) <= j < 2^u`.
    Dyadic { u: u32 },
}

impl JRange {
    /// Half-open `[lo, hi)`.
    pub fn bounds(self) -> (u64, u64) {
        match self {
            JRange::Full { m } => (1, m.max(1)),
            JRange::Dyadic { u } => (1u64 << (u - 1), 1u64 << u),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DioAlgorithm {
    Oracle,
    SortedWindow,
    StratifiedEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DioSumResult {
    pub n: usize,
    pub j_range: JRange,
    /// Exact unless `algorithm` is `StratifiedEstimate`, where it is the
    /// rounded estimate.
    pub count: u128,
    pub algorithm: DioAlgorithm,
    pub estimate: Option<f64>,
    pub estimate_stderr: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct DioConfig {
    /// Right-hand side of the strict inequality (1 in the plain count).
    pub threshold: f64,
    pub max_products: usize,
}

impl Default for DioConfig {
    fn default() -> Self {
        Self { threshold: 1.0, max_products: DEFAULT_MAX_PRODUCTS }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::Input(format!("need N >= 2, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("values must be finite".into()));
    }
    Ok(())
}

/// Full count over `1 <= j1, j2 < M`.
pub fn theorem2_sum(values: &[f64], m: u64) -> Result<DioSumResult> {
    theorem2_sum_with(values, m, DioConfig::default())
}

pub fn theorem2_sum_with(values: &[f64], m: u64, cfg: DioConfig) -> Result<DioSumResult> {
    window_sum(values, JRange::Full { m }, cfg)
}

/// Count restricted to `j1, j2` in `[2^(u-1), 2^u)`.
pub fn dyadic_block_sum(values: &[f64], u: u32) -> Result<DioSumResult> {
    dyadic_block_sum_with(values, u, DioConfig::default())
}

pub fn dyadic_block_sum_with(values: &[f64], u: u32, cfg: DioConfig) -> Result<DioSumResult> {
    if u == 0 || u > 40 {
        return Err(Error::Input(format!("dyadic level must be in 1..=40, got {u}")));
    }
    window_sum(values, JRange::Dyadic { u }, cfg)
}

/// Signed differences `x_m - x_n`, `m != n`, split into the positive part
/// and the number of zero differences.
fn positive_differences(values: &[f64]) -> (Vec<f64>, u64) {
    let mut pos = Vec::new();
    let mut zeros = 0u64;
    for (m, &a) in values.iter().enumerate() {
        for (n, &b) in values.iter().enumerate() {
            if m == n {
                continue;
            }
            let z = a - b;
            if z > 0.0 {
                pos.push(z);
            } else if z == 0.0 {
                zeros += 1;
            }
        }
    }
    (pos, zeros)
}

/// The product multiset `V = {j z}` is symmetric, so with `V+ = {j |z| > 0}`
/// and `Z0` zero products the ordered count is
/// `2 #{|v - v'| < t} + 2 #{v + w < t} + 4 Z0 #{v < t} + Z0^2` over `V+`.
fn window_sum(values: &[f64], range: JRange, cfg: DioConfig) -> Result<DioSumResult> {
    check_values(values)?;
    let t = cfg.threshold;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Input(format!("threshold must be positive, got {t}")));
    }
    let (lo, hi) = range.bounds();
    let n = values.len();
    let empty = DioSumResult {
        n,
        j_range: range,
        count: 0,
        algorithm: DioAlgorithm::SortedWindow,
        estimate: None,
        estimate_stderr: None,
    };
    if hi <= lo {
        return Ok(empty);
    }
    let (pos, zeros) = positive_differences(values);
    let js = (hi - lo) as u128;
    let total = js * pos.len() as u128;
    if total > cfg.max_products as u128 {
        return Err(Error::Capacity(format!(
            "{total} products exceed the cap {}; use a dyadic block or the stratified estimate",
            cfg.max_products
        )));
    }
    let mut v: Vec<f64> = Vec::with_capacity(total as usize);
    for j in lo..hi {
        let jf = j as f64;
        v.extend(pos.iter().map(|&z| jf * z));
    }
    v.par_sort_unstable_by(|a, b| a.total_cmp(b));
    let len = v.len();
    let chunk = 1 << 16;
    let (close, sums): (u128, u128) = (0..len.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let stop = (start + chunk).min(len);
            let mut end = start + 1 + v[start + 1..].partition_point(|&x| x - v[start] < t);
            // w ranges over v[..wend] with v[i] + w < t; wend shrinks as i grows
            let mut wend = v.partition_point(|&x| v[start] + x < t);
            let (mut close, mut sums) = (0u128, 0u128);
            for i in start..stop {
                end = end.max(i + 1);
                while end < len && v[end] - v[i] < t {
                    end += 1;
                }
                close += (end - i - 1) as u128;
                while wend > 0 && v[i] + v[wend - 1] >= t {
                    wend -= 1;
                }
                sums += wend as u128;
            }
            (close, sums)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let a = len as u128 + 2 * close;
    let z0 = js * u128::from(zeros);
    let small = v.partition_point(|&x| x < t) as u128;
    let count = 2 * a + 2 * sums + 4 * z0 * small + z0 * z0;
    Ok(DioSumResult { count, ..empty })
}

/// Sextuple enumeration; `O(M^2 N^4)`.
pub fn theorem2_sum_oracle(values: &[f64], range: JRange, threshold: f64) -> Result<DioSumResult> {
    check_values(values)?;
    let (lo, hi) = range.bounds();
    let mut diffs = Vec::new();
    for (m, &a) in values.iter().enumerate() {
        for (n, &b) in values.iter().enumerate() {
            if m != n {
                diffs.push(a - b);
            }
        }
    }
    let mut count = 0u128;
    for j1 in lo..hi {
        for j2 in lo..hi {
            for &z1 in &diffs {
                for &z2 in &diffs {
                    if (j1 as f64 * z1 - j2 as f64 * z2).abs() < threshold {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(DioSumResult {
        n: values.len(),
        j_range: range,
        count,
        algorithm: DioAlgorithm::Oracle,
        estimate: None,
        estimate_stderr: None,
    })
}

/// Unbiased estimate for counts too large to enumerate. Every `j1` is its own
/// stratum; inside it `samples` differences `z1` are drawn uniformly and the
/// inner sum over `(j2, z2)` is evaluated exactly by binary search.
pub fn stratified_estimate(values: &[f64], range: JRange, samples: usize, seed: u64) -> Result<DioSumResult> {
    check_values(values)?;
    if samples < 2 {
        return Err(Error::Input("stratified estimate needs at least 2 samples per stratum".into()));
    }
    let (lo, hi) = range.bounds();
    let mut diffs = Vec::new();
    for (m, &a) in values.iter().enumerate() {
        for (n, &b) in values.iter().enumerate() {
            if m != n {
                diffs.push(a - b);
            }
        }
    }
    diffs.sort_by(|a, b| a.total_cmp(b));
    let d = diffs.len() as f64;
    let inner = |t: f64| -> f64 {
        let mut c = 0usize;
        for j2 in lo..hi {
            let jf = j2 as f64;
            let a = diffs.partition_point(|&z| jf * z <= t - 1.0);
            let b = diffs.partition_point(|&z| jf * z < t + 1.0);
            c += b.saturating_sub(a);
        }
        c as f64
    };
    let strata: Vec<(f64, f64)> = (lo..hi)
        .into_par_iter()
        .map(|j1| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j1);
            let xs: Vec<f64> = (0..samples)
                .map(|_| inner(j1 as f64 * diffs[rng.random_range(0..diffs.len())]))
                .collect();
            let mean = xs.iter().sum::<f64>() / samples as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
            (d * mean, d * d * var / samples as f64)
        })
        .collect();
    let est: f64 = strata.iter().map(|s| s.0).sum();
    let var: f64 = strata.iter().map(|s| s.1).sum();
    Ok(DioSumResult {
        n: values.len(),
        j_range: range,
        count: est.round() as u128,
        algorithm: DioAlgorithm::StratifiedEstimate,
        estimate: Some(est),
        estimate_stderr: Some(var.sqrt()),
    })
}

/// Continued-fraction convergents `p/q` of a finite-precision ratio.
fn float_convergents(theta: f64, max_q: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, theta.floor() as u64, 1u64);
    out.push((p1, q1));
    let mut x = theta - theta.floor();
    for _ in 0..64 {
        if x < 1e-15 {
            break;
        }
        let r = 1.0 / x;
        let a = r.floor();
        if a > max_q as f64 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_q {
            break;
        }
        out.push((p2, q2));
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        x = r - a as f64;
    }
    out
}

/// A positive difference as a float and as the exact integer `z * 2^K`.
struct Diff {
    f: f64,
    exact: BigInt,
}

/// `|j1 zp - j2 zq| < 1`, decided in floats when the rounding error allows
/// and in exact integers otherwise.
fn close(zp: &Diff, zq: &Diff, j1: u64, j2: u64, scale: &BigInt) -> bool {
    let (a, b) = (j1 as f64 * zp.f, j2 as f64 * zq.f);
    let err = (a + b) * 2f64.powi(-50);
    let d = (a - b).abs();
    if d >= 1.0 + err {
        return false;
    }
    if d < 1.0 - err {
        return true;
    }
    (BigInt::from(j1) * &zp.exact - BigInt::from(j2) * &zq.exact).abs() < *scale
}

/// Whether some `j1, j2` in `[l, 2l)` give `|j1 zp - j2 zq| < 1`.
fn admissible(zp: &Diff, zq: &Diff, l: u64, scale: &BigInt) -> bool {
    let top = 2 * l;
    let hit = |j1: u64, j2: u64| (l..top).contains(&j2) && close(zp, zq, j1, j2, scale);
    if zq.f < 4.0 * l as f64 {
        for j1 in l..top {
            // |j1 zp - j2 zq| is convex in j2, so the best in-range j2 sits
            // next to the clamped real minimiser
            let c = ((j1 as f64 * zp.f / zq.f).round() as i64).clamp(l as i64, top as i64 - 1);
            for j2 in (c - 1)..=(c + 1) {
                if j2 >= 0 && hit(j1, j2 as u64) {
                    return true;
                }
            }
        }
        return false;
    }
    // |j1 (zp/zq) - j2| < 1/zq <= 1/(4l) < 1/(2 j1), so j2/j1 is a convergent multiple
    for (p, q) in float_convergents(zp.f / zq.f, top) {
        if p == 0 || q == 0 {
            continue;
        }
        let t_lo = l.div_ceil(q).max(l.div_ceil(p));
        let t_hi = ((top - 1) / q).min((top - 1) / p);
        if t_lo <= t_hi && hit(t_lo * q, t_lo * p) {
            return true;
        }
    }
    false
}

/// Power of two `2^K` turning every finite `f64` in `values` into an integer.
fn common_scale(values: &[f64]) -> u32 {
    values
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| {
            let (_, den) = exact_rational(*v);
            den.bits() as u32 - 1
        })
        .max()
        .unwrap_or(0)
}

/// Ordered pairs `(p, q)` of positive differences `z = x_b - x_a` (`a < b`)
/// for which some `j1, j2` in `[2^(u-1), 2^u)` satisfy `|j1 z_p - j2 z_q| < 1`.
/// The inputs are taken as exact binary values, so the count stays exact
/// for sequences far beyond `2^53`.
pub fn admissible_pair_count(values: &[f64], u: u32) -> Result<u128> {
    check_values(values)?;
    if u == 0 || u > 40 {
        return Err(Error::Input(format!("dyadic level must be in 1..=40, got {u}")));
    }
    let l = 1u64 << (u - 1);
    let k = common_scale(values);
    let scale = BigInt::from(1) << k as usize;
    let ints: Vec<BigInt> = values
        .iter()
        .map(|&v| {
            let (num, den) = exact_rational(v);
            (num << k as usize) / den
        })
        .collect();
    let mut z: Vec<Diff> = Vec::new();
    for a in 0..values.len() {
        for b in (a + 1)..values.len() {
            let exact = (&ints[b] - &ints[a]).abs();
            if !exact.is_zero() {
                z.push(Diff { f: (values[b] - values[a]).abs(), exact });
            }
        }
    }
    z.sort_by(|a, b| a.f.total_cmp(&b.f));
    let inv = 1.0 / l as f64;
    let slack = 1.0 + 1e-12;
    let count: u128 = z
        .par_iter()
        .map(|zp| {
            // L zp < 2L zq + 1 and L zq < 2L zp + 1
            let lo = z.partition_point(|x| x.f < (zp.f - inv) / 2.0 / slack);
            let hi = z.partition_point(|x| x.f <= (2.0 * zp.f + inv) * slack);
            z[lo..hi].iter().filter(|zq| admissible(zp, zq, l, &scale)).count() as u128
        })
        .sum();
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Convergent {
    pub a: i128,
    pub q: u64,
    /// `|alpha - a/q|`.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletApprox {
    pub convergents: Vec<Convergent>,
    /// Last convergent with `q <= Q`: `|alpha - a/q| <= 1/(q (Q+1))`.
    pub witness: Convergent,
}

/// `num / den` as `f64` for arbitrarily large operands.
fn big_ratio(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift_n = num.bits().saturating_sub(64) as i64;
    let shift_d = den.bits().saturating_sub(64) as i64;
    let n = (num.abs() >> shift_n as usize).to_f64().unwrap_or(f64::INFINITY);
    let d = (den.abs() >> shift_d as usize).to_f64().unwrap_or(f64::INFINITY);
    let sign = if (num.sign() == Sign::Minus) != (den.sign() == Sign::Minus) { -1.0 } else { 1.0 };
    let e = shift_n - shift_d;
    sign * (n / d) * 2f64.powi(e.clamp(-1100, 1100) as i32)
}

/// Exact rational value of a finite `f64`.
fn exact_rational(x: f64) -> (BigInt, BigInt) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let mant = BigInt::from(sign) * BigInt::from(mant);
    if e >= 0 {
        (mant << e as usize, BigInt::from(1))
    } else {
        (mant, BigInt::from(1) << (-e) as usize)
    }
}

/// Continued-fraction convergents of the exact binary value of `alpha` with
/// denominator at most `Q`.
pub fn dirichlet_convergents(alpha: f64, q_max: u64) -> Result<DirichletApprox> {
    if !alpha.is_finite() {
        return Err(Error::Input(format!("alpha must be finite, got {alpha}")));
    }
    if q_max < 1 {
        return Err(Error::Input("Q must be at least 1".into()));
    }
    let (num, den) = exact_rational(alpha);
    let (mut n, mut d) = (num.clone(), den.clone());
    let (mut p0, mut q0) = (BigInt::from(0), BigInt::from(1));
    let (mut p1, mut q1) = (BigInt::from(1), BigInt::from(0));
    let mut out = Vec::new();
    while !d.is_zero() {
        let (a, r) = n.div_mod_floor(&d);
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > BigInt::from(q_max) {
            break;
        }
        let err = big_ratio(&(&num * &q2 - &p2 * &den).abs(), &(&den * &q2));
        out.push(Convergent {
            a: p2.to_i128().ok_or_else(|| Error::Input("numerator exceeds i128".into()))?,
            q: q2.to_u64().expect("bounded by Q"),
            error: err,
        });
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        (n, d) = (d, r);
    }
    let witness = out.last().cloned().expect("a0/1 is always a convergent");
    Ok(DirichletApprox { convergents: out, witness })
}

/// `Phi(t) = c (sin(b t) / t)^2`, whose transform is
/// `Phi^(xi) = c (pi/2) (2b - |xi|)_+`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhiParams {
    pub b: f64,
    pub c: f64,
}

impl Default for PhiParams {
    /// `Phi^ >= 1` on `[-2, 2]`, supported in `(-4, 4)`.
    fn default() -> Self {
        Self { b: 2.0, c: 1.0 / std::f64::consts::PI }
    }
}

impl PhiParams {
    pub fn eval(&self, t: f64) -> f64 {
        if t.abs() < 1e-8 {
            return self.c * self.b * self.b;
        }
        let s = (self.b * t).sin() / t;
        self.c * s * s
    }

    pub fn transform(&self, xi: f64) -> f64 {
        self.c * std::f64::consts::FRAC_PI_2 * (2.0 * self.b - xi.abs()).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletCheck {
    /// `int_{-R}^{R} |D(tT)|^2 |P(tT)|^2 Phi(t) dt`; a lower bound for the
    /// full integral since the integrand is non-negative.
    pub integral: f64,
    pub quad_error: f64,
    pub intervals: usize,
    pub cutoff: f64,
    /// Upper bound for the discarded tails `|t| > R`.
    pub tail_bound: f64,
    /// Closed form of the full integral: `sum Phi^(T log(j1 z_m / (j2 z_n)))`.
    pub spectral_sum: f64,
    pub count: u128,
    pub holds: bool,
}

/// Positive differences of `values` inside the band `[lo, 8 lo]`.
pub fn band_differences(values: &[f64], lo: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (a, &xa) in values.iter().enumerate() {
        for &xb in &values[a + 1..] {
            let z = (xb - xa).abs();
            if z >= lo && z <= 8.0 * lo {
                out.push(z);
            }
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Checks `count <= int |D(tT)|^2 |P(tT)|^2 Phi(t) dt` with
/// `D(t) = sum j^(it)` over the dyadic block `u` and `P(t) = sum z^(it)` over
/// `band`, which must lie in some `[B, 8B]`.
pub fn dirichlet_integral_check(band: &[f64], u: u32, t_scale: f64, phi: PhiParams) -> Result<DirichletCheck> {
    dirichlet_integral_check_with(band, u, t_scale, phi, 1e-6)
}

pub fn dirichlet_integral_check_with(
    band: &[f64],
    u: u32,
    t_scale: f64,
    phi: PhiParams,
    rel_tol: f64,
) -> Result<DirichletCheck> {
    if band.is_empty() {
        return Err(Error::Input("empty band".into()));
    }
    if u == 0 || u > 20 {
        return Err(Error::Input(format!("dyadic level must be in 1..=20, got {u}")));
    }
    if !(t_scale > 0.0 && phi.b > 0.0 && phi.c > 0.0) {
        return Err(Error::Input("T, b and c must be positive".into()));
    }
    let lo = band.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = band.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi > 8.0 * lo {
        return Err(Error::Precondition(format!("band values must lie in [B, 8B] with B > 0, got [{lo}, {hi}]")));
    }
    let (jl, jh) = JRange::Dyadic { u }.bounds();
    let logj: Vec<f64> = (jl..jh).map(|j| (j as f64).ln()).collect();
    let logz: Vec<f64> = band.iter().map(|z| z.ln()).collect();

    let mut count = 0u128;
    let mut spectral = Vec::with_capacity(logj.len() * logj.len() * band.len() * band.len());
    for (a, j1) in (jl..jh).enumerate() {
        for (b, j2) in (jl..jh).enumerate() {
            for (m, &zm) in band.iter().enumerate() {
                for (n, &zn) in band.iter().enumerate() {
                    if (j1 as f64 * zm - j2 as f64 * zn).abs() < 1.0 {
                        count += 1;
                    }
                    spectral.push(phi.transform(t_scale * (logj[a] + logz[m] - logj[b] - logz[n])));
                }
            }
        }
    }
    let spectral_sum = crate::scalar::compensated_sum(spectral);

    let modsq = |s: f64, logs: &[f64]| {
        let (mut re, mut im) = (0.0, 0.0);
        for &l in logs {
            let (si, co) = (s * l).sin_cos();
            re += co;
            im += si;
        }
        re * re + im * im
    };
    let integrand = |t: f64| modsq(t * t_scale, &logj) * modsq(t * t_scale, &logz) * phi.eval(t);
    let peak = (logj.len() * band.len()) as f64;
    // choose R so the discarded tails are at most 1% of the diagonal mass
    let cutoff = (2.0 * phi.c * peak * peak / (0.01 * peak)).max(8.0 / phi.b);
    let tail_bound = 2.0 * phi.c * peak * peak / cutoff;
    // fastest phase: T log(2^u / 2^(u-1) * 8) plus the kernel's own frequency
    let freq = t_scale * (16.0f64).ln() + 2.0 * phi.b;
    let panels = ((cutoff * freq / std::f64::consts::PI).ceil() as usize).clamp(16, 4_000_000);
    let cfg = QuadConfig { rel_tol, abs_tol: 1e-12, max_intervals: panels * 8 };
    let half = integrate_panels(integrand, 0.0, cutoff, panels, cfg).map_err(|e| match e {
        Error::Numerical(msg) => Error::Numerical(format!("dirichlet integral: {msg} (T={t_scale}, u={u}, R={cutoff})")),
        other => other,
    })?;
    let integral = 2.0 * half.value;
    Ok(DirichletCheck {
        integral,
        quad_error: 2.0 * half.error,
        intervals: half.intervals,
        cutoff,
        tail_bound,
        spectral_sum,
        count,
        holds: integral >= count as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_values_m4() {
        let r = theorem2_sum(&[0.0, 1.5], 4).unwrap();
        assert_eq!(r.count, 6);
        assert_eq!(theorem2_sum_oracle(&[0.0, 1.5], JRange::Full { m: 4 }, 1.0).unwrap().count, 6);
    }

    #[test]
    fn empty_j_range() {
        assert_eq!(theorem2_sum(&[0.0, 1.5, 4.0], 1).unwrap().count, 0);
    }

    #[test]
    fn capacity_error() {
        let cfg = DioConfig { threshold: 1.0, max_products: 10 };
        assert_eq!(theorem2_sum_with(&[0.0, 1.0, 2.0, 3.0], 8, cfg).unwrap_err().kind(), "capacity");
    }

    #[test]
    fn duplicates_handled() {
        let v = [0.0, 0.0, 0.3, 2.0];
        for m in [2, 3, 5] {
            let fast = theorem2_sum(&v, m).unwrap().count;
            let slow = theorem2_sum_oracle(&v, JRange::Full { m }, 1.0).unwrap().count;
            assert_eq!(fast, slow, "M={m}");
        }
    }

    #[test]
    fn convergents_sqrt2_and_phi() {
        let r = dirichlet_convergents(2f64.sqrt(), 12).unwrap();
        let pq: Vec<(i128, u64)> = r.convergents.iter().map(|c| (c.a, c.q)).collect();
        assert_eq!(pq, vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let pq: Vec<(i128, u64)> = dirichlet_convergents(phi, 5).unwrap().convergents.iter().map(|c| (c.a, c.q)).collect();
        assert_eq!(pq, vec![(1, 1), (2, 1), (3, 2), (5, 3), (8, 5)]);
        assert!(dirichlet_convergents(f64::NAN, 5).is_err());
    }

    #[test]
    fn negative_alpha_convergents() {
        let r = dirichlet_convergents(-0.75, 10).unwrap();
        assert_eq!((r.witness.a, r.witness.q), (-3, 4));
        assert_eq!(r.witness.error, 0.0);
    }

    #[test]
    fn kernel_transform_pair() {
        let phi = PhiParams::default();
        assert!((phi.transform(0.0) - 2.0).abs() < 1e-15);
        assert_eq!(phi.transform(4.0), 0.0);
        assert!((phi.transform(2.0) - 1.0).abs() < 1e-15);
        // Phi^(0) = int Phi
        let q = crate::quad::integrate_panels(|t| phi.eval(t), -400.0, 400.0, 800, QuadConfig::default()).unwrap();
        assert!((q.value - 2.0).abs() < 2.0 * phi.c / 400.0 + 1e-6, "{}", q.value);
    }

    #[test]
    fn single_multiplier_reduces_to_transform_sum() {
        let band = [10.0, 10.5, 13.0, 40.0];
        let t = 10.0;
        let r = dirichlet_integral_check(&band, 1, t, PhiParams::default()).unwrap();
        assert!(r.holds);
        let expect: f64 = band
            .iter()
            .flat_map(|a| band.iter().map(move |b| PhiParams::default().transform(t * (a / b).ln())))
            .sum();
        assert!((r.spectral_sum - expect).abs() < 1e-12);
        assert!((r.integral - expect).abs() <= r.tail_bound + 1e-4 * expect);
    }
}
