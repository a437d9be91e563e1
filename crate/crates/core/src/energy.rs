//! Additive energy at a scale, difference sets, covering numbers and
//! difference histograms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, PowerFit};
use crate::scalar::Real;
use crate::sequences::{generate, SequenceSpec};

/// Default cap on `N` for the pair-sum path (`N(N+1)/2` stored sums).
pub const DEFAULT_MAX_N: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyAlgorithm {
    Oracle,
    PairSumFast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyResult<T> {
    pub n: usize,
    pub gamma: T,
    /// Ordered quadruples over `[1, N]^4`.
    pub count: u128,
    pub algorithm: EnergyAlgorithm,
}

fn check_inputs<T: Real>(values: &[T], gamma: T) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Input("additive energy needs N >= 1".into()));
    }
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::Input(format!("gamma must be positive, got {gamma}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("values must be finite".into()));
    }
    Ok(())
}

/// `#{(a,b,c,d) : |x_a + x_b - x_c - x_d| < gamma}` by the pair-sum path.
pub fn additive_energy<T: Real>(values: &[T], gamma: T) -> Result<EnergyResult<T>> {
    additive_energy_capped(values, gamma, DEFAULT_MAX_N)
}

pub fn additive_energy_capped<T: Real>(values: &[T], gamma: T, max_n: usize) -> Result<EnergyResult<T>> {
    check_inputs(values, gamma)?;
    let n = values.len();
    if n > max_n {
        return Err(Error::Capacity(format!("N={n} exceeds the pair-sum cap {max_n}")));
    }
    let int_limit = T::of(2f64.powi(T::MANTISSA_DIGITS as i32 - 2));
    let integral = values.iter().all(|v| v.fract() == T::zero() && v.abs() < int_limit);
    let count = if integral && gamma <= T::one() {
        integer_equal_sums(values)
    } else {
        window_count(values, gamma)
    };
    Ok(EnergyResult { n, gamma, count, algorithm: EnergyAlgorithm::PairSumFast })
}

/// Unordered index pairs `a <= b` with multiplicity 2 for `a < b`.
fn pair_sums<T: Real>(values: &[T]) -> Vec<(T, u8)> {
    let n = values.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        out.push((values[a] + values[a], 1));
        for b in (a + 1)..n {
            out.push((values[a] + values[b], 2));
        }
    }
    out
}

fn integer_equal_sums<T: Real>(values: &[T]) -> u128 {
    let ints: Vec<i64> = values.iter().map(|v| v.to_i64().expect("checked integral")).collect();
    let n = ints.len();
    let mut sums: Vec<(i64, u8)> = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        sums.push((2 * ints[a], 1));
        for b in (a + 1)..n {
            sums.push((ints[a] + ints[b], 2));
        }
    }
    sums.par_sort_unstable_by_key(|s| s.0);
    let mut total = 0u128;
    for run in sums.chunk_by(|x, y| x.0 == y.0) {
        // ordered representations of this sum
        let r: u128 = run.iter().map(|s| u128::from(s.1)).sum();
        total += r * r;
    }
    total
}

fn window_count<T: Real>(values: &[T], gamma: T) -> u128 {
    let mut sums = pair_sums(values);
    sums.par_sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite sums"));
    let mut prefix: Vec<u64> = Vec::with_capacity(sums.len() + 1);
    prefix.push(0);
    for (_, w) in &sums {
        prefix.push(prefix.last().unwrap() + u64::from(*w));
    }
    let len = sums.len();
    let chunk = 1 << 14;
    let cross: u128 = (0..len.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let stop = (start + chunk).min(len);
            let mut end = start + 1 + sums[start + 1..].partition_point(|s| s.0 - sums[start].0 < gamma);
            let mut acc = 0u128;
            for i in start..stop {
                end = end.max(i + 1);
                while end < len && sums[end].0 - sums[i].0 < gamma {
                    end += 1;
                }
                acc += u128::from(sums[i].1) * u128::from(prefix[end] - prefix[i + 1]);
            }
            acc
        })
        .sum();
    let diag: u128 = sums.iter().map(|(_, w)| u128::from(*w) * u128::from(*w)).sum();
    diag + 2 * cross
}

/// Quadruple enumeration; `O(N^4)`.
pub fn additive_energy_oracle<T: Real>(values: &[T], gamma: T) -> Result<EnergyResult<T>> {
    check_inputs(values, gamma)?;
    let mut count = 0u128;
    for &a in values {
        for &b in values {
            for &c in values {
                for &d in values {
                    if ((a + b) - (c + d)).abs() < gamma {
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(EnergyResult { n: values.len(), gamma, count, algorithm: EnergyAlgorithm::Oracle })
}

/// All `x_m - x_n` with `m != n`, ascending.
pub fn difference_multiset<T: Real>(values: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(values.len() * values.len().saturating_sub(1));
    for (m, &a) in values.iter().enumerate() {
        for (n, &b) in values.iter().enumerate() {
            if m != n {
                out.push(a - b);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite differences"));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverResult<T> {
    pub set_size: usize,
    pub gamma: T,
    pub cover_count: usize,
    pub centers: Vec<T>,
}

/// Minimal number of open balls of radius `gamma` covering `points`.
///
/// Greedy sweep: from the leftmost uncovered point `p`, one ball takes every
/// point `q` with `q - p < 2 gamma`, centred at their midpoint.
pub fn covering_number<T: Real>(points: &[T], gamma: T) -> Result<CoverResult<T>> {
    if !(gamma > T::zero()) {
        return Err(Error::Input(format!("gamma must be positive, got {gamma}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("points must be finite".into()));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let two = gamma + gamma;
    let half = T::of(0.5);
    let mut centers = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let p = sorted[i];
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] - p < two {
            j += 1;
        }
        loop {
            let q = sorted[j];
            let c = p + (q - p) * half;
            if (c - p).abs() < gamma && (q - c).abs() < gamma {
                centers.push(c);
                break;
            }
            j -= 1;
        }
        i = j + 1;
        while i < sorted.len() && (sorted[i] - *centers.last().unwrap()).abs() < gamma {
            i += 1;
        }
    }
    Ok(CoverResult { set_size: points.len(), gamma, cover_count: centers.len(), centers })
}

/// `(k, b_k)` with `b_k` the number of positive differences `x_n - x_m` in
/// `[k, k+1)`, over `m < n`.
pub fn difference_histogram<T: Real>(values: &[T]) -> Vec<(i64, u64)> {
    let mut keys: Vec<i64> = Vec::new();
    for (m, &a) in values.iter().enumerate() {
        for &b in &values[m + 1..] {
            let z = (b - a).abs();
            if z > T::zero() {
                keys.push(z.floor().to_i64().expect("finite difference"));
            }
        }
    }
    keys.sort_unstable();
    let mut out: Vec<(i64, u64)> = Vec::new();
    for k in keys {
        match out.last_mut() {
            Some((last, c)) if *last == k => *c += 1,
            _ => out.push((k, 1)),
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyFit {
    pub points: Vec<(usize, u128)>,
    pub fit: PowerFit,
}

/// Least-squares slope of `log E*` against `log N`.
pub fn energy_exponent_fit(spec: &SequenceSpec, n_list: &[usize], gamma: f64) -> Result<EnergyFit> {
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("energy fit needs at least 3 increasing N".into()));
    }
    let values: Vec<f64> = generate(spec, *n_list.last().unwrap())?;
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        points.push((n, additive_energy(&values[..n], gamma)?.count));
    }
    let rows: Vec<(f64, f64)> = points.iter().map(|&(n, c)| (n as f64, c as f64)).collect();
    Ok(EnergyFit { fit: fit_power_law(&rows)?, points })
}
