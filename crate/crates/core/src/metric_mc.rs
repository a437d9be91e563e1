//! Monte Carlo over the dilation `alpha`: expectations and variances of the
//! pair statistics, minimal-gap distributions, and the coarse-scale lemma.

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::diophantine::{dirichlet_convergents, dyadic_block_sum, Convergent};
use crate::error::{Error, Result};
use crate::gap_stats::min_circular_gap;
use crate::harmonic::{sample_fejer, selberg_polynomial, SelbergPolynomial, SelbergSign};
use crate::scalar::{compensated_sum, Real};
use crate::sequences::{check_spacing_from, generate, EtaSchedule, Family, SequenceSpec, SpacingMode};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    /// Density `sin^2(pi x) / (pi x)^2`.
    Fejer,
    /// Uniform on `[-c, c]`.
    UniformWindow { c: f64 },
}

impl Measure {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Measure::Fejer => sample_fejer(rng),
            Measure::UniformWindow { c } => c * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

/// How the window parameter `M` follows `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MRule {
    Fixed { m: u64 },
    /// `floor(N^exponent)`.
    Power { exponent: f64 },
    /// `floor(N^2 log(N)^(1 + eps))`.
    SquareLog { eps: f64 },
}

impl MRule {
    pub fn m_for(&self, n: usize) -> u64 {
        let nf = n as f64;
        let m = match *self {
            MRule::Fixed { m } => return m,
            MRule::Power { exponent } => nf.powf(exponent),
            MRule::SquareLog { eps } => nf * nf * nf.ln().powf(1.0 + eps),
        };
        (m.floor() as u64).max(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Indicator,
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McExperiment {
    pub spec: SequenceSpec,
    pub n_schedule: Vec<usize>,
    pub m_rule: MRule,
    pub samples: usize,
    pub seed: u64,
    pub measure: Measure,
    /// Spacing hypothesis the claim depends on; checked before sampling.
    pub hypothesis: Option<(SpacingMode, f64)>,
    pub keep_records: bool,
}

impl McExperiment {
    pub fn new(spec: SequenceSpec) -> Self {
        Self {
            spec,
            n_schedule: (6..=10).map(|k| 1usize << k).collect(),
            m_rule: MRule::SquareLog { eps: 0.5 },
            samples: 1000,
            seed: 0,
            measure: Measure::Fejer,
            hypothesis: None,
            keep_records: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_schedule.is_empty() || self.n_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("N schedule must be non-empty and increasing".into()));
        }
        if self.n_schedule[0] < 2 {
            return Err(Error::Parameter("N schedule entries must be at least 2".into()));
        }
        if self.samples < 2 {
            return Err(Error::Parameter("need at least 2 samples".into()));
        }
        if let Measure::UniformWindow { c } = self.measure {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Parameter(format!("uniform window half-width must be positive, got {c}")));
            }
        }
        self.spec.validate()
    }

    fn n_max(&self) -> usize {
        *self.n_schedule.last().expect("validated")
    }

    fn check_hypothesis(&self, values: &[f64]) -> Result<()> {
        if let Some((mode, c)) = self.hypothesis {
            let report = check_spacing_from(values, mode, c, 1)?;
            if !report.satisfied {
                return Err(Error::Precondition(format!(
                    "{} fails the {mode:?} hypothesis with c={c} at n={}",
                    self.spec,
                    report.first_violation.unwrap_or(0)
                )));
            }
        }
        Ok(())
    }

    /// The generator for sample `i`: one ChaCha stream per sample, so results
    /// do not depend on how samples are scheduled.
    pub fn stream(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng
    }
}

/// Per-sample output line.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub alpha: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// `N^2 delta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaled_gap: Option<f64>,
    /// `log(1/delta) / log N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct NSummary {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exceptional_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exceptional_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_kind: Option<String>,
    /// `(mean - reference) / stderr`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    /// Sum of the dyadic block counts, as a decimal string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyadic_sum: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_ratio: Option<f64>,
    /// Fraction of samples with `X^- <= 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonpositive_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSummary {
    pub experiment: String,
    pub spec: String,
    pub seed: u64,
    pub samples: usize,
    pub measure: Measure,
    pub per_n: Vec<NSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<SampleRecord>,
}

/// Mean, unbiased variance and standard error, summed in index order.
pub fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, var, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Fractional parts of the dilated sequence. Quadratic and integer-geometric
/// families are evaluated exactly enough that the result reflects the real
/// sequence rather than the rounding of its `f64` values.
#[derive(Clone, Debug)]
enum FracSource {
    Values(Vec<f64>),
    Quadratic(Vec<Dd<f64>>),
    /// `x_n = r^n`; `alpha` is completed to `bits` binary digits from the
    /// sample's stream and `frac(alpha r^n)` is computed in integers.
    Geometric { base: u32, bits: u64, n: usize },
}

impl FracSource {
    fn build(spec: &SequenceSpec, n: usize) -> Result<Self> {
        if let (Some(base), true) = (spec.integer_geometric_base(), spec.scale == 1.0) {
            let bits = (n as f64 * f64::from(base).log2()).ceil() as u64 + 192;
            return Ok(FracSource::Geometric { base, bits, n });
        }
        if let Family::Quadratic { a, b, c } = spec.family {
            // validates monotonicity through the plain generator first
            generate::<f64>(spec, n)?;
            let x = (1..=n)
                .map(|i| {
                    let f = i as f64;
                    (Dd::product(a, f * f) + Dd::product(b, f) + Dd::from_scalar(c)).scale(spec.scale)
                })
                .collect();
            return Ok(FracSource::Quadratic(x));
        }
        Ok(FracSource::Values(generate(spec, n)?))
    }

    fn values(&self, spec: &SequenceSpec) -> Result<Vec<f64>> {
        match self {
            FracSource::Values(v) => Ok(v.clone()),
            FracSource::Quadratic(x) => Ok(x.iter().map(|d| d.value()).collect()),
            FracSource::Geometric { n, base, .. } => {
                // spacing checks only need ratios; stop before f64 overflow
                let cap = (1000.0 / f64::from(*base).log2()) as usize;
                generate(spec, (*n).min(cap))
            }
        }
    }

    fn fracs<R: RngCore>(&self, alpha: f64, rng: &mut R) -> Vec<Dd<f64>> {
        match self {
            FracSource::Values(v) => v.iter().map(|&x| Dd::product(alpha, x).frac()).collect(),
            FracSource::Quadratic(x) => {
                let a = Dd::from_scalar(alpha);
                x.iter().map(|&d| (a * d).frac()).collect()
            }
            FracSource::Geometric { base, bits, n } => geometric_fracs(alpha, *base, *bits, *n, rng),
        }
    }
}

/// `frac(alpha r^k)` for `k = 1..=n` with `alpha` completed to `bits` digits.
/// Only `frac(|alpha|)` matters: the integer part contributes integers and
/// `||-y|| = ||y||`.
fn geometric_fracs<R: RngCore>(alpha: f64, base: u32, bits: u64, n: usize, rng: &mut R) -> Vec<Dd<f64>> {
    let f = alpha.abs().fract();
    // f = mant / 2^52 .. exactly, since |alpha| < 2^53 for these draws
    let top = (f * 2f64.powi(64)) as u64;
    let mut a = BigUint::from(top) << (bits - 64) as usize;
    let words = ((bits - 64) / 32) as usize;
    let mut low = BigUint::from(0u32);
    for _ in 0..words {
        low = (low << 32usize) | BigUint::from(rng.next_u32());
    }
    a += low;
    let modulus_mask = (BigUint::from(1u32) << bits as usize) - 1u32;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        a = (a * base) & &modulus_mask;
        let head = (&a >> (bits - 106) as usize).to_u64_digits();
        let h = u128::from(head.first().copied().unwrap_or(0)) | (u128::from(head.get(1).copied().unwrap_or(0)) << 64);
        let hi = (h >> 53) as f64 * 2f64.powi(-53);
        let lo = (h & ((1u128 << 53) - 1)) as f64 * 2f64.powi(-106);
        out.push(Dd::new(hi, lo));
    }
    out
}

/// Ordered pairs `m != n` with `||a_m - a_n|| <= 1/M` from fractional parts.
fn indicator_count(fracs: &[Dd<f64>], m: u64) -> u64 {
    let n = fracs.len();
    if n < 2 {
        return 0;
    }
    if m <= 2 {
        return (n * (n - 1)) as u64;
    }
    let w = Dd::from_scalar(1.0) / Dd::from_scalar(m as f64);
    let mut s = fracs.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let one = Dd::from_scalar(1.0);
    let ext = |k: usize| if k < n { s[k] } else { s[k - n] + one };
    let mut count = 0u64;
    let mut end = 1;
    for i in 0..n {
        end = end.max(i + 1);
        while end < i + n && ext(end) - s[i] <= w {
            end += 1;
        }
        count += (end - i - 1) as u64;
    }
    2 * count
}

/// `sum_{m != n} f(alpha (x_m - x_n)) = sum_j c_j (|S_j|^2 - N)` with
/// `S_j = sum_n e(j alpha x_n)`; returns the value and a rounding bound.
fn smoothed_count(fracs: &[Dd<f64>], poly: &SelbergPolynomial<f64>) -> (f64, f64) {
    let n = fracs.len();
    let nf = n as f64;
    let base: Vec<(f64, f64)> = fracs
        .iter()
        .map(|f| {
            let (s, c) = (std::f64::consts::TAU * f.value()).sin_cos();
            (c, s)
        })
        .collect();
    let mut pw = base.clone();
    let mut terms = Vec::with_capacity(poly.m);
    terms.push(poly.coeffs[0] * (nf * nf - nf));
    let mut bound = 0.0;
    for (j, &c) in poly.coeffs.iter().enumerate().skip(1) {
        let (mut re, mut im) = (0.0, 0.0);
        for p in &pw {
            re += p.0;
            im += p.1;
        }
        terms.push(2.0 * c * (re * re + im * im - nf));
        bound += 2.0 * c.abs() * nf * nf * (j as f64 * 8.0 + 4.0) * f64::EPSILON;
        if j + 1 < poly.m {
            for (p, b) in pw.iter_mut().zip(&base) {
                *p = (p.0 * b.0 - p.1 * b.1, p.0 * b.1 + p.1 * b.0);
            }
        }
    }
    (compensated_sum(terms), bound)
}

/// `X_{N,M}(alpha)` (integer count) or its Selberg-smoothed versions.
pub fn x_statistic<T: Real>(values: &[T], alpha: T, m: u64, kind: StatKind) -> Result<f64> {
    if m < 2 {
        return Err(Error::Input(format!("M must be at least 2, got {m}")));
    }
    if values.iter().any(|v| !v.is_finite()) || !alpha.is_finite() {
        return Err(Error::Input("values and alpha must be finite".into()));
    }
    let fracs: Vec<Dd<f64>> = values
        .iter()
        .map(|&x| Dd::product(alpha.to_f64_lossy(), x.to_f64_lossy()).frac())
        .collect();
    Ok(match kind {
        StatKind::Indicator => indicator_count(&fracs, m) as f64,
        StatKind::Plus | StatKind::Minus => {
            let sign = if kind == StatKind::Plus { SelbergSign::Plus } else { SelbergSign::Minus };
            let poly = selberg_polynomial::<f64>(m as usize, sign)?;
            smoothed_count(&fracs, &poly).0
        }
    })
}

struct Triple {
    x: u64,
    minus: f64,
    plus: f64,
    delta: f64,
}

fn triple(fracs: &[Dd<f64>], m: u64, minus: &SelbergPolynomial<f64>, plus: &SelbergPolynomial<f64>) -> Result<Triple> {
    let x = indicator_count(fracs, m);
    let (xm, em) = smoothed_count(fracs, minus);
    let (xp, ep) = smoothed_count(fracs, plus);
    let xf = x as f64;
    if xm > xf + em || xf > xp + ep {
        return Err(Error::Numerical(format!("sandwich violated: X-={xm} X={x} X+={xp}")));
    }
    let delta = min_circular_gap(fracs).map(|g| g.0.value()).unwrap_or(f64::NAN);
    if (x > 0) != (delta <= 1.0 / m as f64) {
        return Err(Error::Numerical(format!("X={x} disagrees with delta={delta} at M={m}")));
    }
    Ok(Triple { x, minus: xm, plus: xp, delta })
}

struct PerSample {
    alpha: f64,
    rows: Vec<Triple>,
}

fn run_triples(exp: &McExperiment, source: &FracSource) -> Result<Vec<PerSample>> {
    let polys: Vec<(u64, SelbergPolynomial<f64>, SelbergPolynomial<f64>)> = exp
        .n_schedule
        .iter()
        .map(|&n| {
            let m = exp.m_rule.m_for(n);
            Ok((m, selberg_polynomial(m as usize, SelbergSign::Minus)?, selberg_polynomial(m as usize, SelbergSign::Plus)?))
        })
        .collect::<Result<_>>()?;
    (0..exp.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = exp.stream(i);
            let alpha = exp.measure.sample(&mut rng);
            let fracs = source.fracs(alpha, &mut rng);
            let rows = exp
                .n_schedule
                .iter()
                .zip(&polys)
                .map(|(&n, (m, lo, hi))| triple(&fracs[..n], *m, lo, hi))
                .collect::<Result<Vec<_>>>()?;
            Ok(PerSample { alpha, rows })
        })
        .collect()
}

/// Monte Carlo estimate of `E[X^kind_{N,M}]`. Under unit spacing the smoothed
/// expectations are exactly `c_0 N (N - 1)`, which is reported as the
/// reference; otherwise only the `N^2 / M` order is given.
pub fn expectation_mc(exp: &McExperiment, kind: StatKind) -> Result<McSummary> {
    exp.validate()?;
    let source = FracSource::build(&exp.spec, exp.n_max())?;
    let values = source.values(&exp.spec)?;
    exp.check_hypothesis(&values)?;
    let unit = check_spacing_from(&values, SpacingMode::UnitGap, 1.0, 1)?.satisfied;
    let samples = run_triples(exp, &source)?;
    let mut per_n = Vec::new();
    let mut records = Vec::new();
    for (k, &n) in exp.n_schedule.iter().enumerate() {
        let m = exp.m_rule.m_for(n);
        let xs: Vec<f64> = samples
            .iter()
            .map(|s| match kind {
                StatKind::Indicator => s.rows[k].x as f64,
                StatKind::Minus => s.rows[k].minus,
                StatKind::Plus => s.rows[k].plus,
            })
            .collect();
        let (mean, variance, stderr) = moments(&xs);
        let pairs = (n * (n - 1)) as f64;
        let (reference, reference_kind) = match (kind, unit) {
            (StatKind::Minus, true) => (Some(pairs * 1.0 / m as f64), "exact"),
            (StatKind::Plus, true) => (Some(pairs * selberg_polynomial::<f64>(m as usize, SelbergSign::Plus)?.coeffs[0]), "exact"),
            _ => (Some((n * n) as f64 / m as f64), "order"),
        };
        let z_score = (reference_kind == "exact").then(|| (mean - reference.unwrap()) / stderr);
        let nonpos = samples.iter().filter(|s| s.rows[k].minus <= 0.0).count() as f64 / exp.samples as f64;
        per_n.push(NSummary {
            n,
            m: Some(m),
            mean,
            variance,
            stderr,
            reference,
            reference_kind: Some(reference_kind.into()),
            z_score,
            nonpositive_fraction: Some(nonpos),
            ..Default::default()
        });
        if exp.keep_records {
            for (i, s) in samples.iter().enumerate() {
                let r = &s.rows[k];
                records.push(SampleRecord {
                    sample: i,
                    alpha: s.alpha,
                    n,
                    m: Some(m),
                    x: Some(r.x),
                    x_minus: Some(r.minus),
                    x_plus: Some(r.plus),
                    delta: Some(r.delta),
                    ..Default::default()
                });
            }
        }
    }
    Ok(McSummary {
        experiment: format!("expectation_{kind:?}").to_lowercase(),
        spec: exp.spec.to_string(),
        seed: exp.seed,
        samples: exp.samples,
        measure: exp.measure,
        per_n,
        records,
    })
}

/// Monte Carlo variance of `X^-` against `(log N / M^2) sum_u B_u`, where
/// `B_u` is the dyadic block count for `u = 1..=ceil(log2 M)`.
pub fn variance_mc(exp: &McExperiment) -> Result<McSummary> {
    let mut summary = expectation_mc(exp, StatKind::Minus)?;
    let source = FracSource::build(&exp.spec, exp.n_max())?;
    let values = source.values(&exp.spec)?;
    for row in &mut summary.per_n {
        let m = row.m.expect("set by expectation_mc");
        let levels = 64 - (m - 1).leading_zeros();
        let mut total = 0u128;
        for u in 1..=levels {
            total += dyadic_block_sum(&values[..row.n], u)?.count;
        }
        let scale = (row.n as f64).ln() / (m as f64 * m as f64);
        row.dyadic_sum = Some(total.to_string());
        row.variance_ratio = Some(row.variance / (scale * total as f64));
    }
    summary.experiment = "variance".into();
    Ok(summary)
}

/// Distribution of `N^2 delta_min` under the measure, with the fraction of
/// samples below `1/(N^2 log(N)^(1+eps))` and the median of
/// `log(1/delta) / log N`.
pub fn min_gap_distribution(exp: &McExperiment, eps: f64) -> Result<McSummary> {
    exp.validate()?;
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    let source = FracSource::build(&exp.spec, exp.n_max())?;
    let values = source.values(&exp.spec)?;
    exp.check_hypothesis(&values)?;
    let rows: Vec<(f64, Vec<f64>)> = (0..exp.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = exp.stream(i);
            let alpha = exp.measure.sample(&mut rng);
            let fracs = source.fracs(alpha, &mut rng);
            let deltas = exp
                .n_schedule
                .iter()
                .map(|&n| min_circular_gap(&fracs[..n]).map(|g| g.0.value()).unwrap_or(f64::NAN))
                .collect();
            (alpha, deltas)
        })
        .collect();
    let mut per_n = Vec::new();
    let mut records = Vec::new();
    for (k, &n) in exp.n_schedule.iter().enumerate() {
        let nf = n as f64;
        let threshold = 1.0 / (nf * nf * nf.ln().powf(1.0 + eps));
        let scaled: Vec<f64> = rows.iter().map(|r| nf * nf * r.1[k]).collect();
        let ratios: Vec<f64> = rows.iter().map(|r| (1.0 / r.1[k]).ln() / nf.ln()).collect();
        let (mean, variance, stderr) = moments(&scaled);
        let p = rows.iter().filter(|r| r.1[k] <= threshold).count() as f64 / exp.samples as f64;
        per_n.push(NSummary {
            n,
            mean,
            variance,
            stderr,
            median: Some(median(&ratios)),
            exceptional_fraction: Some(p),
            exceptional_stderr: Some((p * (1.0 - p) / exp.samples as f64).sqrt()),
            reference: Some(threshold),
            reference_kind: Some("threshold".into()),
            ..Default::default()
        });
        if exp.keep_records {
            for (i, r) in rows.iter().enumerate() {
                records.push(SampleRecord {
                    sample: i,
                    alpha: r.0,
                    n,
                    delta: Some(r.1[k]),
                    scaled_gap: Some(scaled[i]),
                    log_ratio: Some(ratios[i]),
                    ..Default::default()
                });
            }
        }
    }
    Ok(McSummary {
        experiment: "min_gap_distribution".into(),
        spec: exp.spec.to_string(),
        seed: exp.seed,
        samples: exp.samples,
        measure: exp.measure,
        per_n,
        records,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseRecord {
    pub alpha: f64,
    pub witness: Convergent,
    /// `|alpha - a/q| <= 3/(qN)` with `q < N/3`.
    pub dirichlet_condition: bool,
    /// `|alpha - a/q| >= 9 / (2 q^(1 + 1/(1-eta)))`.
    pub lower_condition: bool,
    /// `min ||alpha (x_n - x_m)||` over `N/4 < m != n <= N`.
    pub min_value: f64,
    /// `8 (|alpha| + 1) / N^(2 - eta)`.
    pub bound: f64,
    pub verdict: Verdict,
}

fn is_power_of_four(n: usize) -> bool {
    n.is_power_of_two() && n.trailing_zeros() % 2 == 0
}

/// The coarse-scale lemma for one `alpha` on `x_n = n - 1/n^(1-eta)`.
pub fn coarse_scale_experiment(n: usize, eta: f64, alpha: f64) -> Result<CoarseRecord> {
    if !(eta > 0.0 && eta <= 0.1) {
        return Err(Error::Input(format!("eta must lie in (0, 0.1], got {eta}")));
    }
    if n < 16 || !is_power_of_four(n) {
        return Err(Error::Input(format!("N must be a power of 4 and at least 16, got {n}")));
    }
    if !alpha.is_finite() {
        return Err(Error::Input("alpha must be finite".into()));
    }
    let nf = n as f64;
    let approx = dirichlet_convergents(alpha, (n / 3) as u64)?;
    let w = approx.witness.clone();
    let qf = w.q as f64;
    let dirichlet_condition = (w.q as f64) < nf / 3.0 && w.error <= 3.0 / (qf * nf);
    let lower_condition = w.error >= 9.0 / (2.0 * qf.powf(1.0 + 1.0 / (1.0 - eta)));
    let level = EtaSchedule::level_of(n);
    let spec = SequenceSpec::coarse_scale(EtaSchedule::constant_on(level, eta));
    let values: Vec<f64> = generate(&spec, n)?;
    let tail = &values[n / 4..];
    let fracs: Vec<Dd<f64>> = tail.iter().map(|&x| Dd::product(alpha, x).frac()).collect();
    let min_value = min_circular_gap(&fracs).expect("N/4 < n <= N holds many points").0.value();
    let bound = 8.0 * (alpha.abs() + 1.0) / nf.powf(2.0 - eta);
    let verdict = if !(dirichlet_condition && lower_condition) {
        Verdict::NotApplicable
    } else if min_value <= bound {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    };
    Ok(CoarseRecord { alpha, witness: w, dirichlet_condition, lower_condition, min_value, bound, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseSummary {
    pub n: usize,
    pub eta: f64,
    pub c: f64,
    pub samples: usize,
    pub seed: u64,
    pub applicable: usize,
    pub satisfied: usize,
    pub violated: usize,
    /// Draws of any verdict whose minimum is within the bound.
    pub within_bound: usize,
    /// `(2/eta)^(4/eta)`.
    pub small_q_threshold: f64,
    /// Lebesgue measure in `[-C, C]` of draws whose witness has `q` below the threshold.
    pub small_q_measure: f64,
    pub small_q_stderr: f64,
    /// `4 C (2/eta)^(4/eta) / N`.
    pub small_q_bound: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<CoarseRecord>,
}

/// [`coarse_scale_experiment`] over `samples` uniform draws from `[-c, c]`.
pub fn coarse_scale_batch(n: usize, eta: f64, c: f64, samples: usize, seed: u64, keep_records: bool) -> Result<CoarseSummary> {
    if samples < 2 || !(c > 0.0) {
        return Err(Error::Parameter("need samples >= 2 and C > 0".into()));
    }
    let measure = Measure::UniformWindow { c };
    let records: Vec<CoarseRecord> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            coarse_scale_experiment(n, eta, measure.sample(&mut rng))
        })
        .collect::<Result<_>>()?;
    let threshold = (2.0 / eta).powf(4.0 / eta);
    let small: Vec<f64> = records.iter().map(|r| if (r.witness.q as f64) < threshold { 1.0 } else { 0.0 }).collect();
    let (p, _, se) = moments(&small);
    let count = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
    Ok(CoarseSummary {
        n,
        eta,
        c,
        samples,
        seed,
        applicable: records.len() - count(Verdict::NotApplicable),
        satisfied: count(Verdict::Satisfied),
        violated: count(Verdict::Violated),
        within_bound: records.iter().filter(|r| r.min_value <= r.bound).count(),
        small_q_threshold: threshold,
        small_q_measure: 2.0 * c * p,
        small_q_stderr: 2.0 * c * se,
        small_q_bound: 4.0 * c * threshold / n as f64,
        records: if keep_records { records } else { Vec::new() },
    })
}

/// Whether `|alpha - a/q| >= 9 / (2 q^2 log(q)^2)` for every convergent with
/// `q_lo <= q <= q_hi`.
pub fn khinchin_filter(alpha: f64, q_lo: u64, q_hi: u64) -> Result<bool> {
    if q_lo < 2 || q_hi < q_lo {
        return Err(Error::Input(format!("need 2 <= q_lo <= q_hi, got [{q_lo}, {q_hi}]")));
    }
    let approx = dirichlet_convergents(alpha, q_hi)?;
    Ok(approx.convergents.iter().filter(|c| c.q >= q_lo).all(|c| {
        let q = c.q as f64;
        c.error >= 9.0 / (2.0 * q * q * q.ln().powi(2))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dilation_counts_every_pair() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(x_statistic(&v, 0.0, 8, StatKind::Indicator).unwrap(), 90.0);
    }

    #[test]
    fn three_points_half() {
        assert_eq!(x_statistic(&[1.0, 2.0, 3.0], 0.5, 3, StatKind::Indicator).unwrap(), 2.0);
    }

    #[test]
    fn m_rules() {
        assert_eq!(MRule::Fixed { m: 7 }.m_for(100), 7);
        assert_eq!(MRule::Power { exponent: 1.5 }.m_for(100), 1000);
    }

    #[test]
    fn rational_alpha_fails_khinchin() {
        assert!(!khinchin_filter(0.375, 2, 1000).unwrap());
        assert!(khinchin_filter(2f64.sqrt(), 70, 10_000_000).unwrap());
    }

    #[test]
    fn small_q_not_applicable() {
        let r = coarse_scale_experiment(4096, 0.1, 0.5 + 1e-9).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(coarse_scale_experiment(4096, 0.2, 0.3).is_err());
        assert!(coarse_scale_experiment(1000, 0.1, 0.3).is_err());
    }

    #[test]
    fn geometric_fracs_match_doubles_for_short_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let alpha = 0.318_309_886_183_790_7;
        let f = geometric_fracs(alpha, 2, 400, 20, &mut rng);
        for (k, d) in f.iter().enumerate() {
            let direct = Dd::product(alpha, 2f64.powi(k as i32 + 1)).frac();
            assert!((d.value() - direct.value()).abs() < 1e-15 * 2f64.powi(k as i32 + 1).max(1.0) + 1e-9, "k={k}");
        }
    }
}
