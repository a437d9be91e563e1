//! Sequence families as finite prefixes, plus spacing/growth validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dilation schedule for the coarse-scale family `x_n = n - 1/n^(1 - eta_k)`,
/// where `eta_k` is constant on the level `(4^(k-1), 4^k]` (level 1 also
/// holds `n = 1`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EtaSchedule {
    /// Explicit `(level, eta)` overrides; other levels use [`EtaSchedule::default_eta`].
    pub levels: Vec<(u32, f64)>,
}

impl EtaSchedule {
    pub fn constant_on(level: u32, eta: f64) -> Self {
        Self { levels: vec![(level, eta)] }
    }

    pub fn default_eta(level: u32) -> f64 {
        1.0 / (f64::from(level) + 3.0).log2()
    }

    pub fn eta(&self, level: u32) -> f64 {
        self.levels
            .iter()
            .rev()
            .find(|(k, _)| *k == level)
            .map(|(_, e)| *e)
            .unwrap_or_else(|| Self::default_eta(level))
    }

    /// Level `k >= 1` with `n` in `(4^(k-1), 4^k]`.
    pub fn level_of(n: usize) -> u32 {
        let mut k = 1u32;
        let mut top: u128 = 4;
        while (n as u128) > top {
            top *= 4;
            k += 1;
        }
        k
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `n^theta`.
    Power { theta: f64 },
    /// `floor(n^e)`.
    FloorPower { exponent: f64 },
    /// `a n^2 + b n + c`.
    Quadratic { a: f64, b: f64, c: f64 },
    /// `exp(m / (ln m)^theta)` with `m = n + floor(e^theta) + 1`, so the
    /// prefix is increasing from `n = 1`.
    Subexp { theta: f64 },
    /// `prod_{i <= n} r_i`; the last ratio repeats.
    GeometricGrowth { ratios: Vec<f64> },
    /// `n^(1/k)`.
    KthRoot { k: u32 },
    CoarseScale { schedule: EtaSchedule },
    /// Values read from a text file, one per line.
    Custom { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub family: Family,
    pub scale: f64,
}

impl SequenceSpec {
    pub fn new(family: Family) -> Self {
        Self { family, scale: 1.0 }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn power(theta: f64) -> Self {
        Self::new(Family::Power { theta })
    }

    pub fn floor_power(exponent: f64) -> Self {
        Self::new(Family::FloorPower { exponent })
    }

    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        Self::new(Family::Quadratic { a, b, c })
    }

    pub fn subexp(theta: f64) -> Self {
        Self::new(Family::Subexp { theta })
    }

    pub fn geometric(ratios: Vec<f64>) -> Self {
        Self::new(Family::GeometricGrowth { ratios })
    }

    pub fn kth_root(k: u32) -> Self {
        Self::new(Family::KthRoot { k })
    }

    pub fn coarse_scale(schedule: EtaSchedule) -> Self {
        Self::new(Family::CoarseScale { schedule })
    }

    pub fn custom(path: impl Into<PathBuf>) -> Self {
        Self::new(Family::Custom { path: path.into() })
    }

    /// Integer base `r` when the family is `x_n = r^n` exactly, which callers
    /// can exploit to compute `alpha * x_n mod 1` without overflow.
    pub fn integer_geometric_base(&self) -> Option<u32> {
        match &self.family {
            Family::GeometricGrowth { ratios } if ratios.len() == 1 => {
                let r = ratios[0];
                (r.fract() == 0.0 && (2.0..=f64::from(u32::MAX)).contains(&r)).then_some(r as u32)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Parameter(format!("scale must be positive, got {}", self.scale)));
        }
        match &self.family {
            Family::Power { theta } if !(theta.is_finite() && *theta > 0.0) => {
                Err(Error::Parameter(format!("power exponent must be > 0, got {theta}")))
            }
            Family::FloorPower { exponent } if !(exponent.is_finite() && *exponent >= 1.0) => Err(
                Error::Parameter(format!("floor_power exponent must be >= 1, got {exponent}")),
            ),
            Family::Quadratic { a, b, c } => {
                if *a == 0.0 {
                    Err(Error::Parameter("quadratic leading coefficient must be nonzero".into()))
                } else if ![a, b, c].iter().all(|v| v.is_finite()) {
                    Err(Error::Parameter("quadratic coefficients must be finite".into()))
                } else {
                    Ok(())
                }
            }
            Family::Subexp { theta } if !theta.is_finite() => {
                Err(Error::Parameter("subexp theta must be finite".into()))
            }
            Family::GeometricGrowth { ratios } => {
                if ratios.is_empty() {
                    Err(Error::Parameter("geometric ratio schedule is empty".into()))
                } else if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 1.0)) {
                    Err(Error::Parameter(format!("geometric ratios must exceed 1, got {r}")))
                } else {
                    Ok(())
                }
            }
            Family::KthRoot { k } if *k < 2 => {
                Err(Error::Parameter(format!("kth_root needs k >= 2, got {k}")))
            }
            Family::CoarseScale { schedule } => {
                match schedule.levels.iter().find(|(k, e)| *k == 0 || !(*e > 0.0 && *e < 1.0)) {
                    Some((k, e)) => Err(Error::Parameter(format!(
                        "coarse schedule entries need level >= 1 and 0 < eta < 1, got ({k}, {e})"
                    ))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Power { theta } => write!(f, "power:{theta}")?,
            Family::FloorPower { exponent } => write!(f, "floor_power:{exponent}")?,
            Family::Quadratic { a, b, c } => write!(f, "quadratic:{a},{b},{c}")?,
            Family::Subexp { theta } => write!(f, "subexp:{theta}")?,
            Family::GeometricGrowth { ratios } => {
                let r: Vec<String> = ratios.iter().map(|r| r.to_string()).collect();
                write!(f, "geometric:{}", r.join(","))?
            }
            Family::KthRoot { k } => write!(f, "kth_root:{k}")?,
            Family::CoarseScale { schedule } => {
                write!(f, "coarse")?;
                if !schedule.levels.is_empty() {
                    let r: Vec<String> =
                        schedule.levels.iter().map(|(k, e)| format!("{k}={e}")).collect();
                    write!(f, ":{}", r.join(","))?;
                }
            }
            Family::Custom { path } => write!(f, "file:{}", path.display())?,
        }
        if self.scale != 1.0 {
            write!(f, "@{}", self.scale)?;
        }
        Ok(())
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parameter(format!("bad number '{t}': {e}")))
        })
        .collect()
}

fn single(s: &str, what: &str) -> Result<f64> {
    let v = parse_list(s)?;
    match v.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::Parameter(format!("{what} takes exactly one parameter"))),
    }
}

/// Parses `family[:params][@scale]`, e.g. `power:2.5`,
/// `quadratic:1,1.4142,0`, `geometric:2`, `coarse:1=0.1`, `file:values.txt@2`.
impl FromStr for SequenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, scale) = match s.rsplit_once('@') {
            Some((b, sc)) if !s.starts_with("file:") || sc.parse::<f64>().is_ok() => (
                b,
                sc.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parameter(format!("bad scale '{sc}': {e}")))?,
            ),
            _ => (s, 1.0),
        };
        let (name, params) = match body.split_once(':') {
            Some((n, p)) => (n.trim(), p.trim()),
            None => (body.trim(), ""),
        };
        let family = match name {
            "linear" => Family::Power { theta: 1.0 },
            "power" => Family::Power { theta: single(params, "power")? },
            "floor_power" => Family::FloorPower { exponent: single(params, "floor_power")? },
            "quadratic" => match parse_list(params)?.as_slice() {
                [a, b, c] => Family::Quadratic { a: *a, b: *b, c: *c },
                _ => return Err(Error::Parameter("quadratic takes a,b,c".into())),
            },
            "subexp" => Family::Subexp { theta: single(params, "subexp")? },
            "geometric" => Family::GeometricGrowth { ratios: parse_list(params)? },
            "kth_root" => Family::KthRoot {
                k: params
                    .parse()
                    .map_err(|e| Error::Parameter(format!("bad kth_root k '{params}': {e}")))?,
            },
            "coarse" => {
                let mut levels = Vec::new();
                for item in params.split(',').filter(|t| !t.trim().is_empty()) {
                    let (k, e) = item.split_once('=').ok_or_else(|| {
                        Error::Parameter(format!("coarse entries are level=eta, got '{item}'"))
                    })?;
                    let k = k.trim().parse::<u32>().map_err(|e| Error::Parameter(e.to_string()))?;
                    let e = e.trim().parse::<f64>().map_err(|e| Error::Parameter(e.to_string()))?;
                    levels.push((k, e));
                }
                Family::CoarseScale { schedule: EtaSchedule { levels } }
            }
            "file" if !params.is_empty() => Family::Custom { path: PathBuf::from(params) },
            _ => return Err(Error::Parameter(format!("unknown sequence family '{name}'"))),
        };
        let spec = SequenceSpec { family, scale };
        spec.validate()?;
        Ok(spec)
    }
}

/// Reads a value file: UTF-8, one number per line, `#` starts a comment.
pub fn read_value_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_values(&text)
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let v: f64 = content
            .parse()
            .map_err(|e| Error::Input(format!("line {}: '{content}': {e}", lineno + 1)))?;
        if !v.is_finite() {
            return Err(Error::Input(format!("line {}: non-finite value", lineno + 1)));
        }
        out.push(v);
    }
    Ok(out)
}

/// Continued-fraction search for `num/den == x` with `den <= max_den`.
fn small_rational(x: f64, max_den: u64) -> Option<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..32 {
        let a = r.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if ((p1 as f64) / (q1 as f64) - x).abs() <= 4.0 * f64::EPSILON * x {
            return Some((p1, q1));
        }
        let f = r - a as f64;
        if f == 0.0 {
            break;
        }
        r = 1.0 / f;
    }
    None
}

/// `floor(n^e)`, deciding near-integer cases exactly when `e` is a rational
/// with small denominator (`n^e >= k  <=>  n^p >= k^q`).
fn floor_pow(n: u64, e: f64) -> f64 {
    let p = (n as f64).powf(e);
    let k = p.round();
    if (p - k).abs() > 1e-9 * p.max(1.0) {
        return p.floor();
    }
    match small_rational(e, 64) {
        Some((num, den)) => {
            let lhs = BigUint::from(n).pow(num as u32);
            let rhs = BigUint::from(k as u64).pow(den as u32);
            if lhs >= rhs {
                k
            } else {
                k - 1.0
            }
        }
        None => p.floor(),
    }
}

fn raw_values(spec: &SequenceSpec, n: usize) -> Result<Vec<f64>> {
    let idx = |i: usize| (i + 1) as f64;
    let mut out = Vec::with_capacity(n);
    match &spec.family {
        Family::Power { theta } => {
            let int_exp = theta.fract() == 0.0 && *theta <= 64.0;
            for i in 0..n {
                out.push(if int_exp { idx(i).powi(*theta as i32) } else { idx(i).powf(*theta) });
            }
        }
        Family::FloorPower { exponent } => {
            for i in 0..n {
                out.push(floor_pow((i + 1) as u64, *exponent));
            }
        }
        Family::Quadratic { a, b, c } => {
            for i in 0..n {
                let x = idx(i);
                out.push((a * x + b) * x + c);
            }
        }
        Family::Subexp { theta } => {
            let offset = theta.exp().floor() + 1.0;
            for i in 0..n {
                let m = idx(i) + offset;
                out.push((m / m.ln().powf(*theta)).exp());
            }
        }
        Family::GeometricGrowth { ratios } => {
            let mut x = 1.0;
            for i in 0..n {
                x *= ratios[i.min(ratios.len() - 1)];
                out.push(x);
            }
        }
        Family::KthRoot { k } => {
            for i in 0..n {
                out.push(Dd::from_scalar(idx(i)).root(*k).value());
            }
        }
        Family::CoarseScale { schedule } => {
            for i in 0..n {
                let eta = schedule.eta(EtaSchedule::level_of(i + 1));
                let x = idx(i);
                out.push(x - x.powf(-(1.0 - eta)));
            }
        }
        Family::Custom { path } => {
            let vals = read_value_file(path)?;
            if vals.len() < n {
                return Err(Error::Input(format!(
                    "{} holds {} values, {n} requested",
                    path.display(),
                    vals.len()
                )));
            }
            out.extend_from_slice(&vals[..n]);
        }
    }
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("{spec} overflows the floating range at n={}", i + 1)));
    }
    Ok(out)
}

/// First `n` terms `x_1..x_n` of the family, multiplied by `spec.scale`.
pub fn generate<T: Real>(spec: &SequenceSpec, n: usize) -> Result<Vec<T>> {
    if n == 0 {
        return Err(Error::Input("N must be at least 1".into()));
    }
    spec.validate()?;
    let raw = raw_values(spec, n)?;
    let out: Vec<T> = raw.iter().map(|&v| T::of(v * spec.scale)).collect();
    if let Some(i) = out.windows(2).position(|w| !(w[1] > w[0])) {
        let err = format!("{spec} is not strictly increasing at n={} (x_n={}, x_(n+1)={})", i + 1, out[i], out[i + 1]);
        return Err(match spec.family {
            Family::Custom { .. } => Error::Input(err),
            _ => Error::Parameter(err),
        });
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("{spec} overflows the scalar type")));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingMode {
    /// `x_(n+1) - x_n >= c`.
    UnitGap,
    /// `x_(n+1) - x_n >= c log(n) / n`.
    LogGap,
    /// `x_(n+1) > (1 + n^(-c)) x_n`; here `c` plays the role of the exponent.
    RelativeGrowth,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacingReport<T> {
    pub mode: SpacingMode,
    pub satisfied: bool,
    /// 1-based `n` of the first failing pair `(x_n, x_(n+1))`.
    pub first_violation: Option<usize>,
    /// Largest constant for which the inequality holds on the whole input
    /// (the exponent's coefficient for relative growth).
    pub witness_constant: T,
}

/// Checks the spacing hypothesis on every consecutive pair from `n = start`
/// on (1-based).
pub fn check_spacing_from<T: Real>(
    values: &[T],
    mode: SpacingMode,
    c: T,
    start: usize,
) -> Result<SpacingReport<T>> {
    if values.is_empty() {
        return Err(Error::Input("empty sequence".into()));
    }
    let start = start.max(1);
    let mut first_violation = None;
    let mut witness = T::infinity();
    for n in start..values.len() {
        let (x0, x1) = (values[n - 1], values[n]);
        let gap = x1 - x0;
        let nf = T::of_usize(n);
        let ok = match mode {
            SpacingMode::UnitGap => {
                witness = witness.min(gap);
                gap >= c
            }
            SpacingMode::LogGap => {
                let bound = c * nf.ln() / nf;
                if n >= 2 {
                    witness = witness.min(gap * nf / nf.ln());
                }
                gap >= bound
            }
            SpacingMode::RelativeGrowth => {
                let factor = nf.powf(-c);
                witness = witness.min((x1 / x0 - T::one()) / factor);
                x1 > (T::one() + factor) * x0
            }
        };
        if !ok && first_violation.is_none() {
            first_violation = Some(n);
        }
    }
    Ok(SpacingReport { mode, satisfied: first_violation.is_none(), first_violation, witness_constant: witness })
}

pub fn check_spacing<T: Real>(values: &[T], mode: SpacingMode, c: T) -> Result<SpacingReport<T>> {
    check_spacing_from(values, mode, c, 1)
}
