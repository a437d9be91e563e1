//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-14, max_intervals: 200_000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        k += w * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Segment { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// Integrates `f` over `[a, b]`, starting from `panels` equal sub-intervals.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    cfg: QuadConfig,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Input("quadrature bounds must be finite".into()));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap = BinaryHeap::with_capacity(panels * 2);
    let mut total = 0.0;
    let mut err = 0.0;
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { a + width * (i + 1) as f64 };
        let s = kronrod(&f, lo, hi);
        total += s.value;
        err += s.error;
        heap.push(s);
    }
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= target {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: value={total:e} error={err:e} target={target:e} intervals={}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Numerical(format!(
                "quadrature interval collapsed near {mid:e}: error={err:e}"
            )));
        }
        let l = kronrod(&f, worst.a, mid);
        let r = kronrod(&f, mid, worst.b);
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }
    // recompute in a fixed order to shed drift from incremental updates
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = crate::scalar::compensated_sum(segs.iter().map(|s| s.value));
    let error = segs.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error, intervals: segs.len() })
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<QuadResult> {
    integrate_panels(f, a, b, 1, cfg)
}
