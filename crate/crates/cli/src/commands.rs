//! Subcommand implementations.

use std::path::PathBuf;

use gapkit_core::diophantine::{
    admissible_pair_count, band_differences, dirichlet_convergents, dirichlet_integral_check, dyadic_block_sum,
    stratified_estimate, theorem2_sum, JRange, PhiParams,
};
use gapkit_core::energy::{additive_energy, additive_energy_oracle, covering_number, difference_multiset};
use gapkit_core::fit::fit_power_law;
use gapkit_core::gap_stats::{kth_root_construction, kth_root_min_gap, min_gap, sqrt_min_gap, three_term_sqrt_min};
use gapkit_core::harmonic::{selberg_polynomial, SelbergSign};
use gapkit_core::metric_mc::{
    coarse_scale_batch, coarse_scale_experiment, expectation_mc, min_gap_distribution, variance_mc, McExperiment,
    McSummary, Measure, MRule, StatKind,
};
use gapkit_core::sequences::{check_spacing, generate};
use gapkit_core::{Family, SequenceSpec, SpacingMode};
use serde_json::json;

use crate::config::{Config, List, Params};
use crate::report::{digest_file, InputDigest, Manifest, Sink};
use crate::{Cli, CliError, Command, McArgs, McCommand};

/// Config keys are shared across subcommands, so any flag name is accepted.
fn known_keys() -> Vec<String> {
    fn walk(cmd: &clap::Command, out: &mut Vec<String>) {
        out.extend(cmd.get_arguments().filter_map(|a| a.get_long()).map(|l| l.replace('-', "_")));
        cmd.get_subcommands().for_each(|c| walk(c, out));
    }
    let mut out = Vec::new();
    walk(&<Cli as clap::CommandFactory>::command(), &mut out);
    out
}

struct Ctx<'a> {
    params: Params<'a>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    threads: usize,
    inputs: Vec<InputDigest>,
}

impl<'a> Ctx<'a> {
    fn spec(&mut self, flag: Option<String>) -> Result<SequenceSpec, CliError> {
        let text: String = self.params.require("spec", flag)?;
        let spec: SequenceSpec = text.parse()?;
        spec.validate()?;
        if let Family::Custom { path } = &spec.family {
            self.inputs.push(digest_file(path)?);
        }
        Ok(spec)
    }

    /// Writes the header once every parameter is resolved.
    fn start(&mut self, command: &str, seed: Option<u64>) -> Result<Sink, CliError> {
        let known = known_keys();
        self.params.check_unused(&known.iter().map(String::as_str).collect::<Vec<_>>())?;
        let manifest = Manifest {
            tool: "gapkit",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            params: self.params.used.clone(),
            seed,
            threads: self.threads,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            inputs: self.inputs.clone(),
        };
        let mut sink = Sink::open(self.out.as_deref(), self.csv.as_deref())?;
        sink.header(&manifest)?;
        Ok(sink)
    }
}

fn resolve_threads(flag: Option<usize>, config: &Config) -> Result<Option<usize>, CliError> {
    let text = match flag {
        Some(t) => Some(t.to_string()),
        None => config.get("threads").map(str::to_string).or_else(|| std::env::var("GAPKIT_THREADS").ok()),
    };
    match text {
        None => Ok(None),
        Some(t) => match t.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::usage(format!("threads must be a positive integer, got {t:?}"))),
        },
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let threads = resolve_threads(cli.threads, &config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))?;
    let ctx = Ctx {
        params: Params::new(&config),
        out: cli.out.or_else(|| config.get("out").map(PathBuf::from)),
        csv: cli.csv.or_else(|| config.get("csv").map(PathBuf::from)),
        threads: pool.current_num_threads(),
        inputs: Vec::new(),
    };
    pool.install(|| dispatch(cli.command, ctx))
}

fn dispatch(command: Command, mut ctx: Ctx) -> Result<(), CliError> {
    match command {
        Command::Gen(a) => gen(&mut ctx, a.spec, a.n),
        Command::Gaps(a) => gaps(&mut ctx, a),
        Command::Sqrt(a) => sqrt(&mut ctx, a),
        Command::Energy(a) => energy(&mut ctx, a),
        Command::Dioph(a) => dioph(&mut ctx, a),
        Command::Selberg(a) => selberg(&mut ctx, a),
        Command::Mc(m) => mc(&mut ctx, m),
        Command::Coarse(a) => coarse(&mut ctx, a),
        Command::Fit(a) => fit(&mut ctx, a.input),
    }
}

fn fmt_list<T: ToString>(v: &[T]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn gen(ctx: &mut Ctx, spec: Option<String>, n: Option<usize>) -> Result<(), CliError> {
    let spec = ctx.spec(spec)?;
    let n: usize = ctx.params.require("n", n)?;
    let mut sink = ctx.start("gen", None)?;
    let values: Vec<f64> = generate(&spec, n)?;
    for (i, x) in values.iter().enumerate() {
        println!("{}\t{x}", i + 1);
        sink.record("value", &json!({ "n": i + 1, "x": x }))?;
        sink.row(&["n", "x"], &fmt_list(&[(i + 1) as f64, *x]))?;
    }
    sink.finish()
}

fn parse_mode(s: &str) -> Result<SpacingMode, CliError> {
    match s {
        "unit" | "unit_gap" => Ok(SpacingMode::UnitGap),
        "log" | "log_gap" => Ok(SpacingMode::LogGap),
        "relative" | "relative_growth" => Ok(SpacingMode::RelativeGrowth),
        _ => Err(CliError::usage(format!("unknown spacing mode {s:?}; use unit, log or relative"))),
    }
}

fn gaps(ctx: &mut Ctx, a: crate::GapsArgs) -> Result<(), CliError> {
    let spec = ctx.spec(a.spec)?;
    let ns: List<usize> = ctx.params.require("n", a.n)?;
    let alpha = ctx.params.get("alpha", a.alpha, 1.0)?;
    let spacing: Option<String> = ctx.params.opt("spacing", a.spacing)?;
    let mode = spacing.as_deref().map(parse_mode).transpose()?;
    let c = if mode.is_some() { ctx.params.get("spacing_c", a.spacing_c, 1.0)? } else { 1.0 };
    let mut sink = ctx.start("gaps", None)?;
    let n_max = ns.0.iter().copied().max().unwrap_or(0);
    let values: Vec<f64> = generate(&spec, n_max)?;
    if let Some(mode) = mode {
        let r = check_spacing(&values, mode, c)?;
        println!("spacing {mode:?} c={c}: satisfied={} first_violation={:?}", r.satisfied, r.first_violation);
        sink.record("spacing", &r)?;
    }
    println!("{:>10} {:>24} {:>8} {:>8} {:>14}", "N", "delta", "m", "n", "N^2*delta");
    for &n in &ns.0 {
        let r = min_gap(&values[..n], alpha)?;
        let scaled = (n as f64).powi(2) * r.delta;
        println!("{n:>10} {:>24.17e} {:>8} {:>8} {scaled:>14.6}", r.delta, r.witness_m, r.witness_n);
        sink.record("gap", &json!({ "result": r, "alpha": alpha, "scaled": scaled }))?;
        sink.row(&["n", "delta", "witness_m", "witness_n", "scaled"], &[
            n.to_string(),
            r.delta.to_string(),
            r.witness_m.to_string(),
            r.witness_n.to_string(),
            scaled.to_string(),
        ])?;
    }
    sink.finish()
}

fn sqrt(ctx: &mut Ctx, a: crate::SqrtArgs) -> Result<(), CliError> {
    let k = ctx.params.get("k", a.k, 2u32)?;
    let construction: Option<List<u64>> = ctx.params.opt("construction", a.construction)?;
    let ns: Option<List<usize>> = ctx.params.opt("n", a.n)?;
    let three = ctx.params.flag("three_term", a.three_term)?;
    if ns.is_none() && construction.is_none() {
        return Err(CliError::usage("missing required parameter --n (or --construction)"));
    }
    let mut sink = ctx.start("sqrt", None)?;
    let expo = f64::from(k) - 1.0 / f64::from(k);
    for &n in ns.as_ref().map(|l| &l.0[..]).unwrap_or(&[]) {
        let r = if k == 2 { sqrt_min_gap(n)? } else { kth_root_min_gap(n, k)? };
        let nf = n as f64;
        let (label, scaled) = if k == 2 { ("2N^1.5*delta", 2.0 * nf.powf(1.5) * r.delta) } else { ("N^(k-1/k)*delta", nf.powf(expo) * r.delta) };
        println!(
            "N={n} delta={:.17e} witness=({}, {}) k={} certified={} {label}={scaled:.6}",
            r.delta, r.witness_m, r.witness_n, r.nearest_k, r.certified
        );
        sink.record("gap", &json!({ "result": r, "root": k, "scaled": scaled }))?;
        sink.row(&["n", "delta", "witness_m", "witness_n", "certified", "scaled"], &[
            n.to_string(),
            r.delta.to_string(),
            r.witness_m.to_string(),
            r.witness_n.to_string(),
            r.certified.to_string(),
            scaled.to_string(),
        ])?;
        if three {
            let t = three_term_sqrt_min(n)?;
            let s = 2.0 * nf.powf(1.5) * t.value;
            println!("  three-term min={:.17e} at (a,b,c)=({}, {}, {}) certified={} scaled={s:.6}", t.value, t.a, t.b, t.c, t.certified);
            sink.record("three_term", &json!({ "n": n, "result": t, "scaled": s }))?;
        }
    }
    for &d in construction.as_ref().map(|l| &l.0[..]).unwrap_or(&[]) {
        let p = kth_root_construction(d, k)?;
        let df = d as f64;
        let scaled = if k == 2 { 16.0 * df.powi(3) * p.gap } else { f64::NAN };
        println!("d={d} pair=({}, {}) gap={:.17e} 16d^3*gap={scaled:.6}", p.n, p.m, p.gap);
        sink.record("construction", &json!({ "d": d, "root": k, "pair": p, "scaled": scaled }))?;
    }
    sink.finish()
}

fn energy(ctx: &mut Ctx, a: crate::EnergyArgs) -> Result<(), CliError> {
    let spec = ctx.spec(a.spec)?;
    let ns: List<usize> = ctx.params.require("n", a.n)?;
    let gamma = ctx.params.get("gamma", a.gamma, 1.0)?;
    let oracle = ctx.params.flag("oracle", a.oracle)?;
    let cover: Option<f64> = ctx.params.opt("cover", a.cover)?;
    let mut sink = ctx.start("energy", None)?;
    let n_max = ns.0.iter().copied().max().unwrap_or(0);
    let values: Vec<f64> = generate(&spec, n_max)?;
    let mut points = Vec::new();
    println!("{:>8} {:>24} {:>12}", "N", "E*", "E*/N^2");
    for &n in &ns.0 {
        let v = &values[..n];
        let r = if oracle { additive_energy_oracle(v, gamma)? } else { additive_energy(v, gamma)? };
        let ratio = r.count as f64 / (n as f64).powi(2);
        println!("{n:>8} {:>24} {ratio:>12.4}", r.count);
        let mut rec = json!({ "n": n, "gamma": gamma, "count": r.count.to_string(), "algorithm": r.algorithm });
        let mut row = vec![n.to_string(), gamma.to_string(), r.count.to_string(), String::new()];
        if let Some(g) = cover {
            let c = covering_number(&difference_multiset(v), g)?;
            println!("{:>8} cov(diffs, {g}) = {}", "", c.cover_count);
            rec["cover_gamma"] = json!(g);
            rec["cover_count"] = json!(c.cover_count.to_string());
            row[3] = c.cover_count.to_string();
        }
        sink.record("energy", &rec)?;
        sink.row(&["n", "gamma", "count", "cover_count"], &row)?;
        points.push((n as f64, r.count as f64));
    }
    if points.len() >= 3 {
        let f = fit_power_law(&points)?;
        println!("fitted exponent {:.6} (intercept {:.6})", f.slope, f.intercept);
        sink.record("fit", &f)?;
    }
    sink.finish()
}

fn dioph(ctx: &mut Ctx, a: crate::DiophArgs) -> Result<(), CliError> {
    let mode = ctx.params.get("mode", a.mode, "full".to_string())?;
    if mode == "convergents" {
        let alpha: f64 = ctx.params.require("alpha", a.alpha)?;
        let q: u64 = ctx.params.require("q", a.q)?;
        let mut sink = ctx.start("dioph", None)?;
        let r = dirichlet_convergents(alpha, q)?;
        for c in &r.convergents {
            println!("{}/{}  error={:.6e}", c.a, c.q, c.error);
            sink.record("convergent", &json!({ "a": c.a.to_string(), "q": c.q, "error": c.error }))?;
        }
        println!("witness {}/{}", r.witness.a, r.witness.q);
        return sink.finish();
    }
    let spec = ctx.spec(a.spec)?;
    let ns: List<usize> = ctx.params.require("n", a.n)?;
    let (m, u, samples, seed, band, t_scale) = match mode.as_str() {
        "full" => (Some(ctx.params.require("m", a.m)?), None, None, None, None, None),
        "dyadic" | "admissible" => (None, Some(ctx.params.require("u", a.u)?), None, None, None, None),
        "estimate" => {
            let m: Option<u64> = ctx.params.opt("m", a.m)?;
            let u = if m.is_none() { Some(ctx.params.require("u", a.u)?) } else { None };
            (m, u, Some(ctx.params.get("samples", a.samples, 64usize)?), Some(ctx.params.get("seed", a.seed, 0u64)?), None, None)
        }
        "dirichlet" => (
            None,
            Some(ctx.params.get("u", a.u, 1u32)?),
            None,
            None,
            Some(ctx.params.require::<f64>("band", a.band)?),
            Some(ctx.params.get("t_scale", a.t_scale, 1.0)?),
        ),
        other => return Err(CliError::usage(format!("unknown dioph mode {other:?}"))),
    };
    let mut sink = ctx.start("dioph", seed)?;
    let n_max = ns.0.iter().copied().max().unwrap_or(0);
    let values: Vec<f64> = generate(&spec, n_max)?;
    for &n in &ns.0 {
        let v = &values[..n];
        match mode.as_str() {
            "full" | "dyadic" => {
                let r = match (m, u) {
                    (Some(m), _) => theorem2_sum(v, m)?,
                    (_, Some(u)) => dyadic_block_sum(v, u)?,
                    _ => unreachable!("resolved above"),
                };
                let (lo, hi) = r.j_range.bounds();
                let norm = r.count as f64 / ((hi - lo) as f64 * (n as f64).powi(2));
                println!("N={n} j in [{lo}, {hi}) count={} count/(|J| N^2)={norm:.6}", r.count);
                sink.record("count", &json!({ "n": n, "j_range": r.j_range, "count": r.count.to_string(), "normalized": norm }))?;
                sink.row(&["n", "j_lo", "j_hi", "count", "normalized"], &[
                    n.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    r.count.to_string(),
                    norm.to_string(),
                ])?;
            }
            "admissible" => {
                let u = u.expect("resolved above");
                let c = admissible_pair_count(v, u)?;
                println!("N={n} u={u} admissible pairs={c}");
                sink.record("admissible", &json!({ "n": n, "u": u, "count": c.to_string() }))?;
                sink.row(&["n", "u", "count"], &[n.to_string(), u.to_string(), c.to_string()])?;
            }
            "estimate" => {
                let range = match (m, u) {
                    (Some(m), _) => JRange::Full { m },
                    (_, Some(u)) => JRange::Dyadic { u },
                    _ => unreachable!("resolved above"),
                };
                let r = stratified_estimate(v, range, samples.expect("set"), seed.expect("set"))?;
                let (est, se) = (r.estimate.unwrap_or(f64::NAN), r.estimate_stderr.unwrap_or(f64::NAN));
                println!("N={n} estimate={est:.3} stderr={se:.3}");
                sink.record("estimate", &json!({ "n": n, "j_range": range, "estimate": est, "stderr": se }))?;
                sink.row(&["n", "estimate", "stderr"], &fmt_list(&[n as f64, est, se]))?;
            }
            "dirichlet" => {
                let b = band.expect("set");
                let diffs = band_differences(v, b);
                if diffs.is_empty() {
                    return Err(CliError::from(gapkit_core::Error::Input(format!("no differences of the first {n} terms lie in [{b}, {}]", 8.0 * b))));
                }
                let r = dirichlet_integral_check(&diffs, u.expect("set"), t_scale.expect("set"), PhiParams::default())?;
                println!(
                    "N={n} band=[{b}, {}] count={} integral={:.6} spectral={:.6} tail<={:.3e} holds={}",
                    8.0 * b,
                    r.count,
                    r.integral,
                    r.spectral_sum,
                    r.tail_bound,
                    r.holds
                );
                let mut rec = serde_json::to_value(&r).map_err(|e| CliError::numerical(e.to_string()))?;
                rec["count"] = json!(r.count.to_string());
                rec["n"] = json!(n);
                sink.record("dirichlet", &rec)?;
            }
            _ => unreachable!("mode validated"),
        }
    }
    sink.finish()
}

fn selberg(ctx: &mut Ctx, a: crate::SelbergArgs) -> Result<(), CliError> {
    let ms: List<usize> = ctx.params.get("m", a.m, List(vec![4, 16, 64]))?;
    let grid = ctx.params.get("grid", a.grid, 10_000usize)?;
    let mut sink = ctx.start("selberg", None)?;
    for &m in &ms.0 {
        let plus = selberg_polynomial::<f64>(m, SelbergSign::Plus)?;
        let minus = selberg_polynomial::<f64>(m, SelbergSign::Minus)?;
        let tol = plus.eval_error_bound().max(minus.eval_error_bound());
        let w = 1.0 / m as f64;
        let (mut worst, mut bad) = (0.0f64, 0usize);
        for i in 0..grid.max(1) {
            let x = i as f64 / grid.max(1) as f64 - 0.5;
            let ind = if x.abs() <= w { 1.0 } else { 0.0 };
            let gap = (ind - plus.eval(x)).max(minus.eval(x) - ind);
            worst = worst.max(gap);
            bad += usize::from(gap > tol);
        }
        let cmax = plus.max_abs_coeff().max(minus.max_abs_coeff());
        println!(
            "M={m} c0+={:.12} c0-={:.12} max|c|={cmax:.6} (3/M={:.6}) sandwich violations={bad} worst={worst:.3e}",
            plus.coeffs[0],
            minus.coeffs[0],
            3.0 / m as f64
        );
        sink.record(
            "selberg",
            &json!({ "m": m, "plus": plus.coeffs, "minus": minus.coeffs, "max_abs_coeff": cmax, "grid": grid, "violations": bad, "worst": worst }),
        )?;
        for j in 0..m {
            sink.row(&["m", "j", "c_plus", "c_minus"], &[m.to_string(), j.to_string(), plus.coeffs[j].to_string(), minus.coeffs[j].to_string()])?;
        }
    }
    sink.finish()
}

fn parse_m_rule(s: &str) -> Result<MRule, CliError> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let bad = || CliError::usage(format!("bad M rule {s:?}; use fixed:M, power:beta or square_log:eps"));
    match name {
        "fixed" => Ok(MRule::Fixed { m: arg.parse().map_err(|_| bad())? }),
        "power" => Ok(MRule::Power { exponent: arg.parse().map_err(|_| bad())? }),
        "square_log" => Ok(MRule::SquareLog { eps: arg.parse().map_err(|_| bad())? }),
        _ => Err(bad()),
    }
}

fn parse_measure(s: &str) -> Result<Measure, CliError> {
    match s.split_once(':') {
        None if s == "fejer" => Ok(Measure::Fejer),
        Some(("uniform", c)) => c
            .parse()
            .map(|c| Measure::UniformWindow { c })
            .map_err(|_| CliError::usage(format!("bad uniform half-width in {s:?}"))),
        _ => Err(CliError::usage(format!("unknown measure {s:?}; use fejer or uniform:C"))),
    }
}

fn mc_experiment(ctx: &mut Ctx, a: McArgs) -> Result<McExperiment, CliError> {
    let spec = ctx.spec(a.spec)?;
    let mut e = McExperiment::new(spec);
    e.n_schedule = ctx.params.get("n", a.n, List(e.n_schedule.clone()))?.0;
    e.m_rule = parse_m_rule(&ctx.params.get("m_rule", a.m_rule, "square_log:0.5".to_string())?)?;
    e.samples = ctx.params.get("samples", a.samples, e.samples)?;
    e.seed = ctx.params.get("seed", a.seed, 0u64)?;
    e.measure = parse_measure(&ctx.params.get("measure", a.measure, "fejer".to_string())?)?;
    if let Some(h) = ctx.params.opt::<String>("hypothesis", a.hypothesis)? {
        let (mode, c) = h.split_once(':').unwrap_or((&h, "1"));
        let c: f64 = c.parse().map_err(|_| CliError::usage(format!("bad hypothesis constant in {h:?}")))?;
        e.hypothesis = Some((parse_mode(mode)?, c));
    }
    e.keep_records = ctx.params.flag("records", a.records)?;
    Ok(e)
}

fn opt_str(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn emit_summary(sink: &mut Sink, s: &McSummary) -> Result<(), CliError> {
    println!("{} {} seed={} samples={}", s.experiment, s.spec, s.seed, s.samples);
    println!(
        "{:>8} {:>10} {:>14} {:>14} {:>12} {:>12} {:>12} {:>12}",
        "N", "M", "mean", "variance", "stderr", "reference", "median", "exceptional"
    );
    for r in &s.per_n {
        let m = r.m.map(|m| m.to_string()).unwrap_or_default();
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>8} {m:>10} {:>14.6} {:>14.6} {:>12.6} {:>12} {:>12} {:>12}",
            r.n,
            r.mean,
            r.variance,
            r.stderr,
            cell(r.reference),
            cell(r.median),
            cell(r.exceptional_fraction)
        );
        if let Some(ratio) = r.variance_ratio {
            println!("{:>8} variance / ((log N / M^2) sum_u B_u) = {ratio:.6}", "");
        }
        sink.record("summary", r)?;
        sink.row(
            &["n", "m", "mean", "variance", "stderr", "reference", "z_score", "median", "exceptional_fraction", "variance_ratio"],
            &[
                r.n.to_string(),
                m,
                r.mean.to_string(),
                r.variance.to_string(),
                r.stderr.to_string(),
                opt_str(r.reference),
                opt_str(r.z_score),
                opt_str(r.median),
                opt_str(r.exceptional_fraction),
                opt_str(r.variance_ratio),
            ],
        )?;
    }
    for rec in &s.records {
        sink.record("sample", rec)?;
    }
    Ok(())
}

fn mc(ctx: &mut Ctx, cmd: McCommand) -> Result<(), CliError> {
    let (name, summary) = match cmd {
        McCommand::Expect { common, kind } => {
            let e = mc_experiment(ctx, common)?;
            let kind = match ctx.params.get("kind", kind, "minus".to_string())?.as_str() {
                "indicator" => StatKind::Indicator,
                "minus" => StatKind::Minus,
                "plus" => StatKind::Plus,
                k => return Err(CliError::usage(format!("unknown statistic {k:?}; use indicator, minus or plus"))),
            };
            let mut sink = ctx.start("mc expect", Some(e.seed))?;
            let s = expectation_mc(&e, kind)?;
            emit_summary(&mut sink, &s)?;
            return sink.finish();
        }
        McCommand::Var { common } => {
            let e = mc_experiment(ctx, common)?;
            ("mc var", (e.seed, Box::new(move || variance_mc(&e)) as Box<dyn FnOnce() -> _>))
        }
        McCommand::Dist { common, eps } => {
            let e = mc_experiment(ctx, common)?;
            let eps = ctx.params.get("eps", eps, 0.5)?;
            ("mc dist", (e.seed, Box::new(move || min_gap_distribution(&e, eps)) as Box<dyn FnOnce() -> _>))
        }
    };
    let (seed, job) = summary;
    let mut sink = ctx.start(name, Some(seed))?;
    let s = job()?;
    emit_summary(&mut sink, &s)?;
    sink.finish()
}

fn coarse(ctx: &mut Ctx, a: crate::CoarseArgs) -> Result<(), CliError> {
    let n = ctx.params.get("n", a.n, 4096usize)?;
    let eta = ctx.params.get("eta", a.eta, 0.1)?;
    if let Some(alpha) = ctx.params.opt::<f64>("alpha", a.alpha)? {
        let mut sink = ctx.start("coarse", None)?;
        let r = coarse_scale_experiment(n, eta, alpha)?;
        println!(
            "alpha={alpha} witness={}/{} dirichlet={} lower={} min={:.6e} bound={:.6e} verdict={:?}",
            r.witness.a, r.witness.q, r.dirichlet_condition, r.lower_condition, r.min_value, r.bound, r.verdict
        );
        sink.record("coarse", &r)?;
        return sink.finish();
    }
    let c = ctx.params.get("c", a.c, 5.0)?;
    let samples = ctx.params.get("samples", a.samples, 1000usize)?;
    let seed = ctx.params.get("seed", a.seed, 0u64)?;
    let keep = ctx.params.flag("records", a.records)?;
    let mut sink = ctx.start("coarse", Some(seed))?;
    let s = coarse_scale_batch(n, eta, c, samples, seed, keep)?;
    println!(
        "N={n} eta={eta} C={c}: applicable={} satisfied={} violated={} within_bound={} of {samples}",
        s.applicable, s.satisfied, s.violated, s.within_bound
    );
    println!(
        "small-q measure {:.6} (stderr {:.6}) vs bound 4C(2/eta)^(4/eta)/N = {:.6e}",
        s.small_q_measure, s.small_q_stderr, s.small_q_bound
    );
    for r in &s.records {
        sink.record("coarse", r)?;
    }
    let mut summary = serde_json::to_value(&s).map_err(|e| CliError::numerical(e.to_string()))?;
    summary.as_object_mut().expect("struct").remove("records");
    sink.record("summary", &summary)?;
    sink.finish()
}

fn fit(ctx: &mut Ctx, input: Option<PathBuf>) -> Result<(), CliError> {
    let path: String = ctx.params.require("input", input.map(|p| p.display().to_string()))?;
    let path = PathBuf::from(path);
    ctx.inputs.push(digest_file(&path)?);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let rows = parse_rows(&text)?;
    let mut sink = ctx.start("fit", None)?;
    let f = fit_power_law(&rows)?;
    println!("slope={:.6} intercept={:.6}", f.slope, f.intercept);
    for ((x, y), r) in rows.iter().zip(&f.residuals) {
        println!("  {x}\t{y}\tresidual={r:.3e}");
        sink.row(&["n", "value", "residual"], &fmt_list(&[*x, *y, *r]))?;
    }
    sink.record("fit", &f)?;
    sink.finish()
}

/// `N value` per line, separated by whitespace or a comma; `#` starts a comment.
fn parse_rows(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        match fields[..] {
            [] => continue,
            [x, y] => {
                let parse = |f: &str| f.parse::<f64>().map_err(|e| CliError::usage(format!("line {}: {f:?}: {e}", i + 1)));
                rows.push((parse(x)?, parse(y)?));
            }
            _ => return Err(CliError::usage(format!("line {}: expected two fields, got {}", i + 1, fields.len()))),
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_parse() {
        assert_eq!(parse_rows("# N E\n2 4\n4,16\n\n8\t64\n").unwrap(), vec![(2.0, 4.0), (4.0, 16.0), (8.0, 64.0)]);
        assert!(parse_rows("1 2 3").is_err());
        assert!(parse_rows("1 x").is_err());
    }

    #[test]
    fn rules_and_measures() {
        assert_eq!(parse_m_rule("fixed:512").unwrap(), MRule::Fixed { m: 512 });
        assert!(parse_m_rule("fixed").is_err());
        assert_eq!(parse_measure("uniform:5").unwrap(), Measure::UniformWindow { c: 5.0 });
        assert!(parse_measure("normal").is_err());
    }
}
