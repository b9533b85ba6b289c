use std::fs;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use spectra_core::calculus::{
    adjoint_residual_report, apply, apply_direct, assemble, compose_residual_report, ResidualReport,
};
use spectra_core::group::GroupLevel;
use spectra_core::persist::{self, Report, Table};
use spectra_core::spectral::*;
use spectra_core::symbol::{
    hoermander_estimate, Builtin, HoermanderParams, SymbolGrid, SymbolSource,
};
use spectra_core::transform::{forward, inverse, Exponent, GridFunction, SpectrumFunction};
use spectra_core::Error;

use crate::{parse_source_text, transform_bench, CliError, CliResult, Command, Context, Output, Source};

fn level_dir(l: &GroupLevel) -> String {
    format!("N{}", l.level())
}

fn range_label(levels: &[GroupLevel]) -> String {
    match (levels.first(), levels.last()) {
        (Some(a), Some(b)) => format!("{} N={}..{}", a.descriptor(), a.level(), b.level()),
        _ => String::new(),
    }
}

fn list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad {what} entry `{}`", t.trim())))
        })
        .collect()
}

fn exponent(text: Option<&str>, default: Exponent) -> CliResult<Exponent> {
    match text {
        Some(t) => Ok(t.parse()?),
        None => Ok(default),
    }
}

fn parse_lambda(text: &str) -> CliResult<Complex64> {
    let parts: Vec<f64> = list(text, "lambda")?;
    match parts[..] {
        [re] => Ok(Complex64::new(re, 0.0)),
        [re, im] => Ok(Complex64::new(re, im)),
        _ => Err(CliError::Config(format!("lambda `{text}` must be `re` or `re,im`"))),
    }
}

fn grid(ctx: &Context, src: &Source, l: &GroupLevel) -> CliResult<SymbolGrid> {
    match src {
        Source::Symbol(s) => Ok(s.eval_grid_capped(l, ctx.dense_cap)?),
        Source::Csv(path) => {
            if l.size() > ctx.dense_cap {
                return Err(Error::MatrixTooLarge {
                    size: l.size(),
                    cap: ctx.dense_cap,
                }
                .into());
            }
            Ok(persist::import_symbol_csv(path, l)?)
        }
    }
}

fn multiplier(src: &Source, l: &GroupLevel) -> CliResult<Option<SpectrumFunction>> {
    match src {
        Source::Symbol(s) => Ok(s.multiplier(l)?),
        Source::Csv(_) => Ok(None),
    }
}

fn singular(ctx: &Context, src: &Source, l: &GroupLevel) -> CliResult<(SingularSpectrum, &'static str)> {
    match multiplier(src, l)? {
        Some(m) => Ok((multiplier_singular_values(&m), "multiplier")),
        None => Ok((singular_values(&assemble(&grid(ctx, src, l)?))?, "dense")),
    }
}

fn eigen(ctx: &Context, src: &Source, l: &GroupLevel) -> CliResult<(EigenSpectrum, &'static str)> {
    match multiplier(src, l)? {
        Some(m) => Ok((multiplier_eigenvalues(&m), "multiplier")),
        None => Ok((eigenvalues(&assemble(&grid(ctx, src, l)?))?, "dense")),
    }
}

fn core_source<'a>(ctx: &'a Context, op: &str) -> CliResult<&'a SymbolSource> {
    match ctx.source.as_ref() {
        Some(Source::Symbol(s)) => Ok(s),
        _ => Err(CliError::Config(format!("{op} needs --symbol or --builtin"))),
    }
}

pub(crate) fn dispatch(cmd: &Command, ctx: &Context) -> CliResult<(Vec<Output>, Value)> {
    let root = |report: Report| Output {
        dir: String::new(),
        reports: vec![report],
        files: Vec::new(),
        persist: true,
    };
    match cmd {
        Command::Hoermander(_) => Ok((vec![root(hoermander(ctx)?)], Value::Null)),
        Command::ComposeResidual(_) => {
            let left = core_source(ctx, "compose-residual")?;
            let right = ctx
                .settings
                .right
                .as_deref()
                .ok_or_else(|| CliError::Config("compose-residual needs --right".into()))?;
            let right = parse_source_text(right)?;
            let r = compose_residual_report(left, &right, &ctx.levels, &s_values(ctx)?)?;
            Ok((vec![root(residual(ctx, r))], Value::Null))
        }
        Command::AdjointResidual(_) => {
            let src = core_source(ctx, "adjoint-residual")?;
            let r = adjoint_residual_report(src, &ctx.levels, &s_values(ctx)?)?;
            Ok((vec![root(residual(ctx, r))], Value::Null))
        }
        Command::InverseResidual(_) => {
            let src = core_source(ctx, "inverse-residual")?;
            let lambda = ctx
                .settings
                .lambda
                .as_deref()
                .ok_or_else(|| CliError::Config("inverse-residual needs --lambda".into()))?;
            let r = inverse_residual_report(src, parse_lambda(lambda)?, &ctx.levels, &s_values(ctx)?)?;
            Ok((vec![root(residual(ctx, r))], Value::Null))
        }
        Command::TransformBench(_) => bench(ctx),
        Command::Verify { .. } => unreachable!("verify has no context"),
        _ => per_level(cmd, ctx),
    }
}

fn per_level(cmd: &Command, ctx: &Context) -> CliResult<(Vec<Output>, Value)> {
    let results: Vec<CliResult<(Output, f64)>> = ctx
        .levels
        .par_iter()
        .map(|l| {
            let start = Instant::now();
            let out = level_op(cmd, ctx, l)?;
            Ok((out, start.elapsed().as_secs_f64()))
        })
        .collect();
    let mut outputs = Vec::with_capacity(results.len());
    let mut timing = serde_json::Map::new();
    for r in results {
        let (out, seconds) = r?;
        timing.insert(out.dir.clone(), json!(seconds));
        outputs.push(out);
    }
    Ok((outputs, Value::Object(timing)))
}

fn level_op(cmd: &Command, ctx: &Context, l: &GroupLevel) -> CliResult<Output> {
    let src = ctx.source.as_ref().expect("symbol checked in context");
    let base = |op: &str| {
        Report::new(op, l)
            .input("symbol", src.to_string())
            .input("group", l.descriptor().to_string())
            .input("level", l.level())
    };
    let s = &ctx.settings;
    let mut files = Vec::new();
    let reports = match cmd {
        Command::Assemble(_) => {
            let a = assemble(&grid(ctx, src, l)?);
            let norms = a.column_norms();
            let mut t = Table::new(&["position", "dft_index", "dual", "shell", "column_norm"]);
            for (pos, n) in norms.iter().enumerate() {
                t.push(vec![
                    json!(pos),
                    json!(l.dft_index(pos)),
                    json!(l.dual(pos).to_string()),
                    json!(l.shell(pos)),
                    json!(n),
                ]);
            }
            files.push(("matrix.bin".to_string(), persist::encode_matrix(&a)));
            vec![base("assemble")
                .summary("size", l.size())
                .summary("frobenius_sq", a.frobenius_sq())
                .summary("max_abs", a.max_abs())
                .summary("diagonal", a.is_diagonal())
                .with_table(t)]
        }
        Command::Apply(_) => {
            let f = match &s.input {
                Some(path) => {
                    let f = persist::parse_grid_function(&fs::read(path).map_err(Error::from)?)?;
                    if f.level() != l {
                        return Err(Error::LevelMismatch(format!("input is at {}, run is at {l}", f.level())).into());
                    }
                    f
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.unwrap_or(0));
                    GridFunction::from_fn(l, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                }
            };
            let mut report = base("apply");
            let g = match multiplier(src, l)? {
                Some(m) => {
                    report = report.summary("route", "multiplier");
                    let fh = forward(&f);
                    let prod: Vec<Complex64> = fh.values().iter().zip(m.values()).map(|(a, b)| a * b).collect();
                    inverse(&SpectrumFunction::new(l.clone(), prod)?)
                }
                None => {
                    let sigma = grid(ctx, src, l)?;
                    let g = apply(&assemble(&sigma), &f)?;
                    let direct = apply_direct(&sigma, &f)?;
                    report = report
                        .summary("route", "dense")
                        .summary("direct_max_abs_diff", g.max_abs_diff(&direct));
                    g
                }
            };
            let mut t = Table::new(&["x", "in_re", "in_im", "out_re", "out_im"]);
            for (x, (a, b)) in f.values().iter().zip(g.values()).enumerate() {
                t.push(vec![json!(x), json!(a.re), json!(a.im), json!(b.re), json!(b.im)]);
            }
            files.push(("input.json".to_string(), persist::grid_function_json(&f)?));
            files.push(("output.json".to_string(), persist::grid_function_json(&g)?));
            vec![report.with_table(t)]
        }
        Command::Spectrum(_) => {
            let (e, route) = eigen(ctx, src, l)?;
            let mut t = Table::new(&["k", "re", "im", "modulus"]);
            for (k, v) in e.lambda.iter().enumerate() {
                t.push(vec![json!(k), json!(v.re), json!(v.im), json!(v.norm())]);
            }
            let radius = e.lambda.first().map_or(0.0, |v| v.norm());
            vec![base("spectrum")
                .summary("route", route)
                .summary("count", e.lambda.len())
                .summary("spectral_radius", radius)
                .with_table(t)]
        }
        Command::Svd(_) => {
            let (sv, route) = singular(ctx, src, l)?;
            vec![svd_report(base("svd"), &sv).summary("route", route)]
        }
        Command::Schatten(_) => {
            let gamma = s.gamma.unwrap_or(2.0);
            let (sv, route) = singular(ctx, src, l)?;
            let norm = schatten_norm(&sv, gamma)?;
            let functional = if l.size() <= ctx.dense_cap {
                Some(symbol_schatten_functional(&grid(ctx, src, l)?, gamma)?)
            } else {
                None
            };
            let mut t = Table::new(&["k", "s", "partial_sum_s_pow_gamma"]);
            let mut acc = 0.0;
            for (k, v) in sv.s.iter().enumerate() {
                acc += v.powf(gamma);
                t.push(vec![json!(k), json!(v), json!(acc)]);
            }
            vec![base("schatten")
                .input("gamma", gamma)
                .summary("route", route)
                .summary("schatten_norm", norm)
                .summary("symbol_functional", functional)
                .with_table(t)]
        }
        Command::Dixmier(_) => {
            let (sv, route) = singular(ctx, src, l)?;
            let d = dixmier_functional(&sv);
            let mut t = Table::new(&["n", "partial_sum", "ratio"]);
            for row in &d.table {
                t.push(vec![json!(row.n), json!(row.partial_sum), json!(row.ratio)]);
            }
            vec![base("dixmier")
                .summary("route", route)
                .summary("value", d.value)
                .summary("argmax", d.argmax)
                .with_table(t)]
        }
        Command::Lorentz(_) => {
            let r: f64 = match s.r.as_deref() {
                Some(t) => t
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad --r `{t}`")))?,
                None => 2.0,
            };
            let w = exponent(s.w.as_deref(), Exponent::Finite(r))?;
            let (sv, route) = singular(ctx, src, l)?;
            let norm = lorentz_norm(&sv, r, w)?;
            vec![svd_report(base("lorentz"), &sv)
                .input("r", r)
                .input("w", w.to_string())
                .summary("route", route)
                .summary("lorentz_norm", norm)]
        }
        Command::Nuclear(_) => {
            let gamma = s.gamma.unwrap_or(1.0);
            let r2 = exponent(s.r2.as_deref(), Exponent::Finite(2.0))?;
            let sigma = grid(ctx, src, l)?;
            let bound = nuclear_bound(&sigma, gamma, r2)?;
            let sv = singular_values(&assemble(&sigma))?;
            let sum: f64 = sv.s.iter().map(|v| v.powf(gamma)).sum();
            let holds = sum <= bound * (1.0 + 1e-10) + 1e-12;
            vec![svd_report(base("nuclear"), &sv)
                .input("gamma", gamma)
                .input("r2", r2.to_string())
                .summary("bound", bound)
                .summary("sum_s_pow_gamma", sum)
                .with_verdict(if holds { "holds" } else { "violated" })]
        }
        Command::Gohberg(_) => {
            let trials = s.trials.unwrap_or(100);
            let seed = s.seed.unwrap_or(0);
            let sigma = grid(ctx, src, l)?;
            let d = gohberg_dsigma(&sigma);
            let rep = gohberg_bound_check(&sigma, trials, seed)?;
            let norms = assemble(&sigma).column_norms();
            let mut shells = Table::new(&["shell", "shell_norm", "size", "max_column_l2", "max_column_linf"]);
            for (k, r) in l.shells().iter().enumerate() {
                let l2 = norms[r.clone()].iter().copied().fold(0.0, f64::max);
                shells.push(vec![json!(k), json!(l.shell_norm(k)), json!(r.len()), json!(l2), json!(d.shell_sup[k])]);
            }
            let mut tt = Table::new(&["trial", "kind", "rank", "op_norm", "slack"]);
            for (i, t) in rep.trials.iter().enumerate() {
                tt.push(vec![json!(i), json!(t.kind), json!(t.rank), json!(t.op_norm), json!(t.slack)]);
            }
            let verdict = if rep.min_slack >= -1e-9 { "holds" } else { "violated" };
            vec![
                base("gohberg")
                    .input("trials", trials)
                    .input("seed", seed)
                    .summary("outer_shell", rep.outer_shell)
                    .summary("bound", rep.bound)
                    .summary("min_slack", rep.min_slack)
                    .summary("column_identity_error", rep.column_identity_error)
                    .summary("d_estimate", d.d_estimate)
                    .with_table(shells)
                    .with_verdict(verdict),
                base("gohberg-trials")
                    .input("trials", trials)
                    .input("seed", seed)
                    .with_table(tt)
                    .with_verdict(verdict),
            ]
        }
        Command::Sandwich(_) => {
            let sigma = grid(ctx, src, l)?;
            let rep = sandwich_check(&assemble(&sigma), &sigma)?;
            let mut t = Table::new(&["k", "s", "c", "s_minus_c"]);
            for (k, (a, b)) in rep.s.iter().zip(&rep.c).enumerate() {
                t.push(vec![json!(k), json!(a), json!(b), json!(a - b)]);
            }
            vec![base("sandwich")
                .summary("violations", rep.violations)
                .summary("max_violation", rep.max_violation)
                .summary("max_ratio", rep.max_ratio)
                .summary("top_holds", rep.top_holds)
                .summary("majorization_holds", rep.majorization_holds)
                .summary("multiplier", rep.multiplier)
                .summary("multiplier_equal", rep.multiplier_equal)
                .with_table(t)
                .with_verdict(if rep.lower_bound_holds { "holds" } else { "violated" })]
        }
        Command::Fredholm(_) => {
            let cutoffs: Vec<usize> = match s.cutoffs.as_deref() {
                Some(t) => list(t, "cutoff")?,
                None => (0..l.shells().len()).collect(),
            };
            let tol = s.tolerance.unwrap_or(FREDHOLM_TOLERANCE);
            let fc = fredholm_cloud(&grid(ctx, src, l)?, &cutoffs, tol)?;
            let mut t = Table::new(&["cutoff", "points", "hausdorff_to_next"]);
            for (i, c) in fc.cutoffs.iter().enumerate() {
                t.push(vec![json!(c), json!(fc.clouds[i].len()), json!(fc.hausdorff.get(i))]);
            }
            let mut e = Table::new(&["re", "im"]);
            for v in fc.essential() {
                e.push(vec![json!(v.re), json!(v.im)]);
            }
            let verdict = if fc.stabilized { "stabilized" } else { "not-stabilized" };
            vec![
                base("fredholm")
                    .input("tolerance", tol)
                    .summary("essential_points", fc.essential().len())
                    .summary("last_hausdorff", fc.hausdorff.last())
                    .with_table(t)
                    .with_verdict(verdict),
                base("fredholm-essential").with_table(e).with_verdict(verdict),
            ]
        }
        Command::Weyl(_) => {
            let exp = s.t_exponent.unwrap_or(match src {
                Source::Symbol(SymbolSource::Builtin(Builtin::Vladimirov { s }))
                | Source::Symbol(SymbolSource::Builtin(Builtin::Bessel { s }))
                    if *s > 0.0 =>
                {
                    *s
                }
                _ => 1.0,
            });
            let (e, route) = eigen(ctx, src, l)?;
            let reference = l.dimension() as f64 / exp;
            let w = weyl_count(&e.lambda, &shell_aligned_grid(l, exp), Some(reference))?;
            let mut t = Table::new(&["t", "count"]);
            for (tv, n) in &w.table {
                t.push(vec![json!(tv), json!(n)]);
            }
            let verdict = match w.slope {
                Some(v) if (v - reference).abs() <= 1e-9 => "matches",
                Some(_) => "differs",
                None => "undetermined",
            };
            vec![base("weyl")
                .input("t_exponent", exp)
                .summary("route", route)
                .summary("slope", w.slope)
                .summary("reference", reference)
                .with_table(t)
                .with_verdict(verdict)]
        }
        Command::Sectorial(_) => {
            let shell_min = s.shell_min.unwrap_or(1);
            let rep = sectorial_check(&grid(ctx, src, l)?, shell_min)?;
            let mut t = Table::new(&["theta1", "theta2", "width", "samples", "zeros"]);
            t.push(vec![json!(rep.theta1), json!(rep.theta2), json!(rep.width), json!(rep.samples), json!(rep.zeros)]);
            vec![base("sectorial")
                .input("shell_min", shell_min)
                .summary("width", rep.width)
                .summary("zeros", rep.zeros)
                .with_table(t)
                .with_verdict(if rep.sectorial { "sectorial" } else { "not-sectorial" })]
        }
        _ => unreachable!("cross-level command in per-level dispatch"),
    };
    Ok(Output {
        dir: level_dir(l),
        reports,
        files,
        persist: true,
    })
}

fn svd_report(report: Report, sv: &SingularSpectrum) -> Report {
    let mut t = Table::new(&["k", "s"]);
    for (k, v) in sv.s.iter().enumerate() {
        t.push(vec![json!(k), json!(v)]);
    }
    report
        .summary("s_max", sv.s.first())
        .summary("s_min", sv.s.last())
        .summary("sum_sq", sv.s.iter().map(|v| v * v).sum::<f64>())
        .with_table(t)
}

fn s_values(ctx: &Context) -> CliResult<Vec<f64>> {
    list(ctx.settings.s_values.as_deref().unwrap_or("0,1,2"), "s_values")
}

fn residual(ctx: &Context, r: ResidualReport) -> Report {
    let mut columns = vec!["level".to_string()];
    columns.extend(r.s_values.iter().map(|s| format!("s={s}")));
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for (lv, norms) in r.levels.iter().zip(&r.norms) {
        let mut row = vec![json!(lv)];
        row.extend(norms.iter().map(|v| json!(v)));
        t.push(row);
    }
    Report::new(&r.op, range_label(&ctx.levels))
        .input("symbols", &r.symbols)
        .input("s_values", &r.s_values)
        .summary("stable", &r.stable)
        .with_table(t)
        .with_verdict(r.verdict)
}

fn hoermander(ctx: &Context) -> CliResult<Report> {
    let src = core_source(ctx, "hoermander")?;
    let s = &ctx.settings;
    let mut p = HoermanderParams::new(s.m.unwrap_or(0.0), s.rho.unwrap_or(1.0), s.delta.unwrap_or(0.0));
    if let Some(a) = s.alpha_max {
        p.alpha_max = a;
    }
    if let Some(b) = s.beta_max {
        p.beta_max = b;
    }
    if let Some(sc) = s.scale.as_deref() {
        p.scale = sc.parse()?;
    }
    let rep = hoermander_estimate(src, &ctx.levels, &p)?;
    let mut t = Table::new(&["level", "alpha", "beta", "constant"]);
    for (lv, table) in rep.levels.iter().zip(&rep.per_level) {
        for (a, row) in table.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                t.push(vec![json!(lv), json!(a), json!(b), json!(v)]);
            }
        }
    }
    Ok(Report::new("hoermander", range_label(&ctx.levels))
        .input("symbol", src.to_string())
        .input("m", rep.m)
        .input("rho", rep.rho)
        .input("delta", rep.delta)
        .input("scale", &rep.scale)
        .input("alpha_max", rep.alpha_max)
        .input("beta_max", rep.beta_max)
        .summary("constants", &rep.constants)
        .summary("stable", &rep.stable)
        .summary("truncation_floor_used", rep.truncation_floor_used)
        .with_table(t)
        .with_verdict(rep.verdict))
}

fn bench(ctx: &Context) -> CliResult<(Vec<Output>, Value)> {
    let rows = transform_bench(&ctx.levels, ctx.settings.trials.unwrap_or(4), ctx.settings.seed.unwrap_or(0))?;
    let mut t = Table::new(&["level", "size", "fast_seconds", "naive_seconds", "speedup"]);
    for r in &rows {
        t.push(vec![json!(r.level), json!(r.size), json!(r.fast_seconds), json!(r.naive_seconds), json!(r.speedup)]);
    }
    let min_speedup = rows.iter().map(|r| r.speedup).fold(f64::INFINITY, f64::min);
    let report = Report::new("transform-bench", range_label(&ctx.levels))
        .summary("min_speedup", min_speedup)
        .with_table(t);
    let out = Output {
        dir: String::new(),
        reports: vec![report],
        files: Vec::new(),
        persist: false,
    };
    Ok((vec![out], serde_json::to_value(&rows).unwrap_or(Value::Null)))
}
