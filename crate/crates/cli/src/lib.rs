//! Command-line front end. `run` is the whole program; `main` only forwards
//! the process arguments and exit code.

mod args;
mod bench;
mod ops;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use spectra_core::group::{GroupDescriptor, GroupLevel};
use spectra_core::persist::{self, Bundle, Report};
use spectra_core::symbol::{SymbolSource, DEFAULT_DENSE_CAP};
use spectra_core::{Error, ErrorCode};

pub use args::{Cli, Command, Settings};
pub use bench::{transform_bench, BenchRow};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Config(String),
    /// `verify` found mismatched or missing files.
    Verify(String),
}

impl CliError {
    pub fn code(&self) -> String {
        match self {
            CliError::Core(e) => e.code().to_string(),
            CliError::Config(_) => ErrorCode::Config.to_string(),
            CliError::Verify(_) => "VERIFY".into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.code().is_numerical() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) | CliError::Verify(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Where the symbol comes from, resolved once per run.
#[derive(Clone, Debug)]
pub enum Source {
    Symbol(SymbolSource),
    Csv(PathBuf),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Symbol(s) => write!(f, "{s}"),
            Source::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

/// Validated settings for one invocation.
pub struct Context {
    pub settings: Settings,
    pub levels: Vec<GroupLevel>,
    pub source: Option<Source>,
    pub dense_cap: usize,
    pub json: bool,
}

fn parse_levels(s: &Settings) -> CliResult<Vec<GroupLevel>> {
    let group = s
        .group
        .as_deref()
        .ok_or_else(|| CliError::Config("--group is required".into()))?;
    let descriptor: GroupDescriptor = group.parse()?;
    let range = match (s.level, s.levels.as_deref()) {
        (Some(_), Some(_)) => return Err(CliError::Config("give --level or --levels, not both".into())),
        (Some(n), None) => n..=n,
        (None, Some(text)) => {
            let bad = || CliError::Config(format!("bad level range `{text}`, expected a..b"));
            let (a, b) = text.split_once("..").ok_or_else(bad)?;
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            a..=b
        }
        (None, None) => return Err(CliError::Config("--level or --levels is required".into())),
    };
    Ok(range
        .map(|n| GroupLevel::new(descriptor.clone(), n))
        .collect::<spectra_core::Result<Vec<_>>>()?)
}

pub(crate) fn parse_source_text(text: &str) -> CliResult<SymbolSource> {
    Ok(match text.strip_prefix("builtin:") {
        Some(b) => SymbolSource::builtin(b)?,
        None => SymbolSource::expr(text.strip_prefix("expr:").unwrap_or(text))?,
    })
}

fn parse_source(s: &Settings) -> CliResult<Option<Source>> {
    match (&s.symbol, &s.builtin, &s.csv) {
        (None, None, None) => Ok(None),
        (Some(e), None, None) => Ok(Some(Source::Symbol(SymbolSource::expr(e)?))),
        (None, Some(b), None) => Ok(Some(Source::Symbol(SymbolSource::builtin(b)?))),
        (None, None, Some(p)) => Ok(Some(Source::Csv(PathBuf::from(p)))),
        _ => Err(CliError::Config("give one of --symbol, --builtin, --csv".into())),
    }
}

fn context(cmd: &Command, inv: &args::Invocation) -> CliResult<Context> {
    let settings = match &inv.config {
        Some(path) => inv.settings.clone().merge(Settings::load(path)?),
        None => inv.settings.clone(),
    };
    let levels = parse_levels(&settings)?;
    let source = parse_source(&settings)?;
    let needs_symbol = !matches!(cmd, Command::TransformBench(_));
    if needs_symbol && source.is_none() {
        return Err(CliError::Config(format!("{} needs --symbol, --builtin or --csv", cmd.name())));
    }
    Ok(Context {
        dense_cap: settings.dense_cap.unwrap_or(DEFAULT_DENSE_CAP),
        settings,
        levels,
        source,
        json: inv.json,
    })
}

/// Reports and raw files for one bundle directory (`""` is the root).
pub struct Output {
    pub dir: String,
    pub reports: Vec<Report>,
    pub files: Vec<(String, Vec<u8>)>,
    /// Timing-like outputs are printed but kept out of the bundle.
    pub persist: bool,
}

fn prefix(dir: &str) -> String {
    if dir.is_empty() {
        String::new()
    } else {
        format!("{dir}/")
    }
}

fn write_bundle(out: &Path, cmd: &Command, ctx: &Context, outputs: &[Output]) -> CliResult<()> {
    let manifest = out.join(persist::MANIFEST);
    if manifest.exists() {
        std::fs::remove_file(&manifest).map_err(Error::from)?;
    }
    let bundle = Bundle::create(out)?;
    bundle.set_config(&serde_json::json!({
        "command": cmd.name(),
        "settings": ctx.settings.echo(),
    }))?;
    for o in outputs.iter().filter(|o| o.persist) {
        let p = prefix(&o.dir);
        for (name, bytes) in &o.files {
            bundle.write_file(&format!("{p}{name}"), bytes)?;
        }
        for r in &o.reports {
            bundle.write_report(&p, r)?;
        }
    }
    Ok(())
}

fn print_outputs(w: &mut dyn Write, outputs: &[Output], json: bool) -> CliResult<()> {
    for o in outputs {
        for r in &o.reports {
            if json {
                w.write_all(&persist::to_canonical_json(r)?).map_err(Error::from)?;
            } else {
                let mut line = format!("{} [{}]", r.op, r.level);
                if !r.verdict.is_empty() {
                    line.push_str(&format!(" {}", r.verdict));
                }
                for (k, v) in &r.summary {
                    if !v.is_array() && !v.is_object() {
                        line.push_str(&format!(" {k}={v}"));
                    }
                }
                writeln!(w, "{line}").map_err(Error::from)?;
            }
        }
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    if let Ok(text) = std::env::var("SPECTRA_THREADS") {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("SPECTRA_THREADS must be a positive integer, got `{text}`")))?;
        // A pool built earlier in the same process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn verify(w: &mut dyn Write, dir: &Path) -> CliResult<()> {
    let report = persist::verify(dir)?;
    writeln!(
        w,
        "verify [{}] checked={} mismatched={} missing={}",
        dir.display(),
        report.checked,
        report.mismatched.len(),
        report.missing.len()
    )
    .map_err(Error::from)?;
    if report.ok() {
        return Ok(());
    }
    let mut names = report.mismatched.clone();
    names.extend(report.missing.iter().map(|m| format!("{m} (missing)")));
    Err(CliError::Verify(format!("manifest mismatch: {}", names.join(", "))))
}

fn execute(w: &mut dyn Write, cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let cmd = &cli.command;
    let Some(inv) = cmd.invocation() else {
        let Command::Verify { dir } = cmd else { unreachable!() };
        return verify(w, dir);
    };
    let ctx = context(cmd, inv)?;
    let start = Instant::now();
    let (outputs, timing) = ops::dispatch(cmd, &ctx)?;
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(out) = &ctx.settings.out {
        let out = Path::new(out);
        write_bundle(out, cmd, &ctx, &outputs)?;
        let timing = serde_json::json!({
            "command": cmd.name(),
            "elapsed_seconds": elapsed,
            "detail": timing,
        });
        Bundle::create(out)?.write_timing(&timing)?;
    }
    print_outputs(w, &outputs, ctx.json)
}

/// Runs the program on `argv` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock())
}

/// [`run`] with normal output sent to `w`; errors still go to stderr.
pub fn run_with<I, T>(argv: I, w: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(w, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[CONFIG]: {first}");
            return 1;
        }
    };
    match execute(w, cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}
