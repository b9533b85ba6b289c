use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "spectra", version, about = "Pseudo-differential operators on p-adic and Vilenkin groups at finite level")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assemble the operator matrix and save it.
    Assemble(Invocation),
    /// Apply the operator to a function (from --input or random).
    Apply(Invocation),
    /// Eigenvalues.
    Spectrum(Invocation),
    /// Singular values.
    Svd(Invocation),
    /// Schatten norm and the symbol functional.
    Schatten(Invocation),
    /// Normalized partial sums of singular values.
    Dixmier(Invocation),
    /// Lorentz quasi-norm of the singular values.
    Lorentz(Invocation),
    /// Symbol-side nuclearity bound.
    Nuclear(Invocation),
    /// Random outer-annihilating perturbations against the shell bound.
    Gohberg(Invocation),
    /// Singular values against ordered column norms.
    Sandwich(Invocation),
    /// Nested symbol ranges and their Hausdorff distances.
    Fredholm(Invocation),
    /// Eigenvalue counting function and fitted growth exponent.
    Weyl(Invocation),
    /// Covering arc of the symbol arguments.
    Sectorial(Invocation),
    /// Seminorm constants of the symbol class across levels.
    Hoermander(Invocation),
    /// Composition residual across levels.
    ComposeResidual(Invocation),
    /// Adjoint residual across levels.
    AdjointResidual(Invocation),
    /// Resolvent residual across levels.
    InverseResidual(Invocation),
    /// Fast against naive transform timings.
    TransformBench(Invocation),
    /// Recompute the manifest hashes of a bundle.
    Verify {
        /// Bundle directory.
        dir: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Assemble(_) => "assemble",
            Command::Apply(_) => "apply",
            Command::Spectrum(_) => "spectrum",
            Command::Svd(_) => "svd",
            Command::Schatten(_) => "schatten",
            Command::Dixmier(_) => "dixmier",
            Command::Lorentz(_) => "lorentz",
            Command::Nuclear(_) => "nuclear",
            Command::Gohberg(_) => "gohberg",
            Command::Sandwich(_) => "sandwich",
            Command::Fredholm(_) => "fredholm",
            Command::Weyl(_) => "weyl",
            Command::Sectorial(_) => "sectorial",
            Command::Hoermander(_) => "hoermander",
            Command::ComposeResidual(_) => "compose-residual",
            Command::AdjointResidual(_) => "adjoint-residual",
            Command::InverseResidual(_) => "inverse-residual",
            Command::TransformBench(_) => "transform-bench",
            Command::Verify { .. } => "verify",
        }
    }

    pub fn invocation(&self) -> Option<&Invocation> {
        match self {
            Command::Verify { .. } => None,
            Command::Assemble(i)
            | Command::Apply(i)
            | Command::Spectrum(i)
            | Command::Svd(i)
            | Command::Schatten(i)
            | Command::Dixmier(i)
            | Command::Lorentz(i)
            | Command::Nuclear(i)
            | Command::Gohberg(i)
            | Command::Sandwich(i)
            | Command::Fredholm(i)
            | Command::Weyl(i)
            | Command::Sectorial(i)
            | Command::Hoermander(i)
            | Command::ComposeResidual(i)
            | Command::AdjointResidual(i)
            | Command::InverseResidual(i)
            | Command::TransformBench(i) => Some(i),
        }
    }
}

#[derive(Args, Debug)]
pub struct Invocation {
    /// Flat TOML file with the same keys as the flags (snake_case).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print reports as JSON instead of summary lines.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub settings: Settings,
}

/// Run configuration. Every key may come from the config file or a flag;
/// flags win.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// `p2d1`, `p3d2`, `vilenkin:2,3,2`
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub level: Option<u32>,
    /// Inclusive range `a..b`.
    #[arg(long)]
    pub levels: Option<String>,
    /// Symbol expression in x, xi.
    #[arg(long, allow_hyphen_values = true)]
    pub symbol: Option<String>,
    /// `vladimirov:s=1`, `bessel:s=-1`, `mult:g=<expr>`, `radial:values=a,b,...`
    #[arg(long)]
    pub builtin: Option<String>,
    /// CSV with columns x_index, dual_dft_index, re, im.
    #[arg(long)]
    pub csv: Option<String>,
    /// Bundle directory.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Schatten or nuclear exponent.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Lorentz primary exponent.
    #[arg(long)]
    pub r: Option<String>,
    /// Lorentz secondary exponent, `inf` allowed.
    #[arg(long)]
    pub w: Option<String>,
    /// Column norm exponent for the nuclear bound, `inf` allowed.
    #[arg(long)]
    pub r2: Option<String>,
    /// Shell indices, comma separated.
    #[arg(long)]
    pub cutoffs: Option<String>,
    /// Exponent of the shell-aligned counting grid.
    #[arg(long, allow_hyphen_values = true)]
    pub t_exponent: Option<f64>,
    #[arg(long)]
    pub shell_min: Option<usize>,
    /// Class order.
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<u32>,
    #[arg(long)]
    pub beta_max: Option<u32>,
    /// `vladimirov` or `bracket`.
    #[arg(long)]
    pub scale: Option<String>,
    /// Right factor for compose-residual: `expr:<text>` or `builtin:<id>`.
    #[arg(long, allow_hyphen_values = true)]
    pub right: Option<String>,
    /// Sobolev orders, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub s_values: Option<String>,
    /// Spectral parameter `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Largest M for dense matrices.
    #[arg(long)]
    pub dense_cap: Option<usize>,
    /// Grid function JSON for apply.
    #[arg(long)]
    pub input: Option<String>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    /// Flag values over file values. The level pair and the symbol triple
    /// are taken as a unit from whichever side sets any of them.
    pub fn merge(self, file: Settings) -> Settings {
        let mut out = self.clone();
        if self.level.is_none() && self.levels.is_none() {
            out.level = file.level;
            out.levels = file.levels.clone();
        }
        if self.symbol.is_none() && self.builtin.is_none() && self.csv.is_none() {
            out.symbol = file.symbol.clone();
            out.builtin = file.builtin.clone();
            out.csv = file.csv.clone();
        }
        macro_rules! fill {
            ($($f:ident),*) => { $( if out.$f.is_none() { out.$f = file.$f.clone(); } )* };
        }
        fill!(
            group, out, seed, trials, gamma, r, w, r2, cutoffs, t_exponent, shell_min, m, rho, delta,
            alpha_max, beta_max, scale, right, s_values, lambda, tolerance, dense_cap, input
        );
        out
    }

    /// Config echo for the manifest: set keys only, `out` omitted.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or_default();
        if let serde_json::Value::Object(map) = &mut v {
            map.retain(|_, x| !x.is_null());
        }
        v
    }
}
