//! Symbols `σ(x, ξ)`: an expression language, built-in families, dense
//! sampling on the level grid, and the difference and derivative
//! operators of the symbol classes.

mod eval;
mod hoermander;
mod parse;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::{DualIndex, GroupLevel};
use crate::transform::{
    forward, inverse, sobolev_weights, GridFunction, SobolevScale, SpectrumFunction,
};

pub use eval::eval_grid;
pub use hoermander::{hoermander_estimate, HoermanderParams, HoermanderReport};
pub use parse::{parse_symbol, BinOp, CmpOp, Expr, ExprKind, Func, Span, SymbolExpr, Var};

/// Default cap on `M` for dense `M × M` objects.
pub const DEFAULT_DENSE_CAP: usize = 1024;

pub(crate) fn check_dense(level: &GroupLevel, cap: usize) -> Result<()> {
    if level.size() > cap {
        return Err(Error::MatrixTooLarge {
            size: level.size(),
            cap,
        });
    }
    Ok(())
}

/// Built-in symbol families.
#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    /// `‖ξ‖^s`
    Vladimirov { s: f64 },
    /// `⟨ξ⟩^s`
    Bessel { s: f64 },
    /// `g(x)`, an expression in `x` only.
    Mult { g: SymbolExpr },
    /// `values[k]` on shell `k`; the last value extends outward.
    Radial { values: Vec<f64> },
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Vladimirov { s } => write!(f, "vladimirov:s={s}"),
            Builtin::Bessel { s } => write!(f, "bessel:s={s}"),
            Builtin::Mult { g } => write!(f, "mult:g={g}"),
            Builtin::Radial { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "radial:values={}", parts.join(","))
            }
        }
    }
}

fn builtin_error(msg: impl Into<String>) -> Error {
    Error::InvalidDescriptor(msg.into())
}

impl FromStr for Builtin {
    type Err = Error;

    /// `vladimirov:s=1`, `bessel:s=-1`, `mult:g=<expr>`, `radial:values=1,0.5`.
    fn from_str(text: &str) -> Result<Self> {
        let (name, rest) = text
            .split_once(':')
            .ok_or_else(|| builtin_error(format!("builtin `{text}` needs `name:key=value`")))?;
        let (key, value) = rest
            .split_once('=')
            .ok_or_else(|| builtin_error(format!("builtin `{text}` needs `key=value`")))?;
        let key = key.trim();
        let number = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| builtin_error(format!("bad number `{v}` in builtin `{text}`")))
        };
        match (name.trim(), key) {
            ("vladimirov", "s") => Ok(Builtin::Vladimirov { s: number(value)? }),
            ("bessel", "s") => Ok(Builtin::Bessel { s: number(value)? }),
            ("mult", "g") => {
                let g = parse_symbol(value)?;
                if let Some(node) = g.first_xi_node() {
                    return Err(Error::Eval {
                        line: node.span.line,
                        col: node.span.col,
                        reason: "mult:g must not depend on xi".into(),
                    });
                }
                Ok(Builtin::Mult { g })
            }
            ("radial", "values") => {
                let values = value.split(',').map(number).collect::<Result<Vec<_>>>()?;
                if values.is_empty() {
                    return Err(builtin_error("radial needs at least one value"));
                }
                Ok(Builtin::Radial { values })
            }
            _ => Err(builtin_error(format!("unknown builtin `{text}`"))),
        }
    }
}

impl Builtin {
    fn value_at(&self, level: &GroupLevel, pos: usize) -> f64 {
        match self {
            Builtin::Vladimirov { s } => sobolev_weights_at(level.dual_norm(pos), *s, true),
            Builtin::Bessel { s } => sobolev_weights_at(level.dual_norm(pos), *s, false),
            Builtin::Radial { values } => {
                let k = level.shell(pos) as usize;
                values[k.min(values.len() - 1)]
            }
            Builtin::Mult { .. } => unreachable!("mult is not a multiplier"),
        }
    }
}

fn sobolev_weights_at(norm: u64, s: f64, vladimirov: bool) -> f64 {
    if vladimirov {
        if s == 0.0 {
            1.0
        } else if norm == 0 {
            0.0
        } else {
            (norm as f64).powf(s)
        }
    } else {
        (norm.max(1) as f64).powf(s)
    }
}

/// Where a symbol comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolSource {
    Expr(SymbolExpr),
    Builtin(Builtin),
}

impl fmt::Display for SymbolSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolSource::Expr(e) => write!(f, "expr:{e}"),
            SymbolSource::Builtin(b) => write!(f, "builtin:{b}"),
        }
    }
}

impl SymbolSource {
    pub fn expr(text: &str) -> Result<Self> {
        parse_symbol(text).map(SymbolSource::Expr)
    }

    pub fn builtin(text: &str) -> Result<Self> {
        text.parse().map(SymbolSource::Builtin)
    }

    /// Whether `σ(x, ξ)` reads the space variable.
    pub fn depends_on_x(&self) -> bool {
        match self {
            SymbolSource::Expr(e) => e.depends_on_x(),
            SymbolSource::Builtin(Builtin::Mult { g }) => g.depends_on_x(),
            SymbolSource::Builtin(_) => false,
        }
    }

    pub fn uses_truncation_floor(&self) -> bool {
        match self {
            SymbolSource::Expr(e) => e.uses_norm_x(),
            SymbolSource::Builtin(Builtin::Mult { g }) => g.uses_norm_x(),
            SymbolSource::Builtin(_) => false,
        }
    }

    /// Dense sampling, capped at [`DEFAULT_DENSE_CAP`].
    pub fn eval_grid(&self, level: &GroupLevel) -> Result<SymbolGrid> {
        self.eval_grid_capped(level, DEFAULT_DENSE_CAP)
    }

    pub fn eval_grid_capped(&self, level: &GroupLevel, cap: usize) -> Result<SymbolGrid> {
        check_dense(level, cap)?;
        let provenance = self.to_string();
        match self {
            SymbolSource::Expr(e) => eval::eval_expr_grid(e, level, provenance),
            SymbolSource::Builtin(Builtin::Mult { g }) => {
                eval::eval_expr_grid(g, level, provenance)
            }
            SymbolSource::Builtin(_) => {
                let m = self.multiplier(level)?.expect("builtin multiplier");
                Ok(SymbolGrid::from_multiplier(&m).with_provenance(provenance))
            }
        }
    }

    /// The values `m(ξ)` when the symbol does not depend on `x`; no dense
    /// allocation, so any level size is allowed.
    pub fn multiplier(&self, level: &GroupLevel) -> Result<Option<SpectrumFunction>> {
        if self.depends_on_x() {
            return Ok(None);
        }
        match self {
            SymbolSource::Builtin(Builtin::Mult { g }) => {
                let v = eval::eval_constant(g, level)?;
                Ok(Some(SpectrumFunction::from_fn(level, |_| v)))
            }
            SymbolSource::Builtin(b) => Ok(Some(SpectrumFunction::from_fn(level, |pos| {
                Complex64::new(b.value_at(level, pos), 0.0)
            }))),
            SymbolSource::Expr(e) => eval::eval_multiplier(e, level).map(Some),
        }
    }
}

/// `σ(x, ξ)` sampled on points × canonical duals; column-major, so column
/// `ξ` is the contiguous slice `values[ξ·M .. (ξ+1)·M]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolGrid {
    level: GroupLevel,
    values: Vec<Complex64>,
    provenance: String,
}

impl SymbolGrid {
    pub fn new(level: &GroupLevel, values: Vec<Complex64>, provenance: impl Into<String>) -> Result<Self> {
        let m = level.size();
        if values.len() != m * m {
            return Err(Error::LevelMismatch(format!(
                "{} symbol values for a {m} x {m} grid",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NumericalFailure(format!(
                "non-finite symbol value at (x={}, xi={})",
                i % m,
                i / m
            )));
        }
        Ok(SymbolGrid {
            level: level.clone(),
            values,
            provenance: provenance.into(),
        })
    }

    /// Builds the grid from `f(x, ξ_pos)`.
    pub fn from_fn(
        level: &GroupLevel,
        provenance: impl Into<String>,
        f: impl Fn(usize, usize) -> Complex64 + Sync,
    ) -> Result<Self> {
        let m = level.size();
        let mut values = vec![Complex64::new(0.0, 0.0); m * m];
        values
            .par_chunks_mut(m.max(1))
            .enumerate()
            .for_each(|(xi, col)| {
                for (x, v) in col.iter_mut().enumerate() {
                    *v = f(x, xi);
                }
            });
        SymbolGrid::new(level, values, provenance)
    }

    /// `σ(x, ξ) = m(ξ)`.
    pub fn from_multiplier(m: &SpectrumFunction) -> Self {
        let level = m.level().clone();
        let size = level.size();
        let values = m
            .values()
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, size))
            .collect();
        SymbolGrid {
            level,
            values,
            provenance: "multiplier".into(),
        }
    }

    /// `σ(x, ξ) = g(x)`.
    pub fn from_x_function(g: &GridFunction) -> Self {
        let level = g.level().clone();
        let size = level.size();
        let mut values = Vec::with_capacity(size * size);
        for _ in 0..size {
            values.extend_from_slice(g.values());
        }
        SymbolGrid {
            level,
            values,
            provenance: "x-function".into(),
        }
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn level(&self) -> &GroupLevel {
        &self.level
    }

    pub fn size(&self) -> usize {
        self.level.size()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, x: usize, xi: usize) -> Complex64 {
        self.values[xi * self.size() + x]
    }

    pub fn column(&self, xi: usize) -> &[Complex64] {
        let m = self.size();
        &self.values[xi * m..(xi + 1) * m]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.values.chunks(self.size().max(1))
    }

    /// `x ↦ σ(x, ξ)` as a grid function.
    pub fn column_function(&self, xi: usize) -> GridFunction {
        GridFunction::new(self.level.clone(), self.column(xi).to_vec()).expect("column length")
    }

    /// `m(ξ)` if every column is constant in `x` (exact comparison).
    pub fn multiplier_values(&self) -> Option<Vec<Complex64>> {
        self.columns()
            .map(|col| col.iter().all(|v| *v == col[0]).then_some(col[0]))
            .collect()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64, provenance: impl Into<String>) -> Result<Self> {
        SymbolGrid::new(&self.level, self.values.iter().map(|&v| f(v)).collect(), provenance)
    }

    pub fn conj(&self) -> SymbolGrid {
        SymbolGrid {
            level: self.level.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
            provenance: format!("conj({})", self.provenance),
        }
    }

    /// Pointwise product `σ·τ`.
    pub fn mul(&self, other: &SymbolGrid) -> Result<SymbolGrid> {
        self.level.check_same(&other.level)?;
        SymbolGrid::new(
            &self.level,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
            format!("({})*({})", self.provenance, other.provenance),
        )
    }

    pub fn max_abs_diff(&self, other: &SymbolGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn permuted_columns(&self, table: &[usize]) -> Vec<Complex64> {
        let m = self.size();
        let mut out = Vec::with_capacity(m * m);
        for &src in table {
            out.extend_from_slice(&self.values[src * m..(src + 1) * m]);
        }
        out
    }
}

/// `(shift_η σ)(x, ξ) = σ(x, ξ + η)`, with `η` a canonical position.
pub fn shift(sigma: &SymbolGrid, eta: usize) -> SymbolGrid {
    let table = sigma.level.shift_table(eta);
    SymbolGrid {
        level: sigma.level.clone(),
        values: sigma.permuted_columns(&table),
        provenance: format!("shift({})", sigma.provenance),
    }
}

/// `Δ_η σ(x, ξ) = σ(x, ξ + η) − σ(x, ξ)`, with `η` a canonical position.
pub fn difference_at(sigma: &SymbolGrid, eta: usize) -> SymbolGrid {
    let table = sigma.level.shift_table(eta);
    let mut values = sigma.permuted_columns(&table);
    for (v, s) in values.iter_mut().zip(&sigma.values) {
        *v -= s;
    }
    SymbolGrid {
        level: sigma.level.clone(),
        values,
        provenance: format!("diff({})", sigma.provenance),
    }
}

/// `Δ_η σ` for a dual index `η` of the same group.
pub fn difference(sigma: &SymbolGrid, eta: &DualIndex) -> Result<SymbolGrid> {
    let pos = sigma.level.position_of(eta)?;
    Ok(difference_at(sigma, pos))
}

/// `D^β_x σ`: the multiplier `‖·‖^β` or `⟨·⟩^β` applied to every column
/// in the `x` variable.
pub fn x_derivative(sigma: &SymbolGrid, beta: f64, scale: SobolevScale) -> Result<SymbolGrid> {
    if !beta.is_finite() || (beta < 0.0 && scale == SobolevScale::Vladimirov) {
        return Err(Error::BadExponent(format!(
            "x-derivative order must be >= 0, got {beta}"
        )));
    }
    let level = &sigma.level;
    let m = level.size();
    let weights = sobolev_weights(level, beta, scale);
    let mut values = vec![Complex64::new(0.0, 0.0); m * m];
    values
        .par_chunks_mut(m.max(1))
        .enumerate()
        .for_each(|(xi, out)| {
            let mut spec = forward(&sigma.column_function(xi));
            let mut vals = spec.values().to_vec();
            for (v, w) in vals.iter_mut().zip(&weights) {
                *v *= w;
            }
            spec = SpectrumFunction::new(level.clone(), vals).expect("length");
            out.copy_from_slice(inverse(&spec).values());
        });
    Ok(SymbolGrid {
        level: level.clone(),
        values,
        provenance: format!("dx^{beta}({})", sigma.provenance),
    })
}
