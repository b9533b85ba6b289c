//! Operators `T_σ` as dense matrices in the character basis, with
//! `A[η, ξ] = σ̂_x(η − ξ; ξ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupLevel;
use crate::linalg;
use crate::symbol::{SymbolGrid, SymbolSource};
use crate::transform::{forward, inverse, GridFunction, SpectrumFunction};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    level: GroupLevel,
    entries: DMatrix<Complex64>,
    meta: String,
}

impl OperatorMatrix {
    pub fn new(level: &GroupLevel, entries: DMatrix<Complex64>, meta: impl Into<String>) -> Result<Self> {
        let m = level.size();
        if entries.nrows() != m || entries.ncols() != m {
            return Err(Error::LevelMismatch(format!(
                "{} x {} matrix for a level of size {m}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NumericalFailure("non-finite matrix entry".into()));
        }
        Ok(OperatorMatrix {
            level: level.clone(),
            entries,
            meta: meta.into(),
        })
    }

    pub fn identity(level: &GroupLevel) -> Self {
        let m = level.size();
        OperatorMatrix {
            level: level.clone(),
            entries: DMatrix::identity(m, m),
            meta: "identity".into(),
        }
    }

    pub fn diagonal(m: &SpectrumFunction) -> Self {
        OperatorMatrix {
            level: m.level().clone(),
            entries: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(m.values())),
            meta: "diagonal".into(),
        }
    }

    pub fn level(&self) -> &GroupLevel {
        &self.level
    }

    pub fn size(&self) -> usize {
        self.level.size()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn meta(&self) -> &str {
        &self.meta
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = meta.into();
        self
    }

    pub fn is_diagonal(&self) -> bool {
        linalg::is_diagonal(&self.entries)
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            level: self.level.clone(),
            entries: self.entries.adjoint(),
            meta: format!("adjoint({})", self.meta),
        }
    }

    pub fn mul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.level.check_same(&other.level)?;
        Ok(OperatorMatrix {
            level: self.level.clone(),
            entries: &self.entries * &other.entries,
            meta: format!("({})*({})", self.meta, other.meta),
        })
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.level.check_same(&other.level)?;
        Ok(OperatorMatrix {
            level: self.level.clone(),
            entries: &self.entries - &other.entries,
            meta: format!("({})-({})", self.meta, other.meta),
        })
    }

    /// `(Σ_η |A[η, ξ]|²)^{1/2}` for every column.
    pub fn column_norms(&self) -> Vec<f64> {
        self.entries
            .column_iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Column `ξ` of the matrix: the `x`-transform of `σ(·, ξ)` placed at
/// rows `ζ + ξ`. Columns constant in `x` give an exact diagonal entry;
/// real columns get an exactly conjugate-symmetric transform.
pub fn assemble(sigma: &SymbolGrid) -> OperatorMatrix {
    let level = sigma.level();
    let m = level.size();
    let neg: Vec<usize> = (0..m).map(|pos| level.neg_position(pos)).collect();
    let mut data = vec![ZERO; m * m];
    data.par_chunks_mut(m.max(1)).enumerate().for_each(|(xi, out)| {
        let col = sigma.column(xi);
        if col.iter().all(|v| *v == col[0]) {
            out[xi] = col[0];
            return;
        }
        let spec = forward(&sigma.column_function(xi));
        let hat = spec.values();
        let real = col.iter().all(|v| v.im == 0.0);
        let rows = level.shift_table(xi);
        for (zeta, v) in hat.iter().enumerate() {
            out[rows[zeta]] = if real { (v + hat[neg[zeta]].conj()) * 0.5 } else { *v };
        }
    });
    OperatorMatrix {
        level: level.clone(),
        entries: DMatrix::from_vec(m, m, data),
        meta: format!("assemble({})", sigma.provenance()),
    }
}

/// `T f = inverse(A · forward(f))`.
pub fn apply(a: &OperatorMatrix, f: &GridFunction) -> Result<GridFunction> {
    a.level.check_same(f.level())?;
    let spec = forward(f);
    let v = nalgebra::DVector::from_column_slice(spec.values());
    let out = &a.entries * v;
    let out = SpectrumFunction::new(a.level.clone(), out.iter().copied().collect())?;
    Ok(inverse(&out))
}

/// The quantization sum `Σ_ξ σ(x, ξ) f̂(ξ) χ_ξ(x)` evaluated directly.
pub fn apply_direct(sigma: &SymbolGrid, f: &GridFunction) -> Result<GridFunction> {
    sigma.level().check_same(f.level())?;
    let level = sigma.level();
    let spec = forward(f);
    let mut out = vec![ZERO; level.size()];
    for (xi, &coef) in spec.values().iter().enumerate() {
        let chi = GridFunction::character(level, xi);
        for (x, o) in out.iter_mut().enumerate() {
            *o += sigma.get(x, xi) * coef * chi.values()[x];
        }
    }
    GridFunction::new(level.clone(), out)
}

/// `σ(x, ξ) = Σ_ζ A[ζ + ξ, ξ] χ_ζ(x)`.
pub fn extract_symbol(a: &OperatorMatrix) -> SymbolGrid {
    let level = &a.level;
    let m = level.size();
    let mut values = vec![ZERO; m * m];
    values.par_chunks_mut(m.max(1)).enumerate().for_each(|(xi, out)| {
        let col = a.entries.column(xi);
        if col.iter().enumerate().all(|(i, v)| i == xi || *v == ZERO) {
            out.fill(col[xi]);
            return;
        }
        let rows = level.shift_table(xi);
        let phi = SpectrumFunction::from_fn(level, |zeta| col[rows[zeta]]);
        out.copy_from_slice(inverse(&phi).values());
    });
    SymbolGrid::new(level, values, format!("extract({})", a.meta)).expect("finite matrix")
}

/// Largest singular value of `J_{s_to} A J_{−s_from}`.
pub fn sobolev_opnorm(a: &OperatorMatrix, s_from: f64, s_to: f64) -> Result<f64> {
    let level = &a.level;
    let br: Vec<f64> = (0..level.size()).map(|i| level.dual_bracket(i) as f64).collect();
    let scaled = DMatrix::from_fn(a.size(), a.size(), |i, j| {
        a.entries[(i, j)] * br[i].powf(s_to) * br[j].powf(-s_from)
    });
    linalg::spectral_norm(&scaled)
}

/// `T_{σ1} T_{σ2} − T_{σ1 σ2}`.
pub fn compose_residual(s1: &SymbolGrid, s2: &SymbolGrid) -> Result<OperatorMatrix> {
    s1.level().check_same(s2.level())?;
    let product = assemble(&s1.mul(s2)?);
    Ok(assemble(s1).mul(&assemble(s2))?.sub(&product)?.with_meta("compose-residual"))
}

/// `T_σ^* − T_{conj σ}`.
pub fn adjoint_residual(sigma: &SymbolGrid) -> OperatorMatrix {
    let a = assemble(sigma).adjoint();
    a.sub(&assemble(&sigma.conj()))
        .expect("same level")
        .with_meta("adjoint-residual")
}

/// `‖R‖_{L² → H^s}` for each `s`.
pub fn residual_norms(r: &OperatorMatrix, s_values: &[f64]) -> Result<Vec<f64>> {
    s_values.iter().map(|&s| sobolev_opnorm(r, 0.0, s)).collect()
}

/// Residual norms across levels with a boundedness verdict.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub op: String,
    pub symbols: Vec<String>,
    pub s_values: Vec<f64>,
    pub levels: Vec<u32>,
    /// `norms[i][j]` = `‖R‖_{L² → H^{s_j}}` at `levels[i]`.
    pub norms: Vec<Vec<f64>>,
    pub stable: Vec<bool>,
    pub verdict: String,
}

/// Absolute size below which a residual norm counts as zero.
pub const RESIDUAL_ZERO: f64 = 1e-10;

/// Stable when the last two levels differ by less than 10% or both vanish.
pub fn last_two_stable(seq: &[f64]) -> bool {
    match seq {
        [.., a, b] => {
            (a.abs() <= RESIDUAL_ZERO && b.abs() <= RESIDUAL_ZERO)
                || (a - b).abs() < 0.1 * a.abs().max(b.abs())
        }
        _ => true,
    }
}

impl ResidualReport {
    pub fn build(op: &str, symbols: Vec<String>, s_values: &[f64], rows: Vec<(u32, Vec<f64>)>) -> Self {
        let levels: Vec<u32> = rows.iter().map(|r| r.0).collect();
        let norms: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let stable: Vec<bool> = (0..s_values.len())
            .map(|j| last_two_stable(&norms.iter().map(|n| n[j]).collect::<Vec<_>>()))
            .collect();
        let verdict = if stable.iter().all(|&s| s) { "bounded" } else { "unbounded" };
        ResidualReport {
            op: op.into(),
            symbols,
            s_values: s_values.to_vec(),
            levels,
            norms,
            stable,
            verdict: verdict.into(),
        }
    }
}

fn per_level<F>(levels: &[GroupLevel], f: F) -> Result<Vec<(u32, Vec<f64>)>>
where
    F: Fn(&GroupLevel) -> Result<Vec<f64>> + Sync,
{
    levels
        .par_iter()
        .map(|l| f(l).map(|n| (l.level(), n)))
        .collect()
}

pub fn compose_residual_report(
    left: &SymbolSource,
    right: &SymbolSource,
    levels: &[GroupLevel],
    s_values: &[f64],
) -> Result<ResidualReport> {
    let rows = per_level(levels, |l| {
        let r = compose_residual(&left.eval_grid(l)?, &right.eval_grid(l)?)?;
        residual_norms(&r, s_values)
    })?;
    Ok(ResidualReport::build(
        "compose-residual",
        vec![left.to_string(), right.to_string()],
        s_values,
        rows,
    ))
}

pub fn adjoint_residual_report(
    sigma: &SymbolSource,
    levels: &[GroupLevel],
    s_values: &[f64],
) -> Result<ResidualReport> {
    let rows = per_level(levels, |l| {
        residual_norms(&adjoint_residual(&sigma.eval_grid(l)?), s_values)
    })?;
    Ok(ResidualReport::build(
        "adjoint-residual",
        vec![sigma.to_string()],
        s_values,
        rows,
    ))
}
