use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::parse::{BinOp, CmpOp, Expr, ExprKind, Func, SymbolExpr, Var};
use super::{check_dense, SymbolGrid, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::group::{unit_root, GroupLevel};
use crate::transform::SpectrumFunction;

/// Per-point tables for the `x`-dependent atoms of one expression.
struct Bound<'a> {
    level: &'a GroupLevel,
    norm_x: Vec<f64>,
    digits: HashMap<u32, Vec<f64>>,
    re_chars: HashMap<(u64, u64), Vec<f64>>,
}

fn eval_error(node: &Expr, reason: impl Into<String>) -> Error {
    Error::Eval {
        line: node.span.line,
        col: node.span.col,
        reason: reason.into(),
    }
}

impl<'a> Bound<'a> {
    fn new(expr: &SymbolExpr, level: &'a GroupLevel, with_x: bool) -> Result<Self> {
        let m = level.size();
        let mut bound = Bound {
            level,
            norm_x: Vec::new(),
            digits: HashMap::new(),
            re_chars: HashMap::new(),
        };
        if !with_x {
            return Ok(bound);
        }
        if expr.uses_norm_x() {
            bound.norm_x = (0..m).map(|x| level.point_norm(x).0).collect();
        }
        bound.collect(&expr.root)?;
        Ok(bound)
    }

    fn collect(&mut self, node: &Expr) -> Result<()> {
        let level = self.level;
        let m = level.size();
        match &node.kind {
            ExprKind::Digit(j) => {
                self.digits
                    .entry(*j)
                    .or_insert_with(|| (0..m).map(|x| level.point_digit(x, *j) as f64).collect());
            }
            ExprKind::ReChar { num, den } => {
                let n0 = level.radices().first().copied().unwrap_or(1);
                if n0 % den != 0 {
                    return Err(eval_error(
                        node,
                        format!("re_char denominator {den} does not divide the first factor {n0}"),
                    ));
                }
                self.re_chars.entry((*num, *den)).or_insert_with(|| {
                    (0..m)
                        .map(|x| {
                            let x0 = level.point(x).coords.first().copied().unwrap_or(0);
                            let phase = ((*num as u128 * x0 as u128) % *den as u128) as u64;
                            unit_root(phase, *den).re
                        })
                        .collect()
                });
            }
            ExprKind::Neg(a) => self.collect(a)?,
            ExprKind::Binary(_, a, b) | ExprKind::Compare(_, a, b) => {
                self.collect(a)?;
                self.collect(b)?;
            }
            ExprKind::Call(_, args) => {
                for a in args {
                    self.collect(a)?;
                }
            }
            ExprKind::If(c, a, b) => {
                self.collect(c)?;
                self.collect(a)?;
                self.collect(b)?;
            }
            ExprKind::Num(_) | ExprKind::Var(_) => {}
        }
        Ok(())
    }

    fn eval(&self, node: &Expr, x: usize, xi: usize) -> Result<f64> {
        let v = match &node.kind {
            ExprKind::Num(v) => *v,
            ExprKind::Var(Var::NormX) => self.norm_x[x],
            ExprKind::Var(Var::NormXi) => self.level.dual_norm(xi) as f64,
            ExprKind::Var(Var::BracketXi) => self.level.dual_bracket(xi) as f64,
            ExprKind::Digit(j) => self.digits[j][x],
            ExprKind::ReChar { num, den } => self.re_chars[&(*num, *den)][x],
            ExprKind::Neg(a) => -self.eval(a, x, xi)?,
            ExprKind::Binary(op, a, b) => {
                let a = self.eval(a, x, xi)?;
                let b = self.eval(b, x, xi)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(eval_error(node, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(eval_error(node, "zero raised to a negative power"));
                        }
                        a.powf(b)
                    }
                }
            }
            ExprKind::Compare(op, a, b) => {
                let a = self.eval(a, x, xi)?;
                let b = self.eval(b, x, xi)?;
                let holds = match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                };
                if holds {
                    1.0
                } else {
                    0.0
                }
            }
            ExprKind::Call(func, args) => {
                let a = self.eval(&args[0], x, xi)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(eval_error(node, format!("log of non-positive value {a}")));
                        }
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Abs => a.abs(),
                    Func::Min => a.min(self.eval(&args[1], x, xi)?),
                    Func::Max => a.max(self.eval(&args[1], x, xi)?),
                }
            }
            ExprKind::If(c, a, b) => {
                if self.eval(c, x, xi)? != 0.0 {
                    self.eval(a, x, xi)?
                } else {
                    self.eval(b, x, xi)?
                }
            }
        };
        if !v.is_finite() {
            return Err(eval_error(node, format!("non-finite result {v}")));
        }
        Ok(v)
    }
}

/// Samples `expr` densely; see [`super::SymbolSource::eval_grid`].
pub fn eval_grid(expr: &SymbolExpr, level: &GroupLevel) -> Result<SymbolGrid> {
    check_dense(level, DEFAULT_DENSE_CAP)?;
    eval_expr_grid(expr, level, format!("expr:{expr}"))
}

pub(super) fn eval_expr_grid(
    expr: &SymbolExpr,
    level: &GroupLevel,
    provenance: String,
) -> Result<SymbolGrid> {
    let bound = Bound::new(expr, level, true)?;
    let m = level.size();
    let columns: Vec<Result<Vec<Complex64>>> = (0..m)
        .into_par_iter()
        .map(|xi| {
            (0..m)
                .map(|x| bound.eval(&expr.root, x, xi).map(|v| Complex64::new(v, 0.0)))
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(m * m);
    for col in columns {
        values.extend(col?);
    }
    SymbolGrid::new(level, values, provenance)
}

/// `m(ξ)` of an `x`-independent expression.
pub(super) fn eval_multiplier(expr: &SymbolExpr, level: &GroupLevel) -> Result<SpectrumFunction> {
    let bound = Bound::new(expr, level, false)?;
    let values = (0..level.size())
        .map(|xi| bound.eval(&expr.root, 0, xi).map(|v| Complex64::new(v, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    SpectrumFunction::new(level.clone(), values)
}

/// Value of an expression free of both variables.
pub(super) fn eval_constant(expr: &SymbolExpr, level: &GroupLevel) -> Result<Complex64> {
    let bound = Bound::new(expr, level, false)?;
    bound.eval(&expr.root, 0, 0).map(|v| Complex64::new(v, 0.0))
}
