//! Singular values, eigenvalues and the spectral functionals built on
//! them: Schatten, Dixmier and Lorentz quantities, nuclear bounds, the
//! Gohberg distance probe, column-norm comparisons, Fredholm clouds, Weyl
//! counting, sectoriality and inverse residuals.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{apply, assemble, residual_norms, OperatorMatrix, ResidualReport};
use crate::error::{Error, Result};
use crate::group::GroupLevel;
use crate::linalg;
use crate::symbol::{SymbolGrid, SymbolSource};
use crate::transform::{lr_norm_values, Exponent, GridFunction, SpectrumFunction};

/// Singular values `s_0 ≥ s_1 ≥ … ≥ 0`.
#[derive(Clone, Debug, Serialize)]
pub struct SingularSpectrum {
    pub level: String,
    pub s: Vec<f64>,
}

/// Eigenvalues sorted by modulus, largest first.
#[derive(Clone, Debug)]
pub struct EigenSpectrum {
    pub level: String,
    pub lambda: Vec<Complex64>,
}

impl SingularSpectrum {
    pub fn new(level: &GroupLevel, mut s: Vec<f64>) -> Self {
        s.sort_by(|a, b| b.total_cmp(a));
        SingularSpectrum {
            level: level.to_string(),
            s,
        }
    }
}

pub fn singular_values(a: &OperatorMatrix) -> Result<SingularSpectrum> {
    Ok(SingularSpectrum {
        level: a.level().to_string(),
        s: linalg::singular_values(a.entries())?,
    })
}

pub fn eigenvalues(a: &OperatorMatrix) -> Result<EigenSpectrum> {
    Ok(EigenSpectrum {
        level: a.level().to_string(),
        lambda: linalg::eigenvalues(a.entries())?,
    })
}

/// Spectrum of the multiplier `m(ξ)` without forming the matrix.
pub fn multiplier_singular_values(m: &SpectrumFunction) -> SingularSpectrum {
    SingularSpectrum::new(m.level(), m.values().iter().map(|v| v.norm()).collect())
}

pub fn multiplier_eigenvalues(m: &SpectrumFunction) -> EigenSpectrum {
    let mut lambda = m.values().to_vec();
    lambda.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    EigenSpectrum {
        level: m.level().to_string(),
        lambda,
    }
}

/// `(Σ s_k^γ)^{1/γ}`.
pub fn schatten_norm(s: &SingularSpectrum, gamma: f64) -> Result<f64> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::BadExponent(format!("Schatten index must be >= 1, got {gamma}")));
    }
    Ok(s.s.iter().map(|v| v.powf(gamma)).sum::<f64>().powf(1.0 / gamma))
}

fn column_lr(sigma: &SymbolGrid, r: Exponent) -> Vec<f64> {
    sigma.columns().map(|c| lr_norm_values(c, r)).collect()
}

/// `(Σ_ξ ‖σ(·, ξ)‖_{L^γ}^γ)^{1/γ}`.
pub fn symbol_schatten_functional(sigma: &SymbolGrid, gamma: f64) -> Result<f64> {
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(Error::BadExponent(format!("Schatten index must be >= 1, got {gamma}")));
    }
    let norms = column_lr(sigma, Exponent::Finite(gamma));
    Ok(norms.iter().map(|v| v.powf(gamma)).sum::<f64>().powf(1.0 / gamma))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HsCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
}

/// Frobenius² of `T_σ` against `Σ_ξ ‖σ(·, ξ)‖²_{L²}`.
pub fn hs_identity_check(sigma: &SymbolGrid) -> HsCheck {
    let lhs = assemble(sigma).frobenius_sq();
    let rhs: f64 = column_lr(sigma, Exponent::Finite(2.0)).iter().map(|v| v * v).sum();
    HsCheck {
        lhs,
        rhs,
        delta: (lhs - rhs).abs(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DixmierRow {
    pub n: usize,
    pub partial_sum: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DixmierReport {
    pub value: f64,
    pub argmax: usize,
    pub table: Vec<DixmierRow>,
}

/// `sup_N (1/log(1+N)) Σ_{k=0}^{N} s_k` over `N = 1..max(M−1, 1)`.
pub fn dixmier_functional(s: &SingularSpectrum) -> DixmierReport {
    let last = s.s.len().saturating_sub(1).max(1);
    let mut table = Vec::with_capacity(last);
    let mut acc = s.s.first().copied().unwrap_or(0.0);
    for n in 1..=last {
        acc += s.s.get(n).copied().unwrap_or(0.0);
        table.push(DixmierRow {
            n,
            partial_sum: acc,
            ratio: acc / ((1 + n) as f64).ln(),
        });
    }
    let best = table
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.ratio > table[b].ratio { i } else { b });
    DixmierReport {
        value: table[best].ratio,
        argmax: table[best].n,
        table,
    }
}

/// `(Σ_{k≥1} [k^{1/r − 1/w} s_{k−1}]^w)^{1/w}`, or `sup_k k^{1/r} s_{k−1}`
/// when `w = ∞`.
pub fn lorentz_norm(s: &SingularSpectrum, r: f64, w: Exponent) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::BadExponent(format!("Lorentz r must be > 0, got {r}")));
    }
    let terms = s.s.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v));
    match w {
        Exponent::Infinity => Ok(terms.map(|(k, v)| k.powf(1.0 / r) * v).fold(0.0, f64::max)),
        Exponent::Finite(w) => {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::BadExponent(format!("Lorentz w must be > 0, got {w}")));
            }
            Ok(terms
                .map(|(k, v)| (k.powf(1.0 / r - 1.0 / w) * v).powf(w))
                .sum::<f64>()
                .powf(1.0 / w))
        }
    }
}

/// `Σ_ξ ‖σ(·, ξ)‖_{L^{r2}}^γ`, the γ-nuclear certificate.
pub fn nuclear_bound(sigma: &SymbolGrid, gamma: f64, r2: Exponent) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::BadExponent(format!("nuclear index must lie in (0, 1], got {gamma}")));
    }
    r2.validate()?;
    Ok(column_lr(sigma, r2).iter().map(|v| v.powf(gamma)).sum())
}

#[derive(Clone, Debug, Serialize)]
pub struct DsigmaTable {
    pub level: u32,
    /// `max_{shell k} ‖σ(·, ξ)‖_{L^∞}` for `k = 0..=N`.
    pub shell_sup: Vec<f64>,
    pub d_estimate: f64,
}

pub fn gohberg_dsigma(sigma: &SymbolGrid) -> DsigmaTable {
    let level = sigma.level();
    let sup = column_lr(sigma, Exponent::Infinity);
    let shell_sup: Vec<f64> = level
        .shells()
        .iter()
        .map(|r| sup[r.clone()].iter().copied().fold(0.0, f64::max))
        .collect();
    DsigmaTable {
        level: level.level(),
        d_estimate: *shell_sup.last().unwrap(),
        shell_sup,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GohbergTrial {
    /// `random`, or `inner` for `A` with its outer columns removed plus a
    /// small random term.
    pub kind: String,
    pub rank: usize,
    pub op_norm: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GohbergReport {
    pub outer_shell: usize,
    /// Max outer-shell column `L²` norm.
    pub bound: f64,
    /// Largest `|‖(A−K)χ_ξ‖ − ‖σ(·, ξ)‖_{L²}|` over outer `ξ` and trials.
    pub column_identity_error: f64,
    pub trials: Vec<GohbergTrial>,
    pub min_slack: f64,
}

/// Random finite-rank `K` with zero columns on the outermost shell.
pub fn outer_annihilating_k(level: &GroupLevel, rank: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let m = level.size();
    let outer = level.shells().last().unwrap().clone();
    let mut draw = |rows: usize| {
        DMatrix::from_fn(rows, rank, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    };
    let u = draw(m) * Complex64::new(scale, 0.0);
    let mut v = draw(m);
    for i in outer {
        v.row_mut(i).fill(Complex64::new(0.0, 0.0));
    }
    u * v.adjoint()
}

/// Probes `‖A − K‖ ≥ max_{outer ξ} ‖σ(·, ξ)‖_{L²}`. Even trials draw `K`
/// at the scale of `A`; odd trials start from `A` restricted to the inner
/// shells, which is where the bound is nearly attained.
pub fn gohberg_bound_check(sigma: &SymbolGrid, trials: usize, seed: u64) -> Result<GohbergReport> {
    let level = sigma.level();
    let a = assemble(sigma);
    let outer = level.shells().last().unwrap().clone();
    let col_l2 = column_lr(sigma, Exponent::Finite(2.0));
    let bound = col_l2[outer.clone()].iter().copied().fold(0.0, f64::max);
    let max_rank = (level.size() / 2).min(level.size() - outer.len()).max(1);
    let scale = a.max_abs().max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inner = a.entries().clone();
    for xi in outer.clone() {
        inner.column_mut(xi).fill(Complex64::new(0.0, 0.0));
    }
    let inner_rank = level.size() - outer.len();
    let ks: Vec<(&str, usize, DMatrix<Complex64>)> = (0..trials)
        .map(|t| {
            let rank = rng.gen_range(1..=max_rank);
            if t % 2 == 0 {
                ("random", rank, outer_annihilating_k(level, rank, scale, &mut rng))
            } else {
                let k = &inner + outer_annihilating_k(level, rank, 1e-6 * scale, &mut rng);
                ("inner", inner_rank + rank, k)
            }
        })
        .collect();
    let results = ks
        .par_iter()
        .map(|(kind, rank, k)| {
            let diff = a.entries() - k;
            let err = outer
                .clone()
                .map(|xi| {
                    let n: f64 = diff.column(xi).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                    (n - col_l2[xi]).abs()
                })
                .fold(0.0, f64::max);
            let op_norm = linalg::spectral_norm(&diff)?;
            Ok((
                GohbergTrial {
                    kind: kind.to_string(),
                    rank: *rank,
                    op_norm,
                    slack: op_norm - bound,
                },
                err,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let column_identity_error = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let trials: Vec<GohbergTrial> = results.into_iter().map(|r| r.0).collect();
    let min_slack = trials.iter().map(|t| t.slack).fold(f64::INFINITY, f64::min);
    Ok(GohbergReport {
        outer_shell: level.shells().len() - 1,
        bound,
        column_identity_error,
        trials,
        min_slack,
    })
}

/// Singular values against ordered column norms.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub s: Vec<f64>,
    pub c: Vec<f64>,
    /// `s_k ≥ c_k` for every `k` (tolerance `1e-10·s_0`).
    pub lower_bound_holds: bool,
    pub violations: usize,
    pub max_violation: f64,
    /// `max_k s_k / c_k` over `c_k > 0`.
    pub max_ratio: f64,
    /// `s_0 ≥ c_0`.
    pub top_holds: bool,
    /// `Σ_{k≤j} c_k² ≤ Σ_{k≤j} s_k²` for every `j`, equal at `j = M−1`.
    pub majorization_holds: bool,
    pub multiplier: bool,
    /// For multipliers: `s_k = c_k` to `1e-10`.
    pub multiplier_equal: Option<bool>,
}

const SANDWICH_TOL: f64 = 1e-10;

/// Compares `s` with the non-increasingly sorted `c`.
pub fn sandwich_compare(s: &[f64], c: &[f64], multiplier: bool) -> SandwichReport {
    let mut c = c.to_vec();
    c.sort_by(|a, b| b.total_cmp(a));
    let top = s.first().copied().unwrap_or(0.0).max(c.first().copied().unwrap_or(0.0));
    let tol = SANDWICH_TOL * top.max(f64::MIN_POSITIVE);
    let gaps: Vec<f64> = c.iter().zip(s).map(|(c, s)| c - s).collect();
    let violations = gaps.iter().filter(|&&g| g > tol).count();
    let max_violation = gaps.iter().copied().fold(0.0, f64::max);
    let max_ratio = s
        .iter()
        .zip(&c)
        .filter(|(_, &c)| c > 0.0)
        .map(|(s, c)| s / c)
        .fold(0.0, f64::max);
    let (mut ps, mut pc, mut major) = (0.0, 0.0, true);
    for (sv, cv) in s.iter().zip(&c) {
        ps += sv * sv;
        pc += cv * cv;
        major &= pc <= ps + SANDWICH_TOL * top * top * s.len() as f64;
    }
    major &= (ps - pc).abs() <= 1e-9 * ps.max(f64::MIN_POSITIVE);
    SandwichReport {
        s: s.to_vec(),
        lower_bound_holds: violations == 0,
        violations,
        max_violation,
        max_ratio,
        top_holds: s.first().copied().unwrap_or(0.0) + tol >= c.first().copied().unwrap_or(0.0),
        majorization_holds: major,
        multiplier,
        multiplier_equal: multiplier
            .then(|| s.iter().zip(&c).all(|(s, c)| (s - c).abs() <= SANDWICH_TOL)),
        c,
    }
}

/// Column norms are `‖σ(·, ξ)‖_{L²}`.
pub fn sandwich_check(a: &OperatorMatrix, sigma: &SymbolGrid) -> Result<SandwichReport> {
    a.level().check_same(sigma.level())?;
    let s = singular_values(a)?.s;
    let c = column_lr(sigma, Exponent::Finite(2.0));
    Ok(sandwich_compare(&s, &c, sigma.multiplier_values().is_some()))
}

/// Same comparison for an arbitrary matrix and its own column norms.
pub fn sandwich_check_matrix(a: &DMatrix<Complex64>) -> Result<SandwichReport> {
    let s = linalg::singular_values(a)?;
    let c: Vec<f64> = a
        .column_iter()
        .map(|col| col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(sandwich_compare(&s, &c, linalg::is_diagonal(a)))
}

/// Symbol ranges `A_n = {σ(x, ξ) : shell(ξ) ≥ n}`.
#[derive(Clone, Debug)]
pub struct FredholmCloud {
    pub cutoffs: Vec<usize>,
    /// Distinct samples of each `A_n`, sorted.
    pub clouds: Vec<Vec<Complex64>>,
    /// `d_H(A_{n_i}, A_{n_{i+1}})`.
    pub hausdorff: Vec<f64>,
    pub tolerance: f64,
    pub stabilized: bool,
}

impl FredholmCloud {
    /// The outermost cloud, the finite-level stand-in for `Spec_F`.
    pub fn essential(&self) -> &[Complex64] {
        self.clouds.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn sort_dedup(points: &mut Vec<Complex64>) {
    points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    points.dedup_by(|a, b| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
}

/// `sup_{a ∈ from} dist(a, to)`, with `to` sorted by real part.
fn directed_hausdorff(from: &[Complex64], to: &[Complex64]) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    if to.is_empty() {
        return f64::INFINITY;
    }
    from.par_iter()
        .map(|a| {
            let start = to.partition_point(|b| b.re < a.re);
            let mut best = f64::INFINITY;
            for b in to[start..].iter() {
                if b.re - a.re >= best {
                    break;
                }
                best = best.min((a - b).norm());
            }
            for b in to[..start].iter().rev() {
                if a.re - b.re >= best {
                    break;
                }
                best = best.min((a - b).norm());
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    sort_dedup(&mut a);
    sort_dedup(&mut b);
    directed_hausdorff(&a, &b).max(directed_hausdorff(&b, &a))
}

pub const FREDHOLM_TOLERANCE: f64 = 1e-6;

pub fn fredholm_cloud(sigma: &SymbolGrid, cutoffs: &[usize], tolerance: f64) -> Result<FredholmCloud> {
    let level = sigma.level();
    let shells = level.shells();
    let mut cutoffs = cutoffs.to_vec();
    cutoffs.sort_unstable();
    cutoffs.dedup();
    if let Some(&bad) = cutoffs.iter().find(|&&n| n >= shells.len()) {
        return Err(Error::LevelTooCoarse(format!(
            "shell cutoff {bad} beyond the outermost shell {}",
            shells.len() - 1
        )));
    }
    if cutoffs.is_empty() {
        return Err(Error::EmptyGrid("no shell cutoffs".into()));
    }
    let clouds: Vec<Vec<Complex64>> = cutoffs
        .iter()
        .map(|&n| {
            let mut pts: Vec<Complex64> = (shells[n].start..level.size())
                .flat_map(|xi| sigma.column(xi).iter().copied())
                .collect();
            sort_dedup(&mut pts);
            pts
        })
        .collect();
    let hausdorff: Vec<f64> = clouds
        .windows(2)
        .map(|w| directed_hausdorff(&w[0], &w[1]).max(directed_hausdorff(&w[1], &w[0])))
        .collect();
    let stabilized = hausdorff.last().is_none_or(|&d| d <= tolerance);
    Ok(FredholmCloud {
        cutoffs,
        clouds,
        hausdorff,
        tolerance,
        stabilized,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylReport {
    /// `(t, N(t))`
    pub table: Vec<(f64, usize)>,
    /// Least-squares slope of `log N` against `log t` over `N > 0`.
    pub slope: Option<f64>,
    pub reference: Option<f64>,
}

/// `t = (shell norm)^s` for shells `1..=N`.
pub fn shell_aligned_grid(level: &GroupLevel, s: f64) -> Vec<f64> {
    (1..level.shells().len())
        .map(|k| (level.shell_norm(k) as f64).powf(s))
        .collect()
}

/// `N(t) = #{k : |λ_k| ≤ t}` and the fitted growth exponent.
pub fn weyl_count(lambda: &[Complex64], t_grid: &[f64], reference: Option<f64>) -> Result<WeylReport> {
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid("no t values".into()));
    }
    let mut moduli: Vec<f64> = lambda.iter().map(|v| v.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let table: Vec<(f64, usize)> = t_grid
        .iter()
        .map(|&t| (t, moduli.partition_point(|&m| m <= t)))
        .collect();
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|(t, n)| *n > 0 && *t > 0.0)
        .map(|&(t, n)| (t.ln(), (n as f64).ln()))
        .collect();
    let slope = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(WeylReport {
        table,
        slope: slope.filter(|v| v.is_finite()),
        reference,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorialReport {
    pub sectorial: bool,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub width: f64,
    pub samples: usize,
    pub zeros: usize,
}

/// Smallest circular arc containing every argument.
pub fn covering_arc(angles: &mut [f64]) -> Option<(f64, f64, f64)> {
    if angles.is_empty() {
        return None;
    }
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let (first, last) = (angles[0], angles[n - 1]);
    let wrap_gap = first + 2.0 * std::f64::consts::PI - last;
    let (mut best_gap, mut best_i) = (wrap_gap, None);
    for i in 0..n - 1 {
        let gap = angles[i + 1] - angles[i];
        if gap > best_gap {
            best_gap = gap;
            best_i = Some(i);
        }
    }
    Some(match best_i {
        None => (first, last, last - first),
        Some(i) => {
            let (t1, t2) = (angles[i + 1], angles[i] + 2.0 * std::f64::consts::PI);
            (t1, t2, t2 - t1)
        }
    })
}

/// Sector test on `{σ(x, ξ) : shell(ξ) ≥ shell_min}`, zeros excluded.
pub fn sectorial_check(sigma: &SymbolGrid, shell_min: usize) -> Result<SectorialReport> {
    let level = sigma.level();
    let shells = level.shells();
    if shell_min >= shells.len() {
        return Err(Error::LevelTooCoarse(format!(
            "shell {shell_min} beyond the outermost shell {}",
            shells.len() - 1
        )));
    }
    let values: Vec<Complex64> = (shells[shell_min].start..level.size())
        .flat_map(|xi| sigma.column(xi).iter().copied())
        .collect();
    Ok(sectorial_values(&values))
}

pub fn sectorial_values(values: &[Complex64]) -> SectorialReport {
    let zeros = values.iter().filter(|v| v.norm() == 0.0).count();
    let mut angles: Vec<f64> = values
        .iter()
        .filter(|v| v.norm() != 0.0)
        .map(|v| v.im.atan2(v.re))
        .collect();
    let arc = covering_arc(&mut angles);
    let width = arc.map_or(0.0, |a| a.2);
    SectorialReport {
        sectorial: width < std::f64::consts::FRAC_PI_2,
        theta1: arc.map(|a| a.0),
        theta2: arc.map(|a| a.1),
        width,
        samples: values.len(),
        zeros,
    }
}

/// `(A − λI)^{−1} − T_{1/(σ−λ)}`.
pub fn inverse_residual(sigma: &SymbolGrid, lambda: Complex64) -> Result<OperatorMatrix> {
    let m = sigma.size();
    for xi in 0..m {
        for (x, v) in sigma.column(xi).iter().enumerate() {
            if *v - lambda == Complex64::new(0.0, 0.0) {
                return Err(Error::SymbolZero { x, xi });
            }
        }
    }
    let a = assemble(sigma);
    let shifted = a.entries() - DMatrix::from_diagonal_element(m, m, lambda);
    let inv = linalg::inverse(&shifted)?;
    let recip = sigma.map(|v| Complex64::new(1.0, 0.0) / (v - lambda), "1/(sigma-lambda)")?;
    let t = assemble(&recip);
    OperatorMatrix::new(sigma.level(), inv - t.entries(), "inverse-residual")
}

pub fn inverse_residual_report(
    sigma: &SymbolSource,
    lambda: Complex64,
    levels: &[GroupLevel],
    s_values: &[f64],
) -> Result<ResidualReport> {
    let rows = levels
        .par_iter()
        .map(|l| {
            let r = inverse_residual(&sigma.eval_grid(l)?, lambda)?;
            residual_norms(&r, s_values).map(|n| (l.level(), n))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::build(
        "inverse-residual",
        vec![sigma.to_string(), format!("lambda={}{:+}i", lambda.re, lambda.im)],
        s_values,
        rows,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct LrProbe {
    pub lower_bound: f64,
    pub best_probe: String,
    pub probes: usize,
}

/// `max ‖Af‖_{L^r}/‖f‖_{L^r}` over all characters and `trials` random `f`.
pub fn op_norm_lr_probe(a: &OperatorMatrix, r: Exponent, trials: usize, seed: u64) -> Result<LrProbe> {
    r.validate()?;
    let level = a.level();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes: Vec<(String, GridFunction)> = (0..level.size())
        .map(|pos| (format!("character {}", level.dual(pos)), GridFunction::character(level, pos)))
        .collect();
    for t in 0..trials {
        let f = GridFunction::from_fn(level, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        probes.push((format!("random {t}"), f));
    }
    let ratios = probes
        .par_iter()
        .map(|(_, f)| {
            let den = lr_norm_values(f.values(), r);
            let num = lr_norm_values(apply(a, f)?.values(), r);
            Ok(if den > 0.0 { num / den } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = ratios
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > ratios[b] { i } else { b });
    Ok(LrProbe {
        lower_bound: ratios[best],
        best_probe: probes[best].0.clone(),
        probes: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupDescriptor;

    fn level(p: u64, n: u32) -> GroupLevel {
        GroupLevel::new(GroupDescriptor::padic(p, 1).unwrap(), n).unwrap()
    }

    fn grid(text: &str, l: &GroupLevel) -> SymbolGrid {
        let src = if text.contains(':') {
            SymbolSource::builtin(text)
        } else {
            SymbolSource::expr(text)
        };
        src.unwrap().eval_grid(l).unwrap()
    }

    fn spec(s: &[f64]) -> SingularSpectrum {
        SingularSpectrum::new(&level(2, 0), s.to_vec())
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn decompositions() {
        let l = level(2, 2);
        let a = assemble(&grid("vladimirov:s=1", &l));
        assert_eq!(singular_values(&a).unwrap().s, vec![4.0, 4.0, 2.0, 0.0]);
        let b = assemble(&grid("bessel:s=-1", &l));
        assert_eq!(eigenvalues(&b).unwrap().lambda, vec![c(1.0), c(0.5), c(0.25), c(0.25)]);
        // nilpotent Jordan block
        let mut j = DMatrix::from_element(4, 4, c(0.0));
        for i in 0..3 {
            j[(i, i + 1)] = c(1.0);
        }
        let jm = OperatorMatrix::new(&l, j, "jordan").unwrap();
        assert!(eigenvalues(&jm).unwrap().lambda.iter().all(|v| v.norm() == 0.0));
        // rank one u v*
        let u: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let v: Vec<Complex64> = (0..4).map(|i| Complex64::new(1.0, -(i as f64))).collect();
        let r1 = DMatrix::from_fn(4, 4, |i, k| u[i] * v[k].conj());
        let s = singular_values(&OperatorMatrix::new(&l, r1, "r1").unwrap()).unwrap().s;
        let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((s[0] - nu * nv).abs() < 1e-12 * nu * nv);
        assert!(s[1..].iter().all(|&x| x < 1e-12 * nu * nv));
    }

    #[test]
    fn schatten_examples() {
        assert_eq!(schatten_norm(&spec(&[0.0, 2.0, 4.0, 4.0]), 2.0).unwrap(), 6.0);
        assert_eq!(schatten_norm(&spec(&[3.0, 0.0]), 1.0).unwrap(), 3.0);
        assert!((schatten_norm(&spec(&[1.0; 4]), 4.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(schatten_norm(&spec(&[1.0]), 0.5).is_err());
        let l = level(2, 2);
        let f = symbol_schatten_functional(&grid("bessel:s=-1", &l), 2.0).unwrap();
        assert_eq!(f * f, 1.375);
        assert_eq!(symbol_schatten_functional(&grid("0", &l), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn hs_examples() {
        let l = level(2, 2);
        let h = hs_identity_check(&grid("bessel:s=-1", &l));
        assert_eq!((h.lhs, h.rhs, h.delta), (1.375, 1.375, 0.0));
        let h = hs_identity_check(&grid("0", &l));
        assert_eq!((h.lhs, h.rhs, h.delta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn dixmier_and_lorentz() {
        let d = dixmier_functional(&spec(&[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(d.value, 1.0 / 2f64.ln());
        assert_eq!(d.argmax, 1);
        let d = dixmier_functional(&spec(&[1.0; 16]));
        assert_eq!(d.argmax, 15);
        assert_eq!(lorentz_norm(&spec(&[1.0, 0.0]), 0.7, Exponent::Finite(3.0)).unwrap(), 1.0);
        let harmonic: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
        let h: f64 = harmonic.iter().sum();
        let v = lorentz_norm(&spec(&harmonic), 1.0, Exponent::Finite(2.0)).unwrap();
        assert!((v - h.sqrt()).abs() < 1e-14);
        assert_eq!(lorentz_norm(&spec(&[0.0; 3]), 1.0, Exponent::Finite(2.0)).unwrap(), 0.0);
        assert_eq!(lorentz_norm(&spec(&[1.0, 1.0]), 1.0, Exponent::Infinity).unwrap(), 2.0);
        assert!(lorentz_norm(&spec(&[1.0]), 0.0, Exponent::Finite(1.0)).is_err());
    }

    #[test]
    fn nuclear_examples() {
        let l = level(2, 2);
        let v = nuclear_bound(&grid("bessel:s=-2", &l), 1.0, Exponent::Finite(2.0)).unwrap();
        assert_eq!(v, 1.375);
        assert_eq!(nuclear_bound(&grid("0", &l), 0.5, Exponent::Finite(2.0)).unwrap(), 0.0);
        assert!(nuclear_bound(&grid("1", &l), 1.5, Exponent::Finite(2.0)).is_err());
    }

    #[test]
    fn gohberg_examples() {
        let l = level(2, 3);
        assert_eq!(gohberg_dsigma(&grid("1", &l)).shell_sup, vec![1.0; 4]);
        assert_eq!(gohberg_dsigma(&grid("bessel:s=-1", &l)).shell_sup, vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(gohberg_dsigma(&grid("vladimirov:s=1", &l)).d_estimate, 8.0);
        let r = gohberg_bound_check(&grid("radial:values=1,1,1,0.5", &l), 20, 7).unwrap();
        assert_eq!(r.bound, 0.5);
        assert!(r.min_slack >= -1e-12);
        assert_eq!(r.column_identity_error, 0.0);
        let r = gohberg_bound_check(&grid("1", &l), 0, 1).unwrap();
        assert_eq!(r.bound, 1.0);
    }

    #[test]
    fn sandwich_examples() {
        let l = level(2, 2);
        let sigma = grid("vladimirov:s=1", &l);
        let r = sandwich_check(&assemble(&sigma), &sigma).unwrap();
        assert_eq!(r.s, vec![4.0, 4.0, 2.0, 0.0]);
        assert_eq!(r.c, vec![4.0, 4.0, 2.0, 0.0]);
        assert_eq!(r.multiplier_equal, Some(true));
        // [[1,1],[0,0]]: s = (√2, 0), c = (1, 1)
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(0.0)]);
        let r = sandwich_check_matrix(&a).unwrap();
        assert!(!r.lower_bound_holds);
        assert!(r.top_holds && r.majorization_holds);
    }

    #[test]
    fn fredholm_examples() {
        let l = level(2, 4);
        let cl = fredholm_cloud(&grid("3", &l), &[0, 2, 4], FREDHOLM_TOLERANCE).unwrap();
        assert!(cl.clouds.iter().all(|c0| c0 == &vec![c(3.0)]));
        let cl = fredholm_cloud(&grid("re_char(1/2, x)", &l), &[0, 1, 2, 3, 4], 1e-6).unwrap();
        assert!(cl.clouds.iter().all(|c0| c0 == &vec![c(-1.0), c(1.0)]));
        assert!(cl.stabilized);
        let cl = fredholm_cloud(&grid("bessel:s=-1", &l), &[1, 2, 3, 4], 1e-6).unwrap();
        for (n, cloud) in cl.cutoffs.iter().zip(&cl.clouds) {
            assert_eq!(hausdorff(cloud, &[c(0.0)]), 0.5f64.powi(*n as i32));
        }
        assert_eq!(cl.hausdorff, vec![0.25, 0.125, 0.0625]);
        assert!(fredholm_cloud(&grid("1", &l), &[5], 1e-6).is_err());
    }

    #[test]
    fn weyl_examples() {
        let l = level(2, 6);
        let m = SymbolSource::builtin("vladimirov:s=1").unwrap().multiplier(&l).unwrap().unwrap();
        let e = multiplier_eigenvalues(&m);
        let w = weyl_count(&e.lambda, &shell_aligned_grid(&l, 1.0), Some(1.0)).unwrap();
        for (j, (t, n)) in w.table.iter().enumerate() {
            assert_eq!((*t, *n), (2f64.powi(j as i32 + 1), 1 << (j + 1)));
        }
        assert!((w.slope.unwrap() - 1.0).abs() < 1e-12);
        let w = weyl_count(&e.lambda, &[0.5], None).unwrap();
        assert_eq!(w.table, vec![(0.5, 1)]);
        let w = weyl_count(&[c(5.0)], &[1.0, 2.0], None).unwrap();
        assert_eq!(w.table, vec![(1.0, 0), (2.0, 0)]);
        assert!(w.slope.is_none());
        assert!(matches!(weyl_count(&e.lambda, &[], None), Err(Error::EmptyGrid(_))));
    }

    #[test]
    fn sectorial_examples() {
        let pos = sectorial_values(&[c(1.0), c(2.0), c(0.0)]);
        assert!(pos.sectorial && pos.width == 0.0 && pos.zeros == 1);
        let edge = sectorial_values(&[c(1.0), Complex64::new(0.0, 1.0)]);
        assert!(!edge.sectorial);
        assert_eq!(edge.width, std::f64::consts::FRAC_PI_2);
        let arc: Vec<Complex64> = (0..=30)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3 * k as f64 / 30.0))
            .collect();
        let r = sectorial_values(&arc);
        assert!(r.sectorial && (r.width - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        // an arc straddling the negative real axis
        let r = sectorial_values(&[Complex64::from_polar(1.0, 3.0), Complex64::from_polar(1.0, -3.0)]);
        assert!((r.width - (2.0 * std::f64::consts::PI - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn inverse_residual_examples() {
        let l = level(2, 3);
        let r = inverse_residual(&grid("bessel:s=1", &l), Complex64::new(-1.0, 0.5)).unwrap();
        assert_eq!(r.max_abs(), 0.0);
        let r = inverse_residual(&grid("2", &l), c(5.0)).unwrap();
        assert_eq!(r.max_abs(), 0.0);
        assert!(matches!(
            inverse_residual(&grid("bessel:s=1", &l), c(2.0)),
            Err(Error::SymbolZero { .. })
        ));
    }

    #[test]
    fn lr_probe_examples() {
        let l = level(2, 3);
        let id = OperatorMatrix::identity(&l);
        let p = op_norm_lr_probe(&id, Exponent::Finite(3.0), 5, 1).unwrap();
        assert!((p.lower_bound - 1.0).abs() < 1e-12);
        let d = assemble(&grid("bessel:s=1", &l));
        let p = op_norm_lr_probe(&d, Exponent::Finite(1.5), 0, 1).unwrap();
        assert!((p.lower_bound - 8.0).abs() < 1e-12);
        let z = assemble(&grid("0", &l));
        assert_eq!(op_norm_lr_probe(&z, Exponent::Infinity, 3, 1).unwrap().lower_bound, 0.0);
        assert!(op_norm_lr_probe(&z, Exponent::Finite(0.5), 3, 1).is_err());
    }
}
