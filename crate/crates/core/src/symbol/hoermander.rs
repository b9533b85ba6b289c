use serde::Serialize;

use super::{x_derivative, SymbolSource};
use crate::error::{Error, Result};
use crate::group::GroupLevel;
use crate::transform::SobolevScale;

#[derive(Clone, Copy, Debug)]
pub struct HoermanderParams {
    pub m: f64,
    pub rho: f64,
    pub delta: f64,
    pub alpha_max: u32,
    pub beta_max: u32,
    pub scale: SobolevScale,
}

impl HoermanderParams {
    pub fn new(m: f64, rho: f64, delta: f64) -> Self {
        HoermanderParams {
            m,
            rho,
            delta,
            alpha_max: 2,
            beta_max: 1,
            scale: SobolevScale::Vladimirov,
        }
    }
}

/// Estimated seminorm constants `C[α][β]`, per level and overall.
#[derive(Clone, Debug, Serialize)]
pub struct HoermanderReport {
    pub m: f64,
    pub rho: f64,
    pub delta: f64,
    pub scale: String,
    pub alpha_max: u32,
    pub beta_max: u32,
    pub levels: Vec<u32>,
    /// `per_level[i][α][β]`
    pub per_level: Vec<Vec<Vec<f64>>>,
    /// Max over levels.
    pub constants: Vec<Vec<f64>>,
    pub stable: Vec<Vec<bool>>,
    pub verdict: String,
    pub truncation_floor_used: bool,
}

/// A per-level sequence is stable when it never increases or when the
/// last two values differ by less than 10%.
pub(crate) fn level_stable(seq: &[f64]) -> bool {
    let non_increasing = seq.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    let close = match seq {
        [.., a, b] => {
            let top = a.abs().max(b.abs());
            top == 0.0 || (a - b).abs() < 0.1 * top
        }
        _ => true,
    };
    non_increasing || close
}

fn level_table(
    source: &SymbolSource,
    level: &GroupLevel,
    p: &HoermanderParams,
) -> Result<Vec<Vec<f64>>> {
    let grid = source.eval_grid(level)?;
    let size = level.size();
    let na = p.alpha_max as usize + 1;
    let nb = p.beta_max as usize + 1;
    let mut table = vec![vec![0.0; nb]; na];
    let bracket: Vec<f64> = (0..size).map(|xi| level.dual_bracket(xi) as f64).collect();
    for beta in 0..nb {
        let d = x_derivative(&grid, beta as f64, p.scale)?;
        let db = p.delta * beta as f64;
        // α = 0: the symbol itself.
        let mut c0 = 0.0f64;
        for xi in 0..size {
            let sup = d.column(xi).iter().map(|v| v.norm()).fold(0.0, f64::max);
            c0 = c0.max(sup / bracket[xi].powf(p.m + db));
        }
        table[0][beta] = c0;
        if na == 1 {
            continue;
        }
        for eta in 1..size {
            let eta_norm = level.dual_norm(eta) as f64;
            let shift = level.shift_table(eta);
            for xi in 0..size {
                if eta_norm > bracket[xi] {
                    continue;
                }
                let a = d.column(shift[xi]);
                let b = d.column(xi);
                let sup = a
                    .iter()
                    .zip(b)
                    .map(|(u, v)| (u - v).norm())
                    .fold(0.0, f64::max);
                if sup == 0.0 {
                    continue;
                }
                for (alpha, row) in table.iter_mut().enumerate().skip(1) {
                    let al = alpha as f64;
                    let denom = eta_norm.powf(al) * bracket[xi].powf(p.m - p.rho * al + db);
                    row[beta] = row[beta].max(sup / denom);
                }
            }
        }
    }
    Ok(table)
}

/// Estimates the class constants `sup |D^β_x Δ_η σ| / (‖η‖^α ⟨ξ⟩^{m−ρα+δβ})`
/// over `0 < ‖η‖ ≤ ⟨ξ⟩`; `α = 0` uses `σ` itself.
pub fn hoermander_estimate(
    source: &SymbolSource,
    levels: &[GroupLevel],
    params: &HoermanderParams,
) -> Result<HoermanderReport> {
    let HoermanderParams { rho, delta, .. } = *params;
    if !(0.0 <= delta && delta <= rho && rho <= 1.0) {
        return Err(Error::BadExponent(format!(
            "class needs 0 <= delta <= rho <= 1, got rho={rho}, delta={delta}"
        )));
    }
    if levels.is_empty() {
        return Err(Error::EmptyGrid("no levels given".into()));
    }
    let per_level = levels
        .iter()
        .map(|l| level_table(source, l, params))
        .collect::<Result<Vec<_>>>()?;
    let na = params.alpha_max as usize + 1;
    let nb = params.beta_max as usize + 1;
    let mut constants = vec![vec![0.0; nb]; na];
    let mut stable = vec![vec![true; nb]; na];
    for a in 0..na {
        for b in 0..nb {
            let seq: Vec<f64> = per_level.iter().map(|t| t[a][b]).collect();
            constants[a][b] = seq.iter().copied().fold(0.0, f64::max);
            stable[a][b] = level_stable(&seq);
        }
    }
    let all = stable.iter().flatten().all(|&s| s);
    Ok(HoermanderReport {
        m: params.m,
        rho,
        delta,
        scale: match params.scale {
            SobolevScale::Bracket => "bracket".into(),
            SobolevScale::Vladimirov => "vladimirov".into(),
        },
        alpha_max: params.alpha_max,
        beta_max: params.beta_max,
        levels: levels.iter().map(|l| l.level()).collect(),
        per_level,
        constants,
        stable,
        verdict: if all { "stable" } else { "unstable" }.into(),
        truncation_floor_used: source.uses_truncation_floor(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupDescriptor;

    fn levels(p: u64, ns: std::ops::RangeInclusive<u32>) -> Vec<GroupLevel> {
        ns.map(|n| GroupLevel::new(GroupDescriptor::padic(p, 1).unwrap(), n).unwrap())
            .collect()
    }

    #[test]
    fn constant_symbol() {
        let src = SymbolSource::expr("-3").unwrap();
        let r = hoermander_estimate(&src, &levels(2, 1..=4), &HoermanderParams::new(0.0, 1.0, 0.0))
            .unwrap();
        assert_eq!(r.constants[0][0], 3.0);
        for (a, row) in r.constants.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if a + b > 0 {
                    assert!(v < 1e-12, "C[{a}][{b}] = {v}");
                }
            }
        }
        assert_eq!(r.verdict, "stable");
    }

    #[test]
    fn norm_xi_at_order_zero_is_unstable() {
        let src = SymbolSource::expr("norm_xi").unwrap();
        let r = hoermander_estimate(&src, &levels(2, 2..=5), &HoermanderParams::new(0.0, 1.0, 0.0))
            .unwrap();
        let c00: Vec<f64> = r.per_level.iter().map(|t| t[0][0]).collect();
        assert_eq!(c00, vec![4.0, 8.0, 16.0, 32.0]);
        assert_eq!(r.verdict, "unstable");
    }

    #[test]
    fn bad_class_parameters() {
        let src = SymbolSource::expr("1").unwrap();
        let p = HoermanderParams::new(0.0, 0.5, 0.7);
        assert!(hoermander_estimate(&src, &levels(2, 1..=1), &p).is_err());
    }

    #[test]
    fn stability_rule() {
        assert!(level_stable(&[3.0, 2.0, 2.0]));
        assert!(level_stable(&[1.0, 1.05]));
        assert!(!level_stable(&[1.0, 2.0]));
        assert!(level_stable(&[0.0, 0.0]));
    }
}
