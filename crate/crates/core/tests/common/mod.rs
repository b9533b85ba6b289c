#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectra_core::group::{GroupDescriptor, GroupLevel};
use spectra_core::symbol::SymbolGrid;
use spectra_core::transform::GridFunction;

pub fn padic(p: u64, d: u32, n: u32) -> GroupLevel {
    GroupLevel::new(GroupDescriptor::padic(p, d).unwrap(), n).unwrap()
}

pub fn vilenkin(factors: &[u64], n: u32) -> GroupLevel {
    GroupLevel::new(GroupDescriptor::vilenkin(factors.to_vec()).unwrap(), n).unwrap()
}

/// `{ξ·x}` in floating point, straight from the dual element's
/// rationals and the point's residues.
pub fn oracle_phase(level: &GroupLevel, pos: usize, x: usize) -> f64 {
    let xi = level.dual(pos);
    let pt = level.point(x);
    if let Some(coords) = xi.prufer_coords() {
        let p = match level.descriptor() {
            GroupDescriptor::Padic { p, .. } => *p,
            _ => unreachable!(),
        };
        coords
            .iter()
            .zip(&pt.coords)
            .map(|(c, &xc)| {
                let den = p.pow(c.exp);
                ((c.num as u128 * xc as u128) % den as u128) as f64 / den as f64
            })
            .sum()
    } else {
        let digits = xi.digit_values().unwrap();
        digits
            .iter()
            .zip(&pt.coords)
            .zip(level.radices())
            .map(|((b, x), m)| ((b * x) % m) as f64 / *m as f64)
            .sum()
    }
}

pub fn oracle_char(level: &GroupLevel, pos: usize, x: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * oracle_phase(level, pos, x))
}

/// `(1/M) Σ_x f(x) conj χ_ξ(x)` by direct summation.
pub fn oracle_forward(f: &GridFunction) -> Vec<Complex64> {
    let level = f.level();
    let m = level.size();
    (0..m)
        .map(|pos| {
            f.values()
                .iter()
                .enumerate()
                .map(|(x, v)| v * oracle_char(level, pos, x).conj())
                .sum::<Complex64>()
                / m as f64
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_function(level: &GroupLevel, rng: &mut ChaCha8Rng) -> GridFunction {
    GridFunction::from_fn(level, |_| random_complex(rng))
}

pub fn random_symbol(level: &GroupLevel, rng: &mut ChaCha8Rng) -> SymbolGrid {
    let m = level.size();
    let values = (0..m * m).map(|_| random_complex(rng)).collect();
    SymbolGrid::new(level, values, "random").unwrap()
}

/// A spread of small levels over every supported group shape.
pub fn small_levels() -> Vec<GroupLevel> {
    vec![
        padic(2, 1, 0),
        padic(2, 1, 3),
        padic(3, 1, 2),
        padic(5, 1, 2),
        padic(2, 2, 2),
        padic(3, 2, 1),
        vilenkin(&[2, 3, 2], 3),
        vilenkin(&[3, 4], 2),
    ]
}
