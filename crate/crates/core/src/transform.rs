//! Fourier analysis at level N: a mixed-radix fast transform over the
//! cyclic factors of the quotient, its O(M²) reference, L^r and Sobolev
//! norms, and the Littlewood–Paley square function.
//!
//! Conventions: `f̂(ξ) = (1/M) Σ_x f(x) conj χ_ξ(x)` (normalized Haar
//! measure) and `f(x) = Σ_ξ f̂(ξ) χ_ξ(x)`. Spectra are stored in canonical
//! dual order (see [`crate::group`]).

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{split_digits, unit_root, GroupLevel};

/// A function on the level-N point grid. Haar weight `1/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    level: GroupLevel,
    values: Vec<Complex64>,
}

/// A function on the truncated dual, in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumFunction {
    level: GroupLevel,
    values: Vec<Complex64>,
}

macro_rules! level_function {
    ($ty:ident) => {
        impl $ty {
            pub fn new(level: GroupLevel, values: Vec<Complex64>) -> Result<Self> {
                if values.len() != level.size() {
                    return Err(Error::LevelMismatch(format!(
                        "{} values for a level of size {}",
                        values.len(),
                        level.size()
                    )));
                }
                Ok($ty { level, values })
            }

            pub fn from_fn(level: &GroupLevel, f: impl FnMut(usize) -> Complex64) -> Self {
                let values = (0..level.size()).map(f).collect();
                $ty {
                    level: level.clone(),
                    values,
                }
            }

            pub fn zeros(level: &GroupLevel) -> Self {
                $ty {
                    level: level.clone(),
                    values: vec![Complex64::new(0.0, 0.0); level.size()],
                }
            }

            pub fn level(&self) -> &GroupLevel {
                &self.level
            }

            pub fn values(&self) -> &[Complex64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<Complex64> {
                self.values
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            /// Largest pointwise distance to another function on the same level.
            pub fn max_abs_diff(&self, other: &Self) -> f64 {
                self.values
                    .iter()
                    .zip(&other.values)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max)
            }
        }
    };
}

level_function!(GridFunction);
level_function!(SpectrumFunction);

impl SpectrumFunction {
    /// The canonical-order indicator of one dual position.
    pub fn delta(level: &GroupLevel, pos: usize) -> Self {
        let mut out = SpectrumFunction::zeros(level);
        out.values[pos] = Complex64::new(1.0, 0.0);
        out
    }
}

impl GridFunction {
    /// The character `χ_ξ` for the dual element at canonical position `pos`.
    pub fn character(level: &GroupLevel, pos: usize) -> Self {
        inverse(&SpectrumFunction::delta(level, pos))
    }
}

/// Precomputed plan for one cyclic factor of length `n`.
struct CyclicPlan {
    n: usize,
    factors: Vec<usize>,
    /// `exp(sign·2πi k/n)` for `k < n`, from exact phases.
    roots: Vec<Complex64>,
}

impl CyclicPlan {
    fn new(n: usize, inverse: bool) -> Self {
        let mut factors = Vec::new();
        let mut rest = n;
        let mut q = 2;
        while rest > 1 {
            while rest.is_multiple_of(q) {
                factors.push(q);
                rest /= q;
            }
            q += 1;
        }
        let roots = (0..n as u64)
            .map(|k| {
                let z = unit_root(k, n as u64);
                if inverse {
                    z
                } else {
                    z.conj()
                }
            })
            .collect();
        CyclicPlan { n, factors, roots }
    }

    /// Out-of-place decimation-in-time transform of `input[offset + stride·j]`.
    fn run(&self, input: &[Complex64], offset: usize, stride: usize, out: &mut [Complex64]) {
        self.recurse(input, offset, stride, out, 0, 1, &mut Vec::new());
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        input: &[Complex64],
        offset: usize,
        stride: usize,
        out: &mut [Complex64],
        depth: usize,
        root_step: usize,
        scratch: &mut Vec<Complex64>,
    ) {
        let len = out.len();
        if len == 1 {
            out[0] = input[offset];
            return;
        }
        let radix = self.factors[depth];
        let sub = len / radix;
        for r in 0..radix {
            self.recurse(
                input,
                offset + r * stride,
                stride * radix,
                &mut out[r * sub..(r + 1) * sub],
                depth + 1,
                root_step * radix,
                scratch,
            );
        }
        // out currently holds the `radix` sub-transforms back to back.
        if radix == 2 {
            for k in 0..sub {
                let a = out[k];
                let b = out[sub + k] * self.roots[k * root_step];
                out[k] = a + b;
                out[sub + k] = a - b;
            }
            return;
        }
        scratch.resize(radix, Complex64::new(0.0, 0.0));
        let radix_step = sub * root_step; // ω_radix = ω_n^{sub}, in units of the top root
        for k in 0..sub {
            for (r, t) in scratch.iter_mut().enumerate() {
                *t = out[r * sub + k] * self.roots[(r * k * root_step) % self.n];
            }
            for q in 0..radix {
                let mut acc = scratch[0];
                for (r, t) in scratch.iter().enumerate().skip(1) {
                    acc += t * self.roots[(r * q * radix_step) % self.n];
                }
                out[q * sub + k] = acc;
            }
        }
    }
}

/// Tensor-product transform over every cyclic factor of the level, in
/// flat (digit) indexing on both sides.
fn tensor_transform(level: &GroupLevel, data: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let mut cur = data.to_vec();
    let mut next = vec![Complex64::new(0.0, 0.0); cur.len()];
    let size = level.size();
    let mut fiber_in = Vec::new();
    let mut fiber_out = Vec::new();
    for (axis, &radix) in level.radices().iter().enumerate() {
        let n = radix as usize;
        if n == 1 {
            continue;
        }
        let plan = CyclicPlan::new(n, inverse);
        let stride = level.strides()[axis];
        fiber_in.resize(n, Complex64::new(0.0, 0.0));
        fiber_out.resize(n, Complex64::new(0.0, 0.0));
        for base in 0..size {
            // visit each fiber once, from its zero-digit start
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for (j, slot) in fiber_in.iter_mut().enumerate() {
                *slot = cur[base + j * stride];
            }
            plan.run(&fiber_in, 0, 1, &mut fiber_out);
            for (j, v) in fiber_out.iter().enumerate() {
                next[base + j * stride] = *v;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Fast forward transform, `O(M log M)`.
pub fn forward(f: &GridFunction) -> SpectrumFunction {
    let level = &f.level;
    let by_dft = tensor_transform(level, &f.values, false);
    let scale = 1.0 / level.size() as f64;
    let values = level.dft_order().iter().map(|&m| by_dft[m] * scale).collect();
    SpectrumFunction {
        level: level.clone(),
        values,
    }
}

/// Fast inverse transform; `inverse(forward(f)) = f`.
pub fn inverse(phi: &SpectrumFunction) -> GridFunction {
    let level = &phi.level;
    let mut by_dft = vec![Complex64::new(0.0, 0.0); level.size()];
    for (pos, &m) in level.dft_order().iter().enumerate() {
        by_dft[m] = phi.values[pos];
    }
    GridFunction {
        level: level.clone(),
        values: tensor_transform(level, &by_dft, true),
    }
}

/// Exact phase numerators `{ξ·x}·L` are built incrementally along the
/// flat point order; `L` is the common denominator of the level.
struct PhaseWalker {
    modulus: u64,
    /// phase increment contributed by one step of each point digit
    steps: Vec<u64>,
    radices: Vec<u64>,
}

impl PhaseWalker {
    fn new(level: &GroupLevel, dft: usize) -> Self {
        let modulus = level.phase_modulus();
        let radices = level.radices().to_vec();
        let mut digits = vec![0; radices.len()];
        split_digits(dft, &radices, &mut digits);
        let steps = digits
            .iter()
            .zip(&radices)
            .map(|(&b, &n)| b * (modulus / n) % modulus)
            .collect();
        PhaseWalker {
            modulus,
            steps,
            radices,
        }
    }

    /// Calls `visit(x_flat, phase_numerator)` for every point in flat order.
    fn walk(&self, mut visit: impl FnMut(usize, usize)) {
        let total: usize = self.radices.iter().product::<u64>() as usize;
        let mut digits = vec![0u64; self.radices.len()];
        let mut phase = 0u64;
        for x in 0..total {
            visit(x, phase as usize);
            // odometer increment
            for (i, d) in digits.iter_mut().enumerate() {
                *d += 1;
                phase = (phase + self.steps[i]) % self.modulus;
                if *d < self.radices[i] {
                    break;
                }
                *d = 0;
                // remove the n_i steps just taken: n_i·step ≡ 0 mod L
            }
        }
    }
}

/// Direct `O(M²)` double sum with exact integer phases.
pub fn naive_forward(f: &GridFunction) -> SpectrumFunction {
    naive_forward_many(std::slice::from_ref(f)).remove(0)
}

/// [`naive_forward`] over a batch of functions sharing one level; the
/// character row is generated once per dual element.
pub fn naive_forward_many(fs: &[GridFunction]) -> Vec<SpectrumFunction> {
    let Some(first) = fs.first() else {
        return Vec::new();
    };
    let level = first.level.clone();
    assert!(fs.iter().all(|f| f.level == level), "mixed levels in batch");
    let m = level.size();
    let count = fs.len();
    let modulus = level.phase_modulus();
    let roots: Vec<Complex64> = (0..modulus).map(|k| unit_root(k, modulus).conj()).collect();
    // point-major layout so the inner loop runs over the batch
    let mut packed = vec![Complex64::new(0.0, 0.0); m * count];
    for (k, f) in fs.iter().enumerate() {
        for (x, v) in f.values.iter().enumerate() {
            packed[x * count + k] = *v;
        }
    }
    let scale = 1.0 / m as f64;
    let mut outs = vec![vec![Complex64::new(0.0, 0.0); m]; count];
    let mut acc = vec![Complex64::new(0.0, 0.0); count];
    for pos in 0..m {
        acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        let walker = PhaseWalker::new(&level, level.dft_index(pos));
        walker.walk(|x, phase| {
            let w = roots[phase];
            let row = &packed[x * count..(x + 1) * count];
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v * w;
            }
        });
        for (out, a) in outs.iter_mut().zip(&acc) {
            out[pos] = a * scale;
        }
    }
    outs.into_iter()
        .map(|values| SpectrumFunction {
            level: level.clone(),
            values,
        })
        .collect()
}

/// Exponent of an `L^r` norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(r: f64) -> Result<Self> {
        let e = Exponent::Finite(r);
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Exponent::Finite(r) if !(r >= 1.0 && r.is_finite()) => {
                Err(Error::BadExponent(format!("L^r needs r >= 1, got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Hölder conjugate `r'`.
    pub fn conjugate(&self) -> Exponent {
        match *self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(r) => Exponent::Finite(r / (r - 1.0)),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(r) => write!(f, "{r}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            t => {
                let r: f64 = t
                    .parse()
                    .map_err(|_| Error::BadExponent(format!("cannot parse `{t}`")))?;
                Exponent::finite(r)
            }
        }
    }
}

/// `‖·‖_{L^r}` of raw samples with weight `1/len`.
pub(crate) fn lr_norm_values(values: &[Complex64], r: Exponent) -> f64 {
    match r {
        Exponent::Infinity => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
        Exponent::Finite(r) => {
            let w = 1.0 / values.len() as f64;
            if r == 2.0 {
                (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w).sqrt()
            } else {
                (values.iter().map(|v| v.norm().powf(r)).sum::<f64>() * w).powf(1.0 / r)
            }
        }
    }
}

pub fn lr_norm(f: &GridFunction, r: Exponent) -> Result<f64> {
    r.validate()?;
    Ok(lr_norm_values(&f.values, r))
}

/// Which frequency weight a Sobolev-type multiplier uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SobolevScale {
    /// `⟨ξ⟩^s`, the Bessel potential `J_s`.
    Bracket,
    /// `‖ξ‖^s`, the Vladimirov operator `D^s`, with `0^s ≔ 0` for `s ≠ 0`.
    Vladimirov,
}

impl std::str::FromStr for SobolevScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bracket" => Ok(SobolevScale::Bracket),
            "vladimirov" => Ok(SobolevScale::Vladimirov),
            other => Err(Error::InvalidDescriptor(format!("unknown scale `{other}`"))),
        }
    }
}

/// The multiplier `⟨ξ⟩^s` or `‖ξ‖^s` at every canonical position.
pub fn sobolev_weights(level: &GroupLevel, s: f64, scale: SobolevScale) -> Vec<f64> {
    level
        .dual_norms()
        .iter()
        .map(|&norm| match scale {
            SobolevScale::Bracket => (norm.max(1) as f64).powf(s),
            SobolevScale::Vladimirov => {
                if s == 0.0 {
                    1.0
                } else if norm == 0 {
                    0.0
                } else {
                    (norm as f64).powf(s)
                }
            }
        })
        .collect()
}

/// `J_s f` or `D^s f`.
pub fn sobolev_apply(f: &GridFunction, s: f64, scale: SobolevScale) -> GridFunction {
    let mut spec = forward(f);
    for (v, w) in spec.values.iter_mut().zip(sobolev_weights(&f.level, s, scale)) {
        *v *= w;
    }
    inverse(&spec)
}

/// `‖f‖_{H^s_r} = ‖J_s f‖_{L^r}`.
pub fn sobolev_norm(f: &GridFunction, s: f64, r: Exponent) -> Result<f64> {
    lr_norm(&sobolev_apply(f, s, SobolevScale::Bracket), r)
}

/// Projection of `f` onto one shell of frequencies.
pub fn shell_projection(f: &GridFunction, shell: usize) -> GridFunction {
    let spec = forward(f);
    let range = f.level.shells()[shell].clone();
    let mut masked = SpectrumFunction::zeros(&f.level);
    masked.values[range.clone()].copy_from_slice(&spec.values[range]);
    inverse(&masked)
}

/// `Sf(x) = (Σ_k |P_k f(x)|²)^{1/2}` over the shells `k = 0..=N`, the
/// trivial frequency forming its own shell 0.
pub fn square_function(f: &GridFunction) -> GridFunction {
    let level = &f.level;
    let mut acc = vec![0.0f64; level.size()];
    for k in 0..level.shells().len() {
        let part = shell_projection(f, k);
        for (a, v) in acc.iter_mut().zip(&part.values) {
            *a += v.norm_sqr();
        }
    }
    GridFunction {
        level: level.clone(),
        values: acc.into_iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect(),
    }
}

/// `(Σ_{⟨ξ⟩ ≤ p^N} ⟨ξ⟩^{-s r})^{1/r}` without the convergence check.
pub fn embedding_constant_raw(level: &GroupLevel, s: f64, r: f64) -> f64 {
    level
        .dual_norms()
        .iter()
        .map(|&n| (n.max(1) as f64).powf(-s * r))
        .sum::<f64>()
        .powf(1.0 / r)
}

/// The finite-level constant `C` in `‖f‖_∞ ≤ C ‖J_s f‖_{L^r}`; rejects
/// `s ≤ d/r`, where it diverges with the level.
pub fn embedding_constant(level: &GroupLevel, s: f64, r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::BadExponent(format!("r must be >= 1, got {r}")));
    }
    let d = level.dimension() as f64;
    if s <= d / r {
        return Err(Error::BadExponent(format!(
            "s = {s} <= d/r = {}: constant diverges as N grows (raw value {})",
            d / r,
            embedding_constant_raw(level, s, r)
        )));
    }
    Ok(embedding_constant_raw(level, s, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_level, GroupDescriptor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn padic(p: u64, d: u32, n: u32) -> GroupLevel {
        make_level(&GroupDescriptor::padic(p, d).unwrap(), n).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random(level: &GroupLevel, rng: &mut ChaCha8Rng) -> GridFunction {
        GridFunction::from_fn(level, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn forward_examples() {
        let level = padic(2, 1, 1);
        let f = GridFunction::new(level.clone(), vec![c(1.0), c(0.0)]).unwrap();
        for spec in [forward(&f), naive_forward(&f)] {
            assert_eq!(spec.values(), &[c(0.5), c(0.5)]);
        }
        let level = padic(2, 1, 2);
        let one = GridFunction::from_fn(&level, |_| c(1.0));
        for spec in [forward(&one), naive_forward(&one)] {
            assert!(spec.max_abs_diff(&SpectrumFunction::delta(&level, 0)) < 1e-15);
        }
        // χ_{1/4} sits at canonical position 2
        let chi = GridFunction::from_fn(&level, |j| unit_root(j as u64, 4));
        for spec in [forward(&chi), naive_forward(&chi)] {
            assert!(spec.max_abs_diff(&SpectrumFunction::delta(&level, 2)) < 1e-15);
        }
    }

    #[test]
    fn inverse_examples() {
        let level = padic(2, 1, 1);
        let phi = SpectrumFunction::new(level.clone(), vec![c(0.5), c(0.5)]).unwrap();
        assert_eq!(inverse(&phi).values(), &[c(1.0), c(0.0)]);
        let level = padic(3, 1, 2);
        let g = inverse(&SpectrumFunction::delta(&level, 0));
        assert!(g.values().iter().all(|v| *v == c(1.0)));
    }

    #[test]
    fn fast_matches_naive_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let levels = [
            padic(2, 1, 6),
            padic(3, 1, 4),
            padic(5, 1, 2),
            padic(2, 2, 3),
            padic(3, 2, 2),
            make_level(&GroupDescriptor::vilenkin(vec![2, 3, 5, 4]).unwrap(), 4).unwrap(),
            padic(2, 1, 0),
        ];
        for level in &levels {
            let fs: Vec<GridFunction> = (0..5).map(|_| random(level, &mut rng)).collect();
            let naive = naive_forward_many(&fs);
            for (f, n) in fs.iter().zip(&naive) {
                let fast = forward(f);
                assert!(fast.max_abs_diff(n) < 1e-12, "{level}");
                assert!(inverse(&fast).max_abs_diff(f) < 1e-12);
                let lhs: f64 = fast.values().iter().map(|v| v.norm_sqr()).sum();
                let rhs = lr_norm(f, Exponent::Finite(2.0)).unwrap().powi(2);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lr_norm_examples() {
        let level = padic(2, 1, 1);
        let k = GridFunction::from_fn(&level, |_| Complex64::new(3.0, 4.0));
        for r in [1.0, 2.0, 3.5] {
            assert!((lr_norm(&k, Exponent::Finite(r)).unwrap() - 5.0).abs() < 1e-14);
        }
        assert_eq!(lr_norm(&k, Exponent::Infinity).unwrap(), 5.0);
        let f = GridFunction::new(level, vec![c(1.0), c(0.0)]).unwrap();
        assert!((lr_norm(&f, Exponent::Finite(2.0)).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(lr_norm(&f, Exponent::Infinity).unwrap(), 1.0);
        assert!(matches!(lr_norm(&f, Exponent::Finite(0.5)), Err(Error::BadExponent(_))));
        assert!("0.5".parse::<Exponent>().is_err());
    }

    #[test]
    fn sobolev_examples() {
        let level = padic(2, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random(&level, &mut rng);
        assert!(sobolev_apply(&f, 0.0, SobolevScale::Bracket).max_abs_diff(&f) < 1e-14);
        let chi_half = GridFunction::character(&level, 1);
        let d1 = sobolev_apply(&chi_half, 1.0, SobolevScale::Vladimirov);
        for (a, b) in d1.values().iter().zip(chi_half.values()) {
            assert!((a - 2.0 * b).norm() < 1e-14);
        }
        let back = sobolev_apply(&sobolev_apply(&f, 1.3, SobolevScale::Bracket), -1.3, SobolevScale::Bracket);
        assert!(back.max_abs_diff(&f) < 1e-12);
        let chi_quarter = GridFunction::character(&level, 2);
        assert!((sobolev_norm(&chi_quarter, 1.0, Exponent::Finite(2.0)).unwrap() - 4.0).abs() < 1e-13);
        let one = GridFunction::from_fn(&level, |_| c(1.0));
        assert!((sobolev_norm(&one, 5.0, Exponent::Finite(2.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!(
            (sobolev_norm(&f, 0.0, Exponent::Finite(3.0)).unwrap() - lr_norm(&f, Exponent::Finite(3.0)).unwrap())
                .abs()
                < 1e-13
        );
        // D^s kills constants
        let d = sobolev_apply(&one, 0.5, SobolevScale::Vladimirov);
        assert!(d.values().iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn sobolev_semigroup() {
        let level = padic(3, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random(&level, &mut rng);
        let a = sobolev_apply(&sobolev_apply(&f, 0.7, SobolevScale::Bracket), -1.9, SobolevScale::Bracket);
        let b = sobolev_apply(&f, -1.2, SobolevScale::Bracket);
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn square_function_examples() {
        let level = padic(2, 1, 3);
        let chi = GridFunction::character(&level, 5);
        let s = square_function(&chi);
        assert!(s.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-13));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random(&level, &mut rng);
        let sf = square_function(&f);
        let two = Exponent::Finite(2.0);
        assert!((lr_norm(&sf, two).unwrap() - lr_norm(&f, two).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn embedding_examples() {
        let level = padic(2, 1, 1);
        let e = embedding_constant(&level, 2.0, 2.0).unwrap();
        assert!((e - (1.0 + 2f64.powi(-4)).sqrt()).abs() < 1e-15);
        assert!((embedding_constant(&level, 400.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let level = padic(2, 1, 2);
        assert!((embedding_constant(&level, 1.0, 2.0).unwrap() - 1.375f64.sqrt()).abs() < 1e-15);
        assert!(matches!(embedding_constant(&level, 0.5, 2.0), Err(Error::BadExponent(_))));
    }

    #[test]
    fn embedding_inequality_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for level in [padic(2, 1, 6), padic(3, 1, 3), padic(2, 2, 3)] {
            let s = level.dimension() as f64 / 2.0 + 0.25;
            let c = embedding_constant(&level, s, 2.0).unwrap();
            for _ in 0..20 {
                let f = random(&level, &mut rng);
                let sup = lr_norm(&f, Exponent::Infinity).unwrap();
                let rhs = c * sobolev_norm(&f, s, Exponent::Finite(2.0)).unwrap();
                assert!(sup <= rhs * (1.0 + 1e-12));
            }
        }
    }
}
