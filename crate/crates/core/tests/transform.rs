mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use spectra_core::transform::{
    forward, inverse, lr_norm, naive_forward, sobolev_apply, square_function, Exponent, GridFunction,
    SobolevScale,
};

#[test]
fn fast_and_naive_match_direct_summation() {
    let mut r = rng(11);
    for level in small_levels() {
        for _ in 0..5 {
            let f = random_function(&level, &mut r);
            let oracle = oracle_forward(&f);
            let fast = forward(&f);
            let naive = naive_forward(&f);
            for (pos, want) in oracle.iter().enumerate() {
                assert!((fast.values()[pos] - want).norm() < 1e-12, "{level} fast at {pos}");
                assert!((naive.values()[pos] - want).norm() < 1e-12, "{level} naive at {pos}");
            }
        }
    }
}

#[test]
fn square_function_constants_are_logged() {
    let level = padic(2, 1, 3);
    let mut r = rng(5);
    for rexp in [1.5, 2.0, 4.0] {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..50 {
            let f = random_function(&level, &mut r);
            let e = Exponent::finite(rexp).unwrap();
            let ratio = lr_norm(&square_function(&f), e).unwrap() / lr_norm(&f, e).unwrap();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        println!("r = {rexp}: B_r <= {lo:.6}, C_r >= {hi:.6}");
        assert!(lo > 0.0 && hi.is_finite());
        if rexp == 2.0 {
            assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
    }
}

fn level_strategy() -> impl Strategy<Value = usize> {
    0..small_levels().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_and_parseval(which in level_strategy(), seed in any::<u64>()) {
        let level = small_levels()[which].clone();
        let f = random_function(&level, &mut rng(seed));
        let spec = forward(&f);
        prop_assert!(inverse(&spec).max_abs_diff(&f) < 1e-12);
        let lhs: f64 = spec.values().iter().map(|v| v.norm_sqr()).sum();
        let rhs = lr_norm(&f, Exponent::Finite(2.0)).unwrap().powi(2);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn bracket_semigroup(which in level_strategy(), seed in any::<u64>(), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let level = small_levels()[which].clone();
        let f = random_function(&level, &mut rng(seed));
        let two = sobolev_apply(&sobolev_apply(&f, s, SobolevScale::Bracket), t, SobolevScale::Bracket);
        let one = sobolev_apply(&f, s + t, SobolevScale::Bracket);
        let scale = 1.0 + one.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(two.max_abs_diff(&one) < 1e-12 * scale);
    }

    #[test]
    fn transform_is_linear(which in level_strategy(), seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let level = small_levels()[which].clone();
        let mut r = rng(seed);
        let f = random_function(&level, &mut r);
        let g = random_function(&level, &mut r);
        let a = Complex64::new(re, im);
        let h = GridFunction::from_fn(&level, |x| a * f.values()[x] + g.values()[x]);
        let (fh, ff, fg) = (forward(&h), forward(&f), forward(&g));
        for pos in 0..level.size() {
            let want = a * ff.values()[pos] + fg.values()[pos];
            prop_assert!((fh.values()[pos] - want).norm() < 1e-12);
        }
    }
}
