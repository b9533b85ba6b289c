mod common;

use common::*;
use proptest::prelude::*;
use spectra_core::group::GroupLevel;
use spectra_core::symbol::{
    difference_at, hoermander_estimate, parse_symbol, shift, x_derivative, HoermanderParams, SymbolSource,
};
use spectra_core::transform::SobolevScale;

fn levels(p: u64, ns: std::ops::RangeInclusive<u32>) -> Vec<GroupLevel> {
    ns.map(|n| padic(p, 1, n)).collect()
}

#[test]
fn bessel_classes_with_nonnegative_order_are_stable() {
    for m in [0.0, 1.0, 2.0] {
        let src = SymbolSource::builtin(&format!("bessel:s={m}")).unwrap();
        let r = hoermander_estimate(&src, &levels(2, 2..=6), &HoermanderParams::new(m, 1.0, 0.0)).unwrap();
        assert_eq!(r.verdict, "stable", "m = {m}: {:?}", r.per_level);
        assert!(r.constants.iter().flatten().all(|c| c.is_finite() && *c <= 1.0 + 1e-12));
    }
}

#[test]
fn bessel_classes_with_negative_order_fail_the_single_difference_estimate() {
    // Δ_η with ‖η‖ = ‖ξ‖ can land on ξ + η = 0, where ⟨·⟩^m jumps to 1;
    // the α = 1 ratio is then ⟨ξ⟩^{-m} − 1 and grows with the level.
    let src = SymbolSource::builtin("bessel:s=-1").unwrap();
    let r = hoermander_estimate(&src, &levels(2, 2..=6), &HoermanderParams::new(-1.0, 1.0, 0.0)).unwrap();
    let c10: Vec<f64> = r.per_level.iter().map(|t| t[1][0]).collect();
    assert_eq!(c10, vec![3.0, 7.0, 15.0, 31.0, 63.0]);
    assert!(r.per_level.iter().all(|t| t[0][0] == 1.0));
    assert_eq!(r.verdict, "unstable");
}

#[test]
fn x_smooth_symbol_reports_the_scale() {
    let src = SymbolSource::expr("re_char(1/4, x) * bracket_xi^(-1)").unwrap();
    let mut p = HoermanderParams::new(-1.0, 1.0, 0.0);
    p.alpha_max = 0;
    p.beta_max = 2;
    let r = hoermander_estimate(&src, &levels(2, 2..=5), &p).unwrap();
    assert_eq!(r.scale, "vladimirov");
    // D^β_x re_char(1/4, ·) = 4^β re_char(1/4, ·)
    for (beta, want) in [1.0, 4.0, 16.0].iter().enumerate() {
        assert!((r.constants[0][beta] - want).abs() < 1e-9, "beta {beta}");
    }
    assert_eq!(r.verdict, "stable");
}

fn level_strategy() -> impl Strategy<Value = GroupLevel> {
    (0..small_levels().len()).prop_map(|i| small_levels()[i].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn difference_is_a_first_difference(level in level_strategy(), seed in any::<u64>(), e in any::<prop::sample::Index>()) {
        let sigma = random_symbol(&level, &mut rng(seed));
        let eta = e.index(level.size());
        let d = difference_at(&sigma, eta);
        let s = shift(&sigma, eta);
        for (i, v) in d.values().iter().enumerate() {
            prop_assert_eq!(v + sigma.values()[i], s.values()[i]);
        }
    }

    #[test]
    fn difference_cocycle(level in level_strategy(), seed in any::<u64>(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let sigma = random_symbol(&level, &mut rng(seed));
        let (eta, eta2) = (a.index(level.size()), b.index(level.size()));
        let lhs = difference_at(&sigma, level.add_positions(eta, eta2));
        let shifted = shift(&sigma, eta2);
        let r1 = difference_at(&shifted, eta);
        let r2 = difference_at(&sigma, eta2);
        for i in 0..lhs.values().len() {
            prop_assert!((lhs.values()[i] - (r1.values()[i] + r2.values()[i])).norm() < 1e-15);
        }
    }

    #[test]
    fn bracket_derivative_inverts(level in level_strategy(), seed in any::<u64>(), beta in 0.0f64..2.0) {
        let sigma = random_symbol(&level, &mut rng(seed));
        let up = x_derivative(&sigma, beta, SobolevScale::Bracket).unwrap();
        let back = x_derivative(&up, -beta, SobolevScale::Bracket).unwrap();
        prop_assert!(back.max_abs_diff(&sigma) < 1e-12);
        prop_assert!(x_derivative(&sigma, 0.0, SobolevScale::Vladimirov).unwrap().max_abs_diff(&sigma) < 1e-12);
    }

    #[test]
    fn printer_round_trip(text in expr_text()) {
        let once = parse_symbol(&text).unwrap();
        let printed = once.to_string();
        let twice = parse_symbol(&printed).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(printed, twice.to_string());
    }
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|v| v.to_string()),
        (0.0f64..100.0).prop_map(|v| format!("{v}")),
        Just("norm_x".to_string()),
        Just("norm_xi".to_string()),
        Just("bracket_xi".to_string()),
        (0u32..5).prop_map(|j| format!("digit(x, {j})")),
        (0u64..8, 1u64..9).prop_map(|(a, b)| format!("re_char({a}/{b}, x)")),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("({a})")),
            (prop::sample::select(vec!["exp", "log", "sin", "cos", "abs"]), inner.clone())
                .prop_map(|(f, a)| format!("{f}({a})")),
            (prop::sample::select(vec!["min", "max"]), inner.clone(), inner.clone())
                .prop_map(|(f, a, b)| format!("{f}({a}, {b})")),
            (inner.clone(), prop::sample::select(vec!["<", "<=", "==", ">=", ">"]), inner.clone(), inner.clone(), inner)
                .prop_map(|(a, op, b, c, d)| format!("if({a} {op} {b}, {c}, {d})")),
        ]
    })
}
