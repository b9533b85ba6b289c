mod common;

use common::*;
use proptest::prelude::*;
use spectra_core::group::{character, pairing, prufer_add, DualIndex, GroupLevel};

#[test]
fn characters_match_the_floating_point_oracle() {
    for level in small_levels() {
        for pos in 0..level.size() {
            let xi = level.dual(pos);
            for x in 0..level.size() {
                let exact = character(&xi, &level.point(x), &level).unwrap();
                assert!((exact - oracle_char(&level, pos, x)).norm() < 1e-13, "{level}");
            }
        }
    }
}

#[test]
fn dual_positions_round_trip() {
    for level in small_levels() {
        for pos in 0..level.size() {
            assert_eq!(level.position_of(&level.dual(pos)).unwrap(), pos);
        }
    }
}

#[test]
fn coarse_levels_reject_fine_duals() {
    let coarse = padic(2, 1, 2);
    let fine = DualIndex::prufer(2, &[(1, 3)]).unwrap();
    assert!(coarse.position_of(&fine).is_err());
    assert!(pairing(&fine, &coarse.point(1), &coarse).is_err());
}

fn level_and_two_duals() -> impl Strategy<Value = (GroupLevel, usize, usize, usize)> {
    (0..small_levels().len()).prop_flat_map(|i| {
        let level = small_levels()[i].clone();
        let m = level.size();
        (Just(level), 0..m, 0..m, 0..m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn addition_is_a_group_law((level, a, b, x) in level_and_two_duals()) {
        let (xa, xb) = (level.dual(a), level.dual(b));
        let sum = prufer_add(&xa, &xb).unwrap();
        prop_assert_eq!(&sum, &prufer_add(&xb, &xa).unwrap());
        prop_assert_eq!(level.position_of(&sum).unwrap(), level.add_positions(a, b));
        prop_assert!(sum.norm() <= xa.norm().max(xb.norm()));
        if xa.norm() != xb.norm() {
            prop_assert_eq!(sum.norm(), xa.norm().max(xb.norm()));
        }
        let neg = level.dual(level.neg_position(a));
        prop_assert!(prufer_add(&xa, &neg).unwrap().is_zero());
        let pt = level.point(x);
        let lhs = pairing(&sum, &pt, &level).unwrap();
        let ra = pairing(&xa, &pt, &level).unwrap();
        let rb = pairing(&xb, &pt, &level).unwrap();
        let den = lhs.denominator().max(ra.denominator()).max(rb.denominator()) as u128;
        let scaled = |f: &spectra_core::group::FractionalValue| f.numerator() as u128 * den / f.denominator() as u128;
        prop_assert_eq!(scaled(&lhs), (scaled(&ra) + scaled(&rb)) % den);
    }
}
