mod common;

use proptest::prelude::*;
use qblue::ast::{Flag, HamExpr, SiteList};
use qblue::canonical::{canonicalize, dagger_normalize};
use qblue::matrix::{expr_to_matrix, hermitian_deviation, max_abs};
use qblue::typecheck::{check, typecheck};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hermitian_flag_is_sound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 4, 256);
        let e = if rng.gen_bool(0.5) {
            random_hermitian(&mut rng, &layout, 3)
        } else {
            random_expr(&mut rng, &layout, 3)
        };
        if typecheck(&e).unwrap().flag == Flag::H {
            let dev = hermitian_deviation(&expr_to_matrix(&e).unwrap().mat);
            prop_assert!(dev <= 1e-10, "deviation {dev:e} for {e}");
        }
    }

    #[test]
    fn canonicalize_is_idempotent_and_faithful(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 3, 256);
        let e = random_expr(&mut rng, &layout, 3);
        let cf = canonicalize(&e).unwrap();
        let back = cf.to_expr();
        let d = max_abs(&(expr_to_matrix(&back).unwrap().mat - expr_to_matrix(&e).unwrap().mat));
        prop_assert!(d <= 1e-12 * (1.0 + max_abs(&expr_to_matrix(&e).unwrap().mat)), "deviation {d:e}");
        prop_assert!(canonicalize(&back).unwrap().approx_eq(&cf, 1e-12));
    }

    #[test]
    fn dagger_normalize_is_the_adjoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 3, 256);
        let e = random_expr(&mut rng, &layout, 3);
        let pushed = dagger_normalize(&HamExpr::dagger(e.clone()));
        let d = max_abs(&(expr_to_matrix(&pushed).unwrap().mat - expr_to_matrix(&e).unwrap().mat.adjoint()));
        prop_assert!(d <= 1e-12, "deviation {d:e}");
    }

    #[test]
    fn flags_never_affect_typeability(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 3, 64);
        let h = random_hermitian(&mut rng, &layout, 2);
        let p = random_expr(&mut rng, &layout, 2);
        let other = random_expr(&mut rng, &layout, 2);
        for inner in [&h, &p] {
            for wrapped in [
                HamExpr::sum(inner.clone(), other.clone()),
                HamExpr::seq(other.clone(), inner.clone()),
                HamExpr::dagger(inner.clone()),
                HamExpr::tensor(inner.clone(), HamExpr::identity(layout[0])),
            ] {
                prop_assert!(check(&wrapped).is_ok());
            }
        }
    }
}

#[test]
fn sum_of_mismatched_layouts_is_rejected() {
    let l1 = SiteList::qubits(2);
    let e = HamExpr::sum(HamExpr::identity_on(&l1), HamExpr::identity_on(&SiteList::qubits(1)));
    assert!(typecheck(&e).is_err());
}
