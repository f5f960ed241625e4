mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use qblue::ast::{desugar_indexed, scale, site_layout, HamExpr, SiteType};
use qblue::matrix::{expr_to_matrix, max_abs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn desugar_yields_the_layout(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 5, usize::MAX);
        let j = rng.gen_range(0..layout.len());
        let op = random_expr(&mut rng, &layout[j..=j], 2);
        let e = desugar_indexed(op, j, &layout).unwrap();
        prop_assert_eq!(site_layout(&e).unwrap(), layout);
    }

    #[test]
    fn scaling_by_one_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 3, 64);
        let e = random_expr(&mut rng, &layout, 3);
        prop_assert_eq!(scale(Complex64::new(1.0, 0.0), e.clone()), e);
    }

    #[test]
    fn scaling_composes(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 3, 64);
        let e = random_expr(&mut rng, &layout, 3);
        let (z1, z2) = (Complex64::new(a, b), Complex64::new(c, d));
        let nested = scale(z1, scale(z2, e.clone()));
        let direct = scale(z1 * z2, e.clone());
        prop_assert!(nested.approx_eq(&direct, 1e-12));
        let m = expr_to_matrix(&e).unwrap().mat * (z1 * z2);
        prop_assert!(max_abs(&(expr_to_matrix(&nested).unwrap().mat - m)) < 1e-10);
    }

    #[test]
    fn tensor_reassociation_preserves_matrices(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = loop {
            let l = random_layout(&mut rng, 4, 64);
            if l.len() >= 3 {
                break l;
            }
        };
        let k1 = rng.gen_range(1..layout.len() - 1);
        let k2 = rng.gen_range(k1 + 1..layout.len());
        let a = random_expr(&mut rng, &layout[..k1], 2);
        let b = random_expr(&mut rng, &layout[k1..k2], 2);
        let c = random_expr(&mut rng, &layout[k2..], 2);
        let left_nested = HamExpr::Tensor(
            Box::new(HamExpr::Tensor(Box::new(a.clone()), Box::new(b.clone()))),
            Box::new(c.clone()),
        );
        let normalized = HamExpr::tensor(HamExpr::tensor(a, b), c);
        prop_assert!(!matches!(&normalized, HamExpr::Tensor(l, _) if matches!(**l, HamExpr::Tensor(..))));
        let d = max_abs(&(expr_to_matrix(&left_nested).unwrap().mat - expr_to_matrix(&normalized).unwrap().mat));
        prop_assert!(d < 1e-12, "deviation {d:e}");
    }
}

#[test]
fn fermion_tensor_association_example() {
    let f = SiteType::Fermion;
    let (a, ad) = (HamExpr::annihilate(f), HamExpr::create(f));
    let nested = HamExpr::Tensor(
        Box::new(HamExpr::Tensor(Box::new(ad.clone()), Box::new(a.clone()))),
        Box::new(ad.clone()),
    );
    let flat = HamExpr::tensor(HamExpr::tensor(ad.clone(), a), ad);
    let d = max_abs(&(expr_to_matrix(&nested).unwrap().mat - expr_to_matrix(&flat).unwrap().mat));
    assert!(d < 1e-15);
}
