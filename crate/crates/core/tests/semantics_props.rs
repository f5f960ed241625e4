mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use qblue::ast::{desugar_indexed, HamExpr, SiteList, SiteType};
use qblue::matrix::expr_to_matrix;
use qblue::semantics::{apply, FockState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn vec_dist(a: &FockState, b: &FockState, layout: &SiteList) -> f64 {
    (a.to_vector(layout) - b.to_vector(layout)).iter().fold(0.0, |m, z| m.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn apply_never_gets_stuck_and_matches_the_matrix(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 4, 1024);
        let e = random_expr(&mut rng, &layout, 4);
        let s = random_state(&mut rng, &layout);
        let out = apply(&e, &s).unwrap();
        for k in out.kets() {
            prop_assert_eq!(k.occ.len(), layout.len());
            prop_assert!(k.occ.iter().zip(layout.iter()).all(|(&o, site)| o < site.dim()));
            prop_assert!(k.amp.norm() > 1e-14);
        }
        let m = expr_to_matrix(&e).unwrap().mat;
        let d = (&m * s.to_vector(&layout) - out.to_vector(&layout)).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        prop_assert!(d <= 1e-10, "deviation {d:e}");
    }

    #[test]
    fn apply_is_linear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng, 3, 256);
        let e = random_expr(&mut rng, &layout, 3);
        let (s1, s2) = (random_state(&mut rng, &layout), random_state(&mut rng, &layout));
        let (alpha, beta) = (Complex64::new(a, 0.5), Complex64::new(-0.25, b));
        let lhs = apply(&e, &s1.scale(alpha).add(&s2.scale(beta)).unwrap()).unwrap();
        let rhs = apply(&e, &s1).unwrap().scale(alpha).add(&apply(&e, &s2).unwrap().scale(beta)).unwrap();
        prop_assert!(vec_dist(&lhs, &rhs, &layout) <= 1e-10);
    }

    #[test]
    fn distinct_fermion_ladders_anticommute(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=5);
        let mut layout: Vec<SiteType> = (0..n).map(|_| if rng.gen_bool(0.7) { SiteType::Fermion } else { SiteType::Boson(3) }).collect();
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        layout[i] = SiteType::Fermion;
        layout[j] = SiteType::Fermion;
        let layout = SiteList(layout);
        let a_i = desugar_indexed(HamExpr::annihilate(SiteType::Fermion), i, &layout).unwrap();
        let ad_j = desugar_indexed(HamExpr::create(SiteType::Fermion), j, &layout).unwrap();
        let occ = random_occ(&mut rng, &layout);
        let s = FockState::basis(layout.clone(), occ).unwrap();
        let forward = apply(&ad_j, &apply(&a_i, &s).unwrap()).unwrap();
        let backward = apply(&a_i, &apply(&ad_j, &s).unwrap()).unwrap();
        prop_assert_eq!(forward.is_zero(), backward.is_zero());
        for (f, b) in forward.kets().iter().zip(backward.kets()) {
            prop_assert_eq!(&f.occ, &b.occ);
            prop_assert_eq!(f.amp, -b.amp);
        }
    }
}
