//! Properties of the SL2 action, reduction and connecting matrices.

mod support;

use jwit_core::halfplane::{
    automorphy_factor, connecting_matrix, moebius_apply, reduce_to_fundamental_domain,
};
use jwit_core::modular::{j_derivatives_image, j_eval, j_eval_image};
use jwit_core::{HPoint, Sl2Matrix, Sl2Z};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sl2z() -> impl Strategy<Value = Sl2Z> {
    any::<u64>().prop_map(|s| support::random_sl2z(&mut ChaCha8Rng::seed_from_u64(s), 30))
}

fn point() -> impl Strategy<Value = HPoint> {
    (-3.0f64..3.0, 0.05f64..4.0).prop_map(|(x, y)| HPoint::new(x, y).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_lands_in_the_fundamental_domain(z in point()) {
        let r = reduce_to_fundamental_domain(z).unwrap();
        let w = r.point;
        prop_assert!(w.re.abs() <= 0.5 + 1e-12);
        prop_assert!(w.re * w.re + w.im * w.im >= 1.0 - 1e-12);
        let again = moebius_apply(&Sl2Matrix::from(r.gamma), z).unwrap();
        prop_assert!((again.to_c64() - w.to_c64()).norm() <= 1e-9 * (1.0 + w.im));
    }

    #[test]
    fn action_is_a_group_action(a in sl2z(), b in sl2z(), z in point()) {
        let ab = moebius_apply(&Sl2Matrix::from(a.mul(&b)), z).unwrap();
        let a_b = moebius_apply(&Sl2Matrix::from(a), moebius_apply(&Sl2Matrix::from(b), z).unwrap()).unwrap();
        prop_assert!((ab.to_c64() - a_b.to_c64()).norm() <= 1e-8 * (1.0 + ab.to_c64().norm()));
        prop_assert_eq!(a.mul(&a.inverse()), Sl2Z::IDENTITY);
    }

    #[test]
    fn j_is_invariant(g in sl2z(), z in (-0.5f64..0.5, 0.3f64..3.0)) {
        let z = HPoint::new(z.0, z.1).unwrap();
        let a = j_eval(z, 1e-8).unwrap();
        let b = j_eval_image(&Sl2Matrix::from(g), z, 1e-8).unwrap();
        prop_assert!((a.value - b.value).norm() <= a.error_bound + b.error_bound);
    }

    #[test]
    fn jprime_has_weight_two(g in sl2z(), z in (-0.5f64..0.5, 0.5f64..3.0)) {
        let z = HPoint::new(z.0, z.1).unwrap();
        let m = Sl2Matrix::from(g);
        let (_, d0, _) = jwit_core::modular::j_derivatives(z, 1e-6).unwrap();
        let (_, d1, _) = j_derivatives_image(&m, z, 1e-6).unwrap();
        let f = automorphy_factor(&m, z);
        // j′(gz) = (cz + d)²·j′(z).
        let lhs = d1.value / (f * f);
        let bound = d1.error_bound / f.norm_sqr() + d0.error_bound;
        prop_assert!((lhs - d0.value).norm() <= bound, "{} vs {}", lhs, d0.value);
    }

    #[test]
    fn connecting_matrix_connects(z1 in point(), z2 in point(), theta in 0.0f64..6.3) {
        let h = connecting_matrix(z1, z2, theta);
        let w = moebius_apply(&h, z1).unwrap();
        prop_assert!((w.to_c64() - z2.to_c64()).norm() <= 1e-9 * (1.0 + z2.to_c64().norm()));
        let f = automorphy_factor(&h, z1);
        let want = num_complex::Complex64::from_polar((z1.im / z2.im).sqrt(), -theta);
        prop_assert!((f - want).norm() <= 1e-9 * want.norm());
    }
}
