use harvester_core::charroots::{characteristic_roots_exact, sextic_residual};
use harvester_core::eigensolver::inverse::{apply_inverse, apply_operator};
use harvester_core::eigensolver::Rect;
use harvester_core::model::{BeamParameters, Model, Strictness};
use harvester_core::output::float_text;
use harvester_core::verification::energy::{energy_inner_product, norm_equivalence_check, product_norm1};
use harvester_core::verification::state::StateFunction;
use harvester_core::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

prop_compose! {
    fn parameters()(
        m in 0.3f64..3.0,
        j in 0.3f64..3.0,
        s_frac in 0.0f64..0.95,
        e in 0.3f64..3.0,
        g in 0.3f64..3.0,
        l in 0.4f64..2.5,
        k1 in 0.1f64..3.0,
        k2 in 0.1f64..4.0,
        cp in 0.3f64..3.0,
        r in 0.3f64..3.0,
        cd in 0.01f64..1.0,
        ci in 0.01f64..1.0,
    ) -> BeamParameters {
        BeamParameters { m, J: j, S: s_frac * m.min(j), E: e, G: g, L: l, k1, k2, Cp: cp, R: r, CD: -cd, CI: ci }
    }
}

prop_compose! {
    fn upper_lambda()(log_r in 0.0f64..3.0, theta in 0.02f64..3.12) -> Complex64 {
        Complex64::from_polar(10f64.powf(log_r), theta)
    }
}

fn model(p: BeamParameters) -> Model {
    Model::new(p, Strictness::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_roots_solve_the_sextic(p in parameters(), lambda in upper_lambda()) {
        let m = model(p);
        let roots = characteristic_roots_exact(lambda, &m.derived).unwrap();
        for j in 1..=6 {
            let (v, s) = sextic_residual(roots.get(j), lambda, &m);
            prop_assert!(v <= 1e-10 * s, "zeta{j}: {v:e} vs scale {s:e}");
        }
        for j in [1, 3, 5] {
            prop_assert_eq!(roots.get(j + 1), -roots.get(j));
        }
    }

    #[test]
    fn energy_product_is_hermitian_and_equivalent(p in parameters(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = StateFunction::random_admissible(&mut rng, p.L, 32, 12);
        let g = StateFunction::random_admissible(&mut rng, p.L, 32, 12);
        let fg = energy_inner_product(&f, &g, &p).unwrap();
        let gf = energy_inner_product(&g, &f, &p).unwrap();
        prop_assert_eq!(fg, gf.conj());
        let ff = energy_inner_product(&f, &f, &p).unwrap();
        prop_assert!(ff.re > 0.0);
        let gg = energy_inner_product(&g, &g, &p).unwrap().re;
        prop_assert!(fg.norm_sqr() <= ff.re * gg * (1.0 + 1e-12));
        prop_assert!(norm_equivalence_check(&f, &p).unwrap().holds);
    }

    #[test]
    fn inverse_is_a_right_inverse(p in parameters(), seed in any::<u64>()) {
        let m = model(p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = StateFunction::random_admissible(&mut rng, p.L, 64, 12);
        let f = apply_inverse(&g, &m).unwrap();
        let back = apply_operator(&f, &m);
        let res = back.combine(Complex64::new(1.0, 0.0), &g, Complex64::new(-1.0, 0.0)).unwrap();
        let rel = (product_norm1(&res).unwrap() / product_norm1(&g).unwrap()).sqrt();
        prop_assert!(rel <= 1e-9, "relative residual {rel:e}");
    }

    #[test]
    fn floats_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(float_text(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn config_text_round_trips(p in parameters()) {
        prop_assert_eq!(BeamParameters::parse(&p.to_config_string()).unwrap(), p);
    }

    #[test]
    fn split_covers_the_rectangle(a in -5.0f64..5.0, w in 0.01f64..20.0, c in -1.0f64..5.0, h in 0.01f64..20.0, t in 0.3f64..0.7) {
        let r = Rect::new(a, a + w, c, c + h).unwrap();
        let (lo, hi) = r.split(t);
        let area = |q: &Rect| q.width() * q.height();
        prop_assert!((area(&lo) + area(&hi) - area(&r)).abs() <= 1e-12 * area(&r));
        prop_assert!(r.contains(lo.center()) && r.contains(hi.center()));
    }
}
