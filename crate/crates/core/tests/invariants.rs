use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use qrdyn::cli::parse_complex;
use qrdyn::maps::{
    eval_f3d, eval_g, eval_h, eval_h_composed, eval_l, eval_l_inv, principal_arg, Annulus, CylPoint3, MapParams,
    MapSpec,
};
use qrdyn::orbits::{classify, iterate, EscapePolicy};

fn polar(r: f64, t: f64) -> Complex64 {
    Complex64::from_polar(r, t)
}

proptest! {
    #[test]
    fn g_modulus_law(r in 0.0f64..4.0, t in -PI..PI, c in 0.01f64..0.78) {
        let z = polar(r, t);
        let r = z.norm();
        let expected = if r < 0.5 { 4.0 / 3.0 * r } else if r < 1.0 { 1.0 / (2.0 - r) } else { r };
        prop_assert!((eval_g(z, c).norm() - expected).abs() <= 1e-12);
    }

    #[test]
    fn g_keeps_the_unit_disk(r in 0.0f64..1.0, t in -PI..PI) {
        prop_assert!(eval_g(polar(r, t), 0.5).norm() < 1.0);
    }

    #[test]
    fn g_moves_rings_outward(n in 2u32..60, u in 0.0f64..1.0, t in -PI..PI) {
        let a = Annulus::new(n).unwrap();
        let r = a.rin + (a.rout - a.rin) * (0.001 + 0.998 * u);
        prop_assert!(Annulus::new(n + 1).unwrap().contains(eval_g(polar(r, t), 0.5)));
    }

    #[test]
    fn mobius_round_trip(r in 0.05f64..20.0, t in -PI..PI) {
        let w = polar(r, t);
        let back = eval_l(eval_l_inv(w.into())).finite().unwrap();
        prop_assert!((back - w).norm() <= 1e-12 * w.norm().max(1.0));
    }

    #[test]
    fn h_matches_composition(r in 0.05f64..20.0, t in -PI..PI) {
        let w = polar(r, t);
        let direct = eval_h(w, 0.5);
        if let Some(composed) = eval_h_composed(w, 0.5).finite() {
            prop_assert!((direct - composed).norm() <= 1e-8 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn f_agrees_with_h_on_the_right(x in 0.001f64..10.0, y in -10.0f64..10.0) {
        let z = Complex64::new(x, y);
        let f = MapSpec::f(MapParams::default()).apply(z).point();
        prop_assert_eq!(f, eval_h(z, 0.5));
    }

    #[test]
    fn f3d_is_an_involution(r in 0.0f64..50.0, t in -PI..PI, x3 in -50.0f64..50.0, lambda in 0.1f64..3.0) {
        let p = CylPoint3::new(r, t, x3);
        let q = eval_f3d(eval_f3d(p, lambda), lambda);
        let (a, b) = (p.to_cartesian(), q.to_cartesian());
        for i in 0..3 {
            prop_assert!((a[i] - b[i]).abs() <= 1e-12 * (1.0 + a[i].abs().max(r)));
        }
    }

    #[test]
    fn principal_arg_range(x in -1e6f64..1e6, y in -1e6f64..1e6) {
        let t = principal_arg(Complex64::new(x, y));
        prop_assert!(t > -PI && t <= PI);
    }

    #[test]
    fn orbits_are_deterministic(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let f = MapSpec::f(MapParams::default());
        let p = EscapePolicy { budget: 500, ..EscapePolicy::default() };
        let z = Complex64::new(x, y);
        let a = iterate(&f, z, &p).unwrap();
        prop_assert_eq!(&a, &iterate(&f, z, &p).unwrap());
        prop_assert_eq!(a.classification, classify(&f, z, &p).classification);
    }

    #[test]
    fn complex_literals_round_trip(x in -1e3f64..1e3, y in -1e3f64..1e3) {
        let z = Complex64::new(x, y);
        prop_assert_eq!(parse_complex(&format!("{}{:+}i", x, y)), Some(z));
    }
}
