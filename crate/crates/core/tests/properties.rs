use proptest::prelude::*;

use fragility::fragility::{vega_sensitivity, xi};
use fragility::heuristic::{
    omega_a, omega_b, second_order_ratio, stress_asymmetry, AlphaDistribution, ModelUnderTest, Parameter,
};
use fragility::payoff::{inherited_fragility, PayoffKind, PayoffMap};
use fragility::robustness::robustness_interval;
use fragility::ParametricFamily;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shortfall_grows_with_the_stress_level(k1 in -6.0f64..0.0, gap in 0.01f64..3.0) {
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        let k2 = (k1 + gap).min(0.0);
        prop_assert!(xi(&g, k1).unwrap().value <= xi(&g, k2).unwrap().value + 1e-15);
    }

    #[test]
    fn vega_depends_on_k_over_lambda(lambda in 0.2f64..5.0, z in -4.0f64..0.0) {
        let a = vega_sensitivity(&ParametricFamily::gaussian_scaling(0.0, lambda).unwrap(), z * lambda).unwrap();
        let b = vega_sensitivity(&ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap(), z).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * b.max(1e-3));
    }

    #[test]
    fn affine_models_have_unit_ratio(a in -20.0f64..20.0, b in 1.0f64..50.0, p in -10.0f64..10.0, dp in 0.01f64..4.0) {
        let m = ModelUnderTest::function(move |v| a * v[0] + b, vec![Parameter::new("p", p, dp)]).unwrap();
        let so = second_order_ratio(&m, "p").unwrap();
        // μ' - μ vanishes up to rounding of the two evaluations
        prop_assert!((so.mu_prime - so.mu).abs() <= 1e-14 * (a.abs() * (p.abs() + dp) + b.abs()));
        if so.mu.abs() >= 1.0 {
            prop_assert!((so.h_ratio - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn omega_a_has_the_sign_of_the_second_difference(c2 in -3.0f64..3.0, c3 in -1.0f64..1.0, p in -2.0f64..2.0, d in 0.05f64..1.0) {
        let m = ModelUnderTest::function(move |v| c2 * v[0] * v[0] + c3 * v[0].powi(3), vec![Parameter::new("a", p, 2.0 * d)]).unwrap();
        let w = omega_a(&m, "a", &AlphaDistribution::TwoPoint { half_width: d }).unwrap();
        let sd = m.eval_at(0, p + d).unwrap() - 2.0 * m.eval_at(0, p).unwrap() + m.eval_at(0, p - d).unwrap();
        prop_assume!(sd.abs() > 1e-9);
        prop_assert_eq!(w.signum(), sd.signum());
    }

    #[test]
    fn stress_flag_ignores_currency_units(scale in 0.01f64..1e4, shift in -1e3f64..1e3, c in -2.0f64..2.0) {
        let base = ModelUnderTest::function(move |v| v[0] + c * v[0] * v[0], vec![Parameter::new("x", 0.0, 1.0)]).unwrap();
        let scaled = ModelUnderTest::function(move |v| scale * (v[0] + c * v[0] * v[0]) + shift, vec![Parameter::new("x", 0.0, 1.0)]).unwrap();
        let a = stress_asymmetry(&base, "x", 0.0, 0.5, -0.5).unwrap();
        let b = stress_asymmetry(&scaled, "x", 0.0, 0.5, -0.5).unwrap();
        prop_assume!(a.asymmetry.abs() > 1e-12);
        prop_assert_eq!(a.flagged, b.flagged);
    }

    #[test]
    fn scale_mixing_fattens_the_left_tail(alpha in 0.3f64..3.0, depth in 2.0f64..6.0) {
        let g = ParametricFamily::gaussian_scaling(0.0, alpha).unwrap();
        prop_assert!(omega_b(&g, -depth * alpha, 0.5 * alpha).unwrap() > 0.0);
    }

    #[test]
    fn affine_maps_inherit_the_source_vega(slope in 0.1f64..10.0, k in -4.0f64..-0.1) {
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        let map = PayoffMap::new(PayoffKind::Affine { slope, intercept: 0.0 }, 0.0).unwrap();
        let vy = inherited_fragility(&map, &g, k).unwrap();
        let vx = vega_sensitivity(&g, k).unwrap();
        prop_assert!((vy - vx).abs() <= 1e-9 * vx.max(1e-3));
    }

    #[test]
    fn interval_r_sits_at_the_upper_end_below_the_inflexion(k1 in -5.0f64..-2.0, w in 0.2f64..1.0, extra in 0.1f64..1.5) {
        // V rises with K below -1, so both grids peak at their shared right end
        let g = ParametricFamily::gaussian_scaling(0.0, 1.0).unwrap();
        let narrow = robustness_interval(&g, k1, k1 + w, 1.0, 16).unwrap();
        let wide = robustness_interval(&g, k1 - extra, k1 + w, 1.0, 16).unwrap();
        let end = vega_sensitivity(&g, k1 + w).unwrap();
        prop_assert_eq!(narrow.r, end);
        prop_assert_eq!(wide.r, end);
    }
}
