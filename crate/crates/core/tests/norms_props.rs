use kolmo::norms::{
    self, borel_bound, calibrate, compose_local_bounds, le_with_slack, majorant_sum, nagumo_check,
    order_filtration_norm, BorelProfile, LocalOpBound, ROUNDING_SLACK,
};
use kolmo::series::{Derivation, Rational, Sign, TruncSeries};
use proptest::prelude::*;

fn poly(coeffs: Vec<i64>) -> TruncSeries {
    TruncSeries::from_coeffs(coeffs.into_iter().map(|c| Rational::from_integer(c.into())).collect())
}

fn float_series(len: std::ops::Range<usize>) -> impl Strategy<Value = TruncSeries<f64>> {
    prop::collection::vec(-3.0f64..3.0, len).prop_map(TruncSeries::from_coeffs)
}

fn pair() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..2.0, 0.05f64..0.95).prop_map(|(t, frac)| (t * frac, t))
}

fn bound() -> impl Strategy<Value = LocalOpBound> {
    (0.1f64..10.0, 0u8..4, 0u8..4).prop_map(|(c, k, l)| LocalOpBound::new(c, k as f64, l as f64))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nagumo_inequality(c in prop::collection::vec(-9i64..=9, 1..10), k in 0usize..=5, (s, t) in pair()) {
        prop_assert!(nagumo_check(&poly(c), k, t, s).unwrap());
    }

    #[test]
    fn calibrated_composition_is_submultiplicative(b1 in bound(), b2 in bound()) {
        let joint = calibrate(&compose_local_bounds(&b1, &b2));
        prop_assert!(le_with_slack(joint, calibrate(&b1) * calibrate(&b2)));
    }

    #[test]
    fn power_estimate(c in 0.1f64..5.0, n in 1usize..8) {
        let b = LocalOpBound::new(c, 0.0, 1.0);
        let p = b.power(n);
        let nf = n as f64;
        prop_assert!(p.c <= nf.powf(nf) * c.powi(n as i32) * ROUNDING_SLACK.powi(n as i32 + 1));
        prop_assert_eq!(p.l, nf);
    }

    #[test]
    fn derivative_lowers_filtration_by_one(l in 1usize..6, g in prop::collection::vec(-5i64..=5, 1..6), t in 0.05f64..2.0) {
        prop_assume!(g[0] != 0);
        let mut c = vec![0; l];
        c.extend(g);
        let f = poly(c);
        let norm = order_filtration_norm(&f.derivative(), (l - 1) as f64, t).unwrap();
        prop_assert!(norm.is_finite());
        prop_assert!(order_filtration_norm(&f.derivative(), l as f64, t).is_err());
    }

    #[test]
    fn filtration_inclusion(k in 0usize..4, eps in 0.1f64..1.0, g in prop::collection::vec(1i64..=9, 1..5), lead in 2i64..20) {
        // valuation k + 1 > k + eps, so the inclusion is strict
        let mut c = vec![0; k + 1];
        c.push(lead);
        c.extend(g);
        let f = poly(c);
        let big_r = order_filtration_norm(&f, k as f64 + eps, 1.0).unwrap();
        prop_assume!(big_r > 1.0);
        let tau = big_r.powf(-1.0 / eps);
        prop_assert!(order_filtration_norm(&f, k as f64, tau).unwrap() < 1.0);
    }

    #[test]
    fn majorant_is_monotone_and_submultiplicative(f in float_series(1..8), g in float_series(1..8), (s, t) in pair()) {
        prop_assert!(majorant_sum(&f, s) <= majorant_sum(&f, t));
        let sum = majorant_sum(&f.add(&g), t);
        prop_assert!(le_with_slack(sum, majorant_sum(&f, t) + majorant_sum(&g, t)));
        let prod = majorant_sum(&f.mul(&g), t);
        prop_assert!(le_with_slack(prod, majorant_sum(&f, t) * majorant_sum(&g, t)));
    }

    #[test]
    fn geometric_borel_bound_dominates_lie_series(
        field in prop::collection::vec(-4i64..=4, 5),
        f in prop::collection::vec(-4i64..=4, 7),
        (s, t) in pair(),
        target in 0.01f64..0.85,
        plus in any::<bool>(),
    ) {
        let mut c = vec![0, 0];
        c.extend(field);
        let raw = poly(c);
        prop_assume!(!raw.is_zero());
        // rescale the field so that x = e|v|_t/(t-s) lands near the target
        let factor = target * (t - s) / (std::f64::consts::E * majorant_sum(&raw, t));
        let v = Derivation::new(raw.scale(&Rational::from_float(factor).unwrap()));
        let x = std::f64::consts::E * majorant_sum(v.field(), t) / (t - s);
        prop_assert!(x < 0.9);
        let f = poly(f);
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let image = v.lie_exp(&f, sign).unwrap();
        let bound = majorant_sum(&f, t) * borel_bound(&BorelProfile::Geometric, x).unwrap();
        prop_assert!(le_with_slack(majorant_sum(&image, s), bound));
    }

    #[test]
    fn local_bound_json_round_trip(b in bound()) {
        let text = serde_json::to_string(&b).unwrap();
        prop_assert_eq!(serde_json::from_str::<LocalOpBound>(&text).unwrap(), b);
    }
}

#[test]
fn geometric_weights_satisfy_lambda_p() {
    let grid = norms::subdiagonal_grid(50, 1.0);
    let w = norms::WeightSequence::geometric();
    assert!(norms::lambda_p_check(&w, &w, 1.0, 1.0, 1.0, &grid).unwrap());
    let c = norms::WeightSequence::constant();
    assert!(!norms::lambda_p_check(&c, &c, 1.0, 1.0, 1.0, &grid).unwrap());
}
