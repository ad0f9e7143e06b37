use kolmo::normalform::{
    borel_chain_bound, certify, default_truncation, lie_iterate_certified, lie_iterate_formal, normalizer_series,
    perturbed_quadratic, threshold_t0, CertParams,
};
use kolmo::norms::{le_with_slack, majorant_norm};
use kolmo::series::{Rational, TruncSeries};
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `z sqrt(1 + 2z)` known to `z^trunc`, from the binomial series.
fn z_sqrt_one_plus_2z(trunc: usize) -> TruncSeries {
    let mut coeffs = vec![Rational::zero(); trunc + 1];
    let mut binom = Rational::one();
    let mut two_k = Rational::one();
    for k in 0..trunc {
        coeffs[k + 1] = binom.clone() * two_k.clone();
        binom = binom * (q(1, 2) - Rational::from_integer(k.into())) / Rational::from_integer((k + 1).into());
        two_k *= q(2, 1);
    }
    TruncSeries::from_coeffs(coeffs)
}

#[test]
fn orders_double() {
    let (a, b0) = perturbed_quadratic(&Rational::one(), 3, default_truncation(4));
    let trace = lie_iterate_formal(&a, &b0, 4).unwrap();
    for (i, round) in trace.rounds.iter().enumerate() {
        assert_eq!(round.field_order, Some((1 << i) + 1), "v_{i}");
        assert_eq!(round.remainder_order, Some((1 << i) + 2), "b_{i}");
    }
}

#[test]
fn normalizer_is_inverse_of_square_root_map() {
    let (a, b0) = perturbed_quadratic(&Rational::one(), 3, 13);
    let trace = lie_iterate_formal(&a, &b0, 4).unwrap();
    let psi = normalizer_series(&trace).unwrap().truncate(12);
    let oracle = z_sqrt_one_plus_2z(12).invert().unwrap().truncate(12);
    assert_eq!(psi, oracle);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn normalizer_conjugates_to_quadratic(
        n in 3usize..=5,
        beta in prop::sample::select(vec![q(1, 1), q(1, 2), q(-2, 3), q(3, 1)]),
    ) {
        let (a, b0) = perturbed_quadratic(&beta, n, 14);
        let trace = lie_iterate_formal(&a, &b0, 3).unwrap();
        let psi = normalizer_series(&trace).unwrap();
        let back = a.add(&b0).compose(&psi).unwrap();
        prop_assert!(back.agrees_with(&a));
        prop_assert!(back.trunc_order() >= 13);
    }

    #[test]
    fn certified_bounds_dominate_formal_remainders(
        frac in 0.2f64..0.999,
        beta in prop::sample::select(vec![q(1, 1), q(1, 2), q(1, 4)]),
    ) {
        let b = beta.to_f64().unwrap();
        let t0 = frac * threshold_t0(0.25, 0.5, 0.5, b, 3).unwrap();
        let cert = certify(CertParams { t0, beta: b, ..CertParams::morse_default() }).unwrap();
        prop_assert!(cert.passes);
        let steps = lie_iterate_certified(&cert, 3).unwrap();
        let (a, b0) = perturbed_quadratic(&beta, 3, default_truncation(3));
        let trace = lie_iterate_formal(&a, &b0, 3).unwrap();
        for (step, round) in steps.iter().zip(&trace.rounds) {
            let norm = majorant_norm(&round.remainder, step.t).unwrap().value;
            prop_assert!(norm <= step.bound, "n = {}: {norm} > {}", step.n, step.bound);
        }
    }

    #[test]
    fn borel_chain_is_quadratic_in_the_input(t in 0.001f64..0.5, r in 0.05f64..0.95, u in 0.01f64..10.0) {
        let one = borel_chain_bound(t, r, u).unwrap();
        let two = borel_chain_bound(t, r, 2.0 * u).unwrap();
        prop_assert_eq!((one.k, one.l), (1.0, 2.0));
        prop_assert!(le_with_slack(two.c, 4.0 * one.c) && le_with_slack(4.0 * one.c, two.c));
    }
}
