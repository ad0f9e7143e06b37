use kolmo::series::{Derivation, Rational, Sign, TruncSeries};
use proptest::prelude::*;

fn series(coeffs: Vec<i64>) -> TruncSeries {
    TruncSeries::from_coeffs(coeffs.into_iter().map(|c| Rational::from_integer(c.into())).collect())
}

fn any_series(len: std::ops::Range<usize>) -> impl Strategy<Value = TruncSeries> {
    prop::collection::vec(-5i64..=5, len).prop_map(series)
}

/// `z + a_2 z^2 + ...` known to `z^trunc`.
fn tangent_identity(trunc: usize) -> impl Strategy<Value = TruncSeries> {
    prop::collection::vec(-4i64..=4, trunc - 1).prop_map(|tail| {
        let mut c = vec![0, 1];
        c.extend(tail);
        series(c)
    })
}

/// Field of order at least 2, known to `z^trunc`.
fn small_field(trunc: usize) -> impl Strategy<Value = Derivation> {
    prop::collection::vec(-3i64..=3, trunc - 1).prop_map(|tail| {
        let mut c = vec![0, 0];
        c.extend(tail);
        Derivation::new(series(c))
    })
}

fn same_length(a: &TruncSeries, b: &TruncSeries) -> bool {
    a.known_len() == b.known_len() && a == b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn add_is_associative(a in any_series(1..8), b in any_series(1..8), c in any_series(1..8)) {
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
    }

    #[test]
    fn mul_is_associative(a in any_series(1..7), b in any_series(1..7), c in any_series(1..7)) {
        let left = a.mul(&b).mul(&c);
        let right = a.mul(&b.mul(&c));
        prop_assert!(left.agrees_with(&right));
    }

    #[test]
    fn mul_distributes(a in any_series(1..7), b in any_series(1..7), c in any_series(1..7)) {
        let left = a.mul(&b.add(&c));
        let right = a.mul(&b).add(&a.mul(&c));
        prop_assert!(left.agrees_with(&right));
    }

    #[test]
    fn inverse_is_two_sided(f in tangent_identity(8)) {
        let g = f.invert().unwrap();
        let z = TruncSeries::identity(8);
        prop_assert!(f.compose(&g).unwrap().agrees_with(&z));
        prop_assert!(g.compose(&f).unwrap().agrees_with(&z));
        prop_assert_eq!(f.compose(&g).unwrap().known_len(), 9);
    }

    #[test]
    fn j_is_right_inverse_of_multiplication_by_z(tail in prop::collection::vec(-6i64..=6, 1..10)) {
        let mut c = vec![0];
        c.extend(tail);
        let b = series(c);
        // z^2/2 is exact, so give it one more known order than b
        let a = TruncSeries::monomial(Rational::new(1.into(), 2.into()), 2, b.trunc_order() as usize + 1);
        let v = Derivation::j_map(&b);
        prop_assert!(same_length(&v.apply(&a), &b));
    }

    #[test]
    fn lie_exp_is_multiplicative(v in small_field(7), f in any_series(8..9), g in any_series(8..9)) {
        for sign in [Sign::Plus, Sign::Minus] {
            let product = v.lie_exp(&f.mul(&g), sign).unwrap();
            let separate = v.lie_exp(&f, sign).unwrap().mul(&v.lie_exp(&g, sign).unwrap());
            prop_assert!(product.agrees_with(&separate));
        }
    }

    #[test]
    fn lie_exp_is_substitution(v in small_field(7), f in any_series(8..9)) {
        let z = TruncSeries::identity(7);
        let image = v.lie_exp(&z, Sign::Minus).unwrap();
        let direct = v.lie_exp(&f, Sign::Minus).unwrap();
        let substituted = f.compose(&image).unwrap();
        prop_assert!(direct.agrees_with(&substituted));
        prop_assert_eq!(direct.known_len(), 8);
    }

    #[test]
    fn lie_exp_signs_are_inverse(v in small_field(7), f in any_series(8..9)) {
        let there = v.lie_exp(&f, Sign::Plus).unwrap();
        let back = v.lie_exp(&there, Sign::Minus).unwrap();
        prop_assert!(same_length(&back, &f));
    }

    #[test]
    fn hadamard_laws(a in any_series(1..8), b in any_series(1..8), c in any_series(1..8)) {
        prop_assert_eq!(a.hadamard(&b), b.hadamard(&a));
        prop_assert_eq!(a.hadamard(&b).hadamard(&c), a.hadamard(&b.hadamard(&c)));
        let ramp = series((0..a.known_len() as i64).collect());
        prop_assert_eq!(a.nabla(), ramp.hadamard(&a));
    }

    #[test]
    fn weierstrass_reconstructs(f in any_series(1..10), d in 0usize..6) {
        prop_assume!(d < f.known_len());
        let (q, p) = f.weierstrass_div_monomial(d).unwrap();
        let zd = TruncSeries::monomial(Rational::from_integer(1.into()), d, f.trunc_order().max(d as isize) as usize);
        let back = zd.mul(&q).add(&p);
        prop_assert!(back.agrees_with(&f));
        prop_assert!(p.coeffs().iter().skip(d).all(|c| *c == Rational::from_integer(0.into())));
    }

    #[test]
    fn json_round_trip(f in any_series(0..8)) {
        let text = serde_json::to_string(&f).unwrap();
        let back: TruncSeries = serde_json::from_str(&text).unwrap();
        prop_assert!(same_length(&back, &f));
    }
}
