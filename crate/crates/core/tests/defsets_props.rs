use kolmo::defsets::{self, agree_on_grid, convolve, square_grid, BoundaryFn, DefSet};
use proptest::prelude::*;

fn boundary() -> impl Strategy<Value = BoundaryFn> {
    let leaf = prop_oneof![
        (0.2f64..3.0, -0.3f64..0.3).prop_map(|(a, c)| BoundaryFn::linear(a, c).unwrap()),
        (0.2f64..3.0, 0.25f64..3.0).prop_map(|(g, k)| BoundaryFn::power(g, k).unwrap()),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoundaryFn::compose(&a, &b)),
            (inner.clone(), inner).prop_map(|(a, b)| BoundaryFn::min(a, b)),
        ]
    })
}

fn grid() -> Vec<(f64, f64)> {
    square_grid(40, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn convolution_is_associative(f in boundary(), g in boundary(), h in boundary()) {
        let (a, b, c) = (DefSet::region(f), DefSet::region(g), DefSet::region(h));
        let left = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
        let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
        for t in (1..=40).map(|i| i as f64 / 40.0) {
            let (l, r) = (left.boundary().unwrap().eval(t), right.boundary().unwrap().eval(t));
            prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(1.0), "t = {t}: {l} vs {r}");
        }
    }

    #[test]
    fn fixed_boundaries_give_idempotents(c in 0.01f64..0.99) {
        // min(t, c + 1e-14 t) is a retraction onto [0, c] up to rounding
        let f = BoundaryFn::min(BoundaryFn::linear(1.0, 0.0).unwrap(), BoundaryFn::linear(1e-14, c).unwrap());
        let grid_points: Vec<f64> = (1..=40).map(|i| i as f64 / 40.0).collect();
        prop_assume!(grid_points.iter().all(|&t| (f.eval(f.eval(t)) - f.eval(t)).abs() < 1e-12));
        let set = DefSet::region(f);
        prop_assert!(defsets::is_idempotent_on_grid(&set, &grid()).unwrap());
    }

    #[test]
    fn tangent_slopes_multiply(
        alpha in 0.2f64..3.0,
        beta in 0.2f64..3.0,
        (ga, ka) in (2.0f64..4.0, 0.3f64..0.7),
        (gb, kb) in (2.0f64..4.0, 0.3f64..0.7),
    ) {
        // min(αt, γ t^k) with k < 1 is αt + o(t) but not linear
        let f = BoundaryFn::min(BoundaryFn::linear(alpha, 0.0).unwrap(), BoundaryFn::power(ga, ka).unwrap());
        let g = BoundaryFn::min(BoundaryFn::linear(beta, 0.0).unwrap(), BoundaryFn::power(gb, kb).unwrap());
        let set = convolve(&DefSet::region(f), &DefSet::region(g)).unwrap();
        let slope = set.boundary().unwrap().slope_at_zero(1e-4);
        prop_assert!((slope - alpha * beta).abs() < 1e-6, "slope {slope} vs {}", alpha * beta);
    }

    #[test]
    fn cones_multiply(alpha in 0.25f64..4.0, beta in 0.25f64..4.0) {
        let ab = convolve(&DefSet::cone(alpha).unwrap(), &DefSet::cone(beta).unwrap()).unwrap();
        let expected = DefSet::cone(alpha * beta).unwrap();
        prop_assert!(ab.approx_eq(&expected));
        prop_assert!(agree_on_grid(&ab, &expected, &square_grid(30, 1.0)).unwrap());
    }

    #[test]
    fn scalings_are_pseudo_inverse(alpha in 0.25f64..4.0) {
        let a = DefSet::cone(alpha).unwrap();
        let b = DefSet::region(BoundaryFn::linear(alpha, 0.0).unwrap());
        let diag = DefSet::open_diagonal();
        prop_assert!(convolve(&a, &b).unwrap().approx_eq(&diag));
        prop_assert!(convolve(&b, &a).unwrap().approx_eq(&diag));
    }

    #[test]
    fn json_round_trip(f in boundary()) {
        let set = DefSet::region(f);
        let text = serde_json::to_string(&set).unwrap();
        prop_assert_eq!(serde_json::from_str::<DefSet>(&text).unwrap(), set);
    }
}

#[test]
fn diagonals_are_idempotent() {
    for set in [DefSet::open_diagonal(), DefSet::closed_diagonal()] {
        assert!(defsets::is_idempotent_on_grid(&set, &square_grid(100, 1.0)).unwrap());
    }
}
