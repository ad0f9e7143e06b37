use kolmo::prisma::{
    self, base_trajectory, closed_form_upper_bound, closed_form_xn, in_invariant_set, in_parametric_set,
    invariant_bound, t_infinity, trajectory, IterConfig, PrismaState,
};
use kolmo::series::Rational;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Rational configuration and a state strictly inside its invariant set.
fn inside_state() -> impl Strategy<Value = (PrismaState<Rational>, IterConfig<Rational>)> {
    (
        1i64..=4,
        0u8..=2,
        0u8..=2,
        1i64..=8,
        1i64..=8,
        1i64..=7,
    )
        .prop_map(|(lam4, k, l, t8, gap_frac, x_frac)| {
            let lambda = q(lam4.min(3), 4);
            let big_r = q(t8, 4);
            let cfg = IterConfig::new(big_r, k as f64, l as f64, lambda.clone()).unwrap();
            let t = q(t8, 8);
            // s strictly between λ t and t
            let s = lambda.clone() * t.clone() + (t.clone() - lambda * t.clone()) * q(gap_frac, 9);
            let bound = invariant_bound(&t, &s, &cfg).unwrap();
            let x = bound * q(x_frac, 8);
            (PrismaState::new(t, s, x), cfg)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn invariant_set_is_forward_invariant((state, cfg) in inside_state()) {
        prop_assert!(in_invariant_set(&state, &cfg));
        let traj = trajectory(&state, &cfg, 8, false).unwrap();
        for st in &traj {
            prop_assert!(in_invariant_set(st, &cfg));
        }
    }

    #[test]
    fn closed_form_matches_iteration((state, cfg) in inside_state()) {
        let traj = trajectory(&state, &cfg, 12, false).unwrap();
        for (n, st) in traj.iter().enumerate() {
            prop_assert_eq!(&closed_form_xn(n, &state, &cfg).unwrap(), &st.x);
        }
    }

    #[test]
    fn product_form_is_an_upper_bound((state, cfg) in inside_state()) {
        let traj = trajectory(&state, &cfg, 6, false).unwrap();
        for (n, st) in traj.iter().enumerate() {
            prop_assert!(st.x <= closed_form_upper_bound(n, &state, &cfg).unwrap());
        }
    }

    #[test]
    fn base_closed_form((state, cfg) in inside_state()) {
        let lambda = cfg.lambda.clone();
        let t_inf = t_infinity(&state.t, &state.s, &lambda).unwrap();
        let pts = base_trajectory(&state.t, &state.s, &lambda, 12).unwrap();
        let gap0 = state.t.clone() - state.s.clone();
        let mut power = q(1, 1);
        for (n, (t, s)) in pts.iter().enumerate() {
            prop_assert_eq!(t, &(t_inf.clone() + power.clone() * (state.t.clone() - t_inf.clone())));
            prop_assert_eq!(&(t.clone() - s.clone()), &(power.clone() * gap0.clone()));
            if let Some((t_next, _)) = pts.get(n + 1) {
                prop_assert_eq!(s, t_next);
            }
            power *= lambda.clone();
        }
    }

    #[test]
    fn parametric_sum_stays_bounded(
        lam in prop::sample::select(vec![0.25, 0.5, 0.75]),
        k in 0u8..=2,
        l in 0u8..=2,
        frac in 0.05f64..0.95,
        x_frac in 0.0f64..0.9,
        r in 0.01f64..1.0,
    ) {
        let cfg = IterConfig::new(2.0, k as f64, l as f64, lam).unwrap();
        let (t, s) = (1.0, lam + (1.0 - lam) * frac);
        let x = invariant_bound(&t, &s, &cfg).unwrap() * x_frac;
        let state = PrismaState::with_alpha(t, s, x, 0.0);
        prop_assume!(in_parametric_set(&state, &cfg, r));
        let traj = trajectory(&state, &cfg, 20, true).unwrap();
        for st in &traj {
            prop_assert!(st.alpha.unwrap() <= r * (1.0 + 1e-12));
        }
    }
}

#[test]
fn rational_trajectory_stays_exact() {
    let cfg = IterConfig::new(q(1, 1), 0.0, 1.0, q(1, 2)).unwrap();
    let traj = trajectory(&PrismaState::new(q(1, 1), q(3, 4), q(1, 16)), &cfg, 5, false).unwrap();
    assert_eq!(traj[5].x, q(1, 1 << 40));
    let r = prisma::rapid_convergence_check(&traj.iter().map(|s| prisma::Scalar::to_f64(&s.x)).collect::<Vec<_>>()).unwrap();
    assert!(r.holds && (r.rho - 2.0).abs() < 1e-9);
}
