//! Invariants of expected free energy and the policy posterior.

use proptest::prelude::*;
use value_profiles::beliefs::FactorizedBeliefs;
use value_profiles::math;
use value_profiles::policy::{expected_free_energy, policy_posterior};
use value_profiles::{GenerativeModel, ModelHyperParams, TaskConfig};

fn model() -> GenerativeModel {
    GenerativeModel::new(&TaskConfig::default(), ModelHyperParams::default()).unwrap()
}

fn simplex<const N: usize>() -> impl Strategy<Value = [f64; N]> {
    proptest::collection::vec(0.0f64..1.0, N).prop_filter_map("zero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-9).then(|| std::array::from_fn(|i| v[i] / s))
    })
}

proptest! {
    #[test]
    fn posterior_ignores_constant_shifts(
        g in proptest::array::uniform4(-10.0f64..10.0),
        xi in proptest::array::uniform4(-5.0f64..5.0),
        gamma in 0.01f64..20.0,
        dg in -50.0f64..50.0,
        dxi in -50.0f64..50.0,
    ) {
        let p = policy_posterior(&g, &xi, gamma).unwrap();
        let q = policy_posterior(&g.map(|x| x + dg), &xi.map(|x| x + dxi), gamma).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn higher_precision_concentrates_on_lowest_g(
        g in proptest::array::uniform4(-5.0f64..5.0),
        gamma in 0.01f64..10.0,
        factor in 1.01f64..5.0,
    ) {
        let best = (0..4).min_by(|&i, &j| g[i].total_cmp(&g[j])).unwrap();
        prop_assume!((0..4).all(|i| i == best || g[i] - g[best] > 1e-6));
        let lo = policy_posterior(&g, &[0.0; 4], gamma).unwrap();
        let hi = policy_posterior(&g, &[0.0; 4], gamma * factor).unwrap();
        prop_assert!(hi[best] >= lo[best] - 1e-15);
    }

    #[test]
    fn terms_are_nonnegative_and_posterior_normalized(
        context in simplex::<2>(),
        arm in simplex::<2>(),
        choice in simplex::<4>(),
        c in proptest::array::uniform3(-8.0f64..8.0),
        gamma in 0.01f64..20.0,
    ) {
        let m = model();
        let b = FactorizedBeliefs { context, arm, choice };
        let t = expected_free_energy(&b, &m, &c);
        for i in 0..4 {
            prop_assert!(t.risk[i] >= -1e-10);
            prop_assert!(t.info_gain[i] >= -1e-10);
            prop_assert!(t.expected_cost[i] >= t.risk[i] - 1e-10);
        }
        let p = policy_posterior(&t.g(), &[0.0; 4], gamma).unwrap();
        prop_assert!(math::is_simplex(&p, 1e-10));
    }
}
