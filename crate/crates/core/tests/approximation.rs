use finger_core::finger::{residual, train_finger, ApproxOptions, FingerConfig, QueryContext};
use finger_core::{build_graph, GraphParams, Metric, VectorSet};
use proptest::prelude::*;

fn f64s(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn decomposition_identity(
        q in proptest::collection::vec(-10.0f32..10.0, 16),
        c in proptest::collection::vec(-10.0f32..10.0, 16),
        d in proptest::collection::vec(-10.0f32..10.0, 16),
    ) {
        let cc = dot(&f64s(&c), &f64s(&c));
        prop_assume!(cc > 1e-3);
        let (b_q, q_res) = residual(&c, &q).unwrap();
        let (b_d, d_res) = residual(&c, &d).unwrap();
        let lhs = (b_q - b_d).powi(2) * cc + dot(&q_res, &q_res) + dot(&d_res, &d_res) - 2.0 * dot(&q_res, &d_res);
        let diff: Vec<f64> = q.iter().zip(&d).map(|(a, b)| *a as f64 - *b as f64).collect();
        let rhs = dot(&diff, &diff);
        prop_assert!((lhs - rhs).abs() <= 1e-3 * rhs.max(1e-6), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn inner_product_recovery(
        q in proptest::collection::vec(-10.0f32..10.0, 8),
        c in proptest::collection::vec(-10.0f32..10.0, 8),
    ) {
        let (qf, cf) = (f64s(&q), f64s(&c));
        let dist: f64 = qf.iter().zip(&cf).map(|(a, b)| (a - b).powi(2)).sum();
        let recovered = (dot(&qf, &qf) + dot(&cf, &cf) - dist) / 2.0;
        let truth = dot(&qf, &cf);
        prop_assert!((recovered - truth).abs() <= 1e-3 * truth.abs().max(1.0));
    }
}

#[test]
fn query_equal_to_center_is_exact() {
    let data: Vec<f32> = (0..600 * 10)
        .map(|i| ((i * 7919) % 101) as f32 / 10.0 - 5.0)
        .collect();
    let data = VectorSet::new(data, 10, Metric::L2).unwrap();
    let g = build_graph(
        &data,
        &GraphParams {
            max_degree: 8,
            ef_construction: 50,
            seed: 2,
        },
    )
    .unwrap();
    let index = train_finger(&g, &data, &FingerConfig::fixed(3)).unwrap();
    for c in [0u32, 99, 311] {
        let mut ctx = QueryContext::new(&index, data.row(c as usize), ApproxOptions::default());
        assert!(ctx.set_center(c, 0.0));
        for (slot, &d) in g.base_neighbors(c).iter().enumerate() {
            let exact = finger_core::metric::sq_l2(data.row(c as usize), data.row(d as usize));
            let est = ctx.estimate_score(c, slot);
            assert!(
                (est - exact).abs() <= 1e-3 * exact.max(1e-3),
                "{est} vs {exact}"
            );
        }
    }
}
