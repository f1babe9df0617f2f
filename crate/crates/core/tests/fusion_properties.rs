use proptest::prelude::*;
use scanfuse::fusion::{
    choquet_fuse, normalization_residual, solve_lambda, tail_measures, FusionConfig, MeasureMode, SortMode,
};
use scanfuse::synth::brute_force_fuse;
use scanfuse::ScanRecord;

fn simplex(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, c).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn scan(max_slices: usize) -> impl Strategy<Value = ScanRecord> {
    (2usize..=5).prop_flat_map(move |c| {
        prop::collection::vec(simplex(c), 1..=max_slices).prop_map(|v| ScanRecord::from_vectors("s", v, None))
    })
}

fn configs() -> Vec<FusionConfig> {
    let mut out = Vec::new();
    for sort in [SortMode::Density, SortMode::Classical] {
        out.push(FusionConfig { sort, ..FusionConfig::default() });
        out.push(FusionConfig { sort, ..FusionConfig::default() }.with_lambda(-0.4));
        out.push(FusionConfig { sort, ..FusionConfig::default() }.with_lambda(2.0));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lambda_sign_and_residual(g in prop::collection::vec(0.05f64..0.95, 2..30)) {
        let l = solve_lambda(&g).unwrap();
        let sum: f64 = g.iter().sum();
        prop_assert!(normalization_residual(&g, l).abs() < 1e-10);
        if (sum - 1.0).abs() > 1e-12 {
            prop_assert_eq!(l.signum(), (1.0 - sum).signum());
            prop_assert!(l > -1.0);
        }
    }

    #[test]
    fn exact_lambda_normalizes_the_measure(g in prop::collection::vec(0.05f64..0.95, 2..30)) {
        let l = solve_lambda(&g).unwrap();
        let full = tail_measures(&g, l)[0];
        prop_assert!((full - 1.0).abs() < 1e-9, "μ(S) = {}", full);
    }

    #[test]
    fn classical_exact_matches_enumeration(s in scan(6)) {
        let oracle = brute_force_fuse(&s).unwrap();
        let fused = choquet_fuse(&s, &FusionConfig::classical()).unwrap();
        for (a, b) in oracle.values.iter().zip(&fused.values) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn constant_scan_is_idempotent(p in simplex(5), n in 1usize..12) {
        let s = ScanRecord::from_vectors("s", vec![p.clone(); n], None);
        for cfg in configs() {
            let f = choquet_fuse(&s, &cfg).unwrap();
            for (a, b) in f.values.iter().zip(&p) {
                prop_assert!((a - b).abs() < 1e-12, "{:?}: {} vs {}", cfg.sort, a, b);
            }
        }
    }

    #[test]
    fn classical_values_are_bounded(s in scan(12)) {
        for cfg in configs().into_iter().filter(|c| c.sort == SortMode::Classical) {
            let f = choquet_fuse(&s, &cfg).unwrap();
            for (k, v) in f.values.iter().enumerate() {
                let col: Vec<f64> = s.vectors().map(|p| p[k]).collect();
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12, "{} outside [{}, {}]", v, lo, hi);
            }
        }
    }

    #[test]
    fn slice_order_does_not_matter(s in scan(12), rot in 0usize..12, flip in any::<bool>()) {
        let mut slices = s.slices.clone();
        let k = rot % slices.len();
        slices.rotate_left(k);
        if flip {
            slices.reverse();
        }
        let permuted = ScanRecord::new("s", slices, None);
        for cfg in configs() {
            let a = choquet_fuse(&s, &cfg).unwrap();
            let b = choquet_fuse(&permuted, &cfg).unwrap();
            prop_assert_eq!(a.decision, b.decision);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_slice_is_identity(p in simplex(5)) {
        let s = ScanRecord::from_vectors("s", vec![p.clone()], None);
        for cfg in configs() {
            prop_assert_eq!(&choquet_fuse(&s, &cfg).unwrap().values, &p);
        }
    }

    #[test]
    fn normalization_keeps_the_decision(s in scan(12), lambda in -0.99f64..-0.01) {
        for sort in [SortMode::Density, SortMode::Classical] {
            let on = FusionConfig { sort, measure: MeasureMode::Grid, lambda: Some(lambda), normalize: true, ..FusionConfig::default() };
            let off = FusionConfig { normalize: false, ..on.clone() };
            let a = choquet_fuse(&s, &on).unwrap();
            let b = choquet_fuse(&s, &off).unwrap();
            prop_assert_eq!(a.decision, b.decision);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x * b.full_measure - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn two_slice_hand_check() {
    let s = ScanRecord::from_vectors("s", vec![vec![0.6, 0.4], vec![0.4, 0.6]], None);
    let f = choquet_fuse(&s, &FusionConfig::default()).unwrap();
    assert!((f.lambda.unwrap() + 5.0 / 9.0).abs() < 1e-12);
    assert!((f.values[0] - 0.52).abs() < 1e-12 && (f.values[1] - 0.48).abs() < 1e-12);
}
