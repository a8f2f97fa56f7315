use molprobe::metrics::*;
use proptest::prelude::*;

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(any::<bool>(), n)))
}

proptest! {
    #[test]
    fn auc_ignores_monotone_transforms((s, y) in scored(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let base = roc_auc(&s, &y).unwrap();
        let exp: Vec<f64> = s.iter().map(|x| x.exp()).collect();
        let affine: Vec<f64> = s.iter().map(|x| a * x + b).collect();
        prop_assert_eq!(roc_auc(&exp, &y).unwrap(), base);
        prop_assert_eq!(roc_auc(&affine, &y).unwrap(), base);
        if let Some(v) = base {
            let oracle = molprobe_oracles::roc_auc_pairwise(&s, &y).unwrap();
            prop_assert!((v - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_of_negated_scores_complements((s, y) in scored()) {
        let neg: Vec<f64> = s.iter().map(|x| -x).collect();
        if let (Some(a), Some(b)) = (roc_auc(&s, &y).unwrap(), roc_auc(&neg, &y).unwrap()) {
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_ignores_monotone_transforms(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..30)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = spearman(&a, &b).unwrap();
        let ea: Vec<f64> = a.iter().map(|x| x.exp()).collect();
        let cb: Vec<f64> = b.iter().map(|x| x * x * x + 2.0).collect();
        let r = spearman(&ea, &cb).unwrap();
        match (base, r) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn cross_entropy_ignores_logit_shifts(rows in prop::collection::vec(prop::collection::vec(-20.0f64..20.0, 4), 1..20), c in -100.0f64..100.0, seed in 0usize..4) {
        let labels: Vec<usize> = (0..rows.len()).map(|i| (i + seed) % 4).collect();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x + c).collect()).collect();
        let a = cross_entropy(&rows, &labels).unwrap();
        let b = cross_entropy(&shifted, &labels).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn spearman_matches_formula_without_ties() {
    let a = [0.3, 1.7, -2.0, 4.4, 0.9, 2.2];
    let b = [1.0, 0.5, -1.0, 3.0, 2.5, 0.0];
    let got = spearman(&a, &b).unwrap().unwrap();
    assert!((got - molprobe_oracles::spearman_no_ties(&a, &b)).abs() < 1e-12);
}
