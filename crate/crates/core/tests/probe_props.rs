use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use molprobe::probe::*;

fn data(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
}

fn config(depth: usize, width: usize, kind: TaskKind, seed: u64) -> ProbeConfig {
    ProbeConfig {
        hidden_layers: depth,
        width,
        task_kind: kind,
        seed,
        ..Default::default()
    }
}

#[test]
fn gradients_for_every_depth_and_width() {
    let x = data(6, 4, 1);
    let cases = [
        (TaskKind::Regression, Targets::Real(vec![0.3, -1.2, 0.8, 2.0, -0.4, 0.0])),
        (TaskKind::BinaryClassification, Targets::Binary(vec![true, false, false, true, true, false])),
        (TaskKind::Multiclass(3), Targets::Class(vec![2, 0, 1, 1, 0, 2])),
    ];
    for depth in 0..=3 {
        for width in [100, 600, 1200] {
            if depth == 0 && width != 100 {
                continue;
            }
            for (kind, y) in &cases {
                let m = build_probe(&config(depth, width, *kind, 9), 4, kind.output_dim()).unwrap();
                let r = gradient_check(&m, x.view(), y, 1e-4, 12, 3);
                assert!(r.checked > 0);
                assert!(r.max_relative_error < 1e-5, "depth {depth} width {width} {kind:?}: {r:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_is_deterministic_and_keeps_the_best_epoch(seed in any::<u64>(), depth in 0usize..3) {
        let x = data(120, 5, seed);
        let y: Vec<bool> = x.rows().into_iter().map(|r| r[0] + 0.5 * r[1] > 0.0).collect();
        let train = ProbeData::new(x.slice(ndarray::s![..90, ..]).to_owned(), Targets::Binary(y[..90].to_vec())).unwrap();
        let valid = ProbeData::new(x.slice(ndarray::s![90.., ..]).to_owned(), Targets::Binary(y[90..].to_vec())).unwrap();
        let cfg = ProbeConfig { epochs: 15, batch_size: 16, ..config(depth, 100, TaskKind::BinaryClassification, seed) };
        let run = || train_probe(build_probe(&cfg, 5, 1).unwrap(), &train, &valid, &cfg).unwrap();
        let (a, b) = (run(), run());
        prop_assert_eq!(&a.history, &b.history);
        prop_assert_eq!(&a.model, &b.model);
        for h in &a.history {
            prop_assert!(a.best_valid_loss <= h.valid_loss);
        }
    }
}

#[test]
fn linear_probe_recovers_a_coordinate() {
    let x = data(512, 6, 4);
    let y: Vec<f64> = x.column(2).to_vec();
    let train = ProbeData::new(x.clone(), Targets::Real(y.clone())).unwrap();
    let cfg = ProbeConfig {
        epochs: 100,
        batch_size: 32,
        learning_rate: 1e-2,
        ..config(0, 100, TaskKind::Regression, 4)
    };
    let out = train_probe(build_probe(&cfg, 6, 1).unwrap(), &train, &train, &cfg).unwrap();
    let mse = out.model.loss(x.view(), &Targets::Real(y));
    assert!(mse < 1e-6, "train MSE {mse}");
}
