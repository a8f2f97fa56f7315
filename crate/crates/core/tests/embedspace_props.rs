use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use molprobe::embedspace::*;

fn matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Product of random Givens rotations: orthogonal by construction.
fn orthogonal(d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Array2::eye(d);
    for _ in 0..4 * d {
        let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
        if i == j {
            continue;
        }
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (c, s) = (th.cos(), th.sin());
        let mut g = Array2::eye(d);
        g[[i, i]] = c;
        g[[j, j]] = c;
        g[[i, j]] = -s;
        g[[j, i]] = s;
        q = q.dot(&g);
    }
    q
}

fn labels(n: usize, seed: u64) -> Vec<Vec<Option<bool>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| vec![Some(rng.random_bool(0.5)), Some(rng.random_bool(0.3))]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniformity_nonpositive_and_rotation_invariant(seed in any::<u64>(), n in 2usize..30, d in 2usize..8) {
        let z = matrix(n, d, seed);
        let u = uniformity(z.view(), 2.0).value.unwrap();
        prop_assert!(u <= 0.0);
        prop_assert!(u < 0.0);
        let r = uniformity(z.dot(&orthogonal(d, seed ^ 7)).view(), 2.0).value.unwrap();
        prop_assert!((u - r).abs() < 1e-9);
    }

    #[test]
    fn coincident_rows_give_zero(seed in any::<u64>(), n in 2usize..10, scale in 0.1f64..10.0) {
        let row = matrix(1, 4, seed);
        let z = Array2::from_shape_fn((n, 4), |(i, j)| row[[0, j]] * scale * (i + 1) as f64);
        prop_assert_eq!(uniformity(z.view(), 2.0).value, Some(0.0));
    }

    #[test]
    fn spectrum_invariances(seed in any::<u64>(), n in 2usize..20, d in 2usize..8) {
        let z = matrix(n, d, seed);
        let base = spectrum(z.view(), DEFAULT_COLLAPSE_TAU, false).singular_values;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let permuted = z.select(ndarray::Axis(0), &order);
        let rotated = z.dot(&orthogonal(d, seed ^ 3));
        let oracle = molprobe_oracles::singular_values_via_gram(z.as_standard_layout().as_slice().unwrap(), n, d);
        for other in [permuted, rotated] {
            let s = spectrum(other.view(), DEFAULT_COLLAPSE_TAU, false).singular_values;
            for (a, b) in base.iter().zip(&s) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
        for (a, b) in base.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn separation_ignores_global_scale(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let z = matrix(30, 5, seed);
        let pairs = build_pairs(&labels(30, seed), 50, seed);
        let a = alignment(z.view(), &pairs, DEFAULT_ALIGNMENT_BINS);
        let b = alignment((&z * scale).view(), &pairs, DEFAULT_ALIGNMENT_BINS);
        match (a.separation, b.separation) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn centering_controls_translation_sensitivity(seed in any::<u64>()) {
        let z = matrix(12, 4, seed);
        let shift = Array1::from(vec![3.0, -2.0, 5.0, 1.0]);
        let moved = &z + &shift;
        let c0 = spectrum(z.view(), DEFAULT_COLLAPSE_TAU, true).singular_values;
        let c1 = spectrum(moved.view(), DEFAULT_COLLAPSE_TAU, true).singular_values;
        for (a, b) in c0.iter().zip(&c1) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let r0 = spectrum(z.view(), DEFAULT_COLLAPSE_TAU, false).singular_values;
        let r1 = spectrum(moved.view(), DEFAULT_COLLAPSE_TAU, false).singular_values;
        prop_assert!((r0[0] - r1[0]).abs() > 1e-3);
    }
}
