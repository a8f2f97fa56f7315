use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{block_name, ProbeModel, Targets};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Entries skipped because the perturbation flipped a ReLU.
    pub skipped_kinks: usize,
    pub max_relative_error: f64,
    /// Block holding the worst entry.
    pub worst_block: String,
}

fn relu_pattern(model: &ProbeModel, x: ArrayView2<f64>) -> Vec<bool> {
    let zs = model.pre_activations(x);
    zs[..zs.len() - 1].iter().flat_map(|z| z.iter().map(|&v| v > 0.0)).collect()
}

/// Compares analytic gradients with central differences on up to
/// `per_block` randomly chosen entries of every weight and bias block.
/// Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(
    model: &ProbeModel,
    x: ArrayView2<f64>,
    y: &Targets,
    eps: f64,
    per_block: usize,
    seed: u64,
) -> GradCheckReport {
    const FLOOR: f64 = 1e-6;
    let (_, grads) = model.loss_and_gradients(x, y);
    let base_pattern = relu_pattern(model, x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        checked: 0,
        skipped_kinks: 0,
        max_relative_error: 0.0,
        worst_block: String::new(),
    };
    let mut probe = model.clone();
    for layer in 0..model.layers.len() {
        for bias in [false, true] {
            let len = if bias {
                model.layers[layer].b.len()
            } else {
                model.layers[layer].w.len()
            };
            let picks: Vec<usize> = if len <= per_block {
                (0..len).collect()
            } else {
                (0..per_block).map(|_| rng.random_range(0..len)).collect()
            };
            for k in picks {
                let analytic = if bias {
                    grads.b[layer][k]
                } else {
                    let cols = grads.w[layer].ncols();
                    grads.w[layer][[k / cols, k % cols]]
                };
                let mut eval = |delta: f64| {
                    let l = &mut probe.layers[layer];
                    let cols = l.w.ncols();
                    let p = if bias { &mut l.b[k] } else { &mut l.w[[k / cols, k % cols]] };
                    let orig = *p;
                    *p = orig + delta;
                    let loss = probe.loss(x, y);
                    let pattern = relu_pattern(&probe, x);
                    let l = &mut probe.layers[layer];
                    let cols = l.w.ncols();
                    let p = if bias { &mut l.b[k] } else { &mut l.w[[k / cols, k % cols]] };
                    *p = orig;
                    (loss, pattern)
                };
                let (plus, pat_plus) = eval(eps);
                let (minus, pat_minus) = eval(-eps);
                if pat_plus != base_pattern || pat_minus != base_pattern {
                    report.skipped_kinks += 1;
                    continue;
                }
                let numeric = (plus - minus) / (2.0 * eps);
                let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
                report.checked += 1;
                if err > report.max_relative_error {
                    report.max_relative_error = err;
                    report.worst_block = block_name(layer, bias);
                }
            }
        }
    }
    report
}
