//! Singular values by Householder QR followed by one-sided Jacobi on R.

use ndarray::ArrayView2;

/// Column-major copy of `a`, transposed first when it is wider than tall.
fn column_major(a: ArrayView2<f64>) -> (Vec<f64>, usize, usize) {
    let (r, c) = a.dim();
    let (rows, cols, t) = if r >= c { (r, c, false) } else { (c, r, true) };
    let mut out = vec![0.0; rows * cols];
    for j in 0..cols {
        for i in 0..rows {
            out[j * rows + i] = if t { a[[j, i]] } else { a[[i, j]] };
        }
    }
    (out, rows, cols)
}

/// Upper-triangular `cols x cols` factor R of a column-major `rows x cols`
/// matrix (rows >= cols), returned column-major.
fn householder_r(mut a: Vec<f64>, rows: usize, cols: usize) -> Vec<f64> {
    for k in 0..cols {
        let norm = (k..rows).map(|i| a[k * rows + i].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k * rows + k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|i| a[k * rows + i]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let col = &mut a[j * rows + k..(j + 1) * rows];
            let dot: f64 = v.iter().zip(col.iter()).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, x) in col.iter_mut().zip(&v) {
                *c -= f * x;
            }
        }
    }
    let mut r = vec![0.0; cols * cols];
    for j in 0..cols {
        for i in 0..=j {
            r[j * cols + i] = a[j * rows + i];
        }
    }
    r
}

/// Singular values in descending order; there are `min(rows, cols)` of them.
pub fn singular_values(a: ArrayView2<f64>) -> Vec<f64> {
    let (a, rows, cols) = column_major(a);
    if cols == 0 {
        return Vec::new();
    }
    let n = cols;
    let mut r = householder_r(a, rows, cols);
    let col = |j: usize| j * n..(j + 1) * n;
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (x, y) in r[col(p)].iter().zip(&r[col(q)]) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let x = r[p * n + i];
                    let y = r[q * n + i];
                    r[p * n + i] = c * x - s * y;
                    r[q * n + i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| r[col(j)].iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}
