//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Eigenpairs sorted by ascending eigenvalue. Eigenvector `j` is stored
/// contiguously at `vectors[j * n..(j + 1) * n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

impl SymmetricEigen {
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

/// Diagonalizes the symmetric row-major `n x n` matrix `a`. Stops when the
/// off-diagonal Frobenius norm drops below `tol * max(1, ||a||_F)`.
pub fn jacobi_eigen(a: &[f64], n: usize, max_sweeps: usize, tol: f64) -> Result<SymmetricEigen> {
    assert_eq!(a.len(), n * n, "matrix buffer is not n x n");
    let mut a = a.to_vec();
    // rows of `vt` are the eigenvectors
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let threshold = tol * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off < threshold {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::EigenNoConvergence {
                sweeps,
                off_norm: off,
                size: n,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut vt, n, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]).then(x.cmp(&y)));
    let values = order.iter().map(|&j| a[j * n + j]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &j in &order {
        vectors.extend_from_slice(&vt[j * n..(j + 1) * n]);
    }
    Ok(SymmetricEigen {
        n,
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[i * n + j] * a[i * n + j];
        }
    }
    (2.0 * s).sqrt()
}

#[inline]
fn rotate(a: &mut [f64], vt: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[p * n + k];
        let akq = a[q * n + k];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        a[p * n + k] = new_p;
        a[k * n + p] = new_p;
        a[q * n + k] = new_q;
        a[k * n + q] = new_q;
    }
    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    debug_assert!(p < q);
    let (lo, hi) = vt.split_at_mut(q * n);
    let (rp, rq) = (&mut lo[p * n..(p + 1) * n], &mut hi[..n]);
    for (vp, vq) in rp.iter_mut().zip(rq.iter_mut()) {
        let (x, y) = (*vp, *vq);
        *vp = c * x - s * y;
        *vq = s * x + c * y;
    }
}
