//! Small dense linear algebra: symmetric eigensolvers, weighted Gram
//! matrices and Householder least squares.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::error::{QprError, Result};
use crate::rng::{normal_vec, stream_rng, Stream};

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending
/// order, eigenvectors in the matching columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

/// Power-iteration tolerance on `||M v - lambda v|| / ||M||_F`.
pub const POWER_TOL: f64 = 1e-10;
/// Power-iteration cap before a seeded restart or the Jacobi fallback.
pub const POWER_MAX_ITER: usize = 5000;
/// Largest dimension for which the full Jacobi solver is used as fallback.
pub const JACOBI_FALLBACK_MAX_N: usize = 64;

pub fn frobenius(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Flip `v` so that its first entry of non-negligible magnitude is positive.
pub fn canonical_sign(v: &mut Array1<f64>) {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *first < 0.0 {
            v.mapv_inplace(|x| -x);
        }
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
pub fn jacobi_eigen(a: ArrayView2<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(QprError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let mut m = a.to_owned();
    // symmetrise against round-off in the caller
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = s;
            m[[j, i]] = s;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let total = frobenius(m.view()).max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        return Err(QprError::NonConvergence {
            what: "Jacobi eigensolver",
            residual: off,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        canonical_sign(&mut col);
        vectors.column_mut(dst).assign(&col);
    }
    Ok(SymEigen { values, vectors })
}

/// Dominant-magnitude eigenpair by power iteration. Returns `None` when the
/// iteration budget runs out.
fn power_dominant(
    m: ArrayView2<f64>,
    start: Array1<f64>,
    scale: f64,
) -> (Option<(f64, Array1<f64>)>, f64) {
    let mut v = start;
    let nv = norm(v.view());
    v /= nv;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let w = m.dot(&v);
        let lambda = v.dot(&w);
        residual = norm((&w - &(&v * lambda)).view()) / scale;
        if residual <= POWER_TOL {
            return (Some((lambda, v)), residual);
        }
        let nw = norm(w.view());
        if nw == 0.0 {
            return (Some((0.0, v)), 0.0);
        }
        v = w / nw;
    }
    (None, residual)
}

fn random_start(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from(normal_vec(rng, n))
}

/// Largest (algebraic) eigenvalue and a unit eigenvector of a symmetric
/// matrix, eigenvector sign canonicalised.
///
/// Power iteration, warm-started from `start` when given, finds the
/// dominant-magnitude eigenvalue `mu`; if `mu < 0` a second run on `M - mu I`
/// recovers the top of the spectrum. On stagnation one seeded random restart
/// is tried, then the Jacobi solver takes over for `n <= 64`.
pub fn top_eigenpair(
    m: ArrayView2<f64>,
    start: Option<ArrayView1<f64>>,
    seed: u64,
) -> Result<(f64, Array1<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(QprError::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    let scale = frobenius(m);
    if scale == 0.0 {
        let mut e = Array1::zeros(n);
        e[0] = 1.0;
        return Ok((0.0, e));
    }
    let mut rng = stream_rng(seed, Stream::Solver);
    let initial = match start {
        Some(s) if norm(s) > 0.0 => s.to_owned(),
        _ => random_start(&mut rng, n),
    };

    let attempt = |init: Array1<f64>| -> (Option<(f64, Array1<f64>)>, f64) {
        let (res, r) = power_dominant(m, init.clone(), scale);
        match res {
            Some((mu, v)) if mu >= 0.0 => (Some((mu, v)), r),
            Some((mu, _)) => {
                let mut shifted = m.to_owned();
                for i in 0..n {
                    shifted[[i, i]] -= mu;
                }
                let (res2, r2) = power_dominant(shifted.view(), init, scale);
                (res2.map(|(l, v)| (l + mu, v)), r2)
            }
            None => (None, r),
        }
    };

    let (mut found, mut residual) = attempt(initial);
    if found.is_none() {
        let (f, r) = attempt(random_start(&mut rng, n));
        found = f;
        residual = r;
    }
    match found {
        Some((lambda, mut v)) => {
            canonical_sign(&mut v);
            Ok((lambda, v))
        }
        None if n <= JACOBI_FALLBACK_MAX_N => {
            let eig = jacobi_eigen(m)?;
            Ok((eig.values[0], eig.vectors.column(0).to_owned()))
        }
        None => Err(QprError::NonConvergence {
            what: "power iteration",
            residual,
        }),
    }
}

/// `A^T diag(w) A` for an `m x n` matrix `A`.
pub fn weighted_gram(a: ArrayView2<f64>, w: &[f64]) -> Array2<f64> {
    let n = a.ncols();
    let mut g = Array2::<f64>::zeros((n, n));
    for (row, &wi) in a.axis_iter(Axis(0)).zip(w) {
        if wi == 0.0 {
            continue;
        }
        for p in 0..n {
            let s = wi * row[p];
            if s == 0.0 {
                continue;
            }
            for q in p..n {
                g[[p, q]] += s * row[q];
            }
        }
    }
    for p in 0..n {
        for q in 0..p {
            g[[p, q]] = g[[q, p]];
        }
    }
    g
}

/// `a_i^T M a_i` for every row `a_i` of `A`.
pub fn row_quadratic_forms(a: ArrayView2<f64>, m: ArrayView2<f64>) -> Vec<f64> {
    a.axis_iter(Axis(0))
        .map(|row| row.dot(&m.dot(&row)))
        .collect()
}

/// Least-squares solution of `min ||A x - b||_2` by Householder QR.
pub fn least_squares(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Result<Array1<f64>> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(QprError::DimensionMismatch {
            expected: m,
            found: b.len(),
        });
    }
    if m < n {
        return Err(QprError::RankDeficient { pivot: 0.0 });
    }
    let mut r = a.to_owned();
    let mut qtb = b.to_owned();
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let col_norm = (j..m).map(|i| r[[i, j]] * r[[i, j]]).sum::<f64>().sqrt();
        if col_norm <= 1e-13 * scale {
            return Err(QprError::RankDeficient { pivot: col_norm });
        }
        let alpha = if r[[j, j]] > 0.0 { -col_norm } else { col_norm };
        let mut v: Vec<f64> = (j..m).map(|i| r[[i, j]]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for k in j..n {
                let dot: f64 = (j..m).map(|i| v[i - j] * r[[i, k]]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..m {
                    r[[i, k]] -= f * v[i - j];
                }
            }
            let dot: f64 = (j..m).map(|i| v[i - j] * qtb[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                qtb[i] -= f * v[i - j];
            }
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for j in (0..n).rev() {
        let s: f64 = ((j + 1)..n).map(|k| r[[j, k]] * x[k]).sum();
        x[j] = (qtb[j] - s) / r[[j, j]];
    }
    Ok(x)
}
