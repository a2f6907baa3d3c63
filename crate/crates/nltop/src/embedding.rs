//! Cosine-distance matrices and 2D embeddings (classical MDS, plus a PCA
//! alternative used for ablation comparisons).
//!
//! Cosine distance is scale-invariant and stays in [0,1] for nonnegative
//! design vectors, which makes the squared-distance matrix well suited for
//! double centering. The Gram matrix of cosine distances is generally not
//! positive semidefinite; negative eigenvalues among the leading two are
//! clamped to zero and flagged, which is the standard classical-MDS recipe.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::par::{self, ExecMode};

/// 2D embedding of N samples.
#[derive(Debug, Clone)]
pub struct Embedding2D {
    pub coords: Vec<[f64; 2]>,
    /// The two largest Gram eigenvalues, before any clamping.
    pub eigenvalues: [f64; 2],
    /// Frobenius mismatch between the achieved Gram matrix Y·Yᵀ and the
    /// doubly centered target.
    pub stress_residual: f64,
    /// True when a negative eigenvalue among the top two was clamped to zero.
    pub negative_clamped: bool,
}

/// Cosine distance 1 − aᵀb/(‖a‖‖b‖), clamped to [0,1].
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "cosine distance needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na <= 0.0 || nb <= 0.0 {
        return Err(Error::InvalidParameter(
            "cosine distance is undefined for zero vectors".into(),
        ));
    }
    Ok((1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0))
}

/// N×N matrix of SQUARED cosine distances, filled row by row (rows are
/// independent, so the fill parallelizes embarrassingly and the result is
/// identical in either mode).
pub fn squared_cosine_distance_matrix(
    designs: &[&[f64]],
    mode: ExecMode,
) -> Result<DMatrix<f64>> {
    let n = designs.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no designs to compare".into()));
    }
    let len = designs[0].len();
    for (i, d) in designs.iter().enumerate() {
        if d.len() != len {
            return Err(Error::InvalidParameter(format!(
                "design {i} has length {} but expected {len}",
                d.len()
            )));
        }
        if d.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter(format!("design {i} is a zero vector")));
        }
    }
    let rows: Vec<Vec<f64>> = par::map_indexed(mode, n, |i| {
        (0..n)
            .map(|j| {
                if i == j {
                    0.0
                } else {
                    let d = cosine_distance(designs[i], designs[j])
                        .expect("norms validated above");
                    d * d
                }
            })
            .collect()
    });
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn validate_squared_distances(d2: &DMatrix<f64>) -> Result<()> {
    let n = d2.nrows();
    if n != d2.ncols() {
        return Err(Error::InvalidParameter("distance matrix must be square".into()));
    }
    if n < 3 {
        return Err(Error::Config(format!(
            "need at least 3 samples to build a 2D embedding, got {n}"
        )));
    }
    for i in 0..n {
        if d2[(i, i)].abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "distance matrix diagonal must vanish, got {} at {i}",
                d2[(i, i)]
            )));
        }
        for j in 0..i {
            let (a, b) = (d2[(i, j)], d2[(j, i)]);
            if (a - b).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "distance matrix asymmetry {a} vs {b} at ({i},{j})"
                )));
            }
            if !a.is_finite() || a < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "squared distance {a} is negative or non-finite at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Classical MDS: double-center the squared distances into a Gram matrix and
/// read the embedding off its two leading eigenpairs.
pub fn classical_mds(d2: &DMatrix<f64>) -> Result<Embedding2D> {
    validate_squared_distances(d2)?;
    let n = d2.nrows();
    let row_mean: Vec<f64> = (0..n).map(|i| d2.row(i).sum() / n as f64).collect();
    let total_mean = row_mean.iter().sum::<f64>() / n as f64;
    // G = -1/2 * H D H expressed entrywise; symmetry lets row means serve both sides
    let gram = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (d2[(i, j)] - row_mean[i] - row_mean[j] + total_mean)
    });
    Ok(embedding_from_gram(gram))
}

/// PCA via the Gram trick: center the design matrix and eigendecompose the
/// N×N matrix of centered inner products, avoiding anything of size n×n.
pub fn pca_embed(designs: &[&[f64]]) -> Result<Embedding2D> {
    let n = designs.len();
    if n < 3 {
        return Err(Error::Config(format!(
            "need at least 3 samples to build a 2D embedding, got {n}"
        )));
    }
    let len = designs[0].len();
    for (i, d) in designs.iter().enumerate() {
        if d.len() != len {
            return Err(Error::InvalidParameter(format!(
                "design {i} has length {} but expected {len}",
                d.len()
            )));
        }
    }
    let mut mean = vec![0.0; len];
    for d in designs {
        for (m, &v) in mean.iter_mut().zip(*d) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered_dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(&mean)
            .map(|((&x, &y), &m)| (x - m) * (y - m))
            .sum()
    };
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = centered_dot(designs[i], designs[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    Ok(embedding_from_gram(gram))
}

/// Shared spectral step: top-2 eigenpairs, deterministic signs, clamping,
/// explicit re-centering, and the Frobenius stress residual.
fn embedding_from_gram(gram: DMatrix<f64>) -> Embedding2D {
    let n = gram.nrows();
    let eig = SymmetricEigen::new(gram.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut coords = vec![[0.0f64; 2]; n];
    let mut eigenvalues = [0.0f64; 2];
    let mut negative_clamped = false;
    for k in 0..2 {
        let idx = order[k];
        let lambda = eig.eigenvalues[idx];
        eigenvalues[k] = lambda;
        let scale = if lambda > 0.0 {
            lambda.sqrt()
        } else {
            negative_clamped |= lambda < 0.0;
            0.0
        };
        let col = eig.eigenvectors.column(idx);
        // deterministic sign: largest-magnitude entry made positive
        let mut flip = 1.0;
        let mut best = 0.0f64;
        for &v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                flip = if v < 0.0 { -1.0 } else { 1.0 };
            }
        }
        for (i, &v) in col.iter().enumerate() {
            coords[i][k] = flip * v * scale;
        }
    }
    for k in 0..2 {
        let mean = coords.iter().map(|c| c[k]).sum::<f64>() / n as f64;
        for c in &mut coords {
            c[k] -= mean;
        }
    }
    let mut stress = 0.0;
    for i in 0..n {
        for j in 0..n {
            let yy = coords[i][0] * coords[j][0] + coords[i][1] * coords[j][1];
            let diff = yy - gram[(i, j)];
            stress += diff * diff;
        }
    }
    Embedding2D {
        coords,
        eigenvalues,
        stress_residual: stress.sqrt(),
        negative_clamped,
    }
}
