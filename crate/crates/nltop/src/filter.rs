//! Cone-weight density filter.
//!
//! Weights `w_ij = max(0, r - dist(i, j))` over element centroids (distances in
//! element units), rows normalized to sum 1, so the filtered field is a convex
//! combination of raw densities: box bounds survive filtering and a uniform
//! field is a fixed point. A radius <= 1 reaches no neighbours and degenerates
//! to the identity.

use crate::error::{Error, Result};
use crate::mesh::Mesh2D;

/// Precomputed sparse filter weights for one mesh + radius.
#[derive(Debug, Clone)]
pub struct DensityFilter {
    n: usize,
    /// CSR-like: per element, the (neighbour, cone weight) pairs. Weights are
    /// raw (unnormalized); `row_sum` holds the per-row normalizer.
    neighbors: Vec<Vec<(usize, f64)>>,
    row_sum: Vec<f64>,
}

impl DensityFilter {
    /// Builds the filter for `radius` measured in element edge lengths.
    pub fn new(mesh: &Mesh2D, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "filter radius must be positive, got {radius}"
            )));
        }
        let n = mesh.num_elements();
        let reach = radius.ceil() as isize;
        let mut neighbors = Vec::with_capacity(n);
        let mut row_sum = Vec::with_capacity(n);
        for e in 0..n {
            let (ex, ey) = mesh.element_coords(e);
            let mut row = Vec::new();
            let mut sum = 0.0;
            for dx in -reach..=reach {
                let jx = ex as isize + dx;
                if jx < 0 || jx >= mesh.nelx as isize {
                    continue;
                }
                for dy in -reach..=reach {
                    let jy = ey as isize + dy;
                    if jy < 0 || jy >= mesh.nely as isize {
                        continue;
                    }
                    let dist = ((dx * dx + dy * dy) as f64).sqrt();
                    let w = radius - dist;
                    if w > 0.0 {
                        row.push((mesh.element_id(jx as usize, jy as usize), w));
                        sum += w;
                    }
                }
            }
            neighbors.push(row);
            row_sum.push(sum);
        }
        Ok(Self { n, neighbors, row_sum })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Filtered field `rho_tilde_i = sum_j w_ij rho_j / sum_j w_ij`.
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        assert_eq!(rho.len(), self.n, "density length mismatch");
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for &(j, w) in &self.neighbors[i] {
                acc += w * rho[j];
            }
            out[i] = acc / self.row_sum[i];
        }
        out
    }

    /// Chain rule through the filter: given dJ/d(rho_tilde), returns dJ/d(rho).
    /// Uses the symmetry w_ij = w_ji of the cone weights.
    pub fn chain_gradient(&self, grad_filtered: &[f64]) -> Vec<f64> {
        assert_eq!(grad_filtered.len(), self.n, "gradient length mismatch");
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let gi = grad_filtered[i] / self.row_sum[i];
            for &(j, w) in &self.neighbors[i] {
                out[j] += w * gi;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn uniform_field_is_fixed_point() {
        let mesh = Mesh2D::new(7, 5, 1.0).unwrap();
        let f = DensityFilter::new(&mesh, 2.5).unwrap();
        let rho = vec![0.3; mesh.num_elements()];
        for v in f.apply(&rho) {
            assert_abs_diff_eq!(v, 0.3, epsilon = 1e-14);
        }
    }

    #[test]
    fn small_radius_is_identity() {
        let mesh = Mesh2D::new(6, 4, 1.0).unwrap();
        let f = DensityFilter::new(&mesh, 0.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rho: Vec<f64> = (0..mesh.num_elements()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let out = f.apply(&rho);
        for (a, b) in rho.iter().zip(&out) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    /// Center spike on a 5x5 mesh at radius 2.5 against cone weights summed by
    /// a hand double loop.
    #[test]
    fn spike_matches_hand_cone_weights() {
        let mesh = Mesh2D::new(5, 5, 1.0).unwrap();
        let f = DensityFilter::new(&mesh, 2.5).unwrap();
        let mut rho = vec![0.0; 25];
        let center = mesh.element_id(2, 2);
        rho[center] = 1.0;
        let out = f.apply(&rho);

        for e in 0..25 {
            let (ex, ey) = mesh.element_coords(e);
            // oracle: w(e, center) / sum_j w(e, j)
            let mut wc = 0.0;
            let mut sum = 0.0;
            for jx in 0..5isize {
                for jy in 0..5isize {
                    let d = (((ex as isize - jx).pow(2) + (ey as isize - jy).pow(2)) as f64).sqrt();
                    let w = (2.5 - d).max(0.0);
                    sum += w;
                    if (jx as usize, jy as usize) == (2, 2) {
                        wc = w;
                    }
                }
            }
            assert_abs_diff_eq!(out[e], wc / sum, epsilon = 1e-14);
        }
    }

    #[test]
    fn filtered_field_stays_in_box() {
        let mesh = Mesh2D::new(9, 6, 1.0).unwrap();
        let f = DensityFilter::new(&mesh, 2.5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let rho: Vec<f64> =
                (0..mesh.num_elements()).map(|_| rng.gen_range(1e-6..=1.0)).collect();
            for v in f.apply(&rho) {
                assert!((1e-6..=1.0 + 1e-15).contains(&v), "filtered value {v} left the box");
            }
        }
    }

    /// A unit spike far from any boundary redistributes mass without loss.
    #[test]
    fn interior_mass_is_preserved() {
        let mesh = Mesh2D::new(15, 15, 1.0).unwrap();
        let f = DensityFilter::new(&mesh, 2.5).unwrap();
        let mut rho = vec![0.0; mesh.num_elements()];
        rho[mesh.element_id(7, 7)] = 1.0;
        let total: f64 = f.apply(&rho).iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    /// chain_gradient is the exact transpose of apply: <g, apply(x)> == <chain(g), x>.
    #[test]
    fn gradient_chain_is_adjoint_of_apply() {
        let mesh = Mesh2D::new(8, 5, 1.0).unwrap();
        let f = DensityFilter::new(&mesh, 1.8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x: Vec<f64> = (0..mesh.num_elements()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..mesh.num_elements()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs: f64 = g.iter().zip(f.apply(&x)).map(|(a, b)| a * b).sum();
            let rhs: f64 = f.chain_gradient(&g).iter().zip(&x).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_radius() {
        let mesh = Mesh2D::new(3, 3, 1.0).unwrap();
        assert!(DensityFilter::new(&mesh, 0.0).is_err());
        assert!(DensityFilter::new(&mesh, -2.0).is_err());
        assert!(DensityFilter::new(&mesh, f64::INFINITY).is_err());
    }
}
