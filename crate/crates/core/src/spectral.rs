//! Exact eigen-decomposition of the Dirichlet Laplacian on a box with uniform
//! bond weight: eigenvalues w Σ_i (2 − 2 cos(π k_i/(L_i+1))) and product-of-sines
//! eigenvectors.

use crate::lattice::{BoxRegion, Site};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct BoxSpectrum {
    region: BoxRegion,
    weight: f64,
    /// Per axis, the 1-d eigenvalues 2 − 2cos(πk/(L+1)), k = 1..=L.
    axis_eigs: Vec<Vec<f64>>,
}

impl BoxSpectrum {
    pub fn new(region: BoxRegion, weight: f64) -> Self {
        let axis_eigs = region
            .extents()
            .iter()
            .map(|&l| (1..=l).map(|k| 2.0 - 2.0 * (PI * k as f64 / (l + 1) as f64).cos()).collect())
            .collect();
        BoxSpectrum { region, weight, axis_eigs }
    }

    /// Value at coordinate `x` along `axis` of the k-th (1-based) normalised
    /// sine mode; zero on the two boundary layers.
    pub fn mode(&self, axis: usize, k: usize, x: i64) -> f64 {
        let l = self.region.extent(axis) as f64;
        let t = (x - self.region.lo().get(axis) + 1) as f64;
        (2.0 / (l + 1.0)).sqrt() * (PI * k as f64 * t / (l + 1.0)).sin()
    }

    fn axis_profile(&self, axis: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
        (1..=self.region.extent(axis)).map(f).collect()
    }

    /// Σ over multi-indices k of Π_i weights[i][k_i] · g(λ_k).
    pub fn sum_modes(&self, weights: &[Vec<f64>], g: impl Fn(f64) -> f64 + Copy) -> f64 {
        fn rec(s: &BoxSpectrum, w: &[Vec<f64>], axis: usize, lam: f64, prod: f64, g: impl Fn(f64) -> f64 + Copy) -> f64 {
            if axis == s.axis_eigs.len() {
                return prod * g(s.weight * lam);
            }
            let mut acc = 0.0;
            for (k, &e) in s.axis_eigs[axis].iter().enumerate() {
                let p = prod * w[axis][k];
                if p != 0.0 {
                    acc += rec(s, w, axis + 1, lam + e, p, g);
                }
            }
            acc
        }
        rec(self, weights, 0, 0.0, 1.0, g)
    }

    fn ones(&self) -> Vec<Vec<f64>> {
        self.axis_eigs.iter().map(|e| vec![1.0; e.len()]).collect()
    }

    pub fn log_det(&self) -> f64 {
        self.sum_modes(&self.ones(), f64::ln)
    }

    pub fn trace_inverse(&self) -> f64 {
        self.sum_modes(&self.ones(), |l| 1.0 / l)
    }

    fn pair_weights(&self, x: &Site, y: &Site) -> Vec<Vec<f64>> {
        (0..self.region.dim())
            .map(|i| self.axis_profile(i, |k| self.mode(i, k, x.get(i)) * self.mode(i, k, y.get(i))))
            .collect()
    }

    /// (weighted Laplacian)⁻¹(x, y); zero when either site is outside the box.
    pub fn inverse_entry(&self, x: &Site, y: &Site) -> f64 {
        self.sum_modes(&self.pair_weights(x, y), |l| 1.0 / l)
    }

    /// Σ_z A⁻¹(x, z) A⁻¹(y, z).
    pub fn inverse_square_entry(&self, x: &Site, y: &Site) -> f64 {
        self.sum_modes(&self.pair_weights(x, y), |l| 1.0 / (l * l))
    }

    /// Per-axis weights of (δ_x − δ_y)ᵀ f(A) (δ_x − δ_y) for nearest neighbours
    /// x, y (either may lie on the boundary layer).
    fn bond_weights(&self, x: &Site, y: &Site) -> Vec<Vec<f64>> {
        (0..self.region.dim())
            .map(|i| {
                if x.get(i) == y.get(i) {
                    self.axis_profile(i, |k| self.mode(i, k, x.get(i)).powi(2))
                } else {
                    self.axis_profile(i, |k| (self.mode(i, k, x.get(i)) - self.mode(i, k, y.get(i))).powi(2))
                }
            })
            .collect()
    }

    /// Var of φ(y) − φ(x) for the field with precision equal to this operator.
    pub fn bond_variance(&self, x: &Site, y: &Site) -> f64 {
        self.sum_modes(&self.bond_weights(x, y), |l| 1.0 / l)
    }

    /// Σ_z (A⁻¹(x, z) − A⁻¹(y, z))².
    pub fn bond_square_sum(&self, x: &Site, y: &Site) -> f64 {
        self.sum_modes(&self.bond_weights(x, y), |l| 1.0 / (l * l))
    }
}
