//! Green's functions of simple random walk killed on leaving a finite domain.
//!
//! `G_walk = (I − P)⁻¹` counts expected visits; `G_lap = (−Δ)⁻¹ = G_walk/(2d)`.

use crate::lattice::{BoxRegion, Site};
use crate::linalg::{Method, SolverError, SpdSolver, SymBuilder, SymOperator};
use crate::spectral::BoxSpectrum;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Column residual bound ∥(I−P)g − e_x∥∞.
pub const COLUMN_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Walk,
    Laplacian,
}

/// Euclidean ball {x ∈ Z^d : |x| < r}.
#[derive(Clone, Debug)]
pub struct Ball {
    pub radius: f64,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl Ball {
    pub fn new(radius: f64, d: usize) -> Self {
        let reach = radius.ceil() as usize;
        let hull = BoxRegion::centered(reach, d);
        let sites: Vec<Site> = hull.sites().filter(|s| (s.norm_sq() as f64) < radius * radius).collect();
        let index = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ball { radius, sites, index }
    }
}

#[derive(Clone, Debug)]
pub enum Domain {
    Box(BoxRegion),
    Ball(Ball),
}

impl Domain {
    pub fn ball(radius: f64, d: usize) -> Self {
        Domain::Ball(Ball::new(radius, d))
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box(b) => b.dim(),
            Domain::Ball(b) => b.sites.first().map_or(0, |s| s.dim()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Domain::Box(b) => b.len(),
            Domain::Ball(b) => b.sites.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, s: &Site) -> Option<usize> {
        match self {
            Domain::Box(b) => b.index(s),
            Domain::Ball(b) => b.index.get(s).copied(),
        }
    }

    pub fn site(&self, i: usize) -> Site {
        match self {
            Domain::Box(b) => b.site(i),
            Domain::Ball(b) => b.sites[i],
        }
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.index(s).is_some()
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }
}

impl From<BoxRegion> for Domain {
    fn from(b: BoxRegion) -> Self {
        Domain::Box(b)
    }
}

/// Dirichlet graph Laplacian (−Δ) on the domain: 2d on the diagonal, −1 per
/// interior neighbour pair.
pub fn dirichlet_laplacian(domain: &Domain) -> SymOperator {
    let d = domain.dim();
    let mut b = SymBuilder::new(domain.len());
    for (i, s) in domain.sites().enumerate() {
        b.add_diag(i, 2.0 * d as f64);
        for ax in 0..d {
            if let Some(j) = domain.index(&s.step(ax, 1)) {
                b.add_off(i, j, -1.0);
            }
        }
    }
    b.build()
}

#[derive(Clone, Debug)]
pub struct GreenColumn {
    pub source: Site,
    pub normalization: Normalization,
    /// Indexed like the domain.
    pub values: Vec<f64>,
}

impl GreenColumn {
    pub fn at(&self, domain: &Domain, y: &Site) -> f64 {
        domain.index(y).map_or(0.0, |j| self.values[j])
    }
}

/// Assembled Laplacian plus a reusable solver for one domain.
pub struct Greens<'a> {
    domain: &'a Domain,
    solver: SpdSolver,
}

impl<'a> Greens<'a> {
    pub fn new(domain: &'a Domain, method: Method) -> Result<Self, SolverError> {
        Ok(Greens { domain, solver: SpdSolver::new(dirichlet_laplacian(domain), method)? })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn scale(&self, norm: Normalization) -> f64 {
        match norm {
            Normalization::Walk => 2.0 * self.dim() as f64,
            Normalization::Laplacian => 1.0,
        }
    }

    /// G(x, ·). Panics if x is outside the domain.
    pub fn column(&self, x: &Site, norm: Normalization) -> Result<GreenColumn, SolverError> {
        let i = self.domain.index(x).expect("source must lie in the domain");
        let mut e = vec![0.0; self.domain.len()];
        e[i] = 1.0;
        let g = self.solver.solve(&e)?;
        let res = self.solver.op().residual_inf(&g, &e);
        if res > COLUMN_RESIDUAL_TOL {
            return Err(SolverError::SolverFailure { iterations: 0, residual: res });
        }
        let c = self.scale(norm);
        Ok(GreenColumn { source: *x, normalization: norm, values: g.into_iter().map(|v| v * c).collect() })
    }

    /// E_x τ for every x, from one solve of (I − P)h = 1.
    pub fn exit_times(&self) -> Result<Vec<f64>, SolverError> {
        let ones = vec![2.0 * self.dim() as f64; self.domain.len()];
        self.solver.solve(&ones)
    }

    pub fn exit_time(&self, x: &Site) -> Result<f64, SolverError> {
        let i = self.domain.index(x).expect("site must lie in the domain");
        Ok(self.exit_times()?[i])
    }

    /// ⟨ξ, G ξ⟩ from a single solve.
    pub fn quad_form(&self, xi: &[f64], norm: Normalization) -> Result<f64, SolverError> {
        let g = self.solver.solve(xi)?;
        Ok(self.scale(norm) * xi.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Apply G to a vector.
    pub fn apply(&self, xi: &[f64], norm: Normalization) -> Result<Vec<f64>, SolverError> {
        let c = self.scale(norm);
        Ok(self.solver.solve(xi)?.into_iter().map(|v| v * c).collect())
    }
}

/// Convenience: one Green column on a fresh domain.
pub fn green_column(domain: &Domain, x: &Site, method: Method, norm: Normalization) -> Result<GreenColumn, SolverError> {
    Greens::new(domain, method)?.column(x, norm)
}

pub fn exit_time(domain: &Domain, x: &Site, method: Method) -> Result<f64, SolverError> {
    Greens::new(domain, method)?.exit_time(x)
}

/// ⟨ξ, G_walk ξ⟩.
pub fn quad_form(domain: &Domain, xi: &[f64], method: Method) -> Result<f64, SolverError> {
    Greens::new(domain, method)?.quad_form(xi, Normalization::Walk)
}

/// Σ_{x,y ∈ Λ_N} G_walk(x, y) = Σ_x E_x τ.
pub fn sum_all_green(big_n: usize, d: usize, method: Method) -> Result<f64, SolverError> {
    let domain = Domain::Box(BoxRegion::centered(big_n, d));
    Ok(Greens::new(&domain, method)?.exit_times()?.iter().sum())
}

/// The same sum from the sine basis, exact up to rounding.
pub fn sum_all_green_spectral(big_n: usize, d: usize) -> f64 {
    let region = BoxRegion::centered(big_n, d);
    let spec = BoxSpectrum::new(region, 1.0);
    let weights: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (1..=region.extent(i))
                .map(|k| {
                    let s: f64 = (region.lo().get(i)..=region.hi().get(i)).map(|x| spec.mode(i, k, x)).sum();
                    s * s
                })
                .collect()
        })
        .collect();
    2.0 * d as f64 * spec.sum_modes(&weights, |l| 1.0 / l)
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Far-field constant a_d = 2/((d−2) w_d) of G_walk(0, x) ~ a_d |x|^{2−d}.
pub fn far_field_constant(d: usize) -> f64 {
    assert!(d >= 3);
    2.0 / ((d as f64 - 2.0) * unit_ball_volume(d))
}

/// Lower and upper bounds on Σ_{x,y∈Λ_N} G claimed for large N.
pub fn green_sum_bounds(big_n: usize, d: usize) -> (f64, f64) {
    let n = big_n as f64;
    let df = d as f64;
    let w = unit_ball_volume(d);
    let lo = (df + 1.0) / (df + 2.0) * w * n * n * (n - 1.0).powi(d as i32);
    let hi = (n * df.sqrt()).powi(d as i32) * df * w * ((n + 1.0).powi(2) - n * n / (df + 2.0));
    (lo, hi)
}

/// Exit-time bounds N² − |x|² ≤ E_x τ_{B_N} ≤ (N+1)² − |x|².
pub fn exit_time_bounds(big_n: usize, x: &Site) -> (f64, f64) {
    let n = big_n as f64;
    let r2 = x.norm_sq() as f64;
    (n * n - r2, (n + 1.0).powi(2) - r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_values() {
        let dom = Domain::Box(BoxRegion::new(&[1], &[3]).unwrap());
        let g = green_column(&dom, &Site::new(&[1]), Method::Direct, Normalization::Walk).unwrap();
        for (v, want) in g.values.iter().zip([1.5, 1.0, 0.5]) {
            assert!((v - want).abs() < 1e-12);
        }
        let g2 = green_column(&dom, &Site::new(&[2]), Method::Iterative, Normalization::Walk).unwrap();
        assert!((g2.values[1] - 2.0).abs() < 1e-12);
        assert!((exit_time(&dom, &Site::new(&[1]), Method::Direct).unwrap() - 3.0).abs() < 1e-12);
        assert!((exit_time(&dom, &Site::new(&[2]), Method::Direct).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn one_site_domain() {
        let dom = Domain::Box(BoxRegion::new(&[0], &[0]).unwrap());
        let g = green_column(&dom, &Site::new(&[0]), Method::Direct, Normalization::Walk).unwrap();
        assert!((g.values[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_green_sum() {
        assert!((sum_all_green(1, 1, Method::Direct).unwrap() - 10.0).abs() < 1e-12);
        assert!((sum_all_green_spectral(1, 1) - 10.0).abs() < 1e-12);
        let a = sum_all_green(3, 2, Method::Direct).unwrap();
        assert!((a - sum_all_green_spectral(3, 2)).abs() < 1e-9 * a);
    }

    #[test]
    fn ball_in_one_dimension_saturates_lower_bound() {
        for n in 1..6usize {
            let dom = Domain::ball(n as f64, 1);
            assert_eq!(dom.len(), 2 * n - 1);
            let t = exit_time(&dom, &Site::new(&[0]), Method::Direct).unwrap();
            assert!((t - (n * n) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}
