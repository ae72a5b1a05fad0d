//! Exact engine for quadratic bond potentials.
//!
//! With V_b(s) = a_b s² + c_b the weight is exp(−½ φᵀQφ + bᵀφ + const) over the
//! free heights, Q the Dirichlet Laplacian with bond weights 2a_b.

use crate::disorder::{Envelope, SiteDisorder};
use crate::greens::{Domain, Greens, Normalization};
use crate::lattice::{Bond, BoxRegion, Site};
use crate::linalg::{BandCholesky, Method, SolverError, SpdSolver, SymBuilder, SymOperator};
use crate::model::{Couplings, Endpoint, Potential, System};
use crate::par;
use crate::spectral::BoxSpectrum;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use std::f64::consts::PI;
use thiserror::Error;

/// Bound on ∥Qm − b∥∞ relative to max(1, ∥b∥₂).
pub const STATIONARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("bond potential is not quadratic")]
    NotQuadratic,
    #[error("bond {bond:?} has non-positive weight {weight}")]
    NonPositiveWeight { bond: Box<Bond>, weight: f64 },
    #[error("beta {beta} must stay below the smallest stiffness {limit}")]
    BetaTooLarge { beta: f64, limit: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("stationarity residual {0:e} too large")]
    Stationarity(f64),
}

/// Precision operator, linear term and additive constant of the log weight.
#[derive(Clone, Debug)]
pub struct GaussianForm {
    pub q: SymOperator,
    pub b: Vec<f64>,
    pub constant: f64,
    /// Common bond weight when every bond has the same stiffness and no site is pinned.
    pub uniform_weight: Option<f64>,
}

/// Smallest stiffness among bonds with a free endpoint.
pub fn min_stiffness(sys: &System) -> f64 {
    sys.bonds
        .iter()
        .filter(|t| matches!(t.lo, Endpoint::Free(_)) || matches!(t.hi, Endpoint::Free(_)))
        .map(|t| t.potential.a)
        .fold(f64::INFINITY, f64::min)
}

/// Assemble the Gaussian form. `beta > 0` adds β Σ_b (∇φ(b) − u·e_b)² to the exponent.
pub fn assemble(sys: &System, beta: f64) -> Result<GaussianForm, GaussianError> {
    if !sys.is_quadratic() {
        return Err(GaussianError::NotQuadratic);
    }
    if beta > 0.0 {
        let limit = min_stiffness(sys);
        if beta >= limit {
            return Err(GaussianError::BetaTooLarge { beta, limit });
        }
    }
    let n = sys.n_free();
    let mut qb = SymBuilder::new(n);
    let mut b: Vec<f64> = (0..n).map(|f| sys.field(f)).collect();
    let mut constant = 0.0;
    for t in &sys.bonds {
        // energy α s² + γ s + δ, s = (free part) + s_f
        let tilt = t.bond.direction().dot(&sys.tilt);
        let alpha = t.potential.a - beta;
        let gamma = 2.0 * beta * tilt;
        let delta = t.potential.offset - beta * tilt * tilt;
        let fixed_part = |e: &Endpoint| if let Endpoint::Fixed(v) = e { *v } else { 0.0 };
        let s_f = fixed_part(&t.hi) - fixed_part(&t.lo);
        let free_ends: Vec<(usize, f64)> = [(t.lo, -1.0), (t.hi, 1.0)]
            .iter()
            .filter_map(|(e, sgn)| if let Endpoint::Free(i) = e { Some((*i, *sgn)) } else { None })
            .collect();
        if !free_ends.is_empty() && alpha <= 0.0 {
            return Err(GaussianError::NonPositiveWeight { bond: Box::new(t.bond), weight: 2.0 * alpha });
        }
        for &(i, si) in &free_ends {
            qb.add_diag(i, 2.0 * alpha);
            b[i] -= (2.0 * alpha * s_f + gamma) * si;
        }
        if let [(i, si), (j, sj)] = free_ends[..] {
            qb.add_off(i, j, 2.0 * alpha * si * sj);
        }
        constant -= alpha * s_f * s_f + gamma * s_f + delta;
    }
    // pinned sites carry their field term as a constant
    for (r, f) in sys.free_of.iter().enumerate() {
        if f.is_none() {
            constant += sys.lambda * sys.xi[r] * sys.plane(&sys.region.site(r));
        }
    }
    let uniform_weight = match sys.uniform_potential() {
        Some(p) if !sys.has_pins() => Some(2.0 * (p.a - beta)),
        _ => None,
    };
    Ok(GaussianForm { q: qb.build(), b, constant, uniform_weight })
}

/// Solved quenched Gaussian model: mean, log partition and bond statistics.
#[derive(Clone, Debug)]
pub struct QuenchedGaussian {
    pub region: BoxRegion,
    pub b: Vec<f64>,
    pub constant: f64,
    pub uniform_weight: Option<f64>,
    solver: SpdSolver,
    pub mean: Vec<f64>,
}

impl QuenchedGaussian {
    pub fn new(sys: &System, beta: f64, method: Method) -> Result<Self, GaussianError> {
        let form = assemble(sys, beta)?;
        let solver = SpdSolver::new(form.q, method)?;
        let mean = solver.solve(&form.b)?;
        let res = solver.op().residual_inf(&mean, &form.b);
        let scale = form.b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        if res > STATIONARITY_TOL * scale {
            return Err(GaussianError::Stationarity(res));
        }
        Ok(QuenchedGaussian {
            region: sys.region,
            b: form.b,
            constant: form.constant,
            uniform_weight: form.uniform_weight,
            solver,
            mean,
        })
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn precision(&self) -> &SymOperator {
        self.solver.op()
    }

    /// ∥Qm − b∥∞.
    pub fn stationarity_residual(&self) -> f64 {
        self.solver.op().residual_inf(&self.mean, &self.b)
    }

    pub fn log_det(&self) -> Result<f64, GaussianError> {
        if let Some(ld) = self.solver.log_det() {
            return Ok(ld);
        }
        if let Some(w) = self.uniform_weight {
            return Ok(BoxSpectrum::new(self.region, w).log_det());
        }
        Ok(BandCholesky::factor(self.solver.op())?.log_det())
    }

    /// log Z = (n/2) log 2π − ½ log det Q + ½ bᵀQ⁻¹b + const.
    pub fn log_partition(&self) -> Result<f64, GaussianError> {
        let n = self.n() as f64;
        let quad: f64 = self.b.iter().zip(&self.mean).map(|(x, y)| x * y).sum();
        Ok(0.5 * n * (2.0 * PI).ln() - 0.5 * self.log_det()? + 0.5 * quad + self.constant)
    }

    /// Heights on the closure: means inside, plane values outside.
    pub fn mean_field(&self, sys: &System) -> crate::lattice::HeightField {
        sys.heights_on_closure(&self.mean)
    }

    fn endpoint_mean(&self, e: &Endpoint) -> f64 {
        e.height(&self.mean)
    }

    /// Mean of ∇φ on bond term k.
    pub fn gradient_mean(&self, sys: &System, k: usize) -> f64 {
        let t = &sys.bonds[k];
        self.endpoint_mean(&t.hi) - self.endpoint_mean(&t.lo)
    }

    /// Var of ∇φ on bond term k, DᵀQ⁻¹D.
    pub fn gradient_variance(&self, sys: &System, k: usize) -> Result<f64, GaussianError> {
        let t = &sys.bonds[k];
        let mut dvec = vec![0.0; self.n()];
        if let Endpoint::Free(i) = t.hi {
            dvec[i] += 1.0;
        }
        if let Endpoint::Free(i) = t.lo {
            dvec[i] -= 1.0;
        }
        if dvec.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let x = self.solver.solve(&dvec)?;
        Ok(dvec.iter().zip(&x).map(|(a, b)| a * b).sum())
    }

    /// Mean and variance of ∇φ on a directed bond of E(Λ).
    pub fn bond_stats(&self, sys: &System, bond: &Bond) -> Result<(f64, f64), GaussianError> {
        let (k, sign) = sys.bond_index(bond).expect("bond must belong to E(Λ)");
        Ok((sign * self.gradient_mean(sys, k), self.gradient_variance(sys, k)?))
    }
}

pub fn quenched_mean(sys: &System, method: Method) -> Result<Vec<f64>, GaussianError> {
    Ok(QuenchedGaussian::new(sys, 0.0, method)?.mean)
}

pub fn log_partition(sys: &System, method: Method) -> Result<f64, GaussianError> {
    QuenchedGaussian::new(sys, 0.0, method)?.log_partition()
}

/// σ_Λ[ξ](u) = −log Z / |Λ|.
pub fn surface_tension_exact(sys: &System, method: Method) -> Result<f64, GaussianError> {
    Ok(-log_partition(sys, method)? / sys.region.len() as f64)
}

/// F_{β,u,Λ}[ξ] = log Z_β − log Z_0.
pub fn f_beta(sys: &System, beta: f64, method: Method) -> Result<f64, GaussianError> {
    if beta == 0.0 {
        return Ok(0.0);
    }
    let z1 = QuenchedGaussian::new(sys, beta, method)?.log_partition()?;
    let z0 = QuenchedGaussian::new(sys, 0.0, method)?.log_partition()?;
    Ok(z1 - z0)
}

/// Terms of the disorder-dependent upper bound F̄ + (α/2)⟨ξ, G_walk ξ⟩.
#[derive(Clone, Copy, Debug)]
pub struct FBound {
    pub f_bar: f64,
    pub alpha: f64,
    /// ⟨λξ, G_walk λξ⟩ on the region.
    pub quad_walk: f64,
    pub bound: f64,
}

/// log Z for V(s) = c s², ξ = 0, u = 0 on the region.
fn flat_log_partition(region: BoxRegion, c: f64) -> Result<f64, GaussianError> {
    let d = region.dim();
    let sys = System::new(region, &vec![0.0; d], &Couplings::uniform(Potential::quadratic(c)), &SiteDisorder::zero(), 1.0);
    log_partition(&sys, Method::Auto)
}

pub fn f_bound(sys: &System, beta: f64, env: &Envelope, v0: f64) -> Result<FBound, GaussianError> {
    let region = sys.region;
    let d = region.dim();
    let log_num = flat_log_partition(region, env.a - beta)?;
    let log_den = flat_log_partition(region, env.c2 / 2.0)?;
    // ordered nearest-neighbour pairs inside Λ ∪ ∂Λ
    let inside = |s: &Site| region.contains(s) || region.boundary_contains(s);
    let mut pairs = 0.0;
    let mut tilt_sq = 0.0;
    for s in region.closure().sites().filter(|s| inside(s)) {
        for ax in 0..d {
            for dir in [-1, 1] {
                let t = s.step(ax, dir);
                if inside(&t) {
                    pairs += 1.0;
                    tilt_sq += sys.tilt[ax].powi(2);
                }
            }
        }
    }
    let f_bar = log_num - log_den + pairs * (env.b + v0) - 0.5 * (env.a - beta - env.c2 / 2.0) * tilt_sq;
    let alpha = 1.0 / (env.a - beta) - 2.0 / env.c2;
    let field: Vec<f64> = sys.xi.iter().map(|x| sys.lambda * x).collect();
    let dom = Domain::Box(region);
    let quad_walk = Greens::new(&dom, Method::Auto)?.quad_form(&field, Normalization::Walk)?;
    Ok(FBound { f_bar, alpha, quad_walk, bound: f_bar + 0.5 * alpha * quad_walk })
}

/// (Σ_z G_lap(0,z)², Σ_z (G_lap(0,z) − G_lap(e₁,z))²) on Λ_N.
pub fn deloc_sums(d: usize, big_n: usize, method: Method) -> Result<(f64, f64), SolverError> {
    let dom = Domain::Box(BoxRegion::centered(big_n, d));
    let greens = Greens::new(&dom, method)?;
    let g0 = greens.column(&Site::origin(d), Normalization::Laplacian)?;
    let g1 = greens.column(&Site::unit(d, 0), Normalization::Laplacian)?;
    let s_site = g0.values.iter().map(|v| v * v).sum();
    let s_bond = g0.values.iter().zip(&g1.values).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((s_site, s_bond))
}

/// Same sums from the sine basis.
pub fn deloc_sums_spectral(d: usize, big_n: usize) -> (f64, f64) {
    let spec = BoxSpectrum::new(BoxRegion::centered(big_n, d), 1.0);
    let o = Site::origin(d);
    let e = Site::unit(d, 0);
    (spec.inverse_square_entry(&o, &o), spec.bond_square_sum(&o, &e))
}

/// Bounded functions of a single bond gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BondFunction {
    Identity,
    /// (η − c)².
    CenteredSquare(f64),
    /// clamp(η, −M, M).
    Clipped(f64),
}

impl BondFunction {
    pub fn sup_norm(&self) -> f64 {
        match *self {
            BondFunction::Clipped(m) => m,
            _ => f64::INFINITY,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BondFunction::Identity => x,
            BondFunction::CenteredSquare(c) => (x - c).powi(2),
            BondFunction::Clipped(m) => x.clamp(-m, m),
        }
    }

    /// E f(X) for X ~ N(mean, var).
    pub fn gaussian_expectation(&self, mean: f64, var: f64) -> f64 {
        match *self {
            BondFunction::Identity => mean,
            BondFunction::CenteredSquare(c) => (mean - c).powi(2) + var,
            BondFunction::Clipped(m) => {
                if var <= 0.0 {
                    return mean.clamp(-m, m);
                }
                let sd = var.sqrt();
                let z = Normal::standard();
                let lo = (-m - mean) / sd;
                let hi = (m - mean) / sd;
                let p_lo = z.cdf(lo);
                let p_hi = z.sf(hi);
                let middle = mean * (z.cdf(hi) - p_lo) - sd * (z.pdf(hi) - z.pdf(lo));
                -m * p_lo + m * p_hi + middle
            }
        }
    }
}

/// Spatially averaged expectation (1/|S|) Σ_{x∈S} E_{μ_{Λ+x}[ξ]} f(∇φ(b)) with the
/// environment held fixed while the volume moves. Bonds outside E(Λ+x) carry the
/// deterministic plane gradient.
#[allow(clippy::too_many_arguments)]
pub fn averaged_bond_expectation(
    couplings: &Couplings,
    xi: &SiteDisorder,
    lambda: f64,
    region: &BoxRegion,
    tilt: &[f64],
    bond: &Bond,
    shifts: &[Site],
    f: BondFunction,
    method: Method,
) -> Result<f64, GaussianError> {
    let need_var = !matches!(f, BondFunction::Identity);
    let vals = par::try_map(shifts.len(), |i| {
        let sys = System::new(region.translate(&shifts[i]), tilt, couplings, xi, lambda);
        let Some((k, sign)) = sys.bond_index(bond) else {
            // both endpoints sit on the boundary plane
            return Ok(f.gaussian_expectation(bond.to.dot(tilt) - bond.from.dot(tilt), 0.0));
        };
        let g = QuenchedGaussian::new(&sys, 0.0, method)?;
        let m = sign * g.gradient_mean(&sys, k);
        let v = if need_var { g.gradient_variance(&sys, k)? } else { 0.0 };
        Ok::<f64, GaussianError>(f.gaussian_expectation(m, v))
    })?;
    Ok(vals.iter().sum::<f64>() / shifts.len() as f64)
}

/// Averaged mean gradient over all shifts x ∈ Λ.
pub fn averaged_gradient_mean(
    couplings: &Couplings,
    xi: &SiteDisorder,
    lambda: f64,
    region: &BoxRegion,
    tilt: &[f64],
    bond: &Bond,
) -> Result<f64, GaussianError> {
    let shifts: Vec<Site> = region.sites().collect();
    averaged_bond_expectation(couplings, xi, lambda, region, tilt, bond, &shifts, BondFunction::Identity, Method::Auto)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::SiteDistribution;

    fn line(xi: Vec<f64>) -> System {
        let region = BoxRegion::new(&[1], &[xi.len() as i64]).unwrap();
        System::from_parts(region, &[0.0], xi, 1.0, |_| Potential::quadratic(0.5), |_| false)
    }

    #[test]
    fn textbook_line() {
        let sys = line(vec![0.0; 3]);
        let form = assemble(&sys, 0.0).unwrap();
        assert_eq!(form.q.to_dense(), vec![vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        assert_eq!(form.b, vec![0.0; 3]);
        let sys = line(vec![1.0, 0.0, 0.0]);
        let g = QuenchedGaussian::new(&sys, 0.0, Method::Direct).unwrap();
        assert_eq!(g.b, vec![1.0, 0.0, 0.0]);
        for (m, w) in g.mean.iter().zip([0.75, 0.5, 0.25]) {
            assert!((m - w).abs() < 1e-14);
        }
    }

    #[test]
    fn single_site_log_partition() {
        let sys = line(vec![0.0]);
        let lz = log_partition(&sys, Method::Direct).unwrap();
        assert!((lz - 0.5 * PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn plane_is_the_mean_without_disorder() {
        let region = BoxRegion::centered(3, 2);
        let u = [0.4, -0.25];
        let sys = System::new(region, &u, &Couplings::uniform(Potential::quadratic(0.7)), &SiteDisorder::zero(), 1.0);
        let g = QuenchedGaussian::new(&sys, 0.0, Method::Direct).unwrap();
        for (f, m) in g.mean.iter().enumerate() {
            assert!((m - sys.free_site(f).dot(&u)).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_and_cholesky_log_det_agree() {
        let region = BoxRegion::new(&[0, 0, 0], &[3, 4, 2]).unwrap();
        let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), 1);
        let sys = System::new(region, &[0.1, 0.0, -0.3], &Couplings::uniform(Potential::quadratic(0.5)), &xi, 1.0);
        let direct = QuenchedGaussian::new(&sys, 0.0, Method::Direct).unwrap();
        let iter = QuenchedGaussian::new(&sys, 0.0, Method::Iterative).unwrap();
        let a = direct.log_partition().unwrap();
        let b = iter.log_partition().unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn clipped_expectation_matches_quadrature() {
        let f = BondFunction::Clipped(0.8);
        for (m, v) in [(0.0, 1.0), (0.3, 0.2), (-1.2, 0.5), (2.0, 0.01)] {
            let sd: f64 = f64::sqrt(v);
            let steps = 200_000;
            let (a, b) = (m - 12.0 * sd, m + 12.0 * sd);
            let h = (b - a) / steps as f64;
            let mut acc = 0.0;
            for i in 0..=steps {
                let x = a + i as f64 * h;
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                acc += w * f.eval(x) * (-(x - m).powi(2) / (2.0 * v)).exp();
            }
            let num = acc * h / (2.0 * PI * v).sqrt();
            assert!((num - f.gaussian_expectation(m, v)).abs() < 1e-8);
        }
    }
}
