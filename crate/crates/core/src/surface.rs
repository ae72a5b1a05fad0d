//! Finite-volume surface tension, the subadditive block functional and block averages.

use crate::disorder::SiteDisorder;
use crate::gaussian_exact::{self, GaussianError};
use crate::lattice::{block_partition, BoxRegion, LatticeError};
use crate::linalg::Method;
use crate::model::{BondTerm, Couplings, Endpoint, Potential, System};
use crate::par;
use crate::quadrature::{gauss_legendre_on, integrate_line, QuadratureError};
use crate::sampler::{run_chains, Observable, SamplerConfig, SamplerError, UpdateRule};
use crate::stats::{self, LinearFit, StatsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("exact surface tension needs a quadratic potential")]
    MethodMismatch,
    #[error("Monte Carlo error {se:e} exceeds tolerance {tol:e}")]
    ToleranceExceeded { se: f64, tol: f64 },
    #[error("the f-functional needs a uniform potential")]
    NotUniform,
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMethod {
    ExactGaussian,
    ThermoIntegration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTensionEstimate {
    pub value: f64,
    pub method: SigmaMethod,
    /// Zero for the exact method.
    pub se: f64,
    pub region: BoxRegion,
    pub tilt: Vec<f64>,
    pub seed: u64,
}

/// Settings for thermodynamic integration along V_t = a s² + t(V − a s²).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoConfig {
    pub nodes: usize,
    pub sampler: SamplerConfig,
    pub chains: usize,
    pub seed: u64,
    /// Reject estimates whose per-site SE exceeds this.
    pub tolerance: Option<f64>,
}

impl Default for ThermoConfig {
    fn default() -> Self {
        ThermoConfig { nodes: 8, sampler: SamplerConfig::metropolis(20_000), chains: 4, seed: 0, tolerance: None }
    }
}

/// Same system with every bond potential replaced by `f(potential)`.
pub fn map_potentials(sys: &System, f: impl Fn(&Potential) -> Potential) -> System {
    let mut out = sys.clone();
    for t in &mut out.bonds {
        t.potential = f(&t.potential);
    }
    out
}

/// −log Z(V) = −log Z(a s²) + ∫₀¹ ⟨Σ_b (V_b − a_b s²)⟩_{V_t} dt, with an
/// n-node Gauss–Legendre rule in t. Returns (−log Z, SE).
pub fn thermo_integration(sys: &System, cfg: &ThermoConfig) -> Result<(f64, f64), SurfaceError> {
    let reference = map_potentials(sys, |p| Potential::quadratic(p.a));
    let base = -gaussian_exact::log_partition(&reference, Method::Auto)?;
    let (ts, ws) = gauss_legendre_on(cfg.nodes, 0.0, 1.0);
    let mut value = base;
    let mut var = 0.0;
    for (i, (t, w)) in ts.iter().zip(&ws).enumerate() {
        let sys_t = map_potentials(sys, |p| Potential { a: p.a, eps: t * p.eps, offset: t * p.offset });
        let mut scfg = cfg.sampler.clone();
        if !sys_t.is_quadratic() {
            scfg.rule = UpdateRule::Metropolis;
        }
        let seed = crate::disorder::derive_seed(cfg.seed, 0x7469, i as u64);
        let run = run_chains(&sys_t, &scfg, &[Observable::PotentialExcess], seed, cfg.chains)?;
        value += w * run.means[0];
        var += (w * run.std_errs[0]).powi(2);
    }
    Ok((value, var.sqrt()))
}

/// σ_Λ[ξ](u) = −log Z / |Λ|.
pub fn sigma(
    region: BoxRegion,
    couplings: &Couplings,
    disorder: &SiteDisorder,
    tilt: &[f64],
    method: SigmaMethod,
    thermo: &ThermoConfig,
) -> Result<SurfaceTensionEstimate, SurfaceError> {
    let sys = System::new(region, tilt, couplings, disorder, 1.0);
    let n = region.len() as f64;
    let (value, se) = match method {
        SigmaMethod::ExactGaussian => {
            if !sys.is_quadratic() {
                return Err(SurfaceError::MethodMismatch);
            }
            (gaussian_exact::surface_tension_exact(&sys, Method::Auto)?, 0.0)
        }
        SigmaMethod::ThermoIntegration => {
            let (v, se) = thermo_integration(&sys, thermo)?;
            let se = se / n;
            if let Some(tol) = thermo.tolerance {
                if se > tol {
                    return Err(SurfaceError::ToleranceExceeded { se, tol });
                }
            }
            (v / n, se)
        }
    };
    Ok(SurfaceTensionEstimate { value, method, se, region, tilt: tilt.to_vec(), seed: disorder.seed })
}

/// Regression of σ_N on N².
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_t: f64,
    pub r2: f64,
    /// min and max of σ_N / N² over the sequence.
    pub liminf: f64,
    pub limsup: f64,
}

pub fn scaling_fit(ns: &[usize], sigmas: &[f64]) -> Result<ScalingFit, SurfaceError> {
    if ns.len() < 5 || ns.len() != sigmas.len() {
        return Err(StatsError::DegenerateFit("scaling fit needs at least 5 sizes").into());
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n * n) as f64).collect();
    let fit = stats::linear_fit(&x, sigmas)?;
    let ratios: Vec<f64> = sigmas.iter().zip(&x).map(|(s, n2)| s / n2).collect();
    Ok(ScalingFit {
        slope: fit.coef[1],
        intercept: fit.coef[0],
        slope_se: fit.std_err[1],
        slope_t: fit.t(1),
        r2: fit.r2,
        liminf: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        limsup: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Fit σ_N ≈ s + κN² + c₁/N + c₂/N². Coefficient 1 is κ.
pub fn finite_size_fit(ns: &[usize], sigmas: &[f64]) -> Result<LinearFit, SurfaceError> {
    let n: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let regs = vec![n.iter().map(|v| v * v).collect(), n.iter().map(|v| 1.0 / v).collect(), n.iter().map(|v| 1.0 / (v * v)).collect()];
    Ok(stats::ols(&regs, sigmas)?)
}

/// Per-site constant log C − Σᵢ V(uᵢ)/2 of the g term.
pub fn g_density(potential: &Potential, tilt: &[f64], c: f64) -> f64 {
    c.ln() - tilt.iter().map(|&u| potential.value(u)).sum::<f64>() / 2.0
}

/// f = −log Z_Λ + Σ_{x∈Λ} (u·x) λξ(x) + |Λ|(log C − Σᵢ V(uᵢ)/2), exact engine.
pub fn f_functional(
    region: BoxRegion,
    couplings: &Couplings,
    disorder: &SiteDisorder,
    tilt: &[f64],
    c: f64,
) -> Result<f64, SurfaceError> {
    let potential = match couplings {
        Couplings::Uniform { potential } => *potential,
        Couplings::Random { .. } => return Err(SurfaceError::NotUniform),
    };
    let sys = System::new(region, tilt, couplings, disorder, 1.0);
    let log_z = gaussian_exact::log_partition(&sys, Method::Auto)?;
    Ok(-log_z + tilt_field(&sys) + region.len() as f64 * g_density(&potential, tilt, c))
}

fn tilt_field(sys: &System) -> f64 {
    sys.region.sites().zip(&sys.xi).map(|(s, x)| s.dot(&sys.tilt) * sys.lambda * x).sum()
}

/// A split of a rectangle at column `col` along `axis`: left [a, col−1], right [col+1, l].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub axis: usize,
    pub col: i64,
}

impl Split {
    pub fn parts(&self, region: &BoxRegion) -> (BoxRegion, BoxRegion, BoxRegion) {
        let (lo, hi) = (region.lo(), region.hi());
        let with = |a: i64, b: i64| {
            let mut l = lo.coords().to_vec();
            let mut h = hi.coords().to_vec();
            l[self.axis] = a;
            h[self.axis] = b;
            BoxRegion::new(&l, &h).expect("split inside region")
        };
        (with(lo.get(self.axis), self.col - 1), with(self.col + 1, hi.get(self.axis)), with(self.col, self.col))
    }
}

/// Columns a₁ < col < l₁ along `axis`.
pub fn admissible_splits(region: &BoxRegion, axis: usize) -> Vec<Split> {
    ((region.lo().get(axis) + 1)..region.hi().get(axis)).map(|col| Split { axis, col }).collect()
}

/// Largest C with f_Λ ≤ f_L + f_R for this split and environment:
/// log C = (log Z_Λ − log Z_L − log Z_R − Σ_col (u·x)λξ)/|col| + Σᵢ V(uᵢ)/2.
pub fn largest_c(
    region: BoxRegion,
    split: Split,
    couplings: &Couplings,
    disorder: &SiteDisorder,
    tilt: &[f64],
) -> Result<f64, SurfaceError> {
    let potential = match couplings {
        Couplings::Uniform { potential } => *potential,
        Couplings::Random { .. } => return Err(SurfaceError::NotUniform),
    };
    let (left, right, col) = split.parts(&region);
    let lz = |r: BoxRegion| gaussian_exact::log_partition(&System::new(r, tilt, couplings, disorder, 1.0), Method::Auto);
    let col_sys = System::new(col, tilt, couplings, disorder, 1.0);
    let gap = lz(region)? - lz(left)? - lz(right)? - tilt_field(&col_sys);
    let v_tilt: f64 = tilt.iter().map(|&u| potential.value(u)).sum::<f64>() / 2.0;
    Ok((gap / col.len() as f64 + v_tilt).exp())
}

/// Per-rectangle f values at a fixed C.
#[derive(Clone, Debug, PartialEq)]
pub struct SubadditiveLedger {
    pub c: f64,
    pub entries: Vec<(BoxRegion, f64)>,
}

impl SubadditiveLedger {
    pub fn new(c: f64) -> Self {
        SubadditiveLedger { c, entries: Vec::new() }
    }

    pub fn record(
        &mut self,
        region: BoxRegion,
        couplings: &Couplings,
        disorder: &SiteDisorder,
        tilt: &[f64],
    ) -> Result<f64, SurfaceError> {
        let f = f_functional(region, couplings, disorder, tilt, self.c)?;
        self.entries.push((region, f));
        Ok(f)
    }

    /// f_L + f_R − f_Λ; nonnegative when the split is subadditive.
    pub fn split_slack(
        &mut self,
        region: BoxRegion,
        split: Split,
        couplings: &Couplings,
        disorder: &SiteDisorder,
        tilt: &[f64],
    ) -> Result<f64, SurfaceError> {
        let (l, r, _) = split.parts(&region);
        let whole = self.record(region, couplings, disorder, tilt)?;
        Ok(self.record(l, couplings, disorder, tilt)? + self.record(r, couplings, disorder, tilt)? - whole)
    }
}

/// Replace each bond crossing between `axis`-coordinate `cut` and `cut + 1` by two
/// bonds to the boundary plane, so the two halves decouple.
pub fn decoupled_system(sys: &System, axis: usize, cut: i64) -> System {
    let mut out = sys.clone();
    let mut bonds = Vec::with_capacity(sys.bonds.len());
    for t in &sys.bonds {
        let crosses = t.bond.axis() == axis && t.bond.from.get(axis).min(t.bond.to.get(axis)) == cut;
        match (crosses, t.lo, t.hi) {
            (true, Endpoint::Free(_), Endpoint::Free(_)) => {
                bonds.push(BondTerm { hi: Endpoint::Fixed(sys.plane(&t.bond.to)), ..*t });
                bonds.push(BondTerm { lo: Endpoint::Fixed(sys.plane(&t.bond.from)), ..*t });
            }
            _ => bonds.push(*t),
        }
    }
    let mut incident = vec![Vec::new(); sys.n_free()];
    for (k, t) in bonds.iter().enumerate() {
        if let Endpoint::Free(i) = t.lo {
            incident[i].push((k, false));
        }
        if let Endpoint::Free(j) = t.hi {
            incident[j].push((k, true));
        }
    }
    out.bonds = bonds;
    out.incident = incident;
    out
}

/// Mean of exact per-cube σ over the cubes of the side-n partition of Λ_[0,N].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockAverage {
    pub value: f64,
    pub per_block: Vec<f64>,
    pub slab_fraction: f64,
}

pub fn block_average_sigma(
    big_n: usize,
    n: usize,
    couplings: &Couplings,
    disorder: &SiteDisorder,
    tilt: &[f64],
) -> Result<BlockAverage, SurfaceError> {
    let part = block_partition(big_n, n, tilt.len())?;
    let per_block = par::try_map(part.cubes.len(), |i| {
        let sys = System::new(part.cubes[i], tilt, couplings, disorder, 1.0);
        gaussian_exact::surface_tension_exact(&sys, Method::Auto)
    })?;
    Ok(BlockAverage { value: stats::mean(&per_block), per_block, slab_fraction: part.slab_fraction() })
}

/// Ratio of ∫ exp[−½ Σ_y V(φ(y) − φ) + ξφ] dφ to exp[−½ Σ_y V(φ(y) − γ) + ξγ].
pub fn one_site_ratio(potential: &Potential, neighbors: &[f64], xi: f64, gamma: f64) -> Result<f64, SurfaceError> {
    Ok(log_one_site_ratio(potential, neighbors, xi, gamma)?.exp())
}

pub fn log_one_site_ratio(potential: &Potential, neighbors: &[f64], xi: f64, gamma: f64) -> Result<f64, SurfaceError> {
    let e = |p: f64| -0.5 * neighbors.iter().map(|&y| potential.value(y - p)).sum::<f64>() + xi * p;
    let de = |p: f64| 0.5 * neighbors.iter().map(|&y| potential.deriv(y - p)).sum::<f64>() + xi;
    let dde = |p: f64| -0.5 * neighbors.iter().map(|&y| potential.second(y - p)).sum::<f64>();
    let curv = 0.5 * neighbors.len() as f64 * potential.envelope().c2;
    let mut mode = stats::mean(neighbors) + xi / curv.max(1e-12);
    for _ in 0..200 {
        let h = dde(mode);
        let step = if h < 0.0 { -de(mode) / h } else { de(mode) / curv };
        mode += step;
        if step.abs() < 1e-14 * (1.0 + mode.abs()) {
            break;
        }
    }
    let peak = e(mode);
    let scale = (-dde(mode)).max(1e-12).sqrt().recip();
    let integral = integrate_line(|p| (e(p) - peak).exp(), mode, scale, 1e-12)?;
    Ok(integral.ln() + peak - e(gamma))
}
