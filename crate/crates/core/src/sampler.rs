//! Markov chain Monte Carlo for finite-volume Gibbs measures.
//!
//! Randomness is counter based: every draw is a hash of (chain seed, stream,
//! sweep, site), so a trajectory does not depend on update scheduling.

use crate::disorder::{hash_words, mix64, normal_from, unit_open};
use crate::model::System;
use crate::par;
use crate::stats::{self, BatchMeans, StatsError};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

pub const MIN_BURN_IN: usize = 1000;
pub const TARGET_ACCEPTANCE: f64 = 0.44;
const TUNE_INTERVAL: u64 = 50;

const STREAM_NORMAL_A: u64 = 11;
const STREAM_NORMAL_B: u64 = 12;
const STREAM_ACCEPT: u64 = 13;
const STREAM_SCAN: u64 = 14;
const STREAM_INIT: u64 = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("heat-bath updates need quadratic bond potentials")]
    NotQuadratic,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    HeatBath,
    Metropolis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    Checkerboard,
    RandomScan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub rule: UpdateRule,
    pub scan: ScanOrder,
    /// Measured sweeps after burn-in.
    pub sweeps: usize,
    /// Defaults to max(sweeps / 5, 1000).
    pub burn_in: Option<usize>,
    pub proposal_width: f64,
    /// Adapt the proposal width during burn-in.
    pub tune: bool,
    pub batches: usize,
    /// Keep per-sweep values of scalar observables.
    pub trace: bool,
}

impl SamplerConfig {
    pub fn heat_bath(sweeps: usize) -> Self {
        SamplerConfig {
            rule: UpdateRule::HeatBath,
            scan: ScanOrder::Checkerboard,
            sweeps,
            burn_in: None,
            proposal_width: 1.0,
            tune: false,
            batches: 25,
            trace: false,
        }
    }

    pub fn metropolis(sweeps: usize) -> Self {
        SamplerConfig { rule: UpdateRule::Metropolis, tune: true, ..Self::heat_bath(sweeps) }
    }

    pub fn burn_in_sweeps(&self) -> usize {
        self.burn_in.unwrap_or((self.sweeps / 5).max(MIN_BURN_IN))
    }
}

/// Free heights plus the counters that drive the random streams.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub heights: Vec<f64>,
    pub sweep: u64,
    pub seed: u64,
    pub width: f64,
    accepted: u64,
    proposed: u64,
    colors: [Vec<usize>; 2],
}

impl ChainState {
    /// Start on the boundary plane.
    pub fn new(sys: &System, seed: u64) -> Self {
        let heights = (0..sys.n_free()).map(|f| sys.plane(&sys.free_site(f))).collect();
        Self::with_heights(sys, heights, seed)
    }

    /// Start on the plane plus independent N(0, spread²) noise.
    pub fn overdispersed(sys: &System, seed: u64, spread: f64) -> Self {
        let heights = (0..sys.n_free())
            .map(|f| {
                let w = [f as i64];
                let z = normal_from(hash_words(seed, STREAM_INIT, &w), hash_words(seed, STREAM_INIT + 1, &w));
                sys.plane(&sys.free_site(f)) + spread * z
            })
            .collect();
        Self::with_heights(sys, heights, seed)
    }

    pub fn with_heights(sys: &System, heights: Vec<f64>, seed: u64) -> Self {
        assert_eq!(heights.len(), sys.n_free());
        let mut colors = [Vec::new(), Vec::new()];
        for f in 0..sys.n_free() {
            let parity = sys.free_site(f).coords().iter().sum::<i64>().rem_euclid(2) as usize;
            colors[parity].push(f);
        }
        ChainState { heights, sweep: 0, seed, width: 1.0, accepted: 0, proposed: 0, colors }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 { 1.0 } else { self.accepted as f64 / self.proposed as f64 }
    }

    pub fn reset_acceptance(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
    }

    fn normal(&self, f: usize) -> f64 {
        let w = [self.sweep as i64, f as i64];
        normal_from(hash_words(self.seed, STREAM_NORMAL_A, &w), hash_words(self.seed, STREAM_NORMAL_B, &w))
    }

    fn uniform(&self, f: usize) -> f64 {
        unit_open(hash_words(self.seed, STREAM_ACCEPT, &[self.sweep as i64, f as i64]))
    }
}

/// Mean and variance of the exact Gaussian conditional of free site f.
/// Energy Σ a_b (h − y_b)² − λξh gives precision 2Σa_b.
pub fn conditional_gaussian(sys: &System, heights: &[f64], f: usize) -> (f64, f64) {
    let mut w = 0.0;
    let mut wy = 0.0;
    for &(k, is_hi) in &sys.incident[f] {
        let t = &sys.bonds[k];
        let y = if is_hi { t.lo.height(heights) } else { t.hi.height(heights) };
        w += t.potential.a;
        wy += t.potential.a * y;
    }
    let prec = 2.0 * w;
    ((2.0 * wy + sys.field(f)) / prec, 1.0 / prec)
}

/// One checkerboard sweep of exact conditional draws.
pub fn heat_bath_sweep(sys: &System, state: &mut ChainState) -> Result<(), SamplerError> {
    if !sys.is_quadratic() {
        return Err(SamplerError::NotQuadratic);
    }
    for c in 0..2 {
        for i in 0..state.colors[c].len() {
            let f = state.colors[c][i];
            let (m, v) = conditional_gaussian(sys, &state.heights, f);
            state.heights[f] = m + v.sqrt() * state.normal(f);
        }
    }
    state.sweep += 1;
    Ok(())
}

fn metropolis_site(sys: &System, state: &mut ChainState, f: usize, slot: usize) {
    let h = state.heights[f];
    let proposal = h + state.width * state.normal(slot);
    let de = sys.local_energy(&state.heights, f, proposal) - sys.local_energy(&state.heights, f, h);
    state.proposed += 1;
    if de <= 0.0 || state.uniform(slot) < (-de).exp() {
        state.heights[f] = proposal;
        state.accepted += 1;
    }
}

/// One sweep of single-site Gaussian proposals with Metropolis acceptance.
pub fn metropolis_sweep(sys: &System, state: &mut ChainState, scan: ScanOrder) {
    let n = sys.n_free();
    match scan {
        ScanOrder::Checkerboard => {
            for c in 0..2 {
                for i in 0..state.colors[c].len() {
                    let f = state.colors[c][i];
                    metropolis_site(sys, state, f, f);
                }
            }
        }
        ScanOrder::RandomScan => {
            for k in 0..n {
                let f = (hash_words(state.seed, STREAM_SCAN, &[state.sweep as i64, k as i64]) % n as u64) as usize;
                metropolis_site(sys, state, f, k);
            }
        }
    }
    state.sweep += 1;
}

/// Heat-bath analogue of the random scan, used for detailed-balance checks.
pub fn heat_bath_random_scan(sys: &System, state: &mut ChainState) -> Result<(), SamplerError> {
    if !sys.is_quadratic() {
        return Err(SamplerError::NotQuadratic);
    }
    let n = sys.n_free();
    for k in 0..n {
        let f = (hash_words(state.seed, STREAM_SCAN, &[state.sweep as i64, k as i64]) % n as u64) as usize;
        let (m, v) = conditional_gaussian(sys, &state.heights, f);
        state.heights[f] = m + v.sqrt() * state.normal(k);
    }
    state.sweep += 1;
    Ok(())
}

pub fn sweep(sys: &System, state: &mut ChainState, cfg: &SamplerConfig) -> Result<(), SamplerError> {
    match (cfg.rule, cfg.scan) {
        (UpdateRule::HeatBath, ScanOrder::Checkerboard) => heat_bath_sweep(sys, state),
        (UpdateRule::HeatBath, ScanOrder::RandomScan) => heat_bath_random_scan(sys, state),
        (UpdateRule::Metropolis, scan) => {
            metropolis_sweep(sys, state, scan);
            Ok(())
        }
    }
}

/// Tilt-centered gradient energy per site, (1/|Λ|) Σ_{b∈E(Λ)} (∇φ(b) − u·e_b)².
pub fn energy_density(sys: &System, heights: &[f64]) -> f64 {
    let total: f64 = sys
        .bonds
        .iter()
        .map(|t| (t.gradient(heights) - t.bond.direction().dot(&sys.tilt)).powi(2))
        .sum();
    total / sys.region.len() as f64
}

/// Quantities recorded once per measured sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// One value per free site.
    Heights,
    /// ∇φ on the listed bond terms.
    BondGradients(Vec<usize>),
    /// (∇φ − c)² on the listed (bond term, c) pairs.
    BondSquares(Vec<(usize, f64)>),
    /// Σ_{y∼x} V'(φ(x) − φ(y)) per free site.
    SiteForces,
    BoundaryFlux,
    EnergyDensity,
    /// Σ_b (V_b(∇φ) − a_b ∇φ²).
    PotentialExcess,
}

impl Observable {
    pub fn width(&self, sys: &System) -> usize {
        match self {
            Observable::Heights | Observable::SiteForces => sys.n_free(),
            Observable::BondGradients(b) => b.len(),
            Observable::BondSquares(b) => b.len(),
            _ => 1,
        }
    }

    fn write(&self, sys: &System, h: &[f64], out: &mut [f64]) {
        match self {
            Observable::Heights => out.copy_from_slice(h),
            Observable::BondGradients(b) => {
                for (o, &k) in out.iter_mut().zip(b) {
                    *o = sys.bonds[k].gradient(h);
                }
            }
            Observable::BondSquares(b) => {
                for (o, &(k, c)) in out.iter_mut().zip(b) {
                    *o = (sys.bonds[k].gradient(h) - c).powi(2);
                }
            }
            Observable::SiteForces => {
                for (f, o) in out.iter_mut().enumerate() {
                    *o = sys.site_force(h, f);
                }
            }
            Observable::BoundaryFlux => out[0] = sys.boundary_flux(h),
            Observable::EnergyDensity => out[0] = energy_density(sys, h),
            Observable::PotentialExcess => {
                out[0] = sys
                    .bonds
                    .iter()
                    .map(|t| {
                        let s = t.gradient(h);
                        t.potential.value(s) - t.potential.a * s * s
                    })
                    .sum()
            }
        }
    }
}

/// Streaming batch-means estimators for a list of observables.
#[derive(Clone, Debug)]
pub struct ObservableAccumulator {
    observables: Vec<Observable>,
    ranges: Vec<Range<usize>>,
    stats: Vec<BatchMeans>,
    scratch: Vec<f64>,
    traces: Option<Vec<Vec<f64>>>,
}

impl ObservableAccumulator {
    pub fn new(sys: &System, observables: &[Observable], batch_len: usize, trace: bool) -> Self {
        let mut ranges = Vec::new();
        let mut at = 0;
        for o in observables {
            let w = o.width(sys);
            ranges.push(at..at + w);
            at += w;
        }
        let traces = trace.then(|| vec![Vec::new(); observables.len()]);
        ObservableAccumulator {
            observables: observables.to_vec(),
            ranges,
            stats: vec![BatchMeans::new(batch_len); at],
            scratch: vec![0.0; at],
            traces,
        }
    }

    pub fn record(&mut self, sys: &System, heights: &[f64]) {
        for (o, r) in self.observables.iter().zip(&self.ranges) {
            o.write(sys, heights, &mut self.scratch[r.clone()]);
        }
        for (s, v) in self.stats.iter_mut().zip(&self.scratch) {
            s.push(*v);
        }
        if let Some(tr) = &mut self.traces {
            for (t, r) in tr.iter_mut().zip(&self.ranges) {
                if r.len() == 1 {
                    t.push(self.scratch[r.start]);
                }
            }
        }
    }

    pub fn range(&self, k: usize) -> Range<usize> {
        self.ranges[k].clone()
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.stats[i].mean()
    }

    pub fn std_err(&self, i: usize) -> Result<f64, StatsError> {
        self.stats[i].std_err()
    }

    pub fn batches(&self, i: usize) -> &[f64] {
        self.stats[i].batches()
    }
}

/// Results of one chain.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub ranges: Vec<Range<usize>>,
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub batches: Vec<Vec<f64>>,
    /// Per-sweep values of each scalar observable (empty unless traced).
    pub traces: Vec<Vec<f64>>,
    pub acceptance: f64,
    pub width: f64,
    pub final_state: ChainState,
    /// Hash of every post-sweep configuration, bit-exact.
    pub trajectory_hash: u64,
}

impl ChainRun {
    pub fn values(&self, k: usize) -> (&[f64], &[f64]) {
        let r = self.ranges[k].clone();
        (&self.means[r.clone()], &self.std_errs[r])
    }
}

pub fn fingerprint(heights: &[f64]) -> u64 {
    heights.iter().fold(0x9E37_79B9_7F4A_7C15, |acc, h| mix64(acc ^ h.to_bits()))
}

/// Burn in (tuning the width if asked), then measure.
pub fn run_chain(
    sys: &System,
    cfg: &SamplerConfig,
    observables: &[Observable],
    mut state: ChainState,
) -> Result<ChainRun, SamplerError> {
    if cfg.rule == UpdateRule::HeatBath && !sys.is_quadratic() {
        return Err(SamplerError::NotQuadratic);
    }
    state.width = cfg.proposal_width;
    let mut hash = fingerprint(&state.heights);
    for _ in 0..cfg.burn_in_sweeps() {
        sweep(sys, &mut state, cfg)?;
        hash = mix64(hash ^ fingerprint(&state.heights));
        if cfg.tune && cfg.rule == UpdateRule::Metropolis && state.sweep.is_multiple_of(TUNE_INTERVAL) {
            let rate = state.acceptance_rate();
            state.width *= (2.0 * (rate - TARGET_ACCEPTANCE)).exp();
            state.reset_acceptance();
        }
    }
    state.reset_acceptance();
    let batch_len = (cfg.sweeps / cfg.batches.max(1)).max(1);
    let mut acc = ObservableAccumulator::new(sys, observables, batch_len, cfg.trace);
    for _ in 0..cfg.sweeps {
        sweep(sys, &mut state, cfg)?;
        hash = mix64(hash ^ fingerprint(&state.heights));
        acc.record(sys, &state.heights);
    }
    let std_errs = (0..acc.len()).map(|i| acc.std_err(i)).collect::<Result<Vec<_>, _>>()?;
    Ok(ChainRun {
        ranges: acc.ranges.clone(),
        means: (0..acc.len()).map(|i| acc.mean(i)).collect(),
        std_errs,
        batches: (0..acc.len()).map(|i| acc.batches(i).to_vec()).collect(),
        traces: acc.traces.take().unwrap_or_default(),
        acceptance: state.acceptance_rate(),
        width: state.width,
        final_state: state,
        trajectory_hash: hash,
    })
}

/// Pooled results of independent chains.
#[derive(Clone, Debug)]
pub struct MultiChainRun {
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
    /// Gelman–Rubin ratio per scalar, from batch means.
    pub rhat: Vec<f64>,
    pub chains: Vec<ChainRun>,
}

impl MultiChainRun {
    pub fn values(&self, k: usize) -> (&[f64], &[f64]) {
        let r = self.chains[0].ranges[k].clone();
        (&self.means[r.clone()], &self.std_errs[r])
    }

    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().filter(|r| r.is_finite()).fold(1.0, f64::max)
    }

    pub fn acceptance(&self) -> f64 {
        stats::mean(&self.chains.iter().map(|c| c.acceptance).collect::<Vec<_>>())
    }
}

pub fn chain_seed(seed: u64, chain: usize) -> u64 {
    crate::disorder::derive_seed(seed, 0x0063_6861_696e, chain as u64)
}

/// Runs `n_chains` chains from overdispersed starts, in parallel, merged by chain index.
pub fn run_chains(
    sys: &System,
    cfg: &SamplerConfig,
    observables: &[Observable],
    seed: u64,
    n_chains: usize,
) -> Result<MultiChainRun, SamplerError> {
    let chains = par::try_map(n_chains, |c| {
        let s = chain_seed(seed, c);
        run_chain(sys, cfg, observables, ChainState::overdispersed(sys, s, 1.0))
    })?;
    let m = n_chains as f64;
    let k = chains[0].means.len();
    let means = (0..k).map(|i| chains.iter().map(|c| c.means[i]).sum::<f64>() / m).collect();
    let std_errs = (0..k).map(|i| chains.iter().map(|c| c.std_errs[i].powi(2)).sum::<f64>().sqrt() / m).collect();
    let rhat = (0..k)
        .map(|i| {
            if n_chains < 2 {
                return f64::NAN;
            }
            let series: Vec<Vec<f64>> = chains.iter().map(|c| c.batches[i].clone()).collect();
            stats::gelman_rubin(&series)
        })
        .collect();
    Ok(MultiChainRun { means, std_errs, rhat, chains })
}

/// Per-site and summed stationarity residuals.
#[derive(Clone, Debug)]
pub struct WardResidual {
    /// E[Σ_{y∼x} V'(φ(x) − φ(y))] − λξ(x).
    pub per_site: Vec<f64>,
    pub per_site_se: Vec<f64>,
    /// E[boundary flux] − λ Σ_x ξ(x).
    pub summed: f64,
    pub summed_se: f64,
    pub bulk: f64,
}

impl WardResidual {
    /// Largest |residual| / SE over sites.
    pub fn max_z(&self) -> f64 {
        self.per_site.iter().zip(&self.per_site_se).map(|(r, s)| (r / s).abs()).fold(0.0, f64::max)
    }

    pub fn summed_z(&self) -> f64 {
        (self.summed / self.summed_se).abs()
    }
}

pub const WARD_OBSERVABLES: [Observable; 2] = [Observable::SiteForces, Observable::BoundaryFlux];

/// Residuals from estimates of `WARD_OBSERVABLES` (means and SEs in that layout).
pub fn ward_residual(sys: &System, means: &[f64], std_errs: &[f64]) -> WardResidual {
    let n = sys.n_free();
    let per_site = (0..n).map(|f| means[f] - sys.field(f)).collect();
    let bulk: f64 = (0..n).map(|f| sys.field(f)).sum();
    WardResidual {
        per_site,
        per_site_se: std_errs[..n].to_vec(),
        summed: means[n] - bulk,
        summed_se: std_errs[n],
        bulk,
    }
}

/// Empirical upper tail of a scalar series and the largest rate β with
/// P(X > t) ≤ exp(−β·volume·t) on every threshold that was exceeded.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailFit {
    pub thresholds: Vec<f64>,
    pub tail: Vec<f64>,
    pub beta: f64,
}

pub fn tail_fit(samples: &[f64], volume: f64, thresholds: &[f64]) -> TailFit {
    let n = samples.len() as f64;
    let tail: Vec<f64> = thresholds.iter().map(|&t| samples.iter().filter(|&&x| x > t).count() as f64 / n).collect();
    let beta = thresholds
        .iter()
        .zip(&tail)
        .filter(|(t, p)| **t > 0.0 && **p > 0.0)
        .map(|(t, p)| -p.ln() / (volume * t))
        .fold(f64::INFINITY, f64::min);
    TailFit { thresholds: thresholds.to_vec(), tail, beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::SiteDisorder;
    use crate::lattice::BoxRegion;
    use crate::model::{Couplings, Potential};

    fn flat(n: usize) -> System {
        System::new(BoxRegion::centered(n, 2), &[0.0, 0.0], &Couplings::uniform(Potential::quadratic(0.5)), &SiteDisorder::zero(), 1.0)
    }

    #[test]
    fn symmetric_start_has_zero_conditional_means() {
        let sys = flat(2);
        let st = ChainState::new(&sys, 1);
        for f in 0..sys.n_free() {
            let (m, v) = conditional_gaussian(&sys, &st.heights, f);
            assert_eq!(m, 0.0);
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn vanishing_proposals_are_always_accepted() {
        let sys = System::new(
            BoxRegion::centered(2, 2),
            &[0.2, 0.1],
            &Couplings::uniform(Potential::quadratic_cosine(0.5, 0.2)),
            &SiteDisorder::zero(),
            1.0,
        );
        let mut st = ChainState::new(&sys, 3);
        st.width = 1e-9;
        for _ in 0..20 {
            metropolis_sweep(&sys, &mut st, ScanOrder::Checkerboard);
        }
        assert!(st.acceptance_rate() > 0.999);
    }

    #[test]
    fn plane_has_zero_energy_density() {
        let sys = System::new(BoxRegion::centered(3, 2), &[0.3, -0.7], &Couplings::uniform(Potential::quadratic(0.5)), &SiteDisorder::zero(), 1.0);
        let st = ChainState::new(&sys, 0);
        assert!(energy_density(&sys, &st.heights).abs() < 1e-24);
        let shifted = sys.with_boundary_offset(2.5);
        let st = ChainState::new(&shifted, 0);
        assert!(energy_density(&shifted, &st.heights).abs() < 1e-24);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let sys = flat(3);
        let cfg = SamplerConfig { burn_in: Some(10), batches: 20, ..SamplerConfig::metropolis(40) };
        let a = run_chain(&sys, &cfg, &[Observable::Heights], ChainState::new(&sys, 9)).unwrap();
        let b = run_chain(&sys, &cfg, &[Observable::Heights], ChainState::new(&sys, 9)).unwrap();
        assert_eq!(a.trajectory_hash, b.trajectory_hash);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn too_few_batches_is_an_error() {
        let sys = flat(1);
        let cfg = SamplerConfig { burn_in: Some(0), batches: 5, ..SamplerConfig::heat_bath(5) };
        assert!(matches!(run_chain(&sys, &cfg, &[Observable::Heights], ChainState::new(&sys, 0)), Err(SamplerError::Stats(_))));
    }
}
