//! Bond potentials and realized finite-volume systems: a box, a tilt, site
//! disorder and per-bond potentials, with boundary heights on the plane u·x.

use crate::disorder::{BondDisorder, Envelope, SiteDisorder};
use crate::lattice::{Bond, BoxRegion, Site};
use serde::{Deserialize, Serialize};

/// V(s) = a s² + eps·cos s + offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub a: f64,
    pub eps: f64,
    pub offset: f64,
}

impl Potential {
    pub fn quadratic(a: f64) -> Self {
        Potential { a, eps: 0.0, offset: 0.0 }
    }

    pub fn quadratic_cosine(a: f64, eps: f64) -> Self {
        Potential { a, eps, offset: 0.0 }
    }

    /// Random-conductance bond c s² + ε (cos s − 1), so that V(0) = 0.
    pub fn conductance(c: f64, eps: f64) -> Self {
        Potential { a: c, eps, offset: -eps }
    }

    pub fn is_quadratic(&self) -> bool {
        self.eps == 0.0
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        let mut v = self.a * s * s + self.offset;
        if self.eps != 0.0 {
            v += self.eps * s.cos();
        }
        v
    }

    #[inline]
    pub fn deriv(&self, s: f64) -> f64 {
        let mut v = 2.0 * self.a * s;
        if self.eps != 0.0 {
            v -= self.eps * s.sin();
        }
        v
    }

    pub fn second(&self, s: f64) -> f64 {
        2.0 * self.a - self.eps * s.cos()
    }

    /// (A, B, C₂) with V ≥ A s² − B and V'' ≤ C₂, for eps ≥ 0.
    pub fn envelope(&self) -> Envelope {
        Envelope { a: self.a, b: self.eps.abs() - self.offset, c2: 2.0 * self.a + self.eps.abs() }
    }
}

/// Named potential families as they appear in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Quadratic { a: f64 },
    QuadraticCosine { a: f64, eps: f64 },
}

impl PotentialSpec {
    pub fn potential(&self) -> Potential {
        match *self {
            PotentialSpec::Quadratic { a } => Potential::quadratic(a),
            PotentialSpec::QuadraticCosine { a, eps } => Potential::quadratic_cosine(a, eps),
        }
    }
}

/// Model A: one potential everywhere. Model B: i.i.d. random bond potentials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Couplings {
    Uniform { potential: Potential },
    Random { bonds: BondDisorder },
}

impl Couplings {
    pub fn uniform(p: Potential) -> Self {
        Couplings::Uniform { potential: p }
    }

    pub fn random(bonds: BondDisorder) -> Self {
        Couplings::Random { bonds }
    }

    pub fn potential_at(&self, bond: &Bond) -> Potential {
        match self {
            Couplings::Uniform { potential } => *potential,
            Couplings::Random { bonds } => {
                let (c, eps) = bonds.omega_at(bond);
                Potential::conductance(c, eps)
            }
        }
    }

    pub fn envelope(&self) -> Envelope {
        match self {
            Couplings::Uniform { potential } => potential.envelope(),
            Couplings::Random { bonds } => bonds.envelope(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        match self {
            Couplings::Uniform { potential } => potential.is_quadratic(),
            Couplings::Random { bonds } => bonds.eps_max == 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    /// Index into the free heights.
    Free(usize),
    Fixed(f64),
}

impl Endpoint {
    #[inline]
    pub fn height(&self, free: &[f64]) -> f64 {
        match *self {
            Endpoint::Free(i) => free[i],
            Endpoint::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BondTerm {
    /// Oriented `site -> site + e_axis`.
    pub bond: Bond,
    pub lo: Endpoint,
    pub hi: Endpoint,
    pub potential: Potential,
}

impl BondTerm {
    #[inline]
    pub fn gradient(&self, free: &[f64]) -> f64 {
        self.hi.height(free) - self.lo.height(free)
    }
}

/// A finite-volume Gibbs specification with everything realized:
/// weight exp(−Σ_{b∈E(Λ)} V_b(∇φ(b)) + λ Σ_{x free} ξ(x)φ(x)).
#[derive(Clone, Debug)]
pub struct System {
    pub region: BoxRegion,
    pub tilt: Vec<f64>,
    pub lambda: f64,
    /// ξ on the region, row-major.
    pub xi: Vec<f64>,
    pub bonds: Vec<BondTerm>,
    /// Region index of each free site.
    pub free: Vec<usize>,
    /// Free index of each region site (None when pinned).
    pub free_of: Vec<Option<usize>>,
    /// Per free site, incident bonds and whether the site is the `hi` end.
    pub incident: Vec<Vec<(usize, bool)>>,
    /// Constant added to the boundary plane.
    pub offset: f64,
}

impl System {
    pub fn new(region: BoxRegion, tilt: &[f64], couplings: &Couplings, xi: &SiteDisorder, lambda: f64) -> Self {
        Self::build(region, tilt, couplings, xi, lambda, |_| false)
    }

    /// Sites where `pinned` holds are frozen to the plane u·x.
    pub fn build(
        region: BoxRegion,
        tilt: &[f64],
        couplings: &Couplings,
        xi: &SiteDisorder,
        lambda: f64,
        pinned: impl Fn(&Site) -> bool,
    ) -> Self {
        assert_eq!(tilt.len(), region.dim(), "tilt dimension");
        let xi_vals = xi.values(region.sites());
        Self::from_parts(region, tilt, xi_vals, lambda, |b| couplings.potential_at(b), pinned)
    }

    pub fn from_parts(
        region: BoxRegion,
        tilt: &[f64],
        xi: Vec<f64>,
        lambda: f64,
        potential: impl Fn(&Bond) -> Potential,
        pinned: impl Fn(&Site) -> bool,
    ) -> Self {
        assert_eq!(xi.len(), region.len());
        let mut free = Vec::new();
        let mut free_of = vec![None; region.len()];
        for (i, s) in region.sites().enumerate() {
            if !pinned(&s) {
                free_of[i] = Some(free.len());
                free.push(i);
            }
        }
        let endpoint = |s: &Site| match region.index(s).and_then(|i| free_of[i]) {
            Some(f) => Endpoint::Free(f),
            None => Endpoint::Fixed(s.dot(tilt)),
        };
        let mut bonds = Vec::new();
        let mut incident = vec![Vec::new(); free.len()];
        for b in region.incident_bonds() {
            let term = BondTerm { bond: b, lo: endpoint(&b.from), hi: endpoint(&b.to), potential: potential(&b) };
            let k = bonds.len();
            if let Endpoint::Free(i) = term.lo {
                incident[i].push((k, false));
            }
            if let Endpoint::Free(j) = term.hi {
                incident[j].push((k, true));
            }
            bonds.push(term);
        }
        System { region, tilt: tilt.to_vec(), lambda, xi, bonds, free, free_of, incident, offset: 0.0 }
    }

    /// Same system with boundary condition ψ_u + c.
    pub fn with_boundary_offset(&self, c: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.bonds {
            for e in [&mut t.lo, &mut t.hi] {
                if let Endpoint::Fixed(v) = e {
                    *v += c;
                }
            }
        }
        out.offset += c;
        out
    }

    /// Boundary height u·x + offset.
    pub fn plane(&self, s: &Site) -> f64 {
        s.dot(&self.tilt) + self.offset
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn has_pins(&self) -> bool {
        self.free.len() != self.region.len()
    }

    /// λξ at a free site.
    pub fn field(&self, f: usize) -> f64 {
        self.lambda * self.xi[self.free[f]]
    }

    pub fn free_site(&self, f: usize) -> Site {
        self.region.site(self.free[f])
    }

    pub fn is_quadratic(&self) -> bool {
        self.bonds.iter().all(|b| b.potential.is_quadratic())
    }

    /// Common potential if every bond carries the same one.
    pub fn uniform_potential(&self) -> Option<Potential> {
        let first = self.bonds.first()?.potential;
        self.bonds.iter().all(|b| b.potential == first).then_some(first)
    }

    /// Index of the bond term for a directed bond of E(Λ), with orientation sign.
    pub fn bond_index(&self, bond: &Bond) -> Option<(usize, f64)> {
        let (c, sign) = bond.canonical();
        self.bonds.iter().position(|t| t.bond == c).map(|k| (k, sign))
    }

    /// Heights on the closure box: free values, pinned and boundary sites on the plane.
    pub fn heights_on_closure(&self, free: &[f64]) -> crate::lattice::HeightField {
        let closure = self.region.closure();
        crate::lattice::HeightField::from_fn(closure, |s| match self.region.index(s).and_then(|i| self.free_of[i]) {
            Some(f) => free[f],
            None => self.plane(s),
        })
    }

    /// Σ_b V_b(∇φ) − λ Σ ξφ over free sites (the negative log weight).
    pub fn energy(&self, free: &[f64]) -> f64 {
        let bonds: f64 = self.bonds.iter().map(|t| t.potential.value(t.gradient(free))).sum();
        let field: f64 = (0..self.n_free()).map(|f| self.field(f) * free[f]).sum();
        bonds - field
    }

    /// Energy terms touching free site f when its height is h.
    pub fn local_energy(&self, free: &[f64], f: usize, h: f64) -> f64 {
        let mut e = -self.field(f) * h;
        for &(k, is_hi) in &self.incident[f] {
            let t = &self.bonds[k];
            let s = if is_hi { h - t.lo.height(free) } else { t.hi.height(free) - h };
            e += t.potential.value(s);
        }
        e
    }

    /// Σ_{y∼x} V'(φ(x) − φ(y)) at free site f.
    pub fn site_force(&self, free: &[f64], f: usize) -> f64 {
        let mut acc = 0.0;
        for &(k, is_hi) in &self.incident[f] {
            let t = &self.bonds[k];
            let g = t.gradient(free);
            // φ(x) − φ(y) = g when x is the hi end
            acc += if is_hi { t.potential.deriv(g) } else { t.potential.deriv(-g) };
        }
        acc
    }

    /// Σ over bonds joining a free site x to a fixed y of V'(φ(x) − ψ(y)).
    pub fn boundary_flux(&self, free: &[f64]) -> f64 {
        let mut acc = 0.0;
        for t in &self.bonds {
            match (t.lo, t.hi) {
                (Endpoint::Free(_), Endpoint::Fixed(_)) => acc += t.potential.deriv(-t.gradient(free)),
                (Endpoint::Fixed(_), Endpoint::Free(_)) => acc += t.potential.deriv(t.gradient(free)),
                _ => {}
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::SiteDistribution;

    #[test]
    fn envelopes_hold_on_grid() {
        for p in [Potential::quadratic(0.5), Potential::quadratic_cosine(0.5, 0.2), Potential::conductance(1.3, 0.4)] {
            let e = p.envelope();
            for i in -4000..=4000 {
                let s = i as f64 * 0.005;
                assert!(p.value(s) >= e.a * s * s - e.b - 1e-12);
                assert!(p.second(s) <= e.c2 + 1e-12);
            }
        }
        let omega = BondDisorder::new(1.0, 2.0, 0.3, 9);
        let e = omega.envelope();
        let region = BoxRegion::centered(3, 2);
        for b in region.incident_bonds() {
            let p = Couplings::random(omega).potential_at(&b);
            for i in -400..=400 {
                let s = i as f64 * 0.05;
                assert!(p.value(s) >= e.a * s * s - e.b - 1e-12);
                assert!(p.value(s) <= e.c2 * s * s + 1e-12);
            }
        }
    }

    #[test]
    fn bond_counts() {
        let region = BoxRegion::new(&[1], &[3]).unwrap();
        let sys = System::new(region, &[0.0], &Couplings::uniform(Potential::quadratic(0.5)), &SiteDisorder::zero(), 1.0);
        assert_eq!(sys.bonds.len(), 4);
        assert_eq!(sys.incident.iter().map(|v| v.len()).collect::<Vec<_>>(), vec![2, 2, 2]);
        let sq = BoxRegion::centered(2, 2);
        let sys2 = System::new(sq, &[0.0, 0.0], &Couplings::uniform(Potential::quadratic(0.5)), &SiteDisorder::zero(), 1.0);
        // per axis (L+1)·L bonds
        assert_eq!(sys2.bonds.len(), 2 * 6 * 5);
    }

    #[test]
    fn force_matches_energy_derivative() {
        let region = BoxRegion::centered(2, 2);
        let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), 3);
        let sys = System::new(region, &[0.2, -0.1], &Couplings::uniform(Potential::quadratic_cosine(0.5, 0.3)), &xi, 1.0);
        let phi: Vec<f64> = (0..sys.n_free()).map(|i| (i as f64 * 0.7).sin()).collect();
        for f in 0..sys.n_free() {
            let h = 1e-6;
            let num = (sys.local_energy(&phi, f, phi[f] + h) - sys.local_energy(&phi, f, phi[f] - h)) / (2.0 * h);
            let ana = sys.site_force(&phi, f) - sys.field(f);
            assert!((num - ana).abs() < 1e-6, "{num} {ana}");
        }
    }
}
