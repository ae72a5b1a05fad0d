//! Boxes in Z^d, bonds, height and gradient fields, shifts and block partitions.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 6;

/// Absolute loop-sum tolerance for float gradient fields.
pub const PLAQUETTE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("box corner a={a:?} exceeds l={l:?}")]
    EmptyBox { a: Vec<i64>, l: Vec<i64> },
    #[error("plaquette at {site:?} (axes {axes:?}) has loop sum {sum:e}")]
    PlaquetteViolation { site: Vec<i64>, axes: (usize, usize), sum: f64 },
    #[error("site {0:?} is outside the field support")]
    OutOfSupport(Vec<i64>),
    #[error("block side {n} invalid for N={big_n}")]
    BadBlockSide { big_n: usize, n: usize },
}

/// A point of Z^d, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    dim: u8,
    coords: [i64; MAX_DIM],
}

impl Site {
    pub fn new(coords: &[i64]) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "site dimension {} out of range",
            coords.len()
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Site { dim: coords.len() as u8, coords: c }
    }

    pub fn origin(d: usize) -> Self {
        Site::new(&vec![0; d])
    }

    /// Unit vector along `axis` (0-based).
    pub fn unit(d: usize, axis: usize) -> Self {
        let mut s = Site::origin(d);
        s.coords[axis] = 1;
        s
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim()]
    }

    pub fn get(&self, axis: usize) -> i64 {
        self.coords[axis]
    }

    pub fn with(&self, axis: usize, value: i64) -> Self {
        let mut s = *self;
        s.coords[axis] = value;
        s
    }

    pub fn step(&self, axis: usize, delta: i64) -> Self {
        let mut s = *self;
        s.coords[axis] += delta;
        s
    }

    pub fn add(&self, other: &Site) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = *self;
        for i in 0..self.dim() {
            s.coords[i] += other.coords[i];
        }
        s
    }

    pub fn sub(&self, other: &Site) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = *self;
        for i in 0..self.dim() {
            s.coords[i] -= other.coords[i];
        }
        s
    }

    pub fn neg(&self) -> Self {
        Site::origin(self.dim()).sub(self)
    }

    pub fn l1(&self) -> i64 {
        self.coords().iter().map(|c| c.abs()).sum()
    }

    pub fn norm_sq(&self) -> i64 {
        self.coords().iter().map(|c| c * c).sum()
    }

    /// Inner product with a real vector, e.g. the plane u·x.
    pub fn dot(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim());
        self.coords().iter().zip(u).map(|(&c, &w)| c as f64 * w).sum()
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// Directed nearest-neighbour bond `from -> to`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Bond {
    pub from: Site,
    pub to: Site,
}

impl Bond {
    pub fn new(from: Site, to: Site) -> Self {
        assert_eq!(from.sub(&to).l1(), 1, "bond endpoints must be nearest neighbours");
        Bond { from, to }
    }

    /// The bond `site -> site + e_axis`.
    pub fn along(site: Site, axis: usize) -> Self {
        Bond { from: site, to: site.step(axis, 1) }
    }

    pub fn reversed(&self) -> Self {
        Bond { from: self.to, to: self.from }
    }

    pub fn axis(&self) -> usize {
        (0..self.from.dim())
            .find(|&i| self.from.get(i) != self.to.get(i))
            .expect("bond endpoints coincide")
    }

    /// Canonical undirected key: lexicographically smaller endpoint first.
    /// The sign is -1 when `self` runs against the canonical orientation.
    pub fn canonical(&self) -> (Bond, f64) {
        if self.from < self.to {
            (*self, 1.0)
        } else {
            (self.reversed(), -1.0)
        }
    }

    pub fn shifted(&self, v: &Site) -> Self {
        Bond { from: self.from.add(v), to: self.to.add(v) }
    }

    /// Displacement `to - from`.
    pub fn direction(&self) -> Site {
        self.to.sub(&self.from)
    }
}

/// The closed box {z : a_i <= z_i <= l_i}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct BoxRegion {
    a: Site,
    l: Site,
}

impl BoxRegion {
    pub fn new(a: &[i64], l: &[i64]) -> Result<Self, LatticeError> {
        if a.is_empty() || a.len() > MAX_DIM {
            return Err(LatticeError::BadDimension(a.len()));
        }
        if a.len() != l.len() {
            return Err(LatticeError::DimensionMismatch(a.len(), l.len()));
        }
        if a.iter().zip(l).any(|(x, y)| x > y) {
            return Err(LatticeError::EmptyBox { a: a.to_vec(), l: l.to_vec() });
        }
        Ok(BoxRegion { a: Site::new(a), l: Site::new(l) })
    }

    /// Λ_N = [-N, N]^d.
    pub fn centered(big_n: usize, d: usize) -> Self {
        let n = big_n as i64;
        BoxRegion::new(&vec![-n; d], &vec![n; d]).expect("valid cube")
    }

    /// Λ_[0,N] = [0, N]^d.
    pub fn from_origin(big_n: usize, d: usize) -> Self {
        BoxRegion::new(&vec![0; d], &vec![big_n as i64; d]).expect("valid cube")
    }

    /// Box with the given side lengths (site counts) and lower corner.
    pub fn with_extents(lo: &[i64], extents: &[usize]) -> Result<Self, LatticeError> {
        if extents.contains(&0) {
            return Err(LatticeError::EmptyBox { a: lo.to_vec(), l: lo.to_vec() });
        }
        let hi: Vec<i64> = lo.iter().zip(extents).map(|(&a, &e)| a + e as i64 - 1).collect();
        BoxRegion::new(lo, &hi)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn lo(&self) -> Site {
        self.a
    }

    pub fn hi(&self) -> Site {
        self.l
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.l.get(axis) - self.a.get(axis) + 1) as usize
    }

    pub fn extents(&self) -> Vec<usize> {
        (0..self.dim()).map(|i| self.extent(i)).collect()
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|i| self.extent(i)).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when every side has at least two sites.
    pub fn is_proper(&self) -> bool {
        (0..self.dim()).all(|i| self.a.get(i) < self.l.get(i))
    }

    pub fn contains(&self, s: &Site) -> bool {
        s.dim() == self.dim()
            && (0..self.dim()).all(|i| self.a.get(i) <= s.get(i) && s.get(i) <= self.l.get(i))
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut st = vec![1; d];
        for i in (0..d.saturating_sub(1)).rev() {
            st[i] = st[i + 1] * self.extent(i + 1);
        }
        st
    }

    /// Row-major index of a site, if inside.
    pub fn index(&self, s: &Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let mut idx = 0usize;
        for i in 0..self.dim() {
            idx = idx * self.extent(i) + (s.get(i) - self.a.get(i)) as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> Site {
        debug_assert!(idx < self.len());
        let d = self.dim();
        let mut s = self.a;
        for i in (0..d).rev() {
            let e = self.extent(i);
            s.coords[i] = self.a.get(i) + (idx % e) as i64;
            idx /= e;
        }
        s
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    pub fn translate(&self, v: &Site) -> Self {
        BoxRegion { a: self.a.add(v), l: self.l.add(v) }
    }

    /// Box enlarged by one site on every side.
    pub fn closure(&self) -> Self {
        let d = self.dim();
        let one = Site::new(&vec![1; d]);
        BoxRegion { a: self.a.sub(&one), l: self.l.add(&one) }
    }

    /// Exterior sites at l1-distance one, in row-major order of the closure.
    pub fn boundary(&self) -> Vec<Site> {
        self.closure()
            .sites()
            .filter(|s| !self.contains(s) && self.outside_distance(s) == 1)
            .collect()
    }

    /// Membership in ∂Λ without enumerating it.
    pub fn boundary_contains(&self, s: &Site) -> bool {
        s.dim() == self.dim() && self.outside_distance(s) == 1
    }

    fn outside_distance(&self, s: &Site) -> i64 {
        (0..self.dim())
            .map(|i| {
                let c = s.get(i);
                (self.a.get(i) - c).max(0) + (c - self.l.get(i)).max(0)
            })
            .sum()
    }

    pub fn intersection(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let d = self.dim();
        let lo: Vec<i64> = (0..d).map(|i| self.a.get(i).max(other.a.get(i))).collect();
        let hi: Vec<i64> = (0..d).map(|i| self.l.get(i).min(other.l.get(i))).collect();
        BoxRegion::new(&lo, &hi).ok()
    }

    /// Undirected bonds with at least one endpoint in the box, as `(site, axis)`
    /// pairs meaning `site -> site + e_axis`.
    pub fn incident_bonds(&self) -> Vec<Bond> {
        let mut out = Vec::new();
        for s in self.closure().sites() {
            for ax in 0..self.dim() {
                let t = s.step(ax, 1);
                if self.contains(&s) || self.contains(&t) {
                    out.push(Bond::along(s, ax));
                }
            }
        }
        out
    }

    /// Undirected bonds with both endpoints in the box.
    pub fn interior_bonds(&self) -> Vec<Bond> {
        let mut out = Vec::new();
        for s in self.sites() {
            for ax in 0..self.dim() {
                let t = s.step(ax, 1);
                if self.contains(&t) {
                    out.push(Bond::along(s, ax));
                }
            }
        }
        out
    }
}

/// |Λ △ (Λ+v)|.
pub fn symmetric_difference_size(region: &BoxRegion, v: &Site) -> usize {
    let shifted = region.translate(v);
    let common = region.intersection(&shifted).map_or(0, |b| b.len());
    2 * (region.len() - common)
}

/// Heights on a box domain (typically the closure of a region).
#[derive(Clone, Debug, PartialEq)]
pub struct HeightField {
    domain: BoxRegion,
    values: Vec<f64>,
}

impl HeightField {
    pub fn from_fn(domain: BoxRegion, f: impl Fn(&Site) -> f64) -> Self {
        let values = domain.sites().map(|s| f(&s)).collect();
        HeightField { domain, values }
    }

    pub fn from_values(domain: BoxRegion, values: Vec<f64>) -> Self {
        assert_eq!(domain.len(), values.len());
        HeightField { domain, values }
    }

    /// The tilted plane x -> u·x + c.
    pub fn plane(domain: BoxRegion, u: &[f64], c: f64) -> Self {
        HeightField::from_fn(domain, |s| s.dot(u) + c)
    }

    pub fn domain(&self) -> &BoxRegion {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: &Site) -> Result<f64, LatticeError> {
        self.domain
            .index(s)
            .map(|i| self.values[i])
            .ok_or_else(|| LatticeError::OutOfSupport(s.coords().to_vec()))
    }

    pub fn gradient(&self) -> BondField {
        BondField::from_fn(self.domain, |b| self.get(&b.to).unwrap() - self.get(&b.from).unwrap())
    }

    /// τ_v φ: (τ_v φ)(s) = φ(s − v), supported on the translated domain.
    pub fn shift(&self, v: &Site) -> Self {
        HeightField { domain: self.domain.translate(v), values: self.values.clone() }
    }

    /// (τ_v φ)(s) without materialising the shifted field.
    pub fn shifted_value(&self, v: &Site, s: &Site) -> Result<f64, LatticeError> {
        self.get(&s.sub(v))
    }
}

/// One value per undirected bond with both endpoints in `domain`, stored in
/// canonical orientation (`site -> site + e_axis`).
#[derive(Clone, Debug, PartialEq)]
pub struct BondField {
    domain: BoxRegion,
    values: Vec<f64>,
}

impl BondField {
    /// `f` is called with canonically oriented bonds.
    pub fn from_fn(domain: BoxRegion, f: impl Fn(&Bond) -> f64) -> Self {
        let d = domain.dim();
        let mut values = vec![f64::NAN; domain.len() * d];
        for (i, s) in domain.sites().enumerate() {
            for ax in 0..d {
                let b = Bond::along(s, ax);
                if domain.contains(&b.to) {
                    values[i * d + ax] = f(&b);
                }
            }
        }
        BondField { domain, values }
    }

    pub fn domain(&self) -> &BoxRegion {
        &self.domain
    }

    fn slot(&self, canonical: &Bond) -> Option<usize> {
        let ax = canonical.axis();
        if !self.domain.contains(&canonical.to) {
            return None;
        }
        self.domain.index(&canonical.from).map(|i| i * self.domain.dim() + ax)
    }

    /// Value on a directed bond; reversal negates.
    pub fn get(&self, b: &Bond) -> Result<f64, LatticeError> {
        let (c, sign) = b.canonical();
        self.slot(&c)
            .map(|k| sign * self.values[k])
            .ok_or_else(|| LatticeError::OutOfSupport(b.from.coords().to_vec()))
    }

    pub fn set(&mut self, b: &Bond, value: f64) -> Result<(), LatticeError> {
        let (c, sign) = b.canonical();
        let k = self
            .slot(&c)
            .ok_or_else(|| LatticeError::OutOfSupport(b.from.coords().to_vec()))?;
        self.values[k] = sign * value;
        Ok(())
    }

    pub fn shift(&self, v: &Site) -> Self {
        BondField { domain: self.domain.translate(v), values: self.values.clone() }
    }

    pub fn shifted_value(&self, v: &Site, b: &Bond) -> Result<f64, LatticeError> {
        let neg = v.neg();
        self.get(&b.shifted(&neg))
    }

    /// Largest absolute unit-plaquette loop sum, with its location.
    pub fn max_plaquette_sum(&self) -> (f64, Option<(Site, usize, usize)>) {
        let d = self.domain.dim();
        let mut worst = (0.0, None);
        for s in self.domain.sites() {
            for i in 0..d {
                for j in (i + 1)..d {
                    let corner = s.step(i, 1).step(j, 1);
                    if !self.domain.contains(&corner) {
                        continue;
                    }
                    let sum = self.get(&Bond::along(s, i)).unwrap()
                        + self.get(&Bond::along(s.step(i, 1), j)).unwrap()
                        - self.get(&Bond::along(s.step(j, 1), i)).unwrap()
                        - self.get(&Bond::along(s, j)).unwrap();
                    if sum.abs() > worst.0 {
                        worst = (sum.abs(), Some((s, i, j)));
                    }
                }
            }
        }
        worst
    }
}

/// Integrate a gradient field along axis-ordered staircase paths from `origin`.
pub fn integrate_heights(eta: &BondField, phi0: f64, origin: &Site) -> Result<HeightField, LatticeError> {
    let (worst, at) = eta.max_plaquette_sum();
    if worst > PLAQUETTE_TOL {
        let (s, i, j) = at.expect("location recorded with violation");
        return Err(LatticeError::PlaquetteViolation { site: s.coords().to_vec(), axes: (i, j), sum: worst });
    }
    let domain = *eta.domain();
    if !domain.contains(origin) {
        return Err(LatticeError::OutOfSupport(origin.coords().to_vec()));
    }
    let d = domain.dim();
    let values = domain
        .sites()
        .map(|target| {
            let mut cur = *origin;
            let mut h = phi0;
            for ax in 0..d {
                while cur.get(ax) != target.get(ax) {
                    let dir = if target.get(ax) > cur.get(ax) { 1 } else { -1 };
                    let next = cur.step(ax, dir);
                    h += eta.get(&Bond::new(cur, next)).expect("path stays inside the box");
                    cur = next;
                }
            }
            h
        })
        .collect();
    Ok(HeightField { domain, values })
}

/// Disjoint decomposition of Λ_[0,N] into aligned half-open cubes of side n
/// plus at most d leftover slabs.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPartition {
    pub big_n: usize,
    pub side: usize,
    /// Cubes per axis.
    pub per_axis: usize,
    pub cubes: Vec<BoxRegion>,
    /// Slab s collects sites whose first coordinate beyond the cube grid is s.
    pub slabs: Vec<BoxRegion>,
}

impl BlockPartition {
    pub fn slab_sites(&self) -> usize {
        self.slabs.iter().map(|b| b.len()).sum()
    }

    pub fn slab_fraction(&self) -> f64 {
        let total = self.cubes.iter().map(|b| b.len()).sum::<usize>() + self.slab_sites();
        self.slab_sites() as f64 / total as f64
    }
}

/// Partition Λ_[0,N] ⊂ Z^d into k = ⌊(N+1)/n⌋ cubes per axis, each the box
/// [(a−1)n, an−1], and slabs J^s = {z : z_s ≥ kn, z_i < kn for i < s}.
pub fn block_partition(big_n: usize, n: usize, d: usize) -> Result<BlockPartition, LatticeError> {
    if n == 0 || n > big_n + 1 {
        return Err(LatticeError::BadBlockSide { big_n, n });
    }
    if d == 0 || d > MAX_DIM {
        return Err(LatticeError::BadDimension(d));
    }
    let k = (big_n + 1) / n;
    let edge = (k * n) as i64;
    let top = big_n as i64;
    let mut cubes = Vec::with_capacity(k.pow(d as u32));
    let grid = BoxRegion::with_extents(&vec![0; d], &vec![k; d])?;
    for a in grid.sites() {
        let lo: Vec<i64> = a.coords().iter().map(|&c| c * n as i64).collect();
        cubes.push(BoxRegion::with_extents(&lo, &vec![n; d])?);
    }
    let mut slabs = Vec::new();
    if edge <= top {
        for s in 0..d {
            let lo: Vec<i64> = (0..d).map(|i| if i == s { edge } else { 0 }).collect();
            let hi: Vec<i64> = (0..d)
                .map(|i| if i < s { edge - 1 } else { top })
                .collect();
            if let Ok(b) = BoxRegion::new(&lo, &hi) {
                slabs.push(b);
            }
        }
    }
    Ok(BlockPartition { big_n, side: n, per_axis: k, cubes, slabs })
}
