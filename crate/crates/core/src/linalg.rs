//! Sparse symmetric operators, Jacobi-preconditioned CG and banded Cholesky.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("conjugate gradient did not converge: residual {residual:e} after {iterations} iterations")]
    SolverFailure { iterations: usize, residual: f64 },
    #[error("matrix not positive definite at pivot {pivot} (value {value:e})")]
    FactorizationFailure { pivot: usize, value: f64 },
}

pub const CG_TOL: f64 = 1e-12;
pub const CG_MAX_ITER: usize = 100_000;

/// Symmetric sparse matrix in CSR form holding both triangles.
#[derive(Clone, Debug)]
pub struct SymOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

/// Accumulates symmetric entries before compressing to CSR.
#[derive(Clone, Debug)]
pub struct SymBuilder {
    n: usize,
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
}

impl SymBuilder {
    pub fn new(n: usize) -> Self {
        SymBuilder { n, diag: vec![0.0; n], off: vec![Vec::new(); n] }
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.diag[i] += v;
    }

    /// Adds v at (i, j) and (j, i).
    pub fn add_off(&mut self, i: usize, j: usize, v: f64) {
        debug_assert_ne!(i, j);
        self.off[i].push((j, v));
        self.off[j].push((i, v));
    }

    pub fn build(self) -> SymOperator {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in self.off.into_iter().enumerate() {
            row.push((i, self.diag[i]));
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        SymOperator { n: self.n, row_ptr, cols, vals, diag: self.diag }
    }
}

impl SymOperator {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// Largest |i − j| among stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        m
    }

    /// ∥A x − b∥∞.
    pub fn residual_inf(&self, x: &[f64], b: &[f64]) -> f64 {
        self.mul(x).iter().zip(b).map(|(ax, bi)| (ax - bi).abs()).fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradient from a zero start.
pub fn cg_solve(op: &SymOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgReport), SolverError> {
    let n = op.dim();
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((x, CgReport { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = op.diag().iter().map(|d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolverError::FactorizationFailure { pivot: it, value: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel < tol {
            return Ok((x, CgReport { iterations: it + 1, relative_residual: rel }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::SolverFailure { iterations: max_iter, residual: rel })
}

/// Cholesky factor L (A = L Lᵀ) stored by rows within a fixed half-bandwidth.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw ..= i] at offsets 0..=bw
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(op: &SymOperator) -> Result<Self, SolverError> {
        let n = op.dim();
        let bw = op.bandwidth();
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in op.row(i) {
                if j <= i {
                    data[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // L[i][j] = (A[i][j] - Σ_{k<j} L[i][k] L[j][k]) / L[j][j]
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = data[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in k0..j {
                    s -= data[ri + k] * data[rj + k];
                }
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(SolverError::FactorizationFailure { pivot: i, value: s });
                    }
                    data[ri + i] = s.sqrt();
                } else {
                    data[ri + j] = s / data[rj + j];
                }
            }
        }
        Ok(BandCholesky { n, bw, data })
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.bw + 1) + (j + self.bw - i)]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// log det A = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.l(i, i).ln()).sum::<f64>()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l(i, k) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + self.bw + 1) {
                s -= self.l(k, i) * y[k];
            }
            y[i] = s / self.l(i, i);
        }
        y
    }

    /// Flop estimate n·bw² for a prospective factorisation.
    pub fn work(op: &SymOperator) -> f64 {
        let bw = op.bandwidth() as f64;
        op.dim() as f64 * bw * bw
    }
}

/// Solver choice for SPD systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Iterative,
    Auto,
}

/// `Auto` factorises while the band Cholesky work n·bw² stays below this.
pub const DIRECT_WORK_LIMIT: f64 = 1.5e9;

/// An owned SPD operator with a band factor when affordable, CG otherwise.
#[derive(Clone, Debug)]
pub struct SpdSolver {
    op: SymOperator,
    factor: Option<BandCholesky>,
}

impl SpdSolver {
    pub fn new(op: SymOperator, method: Method) -> Result<Self, SolverError> {
        let direct = match method {
            Method::Direct => true,
            Method::Iterative => false,
            Method::Auto => BandCholesky::work(&op) <= DIRECT_WORK_LIMIT,
        };
        let factor = if direct { Some(BandCholesky::factor(&op)?) } else { None };
        Ok(SpdSolver { op, factor })
    }

    pub fn op(&self) -> &SymOperator {
        &self.op
    }

    pub fn is_direct(&self) -> bool {
        self.factor.is_some()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        match &self.factor {
            Some(f) => Ok(f.solve(b)),
            None => cg_solve(&self.op, b, CG_TOL, CG_MAX_ITER).map(|(x, _)| x),
        }
    }

    /// Available only with a factor.
    pub fn log_det(&self) -> Option<f64> {
        self.factor.as_ref().map(|f| f.log_det())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SymOperator {
        let mut b = SymBuilder::new(n);
        for i in 0..n {
            b.add_diag(i, 2.0);
            if i + 1 < n {
                b.add_off(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn tridiagonal_solves_agree() {
        let op = tridiag(3);
        let rhs = [1.0, 0.0, 0.0];
        let chol = BandCholesky::factor(&op).unwrap();
        let x = chol.solve(&rhs);
        for (a, b) in x.iter().zip([0.75, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-14);
        }
        let (y, rep) = cg_solve(&op, &rhs, 1e-14, 100).unwrap();
        assert!(rep.iterations <= 3);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        // det tridiag(-1,2,-1) of size n is n + 1
        assert!((chol.log_det() - 4f64.ln()).abs() < 1e-14);
        assert!((BandCholesky::factor(&tridiag(40)).unwrap().log_det() - 41f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let mut b = SymBuilder::new(2);
        b.add_diag(0, 1.0);
        b.add_diag(0, 1.0);
        b.add_diag(1, 3.0);
        b.add_off(0, 1, -0.5);
        b.add_off(1, 0, -0.5);
        let op = b.build();
        assert_eq!(op.to_dense(), vec![vec![2.0, -1.0], vec![-1.0, 3.0]]);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut b = SymBuilder::new(2);
        b.add_diag(0, 1.0);
        b.add_diag(1, 1.0);
        b.add_off(0, 1, 2.0);
        assert!(matches!(BandCholesky::factor(&b.build()), Err(SolverError::FactorizationFailure { .. })));
    }

    #[test]
    fn cg_reports_non_convergence() {
        let op = tridiag(50);
        let rhs = vec![1.0; 50];
        assert!(matches!(cg_solve(&op, &rhs, 1e-14, 3), Err(SolverError::SolverFailure { iterations: 3, .. })));
    }
}
