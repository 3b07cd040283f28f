//! Compressed-row sparse matrices and a Jacobi-preconditioned conjugate
//! gradient solver.

use std::io::Write;

use rayon::prelude::*;

use crate::{Error, Result};

const PARALLEL_ROWS: usize = 50_000;

/// Square sparse matrix in compressed row storage.
///
/// Column indices are sorted and unique within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n × n` matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|(i, j, _)| *i >= n || *j >= n) {
            return Err(Error::InvalidArgument(format!("entry ({i}, {j}) outside {n}x{n} matrix")));
        }
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Stored value at `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference between two matrices of equal dimension.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - other.get(i, j)).abs());
            }
            for (j, v) in other.row(i) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        Ok(worst)
    }

    /// Lower bandwidth `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        let row = |(i, yi): (usize, &mut f64)| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        };
        // each row is summed in the same order either way
        if self.n >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(row);
        } else {
            y.iter_mut().enumerate().for_each(row);
        }
        Ok(())
    }

    /// Writes the matrix in MatrixMarket coordinate format (general, real).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
    /// Relative residual after each iteration, starting with the initial guess.
    pub history: Vec<f64>,
}

/// Default iteration cap `20·√n`.
pub fn default_max_iterations(n: usize) -> usize {
    ((20.0 * (n as f64).sqrt()).ceil() as usize).max(10)
}

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Jacobi-preconditioned conjugate gradient from a zero initial guess.
pub fn cg_solve(a: &SparseMatrix, b: &[f64], tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_from(a, b, vec![0.0; a.dim()], tol, maxit)
}

/// Jacobi-preconditioned conjugate gradient.
///
/// Stops when `‖b − Ax‖ / ‖b‖ <= tol`. Hitting `maxit` is not an error: the
/// best iterate is returned with `converged = false`.
pub fn cg_solve_from(
    a: &SparseMatrix,
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite { row: i, pivot: d })
            }
        })
        .collect::<Result<_>>()?;

    let b_norm = norm(b);
    let mut x = x0;
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                history: vec![0.0],
            },
        ));
    }

    let mut r = a.matvec(&x)?;
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / b_norm;
    let mut history = vec![rel];
    let mut best_rel = rel;
    let mut best_x = x.clone();
    let mut iterations = 0;

    while rel > tol && iterations < maxit {
        a.matvec_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        rel = norm(&r) / b_norm;
        history.push(rel);
        if rel <= best_rel {
            best_rel = rel;
            best_x.copy_from_slice(&x);
        }
        if rel <= tol {
            break;
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

    let converged = best_rel <= tol;
    let (x, rel) = (best_x, best_rel);
    Ok((
        x,
        SolveReport {
            iterations,
            relative_residual: rel,
            converged,
            history,
        },
    ))
}

/// Direct solve of a symmetric positive definite system by Cholesky
/// factorisation stored densely within the matrix bandwidth.
///
/// Intended as an independent reference for small systems.
pub fn direct_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let bw = a.bandwidth();
    let w = bw + 1;
    // band[i * w + (j + bw - i)] holds L(i, j) for i - bw <= j <= i
    let mut band = vec![0.0; n * w];
    let at = |i: usize, j: usize| i * w + (j + bw - i);
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j <= i {
                band[at(i, j)] = v;
            }
        }
    }
    for j in 0..n {
        let lo = j.saturating_sub(bw);
        let mut d = band[at(j, j)];
        for k in lo..j {
            d -= band[at(j, k)] * band[at(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let d = d.sqrt();
        band[at(j, j)] = d;
        for i in (j + 1)..n.min(j + bw + 1) {
            let lo_i = i.saturating_sub(bw).max(lo);
            let mut s = band[at(i, j)];
            for k in lo_i..j {
                s -= band[at(i, k)] * band[at(j, k)];
            }
            band[at(i, j)] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let mut s = y[i];
        for k in lo..i {
            s -= band[at(i, k)] * y[k];
        }
        y[i] = s / band[at(i, i)];
    }
    for i in (0..n).rev() {
        let hi = n.min(i + bw + 1);
        let mut s = y[i];
        for k in (i + 1)..hi {
            s -= band[at(k, i)] * y[k];
        }
        y[i] = s / band[at(i, i)];
    }
    Ok(y)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
