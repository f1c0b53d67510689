//! Dense symmetric matrices and a Householder + QL reference eigensolver.

use rayon::prelude::*;

use super::local_dot;
use super::tridiag::{tridiagonal_eigen, Track};
use crate::error::{Error, Result};

/// Largest dimension accepted by [`dense_reference`].
pub const DENSE_REFERENCE_CAP: usize = 4096;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.concat(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        });
    }

    /// `max |A - Aᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn nonzeros_in_row(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&x| x != 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit eigenvectors, `vectors[j]` belonging to `values[j]`.
    pub vectors: Option<Vec<Vec<f64>>>,
}

/// Full symmetric eigen-decomposition: Householder reduction to tridiagonal
/// form followed by implicit QL.
pub fn dense_reference(a: &DenseMatrix, want_vectors: bool) -> Result<DenseEigen> {
    let n = a.n();
    if n > DENSE_REFERENCE_CAP {
        return Err(Error::TooLarge {
            n,
            cap: DENSE_REFERENCE_CAP,
            bytes: 8 * (n as u128) * (n as u128),
        });
    }
    if n == 0 {
        return Ok(DenseEigen {
            values: vec![],
            vectors: want_vectors.then(Vec::new),
        });
    }
    let (diag, off, reflectors) = tridiagonalize(a);
    if !want_vectors {
        let values = tridiagonal_eigen(&diag, &off, Track::None)?;
        return Ok(DenseEigen {
            values,
            vectors: None,
        });
    }
    let mut rows = Vec::new();
    let values = tridiagonal_eigen(&diag, &off, Track::Full(&mut rows))?;
    // x = H_0 H_1 ... H_{n-3} y: apply the last reflector first.
    rows.par_iter_mut().for_each(|y| {
        for r in reflectors.iter().rev() {
            let tail = &mut y[r.start..];
            let proj: f64 = r.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>() * r.beta;
            for (t, v) in tail.iter_mut().zip(&r.v) {
                *t -= proj * v;
            }
        }
    });
    Ok(DenseEigen {
        values,
        vectors: Some(rows),
    })
}

struct Reflector {
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

/// Returns diagonal, sub-diagonal and the reflectors `H = I - β v vᵀ` acting
/// on indices `start..n`.
///
/// The rank-2 update of each step is deferred and applied row by row in the
/// same pass that forms the next step's product `A v`, so the trailing matrix
/// is streamed once per step.
fn tridiagonalize(a: &DenseMatrix) -> (Vec<f64>, Vec<f64>, Vec<Reflector>) {
    let n = a.n();
    let mut m = a.data.clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors: Vec<Reflector> = Vec::new();
    // (first index, v, w) of the update A -= v wᵀ + w vᵀ not yet applied.
    let mut pending: Option<(usize, Vec<f64>, Vec<f64>)> = None;

    fn apply_row(row: &mut [f64], i: usize, from: usize, up: &(usize, Vec<f64>, Vec<f64>)) {
        let (s, v, w) = up;
        let (vi, wi) = (v[i - s], w[i - s]);
        for ((r, vj), wj) in row[from..].iter_mut().zip(&v[from - s..]).zip(&w[from - s..]) {
            *r -= vi * wj + wi * vj;
        }
    }

    for k in 0..n.saturating_sub(2) {
        let start = k + 1;
        if let Some(up) = &pending {
            apply_row(&mut m[k * n..(k + 1) * n], k, k, up);
        }
        let x: Vec<f64> = m[k * n + start..(k + 1) * n].to_vec();
        let tail_norm2: f64 = x[1..].iter().map(|v| v * v).sum();
        diag[k] = m[k * n + k];
        if tail_norm2 == 0.0 {
            off[k] = x[0];
            // Nothing to reflect; still flush the deferred update.
            if let Some(up) = &pending {
                m[start * n..]
                    .par_chunks_mut(n)
                    .enumerate()
                    .for_each(|(i, row)| apply_row(row, start + i, start, up));
            }
            pending = None;
            continue;
        }
        let norm = (x[0] * x[0] + tail_norm2).sqrt();
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let beta = 2.0 / v.iter().map(|t| t * t).sum::<f64>();
        off[k] = alpha;

        // p = β A₂₂ v, w = p - (β/2)(pᵀv) v, A₂₂ -= v wᵀ + w vᵀ
        let width = n - start;
        let mut p = vec![0.0; width];
        let prev = pending.take();
        m[start * n..]
            .par_chunks_mut(n)
            .zip(p.par_iter_mut())
            .enumerate()
            .for_each(|(i, (row, pi))| {
                if let Some(up) = &prev {
                    apply_row(row, start + i, start, up);
                }
                *pi = beta * local_dot(&row[start..], &v);
            });
        let kappa = 0.5 * beta * p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        pending = Some((start, v.clone(), w));
        reflectors.push(Reflector { start, v, beta });
    }
    if let Some(up) = &pending {
        let from = n.saturating_sub(2);
        for i in from..n {
            apply_row(&mut m[i * n..(i + 1) * n], i, from.max(up.0), up);
        }
    }
    if n >= 2 {
        diag[n - 2] = m[(n - 2) * n + n - 2];
        off[n - 2] = m[(n - 2) * n + n - 1];
    }
    diag[n - 1] = m[n * n - 1];
    (diag, off, reflectors)
}
