//! Smallest-algebraic eigenpairs of symmetric matrix-free operators.
//!
//! The iterative solver is Lanczos with full reorthogonalization, restarted
//! from fresh start vectors with every converged eigenvector locked and
//! projected out of later Krylov spaces. A single Krylov space only sees one
//! direction per distinct eigenvalue, so degenerate eigenvalues are picked up
//! one copy per restart.

pub mod dense;
pub mod tridiag;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use dense::DenseMatrix;
use tridiag::{tridiagonal_eigen, Track};

/// Relative tolerance used to group eigenvalues into multiplets.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Upper bound on the memory held by one Krylov basis.
const BASIS_MEMORY_BUDGET: usize = 1 << 30;

/// A cycle stops at this multiple of the step at which its lowest Ritz value
/// converged.
const CYCLE_EXTENSION: usize = 1;

const ESTIMATE_MARGIN: f64 = 0.1;

/// Weight of fresh noise mixed into a hinted start vector. Larger weights
/// cost Lanczos steps spent resolving the noise to full accuracy; the final
/// unhinted cycle still guards against anything the hints miss.
const HINT_NOISE: f64 = 1e-8;

/// Block length for deterministic chunked reductions.
const REDUCE_CHUNK: usize = 1 << 13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Number of eigenpairs wanted.
    pub k: usize,
    /// Residual tolerance, relative to `max(1, |λ|)`.
    pub tol: f64,
    /// Budget of operator products across all restart cycles.
    pub max_iter: usize,
    /// Maximum Lanczos steps per restart cycle.
    pub cycle_len: usize,
    pub seed: u64,
    pub degeneracy_tol: f64,
    pub keep_vectors: bool,
}

impl SolverOptions {
    pub fn new(k: usize) -> Self {
        let cycle_len = 50 * k.max(1);
        Self {
            k,
            tol: 1e-10,
            max_iter: cycle_len * (k + 10),
            cycle_len,
            seed: 0,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            keep_vectors: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_vectors(mut self, keep: bool) -> Self {
        self.keep_vectors = keep;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub value: f64,
    pub converged: bool,
    /// `‖Av - λv‖ / max(1, |λ|)` for unit `v`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Ascending by value.
    pub pairs: Vec<EigenPair>,
    #[serde(skip)]
    pub vectors: Option<Vec<Vec<f64>>>,
    /// Operator products spent.
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Spectrum {
    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn converged_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.converged).count()
    }
}

/// Sizes of consecutive clusters of ascending `values`, where a value joins the
/// current cluster if it lies within `tol · max(1, |first|)` of the cluster's
/// first member.
pub fn multiplets(values: &[f64], tol: f64) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let first = values[i];
        let mut j = i + 1;
        while j < values.len() && (values[j] - first).abs() <= tol * first.abs().max(1.0) {
            j += 1;
        }
        sizes.push(j - i);
        i = j;
    }
    sizes
}

/// Serial dot product with independent accumulators so the adds pipeline.
#[inline]
pub(crate) fn local_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ac, bc) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ac.remainder().iter().zip(bc.remainder()).map(|(p, q)| p * q).sum();
    for (x, y) in ac.zip(bc) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(x, y)| local_dot(x, y))
        .collect();
    partial.iter().sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(REDUCE_CHUNK)
        .zip(x.par_chunks(REDUCE_CHUNK))
        .for_each(|(yc, xc)| {
            for (a, b) in yc.iter_mut().zip(xc) {
                *a += alpha * b;
            }
        });
}

fn scale(alpha: f64, x: &mut [f64]) {
    x.par_iter_mut().for_each(|v| *v *= alpha);
}

/// Classical Gram-Schmidt against every vector of `sets`, repeated once when
/// the first pass removes more than `1 - 1/√2` of the norm.
fn orthogonalize(w: &mut [f64], sets: &[&[Vec<f64>]]) {
    let qs: Vec<&[f64]> = sets.iter().flat_map(|s| s.iter().map(|q| q.as_slice())).collect();
    if qs.is_empty() {
        return;
    }
    let before = norm(w);
    project_out(w, &qs);
    let after = norm(w);
    if after < std::f64::consts::FRAC_1_SQRT_2 * before {
        project_out(w, &qs);
    }
}

/// `w -= Q (Qᵀ w)`, streaming each vector of `Q` once per half.
fn project_out(w: &mut [f64], qs: &[&[f64]]) {
    let partials: Vec<Vec<f64>> = w
        .par_chunks(REDUCE_CHUNK)
        .enumerate()
        .map(|(i, wc)| {
            let lo = i * REDUCE_CHUNK;
            qs.iter()
                .map(|q| local_dot(&q[lo..lo + wc.len()], wc))
                .collect()
        })
        .collect();
    let mut coeffs = vec![0.0; qs.len()];
    for p in &partials {
        for (c, v) in coeffs.iter_mut().zip(p) {
            *c += v;
        }
    }
    w.par_chunks_mut(REDUCE_CHUNK).enumerate().for_each(|(i, wc)| {
        let (lo, len) = (i * REDUCE_CHUNK, wc.len());
        for (q, c) in qs.iter().zip(&coeffs) {
            for (a, b) in wc.iter_mut().zip(&q[lo..lo + len]) {
                *a -= c * b;
            }
        }
    });
}

/// `‖A v - λ v‖ / (max(1, |λ|) ‖v‖)`.
pub fn residual(op: &dyn LinearOperator, lambda: f64, v: &[f64]) -> Result<f64> {
    let nv = norm(v);
    if nv == 0.0 {
        return Err(Error::Solver("residual of the zero vector".into()));
    }
    let mut w = vec![0.0; v.len()];
    op.apply(v, &mut w);
    axpy(-lambda, v, &mut w);
    Ok(norm(&w) / (lambda.abs().max(1.0) * nv))
}

struct Locked {
    value: f64,
    residual: f64,
    vector: Vec<f64>,
}

struct RitzPair {
    value: f64,
    estimate: f64,
    vector: Vec<f64>,
}

struct Cycle {
    /// Lowest Ritz pairs of the cycle, ascending; vectors are unit length.
    ritz: Vec<RitzPair>,
    steps: usize,
}

fn converged(value: f64, residual: f64, tol: f64) -> bool {
    residual <= tol * value.abs().max(1.0)
}

/// One Lanczos run from `start` (unit, orthogonal to `locked`), stopping once
/// the lowest `need` Ritz values have converged.
fn lanczos_cycle(
    op: &dyn LinearOperator,
    start: Vec<f64>,
    locked: &[Vec<f64>],
    max_steps: usize,
    need: usize,
    report: usize,
    tol: f64,
) -> Result<Cycle> {
    let dim = op.dim();
    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut scale_est = 0.0f64;
    let mut last = Vec::new();
    let mut final_beta;
    let mut first_converged: Option<usize> = None;
    // Ritz estimates run slightly optimistic against true residuals.
    let inner = tol * ESTIMATE_MARGIN;
    loop {
        let j = alphas.len();
        let mut w = vec![0.0; dim];
        op.apply(&basis[j], &mut w);
        let alpha = dot(&basis[j], &w);
        axpy(-alpha, &basis[j], &mut w);
        if j > 0 {
            axpy(-betas[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(&mut w, &[locked, &basis]);
        let beta = norm(&w);
        alphas.push(alpha);
        scale_est = scale_est.max(alpha.abs() + beta + betas.last().copied().unwrap_or(0.0));
        let steps = j + 1;
        let breakdown = beta <= 1e-14 * scale_est.max(1.0);
        let exhausted = steps >= max_steps;
        final_beta = beta;
        if breakdown || exhausted || steps.is_multiple_of(4) {
            let values = tridiagonal_eigen(&alphas, &betas, Track::LastComponent(&mut last))?;
            let want = need.min(steps);
            let done = (0..want).all(|i| converged(values[i], beta * last[i].abs(), inner));
            // Basis work grows quadratically with the cycle length, so once the
            // lowest value has converged the cycle only runs as long again.
            if first_converged.is_none() && converged(values[0], beta * last[0].abs(), inner) {
                first_converged = Some(steps);
            }
            let stale = first_converged.is_some_and(|f| steps >= CYCLE_EXTENSION * f);
            if done || stale || breakdown || exhausted {
                break;
            }
        }
        scale(1.0 / beta, &mut w);
        betas.push(beta);
        basis.push(w);
    }

    let steps = alphas.len();
    let mut rows = Vec::new();
    let values = tridiagonal_eigen(&alphas, &betas, Track::Full(&mut rows))?;
    let count = report.min(steps);
    let estimates: Vec<f64> = rows[..count]
        .iter()
        .map(|y| final_beta * y[steps - 1].abs())
        .collect();
    let any_converged = (0..count).any(|i| converged(values[i], estimates[i], inner));
    let ritz = (0..count)
        .map(|i| {
            // Unconverged vectors are only needed when nothing converged.
            let vector = if converged(values[i], estimates[i], inner) || !any_converged {
                let mut x = vec![0.0; dim];
                combine(&rows[i], &basis, &mut x);
                let nx = norm(&x);
                scale(1.0 / nx, &mut x);
                x
            } else {
                Vec::new()
            };
            RitzPair {
                value: values[i],
                estimate: estimates[i],
                vector,
            }
        })
        .collect();
    Ok(Cycle { ritz, steps })
}

/// `x += Σ coef_j basis_j`.
fn combine(coefs: &[f64], basis: &[Vec<f64>], x: &mut [f64]) {
    x.par_chunks_mut(REDUCE_CHUNK).enumerate().for_each(|(i, xc)| {
        let (lo, len) = (i * REDUCE_CHUNK, xc.len());
        for (c, q) in coefs.iter().zip(basis) {
            for (a, b) in xc.iter_mut().zip(&q[lo..lo + len]) {
                *a += c * b;
            }
        }
    });
}

/// The k-th smallest locked value, once there are k.
fn kth_locked(locked: &[Locked], k: usize) -> Option<f64> {
    let mut sorted: Vec<f64> = locked.iter().map(|l| l.value).collect();
    sorted.sort_by(f64::total_cmp);
    sorted.get(k - 1).copied()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);
    v
}

/// The `k` algebraically smallest eigenpairs of `op`.
pub fn smallest_eigs(op: &dyn LinearOperator, opts: &SolverOptions) -> Result<Spectrum> {
    smallest_eigs_with_hints(op, opts, &[])
}

/// As [`smallest_eigs`], seeding restart cycles from approximate eigenvectors
/// (for example those of a nearby operator).
pub fn smallest_eigs_with_hints(
    op: &dyn LinearOperator,
    opts: &SolverOptions,
    hints: &[Vec<f64>],
) -> Result<Spectrum> {
    let dim = op.dim();
    let k = opts.k;
    if k == 0 || k >= dim {
        return Err(Error::Solver(format!("k = {k} must satisfy 0 < k < dimension {dim}")));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Solver(format!("tolerance {} must be positive", opts.tol)));
    }
    let memory_steps = (BASIS_MEMORY_BUDGET / (8 * dim)).max(8);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Locked> = Vec::new();
    let mut products = 0usize;
    let mut restarts = 0usize;
    let mut last_cycle: Option<Cycle> = None;
    let hints = if hints.is_empty() {
        Vec::new()
    } else {
        let refined = rayleigh_ritz(op, hints)?;
        products += refined.len();
        refined
    };
    let hints = hints.as_slice();
    let mut hint_used = vec![false; hints.len()];

    while products < opts.max_iter && locked.len() < dim {
        let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|l| l.vector.clone()).collect();
        // Whether anything is left below the k-th locked value is only judged
        // from a random start: a hint resolves its own neighbourhood before
        // its noise has grown enough to expose a missed level elsewhere.
        let offered = if locked.len() < k { hints } else { &[] };
        let mut start = pick_start(&mut rng, dim, offered, &mut hint_used, &locked_vecs);
        orthogonalize(&mut start, &[&locked_vecs]);
        let ns = norm(&start);
        if ns < 1e-8 {
            continue;
        }
        scale(1.0 / ns, &mut start);

        let need = k.saturating_sub(locked.len()).max(1);
        let max_steps = opts
            .cycle_len
            .min(dim - locked.len())
            .min(memory_steps)
            .min(opts.max_iter - products)
            .max(1);
        let cycle = lanczos_cycle(op, start, &locked_vecs, max_steps, need, k, opts.tol)?;
        products += cycle.steps;
        restarts += 1;

        let kth = kth_locked(&locked, k);
        let lowest_converged = cycle
            .ritz
            .first()
            .is_some_and(|r| converged(r.value, r.estimate, opts.tol * ESTIMATE_MARGIN));

        if let (Some(kth), true) = (kth, lowest_converged) {
            let slack = opts.degeneracy_tol * kth.abs().max(1.0);
            if cycle.ritz[0].value >= kth - slack {
                last_cycle = None;
                break;
            }
        }

        // Pairs whose residual sits near the tolerance would leak their error
        // into every later cycle through deflation, so locking uses the
        // stricter estimate; past k pairs only values below the k-th matter.
        let inner = opts.tol * ESTIMATE_MARGIN;
        let mut added = 0;
        for r in &cycle.ritz {
            if !converged(r.value, r.estimate, inner) {
                continue;
            }
            if let Some(kth) = kth_locked(&locked, k) {
                if r.value >= kth {
                    continue;
                }
            }
            let res = residual(op, r.value, &r.vector)?;
            products += 1;
            if converged(r.value, res, opts.tol) {
                locked.push(Locked {
                    value: r.value,
                    residual: res,
                    vector: r.vector.clone(),
                });
                added += 1;
            }
        }
        last_cycle = if added == 0 { Some(cycle) } else { None };
    }

    if locked.is_empty() {
        return Err(Error::Solver(format!(
            "no eigenpair converged within {} operator products",
            opts.max_iter
        )));
    }
    locked.sort_by(|a, b| a.value.total_cmp(&b.value));
    locked.truncate(k);
    let mut pairs: Vec<EigenPair> = locked
        .iter()
        .map(|l| EigenPair {
            value: l.value,
            converged: true,
            residual: l.residual,
        })
        .collect();
    let mut vectors: Vec<Vec<f64>> = locked.into_iter().map(|l| l.vector).collect();
    if pairs.len() < k {
        if let Some(cycle) = last_cycle {
            for r in cycle.ritz.into_iter().take(k - pairs.len()) {
                pairs.push(EigenPair {
                    value: r.value,
                    converged: false,
                    residual: r.estimate / r.value.abs().max(1.0),
                });
                vectors.push(r.vector);
            }
        }
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|&a, &b| pairs[a].value.total_cmp(&pairs[b].value));
        pairs = order.iter().map(|&i| pairs[i]).collect();
        vectors = order.iter().map(|&i| vectors[i].clone()).collect();
    }
    Ok(Spectrum {
        pairs,
        vectors: opts.keep_vectors.then_some(vectors),
        iterations: products,
        restarts,
        seed: opts.seed,
    })
}

/// Ritz vectors of `op` on the span of `hints`, ascending by Ritz value.
/// Hints from a nearby operator span nearly the same subspace, but their
/// individual vectors mix within clusters; this undoes the mixing.
fn rayleigh_ritz(op: &dyn LinearOperator, hints: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = op.dim();
    let mut q: Vec<Vec<f64>> = Vec::new();
    for h in hints.iter().filter(|h| h.len() == dim) {
        let mut v = h.clone();
        let before = norm(&v);
        orthogonalize(&mut v, &[&q]);
        let nv = norm(&v);
        if nv > 1e-8 * before {
            scale(1.0 / nv, &mut v);
            q.push(v);
        }
    }
    let m = q.len();
    let aq: Vec<Vec<f64>> = q
        .iter()
        .map(|v| {
            let mut w = vec![0.0; dim];
            op.apply(v, &mut w);
            w
        })
        .collect();
    let mut g = DenseMatrix::zeros(m);
    for i in 0..m {
        for j in 0..=i {
            let x = 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i]));
            g.set(i, j, x);
            g.set(j, i, x);
        }
    }
    let ys = dense::dense_reference(&g, true)?.vectors.unwrap_or_default();
    Ok(ys
        .iter()
        .map(|y| {
            let mut x = vec![0.0; dim];
            combine(y, &q, &mut x);
            let nx = norm(&x);
            scale(1.0 / nx, &mut x);
            x
        })
        .collect())
}

/// Start vector for the next cycle: the first unused hint with a sizeable
/// component outside the locked span, blended with noise, or pure noise.
fn pick_start(
    rng: &mut ChaCha8Rng,
    dim: usize,
    hints: &[Vec<f64>],
    used: &mut [bool],
    locked: &[Vec<f64>],
) -> Vec<f64> {
    let noise = random_unit(rng, dim);
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for (i, h) in hints.iter().enumerate() {
        if used[i] || h.len() != dim {
            continue;
        }
        let mut rest = h.clone();
        orthogonalize(&mut rest, &[locked]);
        let r = norm(&rest) / norm(h).max(f64::MIN_POSITIVE);
        if r > 0.1 {
            best = Some((i, r, rest));
            break;
        }
    }
    match best {
        Some((i, _, mut rest)) => {
            used[i] = true;
            let nr = norm(&rest);
            scale(1.0 / nr, &mut rest);
            axpy(HINT_NOISE, &noise, &mut rest);
            rest
        }
        None => noise,
    }
}
