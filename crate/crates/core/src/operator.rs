//! Matrix-free `H₀`, the transverse-field perturbation `V = Σ σₓ`, and
//! `H_ε = H₀ + εV`.
//!
//! Each distinct type-g projector is applied once (canonical orientation with
//! the flipped cell at `+`). Every output entry is computed by gathering the
//! contributions of all projectors touching its configuration, so rows can be
//! filled independently and in parallel without write conflicts.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::spin::{classify_pair, PairClass, PatternKind, SpinConfig, PATTERN_KIND};
use crate::tiling::{Tiling, SLOTS};

/// Tag recorded in reports describing how type-g projectors are counted.
pub const TYPEG_CONVENTION: &str = "canonical-once";

/// Largest cell count accepted by [`dense_matrix`].
pub const DENSE_CAP: usize = 14;

/// Largest cell count for which the matrix-free operator is built.
pub const OPERATOR_CAP: usize = 28;

const ROW_CHUNK: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelParams {
    pub level: u32,
    /// Loop value `d = 2 cos(π / (l + 2))`.
    pub d: f64,
}

impl LevelParams {
    pub fn new(level: u32) -> Result<Self> {
        if level < 1 {
            return Err(Error::InvalidLevel(level));
        }
        Ok(Self {
            level,
            d: 2.0 * (PI / (level as f64 + 2.0)).cos(),
        })
    }
}

/// A real symmetric operator known only through its action on vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; both slices have length [`LinearOperator::dim`].
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn is_symmetric(&self) -> bool {
        true
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }
}

/// `H_ε` on one tiling at one level.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n: usize,
    neighbors: Vec<[u8; SLOTS]>,
    level: LevelParams,
    epsilon: f64,
    inv_d: f64,
    inv_d2: f64,
}

impl Hamiltonian {
    pub fn new(t: &Tiling, level: LevelParams, epsilon: f64) -> Result<Self> {
        let n = t.n();
        if n > OPERATOR_CAP {
            return Err(Error::TooLarge {
                n,
                cap: OPERATOR_CAP,
                bytes: 8u128 << n,
            });
        }
        let neighbors = (0..n)
            .map(|c| std::array::from_fn(|k| t.neighbor(c, k) as u8))
            .collect();
        Ok(Self {
            n,
            neighbors,
            level,
            epsilon,
            inv_d: 1.0 / level.d,
            inv_d2: 1.0 / (level.d * level.d),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> LevelParams {
        self.level
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    #[inline(always)]
    fn pattern(&self, s: usize, cell: usize) -> usize {
        let nb = &self.neighbors[cell];
        ((s >> nb[0]) & 1)
            | ((s >> nb[1]) & 1) << 1
            | ((s >> nb[2]) & 1) << 2
            | ((s >> nb[3]) & 1) << 3
            | ((s >> nb[4]) & 1) << 4
            | ((s >> nb[5]) & 1) << 5
    }

    /// Per-(own spin, neighbor pattern) coefficients `(diagonal, off-diagonal)`
    /// of row `s` against `x[s]` and `x[s ^ bit]`, indexed `own << 6 | pattern`.
    fn coefficients(&self, epsilon: f64) -> [(f64, f64); 128] {
        std::array::from_fn(|idx| {
            let own = idx >> 6 == 1;
            let (diag, off) = match PATTERN_KIND[idx & 63] {
                PatternKind::Arc => (1.0, -1.0),
                PatternKind::AllPlus if own => (1.0, -self.inv_d),
                PatternKind::AllPlus => (self.inv_d2, -self.inv_d),
                PatternKind::AllMinus if own => (self.inv_d2, -self.inv_d),
                PatternKind::AllMinus => (1.0, -self.inv_d),
                PatternKind::Other => (0.0, 0.0),
            };
            (diag, off + epsilon)
        })
    }

    /// 7-bit index `own << 6 | pattern` restricted to the bits of `s` that
    /// are set; OR-ing the values for disjoint bit sets gives the full index.
    #[inline(always)]
    fn index_bits(&self, s: usize, cell: usize) -> u8 {
        (self.pattern(s, cell) | ((s >> cell) & 1) << 6) as u8
    }

    /// Rows `0..y.len()` of the product; `y.len()` is a power of two.
    fn fill(&self, x: &[f64], y: &mut [f64], epsilon: f64) {
        assert_eq!(x.len(), self.dim());
        assert!(y.len().is_power_of_two() && y.len() <= self.dim());
        let n = self.n;
        let coef = self.coefficients(epsilon);
        // Rows are visited in blocks sharing all bits above the lowest
        // `lo_bits`; the low-bit part of every index comes from a table.
        let lo_bits = (y.len().trailing_zeros() as usize).min(8);
        let block = 1usize << lo_bits;
        let lo: Vec<Vec<u8>> = (0..n)
            .map(|c| (0..block).map(|s| self.index_bits(s, c)).collect())
            .collect();
        let chunk_len = ROW_CHUNK.max(block);
        y.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(chunk, out)| {
                let mut hi = vec![0u8; n];
                for (b, rows) in out.chunks_mut(block).enumerate() {
                    let s0 = chunk * chunk_len + b * block;
                    for (c, h) in hi.iter_mut().enumerate() {
                        *h = self.index_bits(s0, c);
                    }
                    for (i, w) in rows.iter_mut().enumerate() {
                        let s = s0 | i;
                        let xs = x[s];
                        let mut acc = 0.0;
                        for c in 0..n {
                            let (diag, off) = coef[(hi[c] | lo[c][i]) as usize];
                            acc += diag * xs + off * x[s ^ (1 << c)];
                        }
                        *w = acc;
                    }
                }
            });
    }

    pub fn apply_h0_into(&self, x: &[f64], y: &mut [f64]) {
        self.fill(x, y, 0.0);
    }

    pub fn apply_perturbation_into(&self, x: &[f64], y: &mut [f64]) {
        perturbation_into(self.n, x, y);
    }

    /// Nonzero projector contributions touched by one product (diagnostic
    /// proxy for the flop count).
    pub fn flop_proxy(&self) -> u64 {
        let mut count = 0u64;
        for s in 0..self.dim() {
            for c in 0..self.n {
                if PATTERN_KIND[self.pattern(s, c)] != PatternKind::Other {
                    count += 1;
                }
            }
        }
        count
    }
}

impl LinearOperator for Hamiltonian {
    fn dim(&self) -> usize {
        1 << self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.fill(x, y, self.epsilon);
    }
}

fn perturbation_into(n: usize, x: &[f64], y: &mut [f64]) {
    y.par_chunks_mut(ROW_CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let base = chunk * ROW_CHUNK;
            for (i, w) in out.iter_mut().enumerate() {
                let s = base + i;
                *w = (0..n).map(|c| x[s ^ (1 << c)]).sum();
            }
        });
}

fn check_len(t: &Tiling, v: &[f64]) -> Result<()> {
    let expected = 1usize << t.n();
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

pub fn apply_h0(t: &Tiling, level: &LevelParams, v: &[f64]) -> Result<Vec<f64>> {
    check_len(t, v)?;
    let h = Hamiltonian::new(t, *level, 0.0)?;
    let mut w = vec![0.0; v.len()];
    h.apply_h0_into(v, &mut w);
    Ok(w)
}

/// `w[s] = Σ_c v[s with c flipped]` on `n` cells.
pub fn apply_perturbation(n: usize, v: &[f64]) -> Result<Vec<f64>> {
    let expected = 1usize << n;
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    let mut w = vec![0.0; v.len()];
    perturbation_into(n, v, &mut w);
    Ok(w)
}

pub fn apply_heps(t: &Tiling, level: &LevelParams, epsilon: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_len(t, v)?;
    let h = Hamiltonian::new(t, *level, epsilon)?;
    let mut w = vec![0.0; v.len()];
    h.apply(v, &mut w);
    Ok(w)
}

/// `(F v)[s] = v[s̄]` with every spin reversed.
pub fn global_flip_vector(n: usize, v: &[f64]) -> Vec<f64> {
    let mask = (1usize << n) - 1;
    (0..v.len()).map(|s| v[s ^ mask]).collect()
}

/// Eigenvalue of the global flip `F` on a symmetry sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];

    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// `H_ε` on one eigenspace of the global flip, in the orthonormal basis
/// `(|s⟩ ± |s̄⟩)/√2` indexed by the configurations whose last spin is `-`.
/// `H_ε` commutes with `F`, so its spectrum is the union of both sectors.
#[derive(Debug, Clone, Copy)]
pub struct FlipSector<'a> {
    h: &'a Hamiltonian,
    parity: Parity,
}

impl<'a> FlipSector<'a> {
    pub fn new(h: &'a Hamiltonian, parity: Parity) -> Self {
        Self { h, parity }
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Full-space vector of the sector vector `u`.
    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        let half = u.len();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let sign = self.parity.sign() * c;
        let mut x = vec![0.0; 2 * half];
        let (lo, hi) = x.split_at_mut(half);
        lo.par_iter_mut().zip(u).for_each(|(a, b)| *a = c * b);
        // s̄ = mask - s, so the upper half is the reversed lower half.
        hi.par_iter_mut()
            .zip(u.par_iter().rev())
            .for_each(|(a, b)| *a = sign * b);
        x
    }

    /// Sector component of the full-space vector `v`.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        let half = v.len() / 2;
        let mut u = vec![0.0; half];
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let sign = self.parity.sign();
        let (lo, hi) = v.split_at(half);
        u.par_iter_mut()
            .zip(lo.par_iter().zip(hi.par_iter().rev()))
            .for_each(|(a, (p, q))| *a = c * (p + sign * q));
        u
    }
}

impl LinearOperator for FlipSector<'_> {
    fn dim(&self) -> usize {
        self.h.dim() / 2
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        // `H E x` lies in the sector, so its lower half already determines
        // the restriction: `(Eᵀ v)[s] = √2 v[s]`.
        let full = self.embed(x);
        self.h.fill(&full, y, self.h.epsilon);
        y.par_iter_mut().for_each(|v| *v *= std::f64::consts::SQRT_2);
    }
}

/// `max |F H x - H F x|`.
pub fn flip_commutation_defect(h: &Hamiltonian, x: &[f64]) -> f64 {
    let n = h.n();
    let mut hx = vec![0.0; x.len()];
    h.apply(x, &mut hx);
    let fx = global_flip_vector(n, x);
    let mut hfx = vec![0.0; x.len()];
    h.apply(&fx, &mut hfx);
    global_flip_vector(n, &hx)
        .iter()
        .zip(&hfx)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairCensus {
    /// Pairs `(s, c)` of type g, counting both orientations.
    pub typeg_ordered: u64,
    /// Distinct type-g projectors (`typeg_ordered / 2`).
    pub typeg_canonical: u64,
    pub typeh: u64,
    /// `62 n 2^{n-7}`, defined for `n >= 7`.
    pub predicted: Option<u64>,
}

impl PairCensus {
    pub fn ordered_total(&self) -> u64 {
        self.typeg_ordered + self.typeh
    }
}

pub fn pair_census(t: &Tiling) -> Result<PairCensus> {
    let n = t.n();
    if n > OPERATOR_CAP {
        return Err(Error::TooLarge {
            n,
            cap: OPERATOR_CAP,
            bytes: 0,
        });
    }
    let h = Hamiltonian::new(t, LevelParams::new(1)?, 0.0)?;
    let per_chunk: Vec<(u64, u64, u64)> = (0..1usize << n)
        .into_par_iter()
        .with_min_len(ROW_CHUNK)
        .fold(
            || (0, 0, 0),
            |(mut g, mut gc, mut hh), s| {
                for c in 0..n {
                    let own = (s >> c) & 1 == 1;
                    match PATTERN_KIND[h.pattern(s, c)] {
                        PatternKind::Arc => {
                            g += 1;
                            gc += own as u64;
                        }
                        PatternKind::AllPlus => hh += own as u64,
                        PatternKind::AllMinus => hh += !own as u64,
                        PatternKind::Other => {}
                    }
                }
                (g, gc, hh)
            },
        )
        .collect();
    let (g, gc, hh) = per_chunk
        .into_iter()
        .fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(PairCensus {
        typeg_ordered: g,
        typeg_canonical: gc,
        typeh: hh,
        predicted: (n >= 7).then(|| 62 * n as u64 * (1u64 << (n - 7))),
    })
}

/// Explicitly assembled `H_ε` built term by term from the projector sum.
///
/// Used only as a test oracle; refuses `n > 14`.
pub fn dense_matrix(t: &Tiling, level: &LevelParams, epsilon: f64) -> Result<DenseMatrix> {
    let n = t.n();
    if n > DENSE_CAP {
        return Err(Error::TooLarge {
            n,
            cap: DENSE_CAP,
            bytes: 8u128 << (2 * n),
        });
    }
    let dim = 1usize << n;
    let mut a = DenseMatrix::zeros(dim);
    let inv_d = 1.0 / level.d;
    for bits in 0..dim as u64 {
        let s = SpinConfig(bits);
        for c in 0..n {
            let f = s.flipped(c);
            let (i, j) = (s.index(), f.index());
            match classify_pair(t, s, c)? {
                PairClass::TypeG if s.spin(c) => add_rank_one(&mut a, i, 1.0, j, -1.0),
                PairClass::TypeH => add_rank_one(&mut a, i, 1.0, j, -inv_d),
                _ => {}
            }
            a.add(j, i, epsilon);
        }
    }
    let defect = a.symmetry_defect();
    assert!(defect <= 1e-12, "assembled operator asymmetric by {defect}");
    Ok(a)
}

/// `A += u uᵀ` with `u = a eᵢ + b eⱼ`.
fn add_rank_one(m: &mut DenseMatrix, i: usize, a: f64, j: usize, b: f64) {
    m.add(i, i, a * a);
    m.add(i, j, a * b);
    m.add(j, i, b * a);
    m.add(j, j, b * b);
}
