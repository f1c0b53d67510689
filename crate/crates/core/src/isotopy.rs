//! Combinatorial g(d)-isotopy classes and the exact ground-state basis of `H₀`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{apply_h0, LevelParams};
use crate::spin::{has_move, pattern_of, PatternKind, SpinConfig, WallTracer, PATTERN_KIND};
use crate::tiling::Tiling;

/// Default limit on the cell count for exhaustive class enumeration.
pub const DEFAULT_CLASS_CAP: usize = 24;

/// Disjoint-set forest over `0..len` where every root is the smallest
/// member of its set.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        assert!(len <= u32::MAX as usize + 1);
        Self {
            parent: (0..len).map(|i| i as u32).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo as u32;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassInfo {
    pub size: usize,
    /// Numerically smallest member.
    pub representative: SpinConfig,
    pub lonely: bool,
}

/// Partition of all `2^n` configurations into isotopy classes.
///
/// Class ids are assigned in increasing order of representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    n: usize,
    class_of: Vec<u32>,
    classes: Vec<ClassInfo>,
}

impl ClassPartition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn lonely_count(&self) -> usize {
        self.classes.iter().filter(|c| c.lonely).count()
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn class_of(&self, s: SpinConfig) -> usize {
        self.class_of[s.index()] as usize
    }

    pub fn info(&self, id: usize) -> Result<&ClassInfo> {
        self.classes.get(id).ok_or(Error::InvalidClass {
            id,
            count: self.classes.len(),
        })
    }

    /// Members of one class in increasing order.
    pub fn members(&self, id: usize) -> Result<Vec<SpinConfig>> {
        self.info(id)?;
        Ok(self
            .class_of
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c as usize == id)
            .map(|(s, _)| SpinConfig(s as u64))
            .collect())
    }

    /// Representatives of the singleton classes, ascending.
    pub fn lonely_configs(&self) -> Vec<SpinConfig> {
        self.classes
            .iter()
            .filter(|c| c.lonely)
            .map(|c| c.representative)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.size).collect()
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= 32 {
        return Err(Error::TooLarge {
            n,
            cap,
            bytes: 4u128 << n,
        });
    }
    Ok(())
}

pub fn enumerate_classes(t: &Tiling) -> Result<ClassPartition> {
    enumerate_classes_with_cap(t, DEFAULT_CLASS_CAP)
}

/// Union every configuration with each of its type-g and type-h neighbors.
pub fn enumerate_classes_with_cap(t: &Tiling, cap: usize) -> Result<ClassPartition> {
    let n = t.n();
    check_cap(n, cap)?;
    let dim = 1usize << n;
    let mut uf = UnionFind::new(dim);
    for bits in 0..dim as u64 {
        let s = SpinConfig(bits);
        for c in 0..n {
            let joined = match PATTERN_KIND[pattern_of(t, s, c) as usize] {
                // Each g-pair is seen from both sides; take the one with c = +.
                PatternKind::Arc => s.spin(c),
                PatternKind::AllPlus => s.spin(c),
                PatternKind::AllMinus => !s.spin(c),
                PatternKind::Other => false,
            };
            if joined {
                uf.union(s.index(), s.flipped(c).index());
            }
        }
    }
    Ok(partition_from(n, uf))
}

fn partition_from(n: usize, mut uf: UnionFind) -> ClassPartition {
    let dim = 1usize << n;
    let mut class_of = vec![0u32; dim];
    let mut classes: Vec<ClassInfo> = Vec::new();
    for s in 0..dim {
        let root = uf.find(s);
        let id = if root == s {
            classes.push(ClassInfo {
                size: 0,
                representative: SpinConfig(s as u64),
                lonely: false,
            });
            classes.len() - 1
        } else {
            class_of[root] as usize
        };
        class_of[s] = id as u32;
        classes[id].size += 1;
    }
    for c in &mut classes {
        c.lonely = c.size == 1;
    }
    ClassPartition {
        n,
        class_of,
        classes,
    }
}

/// Configurations with no available move at any cell, found without building
/// the partition.
pub fn lonely_configs(t: &Tiling) -> Result<Vec<SpinConfig>> {
    let n = t.n();
    check_cap(n, DEFAULT_CLASS_CAP)?;
    Ok((0..1u64 << n)
        .map(SpinConfig)
        .filter(|&s| (0..n).all(|c| !has_move(t, s, c)))
        .collect())
}

/// Normalized ground-state vector of one isotopy class, amplitude `∝ d^{n(s)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundVector {
    pub class_id: usize,
    /// `(configuration, amplitude)` in increasing configuration order.
    pub entries: Vec<(SpinConfig, f64)>,
    /// Euclidean norm of the unnormalized `d^{n(s)}` vector.
    pub normalization: f64,
}

impl GroundVector {
    pub fn amplitude(&self, s: SpinConfig) -> f64 {
        self.entries
            .binary_search_by_key(&s, |&(c, _)| c)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for &(s, a) in &self.entries {
            v[s.index()] = a;
        }
        v
    }
}

pub fn ground_vector(
    t: &Tiling,
    part: &ClassPartition,
    class_id: usize,
    level: &LevelParams,
) -> Result<GroundVector> {
    let tracer = WallTracer::new(t);
    ground_vector_with(&tracer, part, class_id, level)
}

fn ground_vector_with(
    tracer: &WallTracer,
    part: &ClassPartition,
    class_id: usize,
    level: &LevelParams,
) -> Result<GroundVector> {
    let members = part.members(class_id)?;
    let mut entries: Vec<(SpinConfig, f64)> = members
        .into_iter()
        .map(|s| (s, level.d.powi(tracer.trivial_count(s) as i32)))
        .collect();
    let normalization = entries.iter().map(|(_, a)| a * a).sum::<f64>().sqrt();
    for e in &mut entries {
        e.1 /= normalization;
    }
    Ok(GroundVector {
        class_id,
        entries,
        normalization,
    })
}

/// All ground vectors, in class id order.
pub fn ground_vectors(
    t: &Tiling,
    part: &ClassPartition,
    level: &LevelParams,
) -> Result<Vec<GroundVector>> {
    let tracer = WallTracer::new(t);
    (0..part.class_count())
        .map(|id| ground_vector_with(&tracer, part, id, level))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCheck {
    pub vectors: usize,
    /// `max_i ‖H₀ vᵢ‖` over all classes.
    pub max_residual: f64,
    pub residuals: Vec<f64>,
    /// Supports are pairwise disjoint, so the vectors are exactly orthogonal.
    pub orthogonal: bool,
}

pub fn verify_kernel(t: &Tiling, part: &ClassPartition, level: &LevelParams) -> Result<KernelCheck> {
    let dim = 1usize << t.n();
    let vectors = ground_vectors(t, part, level)?;
    let mut owner = vec![u32::MAX; dim];
    let mut orthogonal = true;
    let mut residuals = Vec::with_capacity(vectors.len());
    for v in &vectors {
        for &(s, _) in &v.entries {
            if owner[s.index()] != u32::MAX {
                orthogonal = false;
            }
            owner[s.index()] = v.class_id as u32;
        }
        let w = apply_h0(t, level, &v.to_dense(dim))?;
        residuals.push(w.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    Ok(KernelCheck {
        vectors: vectors.len(),
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
        orthogonal,
    })
}
