//! Spin configurations, local move classification and domain walls.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tiling::{Tiling, SLOTS};

/// Largest cell count a [`SpinConfig`] can hold.
pub const MAX_CELLS: usize = 64;

/// One bit per cell: bit `c` set means cell `c` carries spin `+`.
///
/// The bit pattern doubles as the basis index of the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct SpinConfig(pub u64);

impl SpinConfig {
    pub fn all_plus(n: usize) -> Self {
        Self(full_mask(n))
    }

    pub fn all_minus() -> Self {
        Self(0)
    }

    #[inline]
    pub fn spin(self, cell: usize) -> bool {
        (self.0 >> cell) & 1 == 1
    }

    #[inline]
    pub fn flipped(self, cell: usize) -> Self {
        Self(self.0 ^ (1 << cell))
    }

    pub fn global_flip(self, n: usize) -> Self {
        Self(self.0 ^ full_mask(n))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

#[inline]
pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_cell(t: &Tiling, cell: usize) -> Result<()> {
    if cell >= t.n() {
        return Err(Error::CellOutOfRange { cell, n: t.n() });
    }
    Ok(())
}

/// Flip the spin of one cell.
pub fn flip(t: &Tiling, s: SpinConfig, cell: usize) -> Result<SpinConfig> {
    check_cell(t, cell)?;
    Ok(s.flipped(cell))
}

/// Shape of a 6-bit cyclic neighbor pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// The `+` slots and the `-` slots each form one nonempty cyclic arc.
    Arc,
    AllPlus,
    AllMinus,
    Other,
}

const fn cyclic_sign_changes(p: u8) -> u32 {
    let rotated = ((p << 1) | (p >> 5)) & 0x3f;
    (p ^ rotated).count_ones()
}

const fn build_pattern_table() -> [PatternKind; 64] {
    let mut table = [PatternKind::Other; 64];
    let mut p = 0;
    while p < 64 {
        table[p] = if p == 0x3f {
            PatternKind::AllPlus
        } else if p == 0 {
            PatternKind::AllMinus
        } else if cyclic_sign_changes(p as u8) == 2 {
            PatternKind::Arc
        } else {
            PatternKind::Other
        };
        p += 1;
    }
    table
}

/// Classification of every 6-bit neighbor pattern, shared by all cells.
pub static PATTERN_KIND: [PatternKind; 64] = build_pattern_table();

/// Spins of the cells across each slot of `cell`, bit `k` for slot `k`.
#[inline]
pub fn pattern_of(t: &Tiling, s: SpinConfig, cell: usize) -> u8 {
    let nb = t.neighbors(cell);
    let mut p = 0u8;
    for (k, &x) in nb.iter().enumerate() {
        p |= (((s.0 >> x) & 1) as u8) << k;
    }
    p
}

pub fn neighbor_pattern(t: &Tiling, s: SpinConfig, cell: usize) -> Result<u8> {
    check_cell(t, cell)?;
    Ok(pattern_of(t, s, cell))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairClass {
    TypeG,
    TypeH,
    Neither,
}

/// Classify a pattern given the spin of the cell itself.
#[inline]
pub fn classify_pattern(pattern: u8, own: bool) -> PairClass {
    match PATTERN_KIND[pattern as usize & 0x3f] {
        PatternKind::Arc => PairClass::TypeG,
        PatternKind::AllPlus if own => PairClass::TypeH,
        PatternKind::AllMinus if !own => PairClass::TypeH,
        _ => PairClass::Neither,
    }
}

pub fn classify_pair(t: &Tiling, s: SpinConfig, cell: usize) -> Result<PairClass> {
    check_cell(t, cell)?;
    Ok(classify_pattern(pattern_of(t, s, cell), s.spin(cell)))
}

/// True when `cell` admits a move in `s`: it is type-g, or it or its flip is type-h.
#[inline]
pub fn has_move(t: &Tiling, s: SpinConfig, cell: usize) -> bool {
    PATTERN_KIND[pattern_of(t, s, cell) as usize] != PatternKind::Other
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WallComponent {
    /// Indices into [`WallTracer::edges`].
    pub edges: Vec<usize>,
    /// Removing these edges disconnects the cell graph, i.e. the loop bounds a disc.
    pub separating: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WallDecomposition {
    pub components: Vec<WallComponent>,
    pub trivial_count: usize,
}

/// Precomputed edge and dual-vertex incidence for repeated wall tracing.
#[derive(Debug, Clone)]
pub struct WallTracer {
    n: usize,
    /// Cells on either side of each edge.
    edge_cells: Vec<(usize, usize)>,
    /// Dual vertices at the two ends of each edge.
    edge_ends: Vec<(usize, usize)>,
    /// The three edges meeting at each dual vertex.
    vertex_edges: Vec<[usize; 3]>,
    /// Edge id behind every dart.
    dart_edge: Vec<usize>,
}

impl WallTracer {
    /// Requires a tiling that passes validation.
    pub fn new(t: &Tiling) -> Self {
        let n = t.n();
        assert!(n <= MAX_CELLS, "wall tracing supports at most {MAX_CELLS} cells");
        let pairing = t.pairing();
        let (vertex, vertex_count) = t.dual_vertices();
        let mut dart_edge = vec![usize::MAX; t.num_darts()];
        let mut edge_cells = Vec::new();
        let mut edge_ends = Vec::new();
        let mut vertex_edges = vec![[usize::MAX; 3]; vertex_count];
        let mut filled = vec![0usize; vertex_count];
        for (d, e) in t.edges() {
            let id = edge_cells.len();
            dart_edge[d] = id;
            dart_edge[e] = id;
            edge_cells.push((d / SLOTS, e / SLOTS));
            // A dart runs from its own start corner to the start corner of its partner.
            let ends = (vertex[d], vertex[pairing[d]]);
            edge_ends.push(ends);
            for v in [ends.0, ends.1] {
                vertex_edges[v][filled[v]] = id;
                filled[v] += 1;
            }
        }
        Self {
            n,
            edge_cells,
            edge_ends,
            vertex_edges,
            dart_edge,
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edge_cells
    }

    pub fn edge_ends(&self) -> &[(usize, usize)] {
        &self.edge_ends
    }

    pub fn vertex_edges(&self) -> &[[usize; 3]] {
        &self.vertex_edges
    }

    #[inline]
    fn is_wall(&self, s: SpinConfig, e: usize) -> bool {
        let (a, b) = self.edge_cells[e];
        s.spin(a) != s.spin(b)
    }

    pub fn decompose(&self, s: SpinConfig) -> WallDecomposition {
        let e_count = self.edge_cells.len();
        let mut visited = vec![false; e_count];
        let mut components = Vec::new();
        for start in 0..e_count {
            if visited[start] || !self.is_wall(s, start) {
                continue;
            }
            let mut edges = Vec::new();
            let mut e = start;
            let mut at = self.edge_ends[start].1;
            loop {
                visited[e] = true;
                edges.push(e);
                let next = self.vertex_edges[at]
                    .iter()
                    .copied()
                    .find(|&f| f != e && self.is_wall(s, f));
                let Some(f) = next else { break };
                if visited[f] {
                    break;
                }
                let (u, v) = self.edge_ends[f];
                at = if u == at { v } else { u };
                e = f;
            }
            let separating = self.cell_components_without(&edges) == 2;
            components.push(WallComponent { edges, separating });
        }
        let trivial_count = components.iter().filter(|c| c.separating).count();
        WallDecomposition {
            components,
            trivial_count,
        }
    }

    /// Connected components of the cell graph after deleting `removed` edges.
    fn cell_components_without(&self, removed: &[usize]) -> usize {
        let mut adjacency = vec![0u64; self.n];
        for (e, &(a, b)) in self.edge_cells.iter().enumerate() {
            if removed.contains(&e) {
                continue;
            }
            adjacency[a] |= 1 << b;
            adjacency[b] |= 1 << a;
        }
        let mut unseen = full_mask(self.n);
        let mut count = 0;
        while unseen != 0 {
            count += 1;
            let mut frontier = unseen & unseen.wrapping_neg();
            unseen &= !frontier;
            while frontier != 0 {
                let c = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let fresh = adjacency[c] & unseen;
                unseen &= !fresh;
                frontier |= fresh;
            }
        }
        count
    }

    /// Number of disc-bounding wall components.
    pub fn trivial_count(&self, s: SpinConfig) -> usize {
        self.decompose(s).trivial_count
    }

    #[doc(hidden)]
    pub fn dart_edge(&self) -> &[usize] {
        &self.dart_edge
    }
}

pub fn domain_walls(t: &Tiling, s: SpinConfig) -> WallDecomposition {
    WallTracer::new(t).decompose(s)
}

/// `n(s)`: the number of trivial (disc-bounding) wall loops.
pub fn trivial_loop_count(t: &Tiling, s: SpinConfig) -> usize {
    domain_walls(t, s).trivial_count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::{generate_brick, generate_hex7, named_tiling};

    fn arc_by_walk(p: u8) -> bool {
        // Independent check: count maximal runs of equal bits around the circle.
        let bits: Vec<bool> = (0..6).map(|k| (p >> k) & 1 == 1).collect();
        let runs = (0..6).filter(|&k| bits[k] != bits[(k + 5) % 6]).count();
        bits.iter().any(|&b| b) && bits.iter().any(|&b| !b) && runs == 2
    }

    #[test]
    fn pattern_table_counts() {
        let arcs = (0..64u8).filter(|&p| PATTERN_KIND[p as usize] == PatternKind::Arc).count();
        let equal = (0..64)
            .filter(|&p| matches!(PATTERN_KIND[p], PatternKind::AllPlus | PatternKind::AllMinus))
            .count();
        assert_eq!(arcs, 30);
        assert_eq!(equal, 2);
        for p in 0..64u8 {
            assert_eq!(PATTERN_KIND[p as usize] == PatternKind::Arc, arc_by_walk(p), "{p:06b}");
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_pattern(0b000111, true), PairClass::TypeG);
        assert_eq!(classify_pattern(0b111000, false), PairClass::TypeG);
        assert_eq!(classify_pattern(0b111111, true), PairClass::TypeH);
        assert_eq!(classify_pattern(0b111111, false), PairClass::Neither);
        assert_eq!(classify_pattern(0b000000, false), PairClass::TypeH);
        assert_eq!(classify_pattern(0b101010, true), PairClass::Neither);
        assert_eq!(classify_pattern(0b101010, false), PairClass::Neither);
    }

    #[test]
    fn flip_basics() {
        let t = generate_hex7();
        let s = SpinConfig(0);
        assert_eq!(flip(&t, s, 0).unwrap(), SpinConfig(1));
        assert!(matches!(flip(&t, s, 7), Err(Error::CellOutOfRange { .. })));
        let all = (0..7).fold(s, |acc, c| acc.flipped(c));
        assert_eq!(all, s.global_flip(7));
        assert_eq!(all, SpinConfig::all_plus(7));
    }

    #[test]
    fn hex7_single_minus_pattern() {
        let t = generate_hex7();
        let s = SpinConfig::all_plus(7).flipped(0);
        let p = neighbor_pattern(&t, s, 1).unwrap();
        assert_eq!(p.count_zeros() - 2, 1);
        // Cell 1's neighbors are 1 + (1,3,2,6,4,5): cell 0 sits at offset 6, slot 3.
        assert_eq!(p, 0b111111 & !(1 << 3));
    }

    #[test]
    fn single_minus_cell_is_one_trivial_loop() {
        for t in [generate_hex7(), named_tiling("hex12a").unwrap()] {
            let s = SpinConfig::all_plus(t.n()).flipped(2);
            let w = domain_walls(&t, s);
            assert_eq!(w.components.len(), 1);
            assert_eq!(w.components[0].edges.len(), 6);
            assert!(w.components[0].separating);
            assert_eq!(w.trivial_count, 1);
            assert_eq!(trivial_loop_count(&t, SpinConfig::all_plus(t.n())), 0);
            assert_eq!(trivial_loop_count(&t, SpinConfig::all_minus()), 0);
        }
    }

    #[test]
    fn alternating_columns_have_no_moves() {
        let t = generate_brick(4, 3, 0).unwrap();
        // Cell id is i * 3 + j; columns 0 and 2 are +.
        let s = SpinConfig((0..12).filter(|c| (c / 3) % 2 == 0).fold(0, |acc, c| acc | 1 << c));
        let w = domain_walls(&t, s);
        assert!(!w.components.is_empty());
        assert!(w.components.iter().all(|c| !c.separating));
        assert_eq!(w.trivial_count, 0);
        for c in 0..12 {
            assert_eq!(classify_pair(&t, s, c).unwrap(), PairClass::Neither);
        }
    }

    #[test]
    fn wall_vertices_have_even_degree() {
        let t = named_tiling("hex9").unwrap();
        let tracer = WallTracer::new(&t);
        for bits in 0..(1u64 << 9) {
            let s = SpinConfig(bits);
            let w = tracer.decompose(s);
            let mut degree = vec![0; tracer.vertex_edges().len()];
            let mut wall_edges = 0;
            for comp in &w.components {
                for &e in &comp.edges {
                    let (u, v) = tracer.edge_ends()[e];
                    degree[u] += 1;
                    degree[v] += 1;
                    wall_edges += 1;
                }
            }
            assert!(degree.iter().all(|&d| d == 0 || d == 2));
            let expected = tracer.edges().iter().filter(|&&(a, b)| s.spin(a) != s.spin(b)).count();
            assert_eq!(wall_edges, expected);
        }
    }
}
