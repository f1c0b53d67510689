//! Hexagonal celluations of the torus stored as rotation systems.
//!
//! Every cell owns six darts (edge slots) in counter-clockwise order; slot `k`
//! of cell `c` is dart `6c + k`. A fixed-point-free involution pairs each dart
//! with the dart of the adjacent cell that shares the same edge. Dual vertices
//! are the orbits of `next ∘ pairing`, where `next` advances one slot within a
//! cell; each dart belongs to the orbit of its starting corner.

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of edge slots per hexagonal cell.
pub const SLOTS: usize = 6;

/// Names understood by [`named_tiling`], in the order of the results table.
pub const NAMED_TILINGS: [&str; 9] = [
    "hex7", "hex9", "hex12a", "hex12b", "hex15a", "hex15b", "hex16", "hex18a", "hex18b",
];

/// Brick parameters `(p, q, twist)` for every named tiling except `hex7`.
///
/// Every twist equals `⌊p/2⌋ mod q`: the column wrap that closes the offset
/// columns into a rectangle, plus the extra half-step shift when `p` is odd.
/// Each entry was checked against the published class and lonely counts by
/// scanning all twists in `0..q` (see the acceptance suite).
pub const BRICK_REGISTRY: [(&str, (usize, usize, usize)); 8] = [
    ("hex9", (3, 3, 1)),
    ("hex12a", (4, 3, 2)),
    ("hex12b", (3, 4, 1)),
    ("hex15a", (5, 3, 2)),
    ("hex15b", (3, 5, 1)),
    ("hex16", (4, 4, 2)),
    ("hex18a", (3, 6, 1)),
    ("hex18b", (6, 3, 0)),
];

/// A hexagonal tiling of the torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tiling {
    name: String,
    pairing: Vec<usize>,
    neighbors: Vec<[usize; SLOTS]>,
}

impl Tiling {
    /// Builds a tiling and rejects it unless every invariant holds.
    pub fn new(name: impl Into<String>, pairing: Vec<usize>) -> Result<Self> {
        let tiling = Self::from_raw(name, pairing)?;
        let report = tiling.validate();
        if !report.all_passed() {
            return Err(Error::InvalidTiling {
                name: tiling.name,
                failures: report.failure_summary(),
            });
        }
        Ok(tiling)
    }

    /// Builds a tiling checking only that the dart table is well-formed
    /// (length `6n`, ids in range). Topological invariants are left to
    /// [`Tiling::validate`].
    pub fn from_raw(name: impl Into<String>, pairing: Vec<usize>) -> Result<Self> {
        if pairing.is_empty() || !pairing.len().is_multiple_of(SLOTS) {
            return Err(Error::TilingFormat {
                field: "pairing",
                message: format!("length {} is not a positive multiple of 6", pairing.len()),
            });
        }
        let darts = pairing.len();
        if let Some((d, &p)) = pairing.iter().enumerate().find(|(_, &p)| p >= darts) {
            return Err(Error::TilingFormat {
                field: "pairing",
                message: format!("dart {d} is paired with {p}, outside 0..{darts}"),
            });
        }
        let n = darts / SLOTS;
        let neighbors = (0..n)
            .map(|c| std::array::from_fn(|k| pairing[SLOTS * c + k] / SLOTS))
            .collect();
        Ok(Self {
            name: name.into(),
            pairing,
            neighbors,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_darts(&self) -> usize {
        self.pairing.len()
    }

    pub fn pairing(&self) -> &[usize] {
        &self.pairing
    }

    /// Dart id of slot `slot` of `cell`.
    #[inline]
    pub fn dart(cell: usize, slot: usize) -> usize {
        SLOTS * cell + slot
    }

    /// The cell across slot `slot` of `cell`.
    #[inline]
    pub fn neighbor(&self, cell: usize, slot: usize) -> usize {
        self.neighbors[cell][slot]
    }

    /// Cyclically ordered neighbor cells (one per slot, repeats allowed).
    #[inline]
    pub fn neighbors(&self, cell: usize) -> &[usize; SLOTS] {
        &self.neighbors[cell]
    }

    /// Edges as `(dart, paired dart)` with `dart < paired dart`.
    ///
    /// Only meaningful when the pairing is an involution.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.pairing
            .iter()
            .enumerate()
            .filter(|&(d, &p)| d < p)
            .map(|(d, &p)| (d, p))
            .collect()
    }

    /// Dual vertex id of every dart's starting corner, plus the vertex count.
    ///
    /// Requires an involutive pairing; orbit ids are assigned in order of the
    /// smallest dart they contain.
    pub fn dual_vertices(&self) -> (Vec<usize>, usize) {
        let darts = self.num_darts();
        let mut vertex = vec![usize::MAX; darts];
        let mut count = 0;
        for start in 0..darts {
            if vertex[start] != usize::MAX {
                continue;
            }
            let mut d = start;
            loop {
                vertex[d] = count;
                d = next_slot(self.pairing[d]);
                if d == start || vertex[d] != usize::MAX {
                    break;
                }
            }
            count += 1;
        }
        (vertex, count)
    }

    /// Runs every structural check; never panics on malformed pairings.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub fn to_file(&self) -> TilingFile {
        TilingFile {
            name: self.name.clone(),
            n: self.n(),
            slots: (0..self.n())
                .map(|c| (0..SLOTS).map(|k| Self::dart(c, k)).collect())
                .collect(),
            pairing: self.pairing.clone(),
        }
    }

    pub fn from_file(file: TilingFile) -> Result<Self> {
        if file.n == 0 {
            return Err(Error::TilingFormat {
                field: "n",
                message: "tiling must have at least one cell".into(),
            });
        }
        if file.slots.len() != file.n {
            return Err(Error::TilingFormat {
                field: "slots",
                message: format!("{} cells listed but n = {}", file.slots.len(), file.n),
            });
        }
        for (c, slots) in file.slots.iter().enumerate() {
            if slots.len() != SLOTS {
                return Err(Error::TilingFormat {
                    field: "slots",
                    message: format!("cell slot arity: cell {c} has {} slots, expected 6", slots.len()),
                });
            }
            if let Some(k) = (0..SLOTS).find(|&k| slots[k] != Self::dart(c, k)) {
                return Err(Error::TilingFormat {
                    field: "slots",
                    message: format!("slot {k} of cell {c} is dart {}, expected {}", slots[k], Self::dart(c, k)),
                });
            }
        }
        if file.pairing.len() != SLOTS * file.n {
            return Err(Error::TilingFormat {
                field: "pairing",
                message: format!("{} entries, expected {}", file.pairing.len(), SLOTS * file.n),
            });
        }
        Self::new(file.name, file.pairing)
    }
}

impl fmt::Display for Tiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} cells)", self.name, self.n())
    }
}

#[inline]
fn next_slot(dart: usize) -> usize {
    let (cell, slot) = (dart / SLOTS, dart % SLOTS);
    SLOTS * cell + (slot + 1) % SLOTS
}

/// On-disk JSON layout of a tiling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingFile {
    pub name: String,
    pub n: usize,
    pub slots: Vec<Vec<usize>>,
    pub pairing: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Involution,
    Trivalence,
    Euler,
    Connectivity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub kind: CheckKind,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    /// Every cell has six distinct edge-neighbors, none of them itself.
    pub simple_neighborhood: bool,
    pub edge_count: usize,
    pub vertex_count: usize,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, kind: CheckKind) -> &CheckResult {
        self.checks
            .iter()
            .find(|c| c.kind == kind)
            .expect("every check kind is always reported")
    }

    pub fn failure_summary(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{:?}: {}", c.kind, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

pub fn validate(t: &Tiling) -> ValidationReport {
    let n = t.n();
    let darts = t.num_darts();
    let mut checks = Vec::with_capacity(4);

    let fixed = (0..darts).find(|&d| t.pairing[d] == d);
    let broken = (0..darts).find(|&d| t.pairing[t.pairing[d]] != d);
    let involution = fixed.is_none() && broken.is_none();
    checks.push(CheckResult {
        kind: CheckKind::Involution,
        passed: involution,
        detail: match (fixed, broken) {
            (Some(d), _) => format!("dart {d} is paired with itself"),
            (None, Some(d)) => format!(
                "pairing({d}) = {}, but pairing({}) = {}",
                t.pairing[d], t.pairing[d], t.pairing[t.pairing[d]]
            ),
            (None, None) => "fixed-point-free involution".into(),
        },
    });

    let edge_count = if involution { darts / 2 } else { 0 };
    let mut vertex_count = 0;
    if involution {
        let (vertex, count) = t.dual_vertices();
        vertex_count = count;
        let mut sizes = vec![0usize; count];
        for &v in &vertex {
            sizes[v] += 1;
        }
        let bad = sizes.iter().position(|&s| s != 3);
        checks.push(CheckResult {
            kind: CheckKind::Trivalence,
            passed: bad.is_none(),
            detail: match bad {
                Some(v) => format!("dual vertex {v} has degree {}", sizes[v]),
                None => format!("{count} trivalent dual vertices"),
            },
        });
        let euler = n as i64 - edge_count as i64 + count as i64;
        checks.push(CheckResult {
            kind: CheckKind::Euler,
            passed: euler == 0,
            detail: format!("F - E + V = {n} - {edge_count} + {count} = {euler}"),
        });
    } else {
        for kind in [CheckKind::Trivalence, CheckKind::Euler] {
            checks.push(CheckResult {
                kind,
                passed: false,
                detail: "skipped: pairing is not an involution".into(),
            });
        }
    }

    let reached = connected_cells(t);
    checks.push(CheckResult {
        kind: CheckKind::Connectivity,
        passed: reached == n,
        detail: format!("{reached} of {n} cells reachable from cell 0"),
    });

    let simple_neighborhood = (0..n).all(|c| {
        let nb = t.neighbors(c);
        nb.iter().all(|&x| x != c) && (0..SLOTS).all(|a| (a + 1..SLOTS).all(|b| nb[a] != nb[b]))
    });

    ValidationReport {
        checks,
        simple_neighborhood,
        edge_count,
        vertex_count,
    }
}

fn connected_cells(t: &Tiling) -> usize {
    let n = t.n();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(c) = queue.pop_front() {
        for &x in t.neighbors(c) {
            if !seen[x] {
                seen[x] = true;
                count += 1;
                queue.push_back(x);
            }
        }
    }
    count
}

/// Brick tiling: `p` columns of `q` cells on the triangular lattice, with the
/// column index wrapping `p -> 0` under a row shift of `twist`.
///
/// Slot order of cell `(i, j)` is `(i+1, j)`, `(i+1, j-1)`, `(i, j-1)`,
/// `(i-1, j)`, `(i-1, j+1)`, `(i, j+1)`; cell id is `i * q + j`.
pub fn generate_brick(p: usize, q: usize, twist: usize) -> Result<Tiling> {
    if p < 3 || q < 3 {
        return Err(Error::BrickParams(format!(
            "p = {p}, q = {q}: both must be at least 3"
        )));
    }
    if twist >= q {
        return Err(Error::BrickParams(format!("twist {twist} not in 0..{q}")));
    }
    const OFFSETS: [(i64, i64); SLOTS] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];
    let (pi, qi, ti) = (p as i64, q as i64, twist as i64);
    let cell_at = |i: i64, j: i64| -> usize {
        let (i, j) = if i >= pi {
            (i - pi, j + ti)
        } else if i < 0 {
            (i + pi, j - ti)
        } else {
            (i, j)
        };
        (i * qi + j.rem_euclid(qi)) as usize
    };
    let n = p * q;
    let mut pairing = vec![0; SLOTS * n];
    for i in 0..pi {
        for j in 0..qi {
            let c = cell_at(i, j);
            for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
                let other = cell_at(i + di, j + dj);
                pairing[Tiling::dart(c, k)] = Tiling::dart(other, (k + 3) % SLOTS);
            }
        }
    }
    Tiling::new(format!("brick{p}x{q}t{twist}"), pairing)
}

/// Cyclic neighbor offsets of cell `i` in the 7-cell tiling.
pub const HEX7_OFFSETS: [usize; SLOTS] = [1, 3, 2, 6, 4, 5];

/// The 7-cell tiling dual to the minimal (7-vertex) torus triangulation.
pub fn generate_hex7() -> Tiling {
    let mut pairing = vec![0; SLOTS * 7];
    for c in 0..7 {
        for (k, off) in HEX7_OFFSETS.iter().enumerate() {
            pairing[Tiling::dart(c, k)] = Tiling::dart((c + off) % 7, (k + 3) % SLOTS);
        }
    }
    Tiling::new("hex7", pairing).expect("hex7 construction is valid")
}

/// Registry lookup: `hex7` or one of the brick tilings of [`BRICK_REGISTRY`].
pub fn named_tiling(name: &str) -> Result<Tiling> {
    if name == "hex7" {
        return Ok(generate_hex7());
    }
    let (p, q, twist) = BRICK_REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, params)| *params)
        .ok_or_else(|| Error::UnknownTiling(name.to_string()))?;
    Ok(generate_brick(p, q, twist)?.with_name(name))
}

pub fn save_tiling(t: &Tiling, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&t.to_file())?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_tiling(path: impl AsRef<Path>) -> Result<Tiling> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tiling(&text)
}

pub fn parse_tiling(text: &str) -> Result<Tiling> {
    let file: TilingFile = serde_json::from_str(text)?;
    Tiling::from_file(file)
}
