//! ε-sweeps of the lowest spectrum, gap and lonely-overlap analysis, and the
//! published ground-state table.

use std::io::Write;

use serde::Serialize;

use crate::eigen::{multiplets, smallest_eigs_with_hints, EigenPair, SolverOptions, Spectrum};
use crate::error::{Error, Result};
use crate::isotopy::enumerate_classes;
use crate::operator::{FlipSector, Hamiltonian, LevelParams, LinearOperator, Parity, TYPEG_CONVENTION};
use crate::spin::SpinConfig;
use crate::tiling::Tiling;

/// `(name, n, dim G₀,₃, lonely)` for every named tiling.
pub const TABLE1: [(&str, usize, usize, usize); 9] = [
    ("hex7", 7, 5, 0),
    ("hex9", 9, 5, 0),
    ("hex12a", 12, 8, 2),
    ("hex12b", 12, 17, 12),
    ("hex15a", 15, 7, 0),
    ("hex15b", 15, 8, 0),
    ("hex16", 16, 24, 18),
    ("hex18a", 18, 16, 8),
    ("hex18b", 18, 21, 14),
];

pub const CSV_HEADER: &str = "epsilon,rank,eigenvalue,converged,residual";

/// Uniform grid with inclusive endpoints.
pub fn epsilon_grid(start: f64, end: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Spectrum("a sweep needs at least one grid point".into()));
    }
    if start.is_nan() || end.is_nan() || start > end || start < 0.0 {
        return Err(Error::Spectrum(format!(
            "invalid epsilon range [{start}, {end}]: need 0 <= start <= end"
        )));
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    if start == end {
        return Err(Error::Spectrum("several grid points need start < end".into()));
    }
    let h = (end - start) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if i + 1 == steps { end } else { start + h * i as f64 })
        .collect())
}

/// Default grid: 101 points on `[0, 1]` up to 15 cells, else 51 on `[0, 0.5]`.
pub fn default_grid(n: usize) -> (f64, f64, usize) {
    if n <= 15 {
        (0.0, 1.0, 101)
    } else {
        (0.0, 0.5, 51)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub spectrum: Spectrum,
    /// Solver failure at this point; the row is then all unconverged.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub tiling: String,
    pub n: usize,
    pub level: LevelParams,
    pub k: usize,
    pub points: Vec<SweepPoint>,
    pub typeg_convention: &'static str,
    pub warm_start: bool,
    pub flip_sectors: bool,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub eps_start: f64,
    pub eps_end: f64,
    pub steps: usize,
    pub solver: SolverOptions,
    /// Seed each point's restarts with the previous point's eigenvectors.
    pub warm_start: bool,
    /// Solve the two global-flip sectors separately and merge them.
    pub flip_sectors: bool,
}

impl SweepOptions {
    pub fn new(eps_start: f64, eps_end: f64, steps: usize, solver: SolverOptions) -> Self {
        Self {
            eps_start,
            eps_end,
            steps,
            solver,
            warm_start: true,
            flip_sectors: true,
        }
    }
}

fn failed_row(k: usize, seed: u64) -> Spectrum {
    Spectrum {
        pairs: vec![
            EigenPair {
                value: f64::NAN,
                converged: false,
                residual: f64::NAN,
            };
            k
        ],
        vectors: None,
        iterations: 0,
        restarts: 0,
        seed,
    }
}

/// Pairs requested from each flip sector beyond its expected share.
const SECTOR_MARGIN: usize = 1;

/// Sector eigenvectors and sector shares of the wanted pairs, carried from
/// one grid point to the next.
#[derive(Debug, Clone, Default)]
struct SectorWarmStart {
    vectors: [Vec<Vec<f64>>; 2],
    counts: Option<[usize; 2]>,
}

/// Lowest `opts.k` eigenpairs of `h` merged from both flip sectors. A sector
/// is solved again for more pairs while its highest value lies below the
/// merged k-th value, since it may then hold further pairs below it.
fn sector_eigs(h: &Hamiltonian, opts: &SolverOptions, warm: &mut SectorWarmStart) -> Result<Spectrum> {
    let k = opts.k;
    let half = h.dim() / 2;
    if k == 0 || k >= h.dim() {
        return Err(Error::Spectrum(format!("k = {k} must satisfy 0 < k < dimension {}", h.dim())));
    }
    let mut want = match warm.counts {
        Some([a, b]) => [a + SECTOR_MARGIN, b + SECTOR_MARGIN],
        None => [k / 2 + SECTOR_MARGIN, k - k / 2 + SECTOR_MARGIN],
    };
    let mut solved: [Option<Spectrum>; 2] = [None, None];
    let (mut iterations, mut restarts) = (0, 0);
    loop {
        for (i, parity) in Parity::BOTH.into_iter().enumerate() {
            if solved[i].is_some() {
                continue;
            }
            want[i] = want[i].min(half - 1);
            let mut o = opts.clone();
            o.k = want[i];
            o.keep_vectors = true;
            o.seed = opts.seed.wrapping_add(i as u64);
            let spec = smallest_eigs_with_hints(&FlipSector::new(h, parity), &o, &warm.vectors[i])?;
            iterations += spec.iterations;
            restarts += spec.restarts;
            warm.vectors[i] = spec.vectors.clone().unwrap_or_default();
            solved[i] = Some(spec);
        }
        let mut merged: Vec<(f64, usize, usize)> = Vec::new();
        for (i, spec) in solved.iter().enumerate() {
            let spec = spec.as_ref().expect("both sectors solved");
            merged.extend(spec.pairs.iter().enumerate().map(|(j, p)| (p.value, i, j)));
        }
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let kth = merged[k.min(merged.len()) - 1].0;
        let slack = opts.degeneracy_tol * kth.abs().max(1.0);
        let mut complete = true;
        for i in 0..2 {
            let spec = solved[i].as_ref().expect("both sectors solved");
            let settled = want[i] == half - 1
                || spec.converged_count() < spec.pairs.len()
                || spec.pairs.last().is_some_and(|p| p.value >= kth - slack);
            if !settled {
                want[i] += 2;
                solved[i] = None;
                complete = false;
            }
        }
        if !complete {
            continue;
        }
        merged.truncate(k);
        let mut counts = [0, 0];
        for &(_, i, _) in &merged {
            counts[i] += 1;
        }
        warm.counts = Some(counts);
        let pairs = merged
            .iter()
            .map(|&(_, i, j)| solved[i].as_ref().expect("solved").pairs[j])
            .collect();
        let vectors = opts.keep_vectors.then(|| {
            merged
                .iter()
                .map(|&(_, i, j)| FlipSector::new(h, Parity::BOTH[i]).embed(&warm.vectors[i][j]))
                .collect()
        });
        return Ok(Spectrum {
            pairs,
            vectors,
            iterations,
            restarts,
            seed: opts.seed,
        });
    }
}

/// Lowest `k` eigenvalues of `H_ε` at every grid point, rank-sorted.
pub fn sweep(t: &Tiling, level: &LevelParams, opts: &SweepOptions) -> Result<SweepResult> {
    let grid = epsilon_grid(opts.eps_start, opts.eps_end, opts.steps)?;
    let k = opts.solver.k;
    if k == 0 {
        return Err(Error::Spectrum("k must be at least 1".into()));
    }
    let base = Hamiltonian::new(t, *level, 0.0)?;
    let mut solver = opts.solver.clone();
    solver.keep_vectors = (opts.warm_start && !opts.flip_sectors) || opts.solver.keep_vectors;
    let mut hints: Vec<Vec<f64>> = Vec::new();
    let mut sectors = SectorWarmStart::default();
    let mut points = Vec::with_capacity(grid.len());
    for &epsilon in &grid {
        let h = base.with_epsilon(epsilon);
        if !opts.warm_start {
            sectors = SectorWarmStart::default();
        }
        let solved = if opts.flip_sectors {
            sector_eigs(&h, &solver, &mut sectors)
        } else {
            smallest_eigs_with_hints(&h, &solver, &hints)
        };
        let (mut spectrum, failure) = match solved {
            Ok(s) => (s, None),
            Err(e) => (failed_row(k, solver.seed), Some(e.to_string())),
        };
        while spectrum.pairs.len() < k {
            spectrum.pairs.push(EigenPair {
                value: f64::NAN,
                converged: false,
                residual: f64::NAN,
            });
        }
        if opts.warm_start && !opts.flip_sectors {
            hints = spectrum.vectors.clone().unwrap_or_default();
        }
        if !opts.solver.keep_vectors {
            spectrum.vectors = None;
        }
        points.push(SweepPoint {
            epsilon,
            spectrum,
            failure,
        });
    }
    Ok(SweepResult {
        tiling: t.name().to_string(),
        n: t.n(),
        level: *level,
        k,
        points,
        typeg_convention: TYPEG_CONVENTION,
        warm_start: opts.warm_start,
        flip_sectors: opts.flip_sectors,
        solver: opts.solver.clone(),
    })
}

impl SweepResult {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for p in &self.points {
            for (rank, pair) in p.spectrum.pairs.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    p.epsilon, rank, pair.value, pair.converged, pair.residual
                )?;
            }
        }
        Ok(())
    }

    pub fn gaps(&self) -> Vec<Result<GapReport>> {
        self.points
            .iter()
            .map(|p| {
                gap_report(&p.spectrum, self.solver.degeneracy_tol).map(|mut g| {
                    g.epsilon = Some(p.epsilon);
                    g
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub epsilon: Option<f64>,
    pub multiplet_size: usize,
    /// Lowest eigenvalue.
    pub bottom: f64,
    /// Highest eigenvalue of the ground multiplet.
    pub top: f64,
    pub gap: f64,
}

/// Ground multiplet and its distance to the next converged eigenvalue.
pub fn gap_report(spec: &Spectrum, degeneracy_tol: f64) -> Result<GapReport> {
    let values: Vec<f64> = spec
        .pairs
        .iter()
        .take_while(|p| p.converged)
        .map(|p| p.value)
        .collect();
    if values.len() < 2 {
        return Err(Error::Spectrum(format!(
            "gap needs at least 2 converged eigenvalues, got {}",
            values.len()
        )));
    }
    let size = multiplets(&values, degeneracy_tol)[0];
    if size == values.len() {
        return Err(Error::Spectrum(format!(
            "gap undefined: all {size} converged eigenvalues lie in the ground multiplet"
        )));
    }
    Ok(GapReport {
        epsilon: None,
        multiplet_size: size,
        bottom: values[0],
        top: values[size - 1],
        gap: values[size] - values[size - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LonelyOverlap {
    /// Squared norm of each eigenvector's projection onto the lonely basis states.
    pub overlaps: Vec<f64>,
}

pub fn lonely_overlap(spec: &Spectrum, lonely: &[SpinConfig]) -> Result<LonelyOverlap> {
    let vectors = spec
        .vectors
        .as_ref()
        .ok_or_else(|| Error::Spectrum("lonely overlap needs retained eigenvectors".into()))?;
    let overlaps = vectors
        .iter()
        .map(|v| {
            let total: f64 = v.iter().map(|x| x * x).sum();
            let inside: f64 = lonely.iter().map(|s| v[s.index()].powi(2)).sum();
            inside / total
        })
        .collect();
    Ok(LonelyOverlap { overlaps })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table1Row {
    pub name: String,
    pub n: usize,
    pub classes: usize,
    pub lonely: usize,
    pub non_lonely: usize,
    /// Published `(dim G₀,₃, lonely)` when the tiling is one of the named nine.
    pub expected: Option<(usize, usize)>,
    pub matches: Option<bool>,
}

/// Class count (ground-state dimension), lonely and non-lonely counts. The
/// counts do not depend on the level; it is accepted for symmetry with the
/// other reports.
pub fn table1(t: &Tiling, _level: &LevelParams) -> Result<Table1Row> {
    let part = enumerate_classes(t)?;
    let (classes, lonely) = (part.class_count(), part.lonely_count());
    let published = TABLE1.iter().find(|row| row.0 == t.name());
    let expected = published.map(|row| (row.2, row.3));
    let matches = published.map(|row| (row.1, row.2, row.3) == (t.n(), classes, lonely));
    Ok(Table1Row {
        name: t.name().to_string(),
        n: t.n(),
        classes,
        lonely,
        non_lonely: classes - lonely,
        expected,
        matches,
    })
}
