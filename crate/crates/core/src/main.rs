use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use loopgas::eigen::{multiplets, smallest_eigs, SolverOptions, Spectrum};
use loopgas::isotopy::{enumerate_classes, ground_vectors, verify_kernel};
use loopgas::operator::{Hamiltonian, LevelParams, TYPEG_CONVENTION};
use loopgas::sweep::{gap_report, lonely_overlap, sweep, table1, GapReport, SweepOptions, TABLE1};
use loopgas::tiling::{generate_brick, load_tiling, named_tiling, save_tiling, Tiling};
use loopgas::verify::{verify, VerifyOptions};
use loopgas::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Loop-gas Hamiltonians on hexagonal torus tilings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tiling and write it as JSON
    Tile {
        /// Registry name (hex7, hex9, hex12a, ...)
        #[arg(long, conflicts_with = "brick", required_unless_present = "brick")]
        name: Option<String>,
        /// Brick parameters `p,q,twist`
        #[arg(long, value_parser = parse_brick)]
        brick: Option<(usize, usize, usize)>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Isotopy classes and lonely configurations
    Classes {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare class and lonely counts with the published table
    Table1 {
        /// Every named tiling
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 3)]
        level: u32,
        /// Single tiling instead of --all
        #[arg(long)]
        tiling: Option<String>,
    },
    /// Exact ground-state vectors and their H₀ residuals
    Groundstate {
        #[command(flatten)]
        target: Target,
    },
    /// Lowest eigenvalues of H_ε at one ε
    Spectrum {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Report lonely-span overlaps of the eigenvectors
        #[arg(long)]
        vectors: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Lowest eigenvalues over a uniform ε grid, as CSV
    Sweep {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        eps_start: Option<f64>,
        #[arg(long)]
        eps_end: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Solve every point from a fresh start
        #[arg(long)]
        cold: bool,
        /// Diagonalize in the full space instead of the two spin-flip sectors
        #[arg(long)]
        full_space: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Cross-check the operator against independent oracles
    Verify {
        #[command(flatten)]
        target: Target,
        /// Also compare with the dense matrix (at most 12 cells)
        #[arg(long)]
        dense: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Target {
    /// Tiling JSON file, or a registry name
    #[arg(long)]
    tiling: String,
    #[arg(long, default_value_t = 3)]
    level: u32,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Total operator products (default: derived from k)
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn options(&self, k: usize) -> SolverOptions {
        let mut o = SolverOptions::new(k).with_seed(self.seed).with_tol(self.tol);
        if let Some(m) = self.max_iter {
            o.max_iter = m;
        }
        o
    }
}

fn parse_brick(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [p, q, twist] = parts[..] else {
        return Err(format!("expected p,q,twist, got `{s}`"));
    };
    let num = |x: &str| x.parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(p)?, num(q)?, num(twist)?))
}

impl Target {
    fn load(&self) -> Result<(Tiling, LevelParams)> {
        let level = LevelParams::new(self.level)?;
        let path = Path::new(&self.tiling);
        let t = if path.exists() {
            load_tiling(path)?
        } else {
            named_tiling(&self.tiling)?
        };
        Ok((t, level))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_json(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)
                .and_then(|_| w.flush())
                .map_err(|source| Error::Io {
                    path: path.to_path_buf(),
                    source,
                })
        }
        None => {
            let text = serde_json::to_string_pretty(value)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

#[derive(Serialize)]
struct ClassesReport {
    name: String,
    n: usize,
    level: u32,
    classes: usize,
    lonely: usize,
    class_sizes: Vec<usize>,
    table1_row: Option<(usize, usize)>,
}

#[derive(Serialize)]
struct ClassResidual {
    id: usize,
    size: usize,
    representative: u64,
    lonely: bool,
    normalization: f64,
    residual: f64,
}

#[derive(Serialize)]
struct GroundstateReport {
    tiling: String,
    n: usize,
    level: LevelParams,
    typeg_convention: &'static str,
    classes: Vec<ClassResidual>,
    max_residual: f64,
    orthogonal: bool,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    tiling: String,
    n: usize,
    level: LevelParams,
    epsilon: f64,
    typeg_convention: &'static str,
    solver: &'a SolverOptions,
    spectrum: &'a Spectrum,
    multiplets: Vec<usize>,
    gap: Option<GapReport>,
    lonely_overlaps: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct SweepSummary {
    tiling: String,
    n: usize,
    level: LevelParams,
    typeg_convention: &'static str,
    solver: SolverOptions,
    warm_start: bool,
    flip_sectors: bool,
    seconds: f64,
    csv: PathBuf,
    points: usize,
    failures: Vec<(f64, String)>,
    unconverged: usize,
    gaps: Vec<Option<GapReport>>,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Tile { name, brick, out } => {
            let t = match (name, brick) {
                (Some(name), _) => named_tiling(&name)?,
                (None, Some((p, q, twist))) => generate_brick(p, q, twist)?,
                (None, None) => unreachable!("clap requires one of --name / --brick"),
            };
            save_tiling(&t, &out)?;
            let report = t.validate();
            println!(
                "{}: {} cells, {} edges, {} vertices -> {}",
                t.name(),
                t.n(),
                report.edge_count,
                report.vertex_count,
                out.display()
            );
        }
        Command::Classes { target, out } => {
            let (t, level) = target.load()?;
            let part = enumerate_classes(&t)?;
            let report = ClassesReport {
                name: t.name().to_string(),
                n: t.n(),
                level: level.level,
                classes: part.class_count(),
                lonely: part.lonely_count(),
                class_sizes: part.sizes(),
                table1_row: TABLE1
                    .iter()
                    .find(|r| r.0 == t.name())
                    .map(|r| (r.2, r.3)),
            };
            emit_json(&report, out.as_deref())?;
        }
        Command::Table1 { all, level, tiling } => {
            let level = LevelParams::new(level)?;
            let names: Vec<String> = match (all, tiling) {
                (_, Some(name)) => vec![name],
                (true, None) => TABLE1.iter().map(|r| r.0.to_string()).collect(),
                (false, None) => {
                    return Err(Error::Spectrum("pass --all or --tiling <name>".into()))
                }
            };
            println!("{:<8} {:>3} {:>8} {:>7} {:>11}  published  status", "tiling", "n", "classes", "lonely", "non-lonely");
            let mut ok = true;
            for name in names {
                let row = table1(&named_tiling(&name)?, &level)?;
                let status = match row.matches {
                    Some(true) => "ok",
                    Some(false) => "MISMATCH",
                    None => "-",
                };
                ok &= row.matches != Some(false);
                let published = row
                    .expected
                    .map_or("-".to_string(), |(c, l)| format!("({c}, {l})"));
                println!(
                    "{:<8} {:>3} {:>8} {:>7} {:>11}  {:>9}  {}",
                    row.name, row.n, row.classes, row.lonely, row.non_lonely, published, status
                );
            }
            return Ok(ok);
        }
        Command::Groundstate { target } => {
            let (t, level) = target.load()?;
            let part = enumerate_classes(&t)?;
            let vectors = ground_vectors(&t, &part, &level)?;
            let check = verify_kernel(&t, &part, &level)?;
            let classes = vectors
                .iter()
                .zip(&check.residuals)
                .map(|(v, &residual)| {
                    let info = &part.classes()[v.class_id];
                    ClassResidual {
                        id: v.class_id,
                        size: info.size,
                        representative: info.representative.0,
                        lonely: info.lonely,
                        normalization: v.normalization,
                        residual,
                    }
                })
                .collect();
            emit_json(
                &GroundstateReport {
                    tiling: t.name().to_string(),
                    n: t.n(),
                    level,
                    typeg_convention: TYPEG_CONVENTION,
                    classes,
                    max_residual: check.max_residual,
                    orthogonal: check.orthogonal,
                },
                None,
            )?;
        }
        Command::Spectrum {
            target,
            eps,
            k,
            vectors,
            solver,
        } => {
            let (t, level) = target.load()?;
            let opts = solver.options(k).with_vectors(vectors);
            let h = Hamiltonian::new(&t, level, eps)?;
            let mut spec = smallest_eigs(&h, &opts)?;
            let lonely_overlaps = if vectors {
                let part = enumerate_classes(&t)?;
                let overlaps = lonely_overlap(&spec, &part.lonely_configs())?.overlaps;
                Some(overlaps)
            } else {
                None
            };
            spec.vectors = None;
            let values = spec.values();
            emit_json(
                &SpectrumReport {
                    tiling: t.name().to_string(),
                    n: t.n(),
                    level,
                    epsilon: eps,
                    typeg_convention: TYPEG_CONVENTION,
                    solver: &opts,
                    multiplets: multiplets(&values, opts.degeneracy_tol),
                    gap: gap_report(&spec, opts.degeneracy_tol).ok(),
                    spectrum: &spec,
                    lonely_overlaps,
                },
                None,
            )?;
        }
        Command::Sweep {
            target,
            eps_start,
            eps_end,
            steps,
            k,
            cold,
            full_space,
            out,
            solver,
        } => {
            let (t, level) = target.load()?;
            let (a, b, m) = loopgas::sweep::default_grid(t.n());
            let mut opts = SweepOptions::new(
                eps_start.unwrap_or(a),
                eps_end.unwrap_or(b),
                steps.unwrap_or(m),
                solver.options(k),
            );
            opts.warm_start = !cold;
            opts.flip_sectors = !full_space;
            let start = std::time::Instant::now();
            let result = sweep(&t, &level, &opts)?;
            let seconds = start.elapsed().as_secs_f64();
            let mut w = create(&out)?;
            result
                .write_csv(&mut w)
                .and_then(|_| w.flush())
                .map_err(|source| Error::Io {
                    path: out.clone(),
                    source,
                })?;
            let summary = SweepSummary {
                tiling: result.tiling.clone(),
                n: result.n,
                level: result.level,
                typeg_convention: result.typeg_convention,
                solver: result.solver.clone(),
                warm_start: result.warm_start,
                flip_sectors: result.flip_sectors,
                seconds,
                csv: out,
                points: result.points.len(),
                failures: result
                    .points
                    .iter()
                    .filter_map(|p| p.failure.clone().map(|f| (p.epsilon, f)))
                    .collect(),
                unconverged: result
                    .points
                    .iter()
                    .map(|p| p.spectrum.pairs.iter().filter(|e| !e.converged).count())
                    .sum(),
                gaps: result.gaps().into_iter().map(|g| g.ok()).collect(),
            };
            emit_json(&summary, None)?;
        }
        Command::Verify {
            target,
            dense,
            seed,
        } => {
            let (t, level) = target.load()?;
            let opts = VerifyOptions {
                dense,
                seed,
                ..Default::default()
            };
            let report = verify(&t, &level, &opts)?;
            emit_json(&report, None)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
