//! Cross-checks of one tiling: structure, pair census, exact kernel, flip
//! symmetry and, for small tilings, agreement with the dense matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigen::dense::dense_reference;
use crate::error::{Error, Result};
use crate::isotopy::{enumerate_classes, verify_kernel};
use crate::operator::{
    apply_heps, dense_matrix, flip_commutation_defect, pair_census, Hamiltonian, LevelParams,
    PairCensus, TYPEG_CONVENTION,
};
use crate::tiling::{validate, Tiling, ValidationReport};

pub const KERNEL_TOL: f64 = 1e-10;
pub const MATVEC_TOL: f64 = 1e-12;
pub const FLIP_TOL: f64 = 1e-12;
/// Eigenvalues of the dense `H₀` at most this large count as kernel.
pub const DENSE_ZERO_TOL: f64 = 1e-8;
/// Largest cell count for the dense comparison.
pub const DENSE_VERIFY_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub dense: bool,
    /// Random vectors per matvec / symmetry comparison.
    pub vectors: usize,
    pub epsilons: Vec<f64>,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dense: false,
            vectors: 20,
            epsilons: vec![0.0, 0.1, 0.5],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DenseCheck {
    /// `(ε, max |H_ε x - M_ε x|)` over the random vectors.
    pub matvec_defect: Vec<(f64, f64)>,
    pub kernel_dimension: usize,
    pub lowest: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub tiling: String,
    pub n: usize,
    pub level: LevelParams,
    pub typeg_convention: &'static str,
    pub seed: u64,
    pub kernel_tol: f64,
    pub matvec_tol: f64,
    pub flip_tol: f64,
    pub validation: ValidationReport,
    pub census: PairCensus,
    pub census_matches: bool,
    pub classes: usize,
    pub lonely: usize,
    pub kernel_max_residual: f64,
    pub kernel_orthogonal: bool,
    /// `(ε, max |F H_ε x - H_ε F x|)`.
    pub flip_defect: Vec<(f64, f64)>,
    pub dense: Option<DenseCheck>,
    pub passed: bool,
}

fn random_vectors(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

pub fn verify(t: &Tiling, level: &LevelParams, opts: &VerifyOptions) -> Result<VerifyReport> {
    let n = t.n();
    if opts.dense && n > DENSE_VERIFY_CAP {
        return Err(Error::TooLarge {
            n,
            cap: DENSE_VERIFY_CAP,
            bytes: 8u128 << (2 * n),
        });
    }
    let validation = validate(t);
    let census = pair_census(t)?;
    let census_matches = census.predicted == Some(census.ordered_total());
    let part = enumerate_classes(t)?;
    let kernel = verify_kernel(t, &part, level)?;

    let dim = 1usize << n;
    let xs = random_vectors(opts.seed, opts.vectors, dim);
    let base = Hamiltonian::new(t, *level, 0.0)?;
    let flip_defect: Vec<(f64, f64)> = opts
        .epsilons
        .iter()
        .map(|&eps| {
            let h = base.with_epsilon(eps);
            let worst = xs
                .iter()
                .map(|x| flip_commutation_defect(&h, x))
                .fold(0.0, f64::max);
            (eps, worst)
        })
        .collect();

    let dense = if opts.dense {
        let mut matvec_defect = Vec::new();
        for &eps in &opts.epsilons {
            let m = dense_matrix(t, level, eps)?;
            let mut worst = 0.0f64;
            for x in &xs {
                let y = apply_heps(t, level, eps, x)?;
                let z = m.matvec(x);
                worst = y.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
            }
            matvec_defect.push((eps, worst));
        }
        let values = dense_reference(&dense_matrix(t, level, 0.0)?, false)?.values;
        let kernel_dimension = values.iter().filter(|v| v.abs() <= DENSE_ZERO_TOL).count();
        let passed = kernel_dimension == part.class_count()
            && matvec_defect.iter().all(|&(_, d)| d <= MATVEC_TOL);
        Some(DenseCheck {
            matvec_defect,
            kernel_dimension,
            lowest: values.into_iter().take(part.class_count() + 5).collect(),
            passed,
        })
    } else {
        None
    };

    let passed = validation.all_passed()
        && census_matches
        && kernel.max_residual <= KERNEL_TOL
        && kernel.orthogonal
        && flip_defect.iter().all(|&(_, d)| d <= FLIP_TOL)
        && dense.as_ref().is_none_or(|d| d.passed);
    Ok(VerifyReport {
        tiling: t.name().to_string(),
        n,
        level: *level,
        typeg_convention: TYPEG_CONVENTION,
        seed: opts.seed,
        kernel_tol: KERNEL_TOL,
        matvec_tol: MATVEC_TOL,
        flip_tol: FLIP_TOL,
        validation,
        census,
        census_matches,
        classes: part.class_count(),
        lonely: part.lonely_count(),
        kernel_max_residual: kernel.max_residual,
        kernel_orthogonal: kernel.orthogonal,
        flip_defect,
        dense,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::generate_hex7;

    #[test]
    fn hex7_dense_passes() {
        let t = generate_hex7();
        let opts = VerifyOptions {
            dense: true,
            vectors: 3,
            ..Default::default()
        };
        let r = verify(&t, &LevelParams::new(3).unwrap(), &opts).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.dense.unwrap().kernel_dimension, 5);
        assert_eq!(r.census.ordered_total(), 434);
    }

    #[test]
    fn dense_refused_above_cap() {
        let t = crate::tiling::named_tiling("hex15a").unwrap();
        let opts = VerifyOptions {
            dense: true,
            ..Default::default()
        };
        let err = verify(&t, &LevelParams::new(3).unwrap(), &opts).unwrap_err();
        assert!(matches!(err, Error::TooLarge { cap: 12, .. }));
    }
}
