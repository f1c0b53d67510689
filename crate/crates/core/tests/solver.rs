use loopgas::eigen::dense::dense_reference;
use loopgas::eigen::{multiplets, smallest_eigs, smallest_eigs_with_hints, SolverOptions};
use loopgas::isotopy::enumerate_classes;
use loopgas::operator::{dense_matrix, global_flip_vector, Hamiltonian, LevelParams};
use loopgas::sweep::{gap_report, sweep, SweepOptions};
use loopgas::tiling::named_tiling;

fn level3() -> LevelParams {
    LevelParams::new(3).unwrap()
}

#[test]
fn lanczos_matches_dense_on_small_tilings() {
    for name in ["hex7", "hex9"] {
        let t = named_tiling(name).unwrap();
        for eps in [0.0, 0.1, 0.5] {
            let exact = dense_reference(&dense_matrix(&t, &level3(), eps).unwrap(), false)
                .unwrap()
                .values;
            let h = Hamiltonian::new(&t, level3(), eps).unwrap();
            let spec = smallest_eigs(&h, &SolverOptions::new(10)).unwrap();
            assert_eq!(spec.converged_count(), 10, "{name} eps={eps}");
            for (a, b) in spec.values().iter().zip(&exact) {
                assert!((a - b).abs() <= 1e-8, "{name} eps={eps}: {a} vs {b}");
            }
            assert_eq!(
                multiplets(&spec.values(), 1e-8),
                multiplets(&exact[..10], 1e-8),
                "{name} eps={eps}"
            );
        }
    }
}

#[test]
fn kernel_dimension_is_class_count() {
    // A high-symmetry operator: every restart must still find each kernel
    // direction.
    let t = named_tiling("hex7").unwrap();
    let h = Hamiltonian::new(&t, level3(), 0.0).unwrap();
    let spec = smallest_eigs(&h, &SolverOptions::new(10)).unwrap();
    let gap = gap_report(&spec, 1e-8).unwrap();
    assert_eq!(gap.multiplet_size, enumerate_classes(&t).unwrap().class_count());
    assert!(gap.bottom.abs() <= 1e-10 && gap.top.abs() <= 1e-10);
    assert!(gap.gap > 0.1);
}

#[test]
fn same_seed_same_spectrum() {
    let t = named_tiling("hex9").unwrap();
    let h = Hamiltonian::new(&t, level3(), 0.2).unwrap();
    let opts = SolverOptions::new(6).with_seed(42);
    let a = smallest_eigs(&h, &opts).unwrap();
    let b = smallest_eigs(&h, &opts).unwrap();
    assert_eq!(a.values(), b.values());
    let c = smallest_eigs(&h, &opts.clone().with_seed(7)).unwrap();
    for (x, y) in a.values().iter().zip(c.values()) {
        assert!((x - y).abs() <= 1e-9);
    }
}

#[test]
fn flipped_start_vectors_give_the_same_spectrum() {
    let t = named_tiling("hex9").unwrap();
    let h = Hamiltonian::new(&t, level3(), 0.3).unwrap();
    let opts = SolverOptions::new(8).with_vectors(true);
    let base = smallest_eigs(&h, &opts).unwrap();
    let hints: Vec<Vec<f64>> = base
        .vectors
        .as_ref()
        .unwrap()
        .iter()
        .map(|v| global_flip_vector(9, v))
        .collect();
    let flipped = smallest_eigs_with_hints(&h, &opts.clone().with_seed(3), &hints).unwrap();
    for (x, y) in base.values().iter().zip(flipped.values()) {
        assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
    }
}

#[test]
fn warm_and_cold_sweeps_agree() {
    let t = named_tiling("hex9").unwrap();
    let mut opts = SweepOptions::new(0.0, 0.4, 5, SolverOptions::new(6));
    let warm = sweep(&t, &level3(), &opts).unwrap();
    opts.warm_start = false;
    let cold = sweep(&t, &level3(), &opts).unwrap();
    assert!(warm.warm_start && !cold.warm_start);
    for (a, b) in warm.points.iter().zip(&cold.points) {
        assert_eq!(a.epsilon, b.epsilon);
        assert!(a.failure.is_none() && b.failure.is_none());
        for (x, y) in a.spectrum.values().iter().zip(b.spectrum.values()) {
            assert!((x - y).abs() <= 1e-9, "eps={}: {x} vs {y}", a.epsilon);
        }
    }
    let mut csv = Vec::new();
    warm.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 5 * 6);
}

#[test]
fn flip_sectors_reproduce_the_full_space_sweep() {
    let t = named_tiling("hex12a").unwrap();
    let mut opts = SweepOptions::new(0.0, 0.3, 4, SolverOptions::new(12));
    let merged = sweep(&t, &level3(), &opts).unwrap();
    opts.flip_sectors = false;
    let full = sweep(&t, &level3(), &opts).unwrap();
    assert!(merged.flip_sectors && !full.flip_sectors);
    for (a, b) in merged.points.iter().zip(&full.points) {
        assert_eq!(a.spectrum.converged_count(), 12);
        assert_eq!(
            multiplets(&a.spectrum.values(), 1e-8),
            multiplets(&b.spectrum.values(), 1e-8),
            "eps={}",
            a.epsilon
        );
        for (x, y) in a.spectrum.values().iter().zip(b.spectrum.values()) {
            assert!((x - y).abs() <= 1e-9, "eps={}: {x} vs {y}", a.epsilon);
        }
    }
}

#[test]
fn warm_sweeps_do_not_lose_crossing_levels() {
    // Dense enough spectra that levels cross into the wanted range between
    // grid points, including degenerate pairs.
    for name in ["hex12a", "hex12b"] {
        let t = named_tiling(name).unwrap();
        for sectors in [false, true] {
            let mut opts = SweepOptions::new(0.0, 0.5, 6, SolverOptions::new(24));
            opts.flip_sectors = sectors;
            let warm = sweep(&t, &level3(), &opts).unwrap();
            for p in &warm.points {
                // Fresh random restarts only; no hints to mislead them.
                let h = Hamiltonian::new(&t, level3(), p.epsilon).unwrap();
                let exact = smallest_eigs(&h, &SolverOptions::new(24).with_seed(11)).unwrap().values();
                assert_eq!(p.spectrum.converged_count(), 24);
                for (a, b) in p.spectrum.values().iter().zip(&exact) {
                    assert!((a - b).abs() <= 1e-8, "{name} sectors={sectors} eps={}: {a} vs {b}", p.epsilon);
                }
            }
        }
    }
}
