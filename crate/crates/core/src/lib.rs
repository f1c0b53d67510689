//! Exact diagonalization of loop-gas Hamiltonians on hexagonal tilings of the
//! torus.
//!
//! * [`tiling`]: rotation-system tilings, the named registry, JSON files.
//! * [`spin`]: configurations, type-g / type-h classification, domain walls.
//! * [`isotopy`]: isotopy classes, lonely configurations, exact ground states.
//! * [`operator`]: matrix-free `H₀`, `V = Σ σₓ`, `H_ε`, and a dense oracle.
//! * [`eigen`]: restarted Lanczos and a dense reference eigensolver.
//! * [`sweep`]: ε-sweeps, gap and lonely-overlap analysis, report output.
//! * [`verify`]: per-tiling cross-checks against independent oracles.

pub mod eigen;
pub mod error;
pub mod isotopy;
pub mod operator;
pub mod spin;
pub mod sweep;
pub mod tiling;
pub mod verify;

pub use error::{Error, Result};
pub use isotopy::{enumerate_classes, ClassPartition, GroundVector};
pub use operator::{Hamiltonian, LevelParams, LinearOperator};
pub use spin::{PairClass, SpinConfig};
pub use tiling::{named_tiling, Tiling};
