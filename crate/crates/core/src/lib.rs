//! Exact diagonalization and Krylov dynamics for SU(N)
//! Su-Schrieffer-Heeger-Hubbard chains.
//!
//! The crate builds fixed-particle-number Fock bases ([`basis`]), assembles the
//! sparse Hamiltonian ([`hamiltonian`]), propagates quantum walks
//! ([`dynamics`], [`walk`]), evaluates chiral polarizations ([`observables`]),
//! computes many-body Berry phases under twisted boundaries ([`berry`]),
//! builds the strong-coupling N-ion chains ([`effective`]) and averages over
//! disorder ([`ensemble`]).
//!
//! ```
//! use sshh::{build_hamiltonian, FlavorOccupancy, FockBasis, LatticeSpec};
//!
//! let spec = LatticeSpec::new(8, 3).with_interaction(3.0).with_dimerization(0.3);
//! let basis = FockBasis::new(&spec, &FlavorOccupancy::one_per_flavor(3))?;
//! let h = build_hamiltonian(&spec, &basis)?;
//! assert_eq!(h.dim(), 512);
//! assert!(h.is_hermitian());
//! # Ok::<(), sshh::Error>(())
//! ```

pub mod basis;
pub mod berry;
pub mod dynamics;
pub mod effective;
pub mod ensemble;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod walk;

pub use berry::{berry_phase, BandTag, BerryPhaseResult, SubsetSelector, TwistGrid};
pub use basis::{FermionOp, FlavorOccupancy, FockBasis, Particle, StateVector};
pub use dynamics::{boundary_time, evolve, propagate, Method, PropagatorConfig, WalkTrajectory};
pub use effective::{band_compare, build_effective_ssh, nion_params, BandComparison, EffectiveParams};
pub use ensemble::{sample_disorder, BerrySweep, DisorderConfig, DisorderKind, PolarizationSweep, SweepResult};
pub use error::{Error, Result};
pub use hamiltonian::{build_hamiltonian, SparseOperator};
pub use lattice::{Boundary, LatticeSpec};
pub use observables::{PolarizationSeries, UnitCellConvention};
pub use walk::{run_walk, Injection, WalkRecord, WalkSetup};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/index.md")]
    mod index {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    mod hamiltonian {}
    #[doc = include_str!("../../../book/src/walks.md")]
    mod walks {}
    #[doc = include_str!("../../../book/src/berry.md")]
    mod berry {}
    #[doc = include_str!("../../../book/src/effective.md")]
    mod effective {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
