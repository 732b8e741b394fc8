//! Disorder-averaged entanglement entropy of one-dimensional (and small
//! two-dimensional) free-fermion lattice systems.
//!
//! A realization is an i.i.d. potential `V` on a box `[-N, N]^d`; the
//! one-body Hamiltonian is `H = -Δ + V` with open boundaries, and the ground
//! state below a Fermi energy `E` is described by the Fermi projection `P`.
//! The entropy of a block `Λ` is `Tr h(P_Λ)`.
//!
//! ```
//! use eelab::prelude::*;
//!
//! let geometry = BoxGeometry::line(64, 8).unwrap();
//! let config = EnsembleConfig::new(geometry, DensityModel::exponential(1.0), 1.0, 16, 42);
//! let stats = run_ensemble(&config, Estimator::BlockEntropy { m: 8 }).unwrap();
//! assert!(stats.mean > 0.0);
//! ```

pub mod cli;
pub mod densities;
pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod lattice;
pub mod matrix;
pub mod resolvent;
pub mod spectral;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::densities::{f_of_t, hcr_bound, DensityModel};
    pub use crate::ensemble::{
        run_ensemble, run_estimators, EnsembleConfig, EnsembleStats, Estimator,
    };
    pub use crate::entropy::{block_entropy, cut_entropy, Side};
    pub use crate::error::{Error, Result};
    pub use crate::lattice::{build_hamiltonian, sample_potential, BoxGeometry, PotentialField};
    pub use crate::resolvent::{greens_column, SpectralParameter};
    pub use crate::spectral::{
        eig_sym, fermi_projection, fermi_projection_direct, FermiProjection,
    };
}
