//! Staggered non-Hermitian SSH chain: Bloch spectra, exceptional points, biorthogonal
//! Zak phase, open-chain edge modes and parameter sweeps.

pub mod eigen;
pub mod lattice;
pub mod realspace;
pub mod sweep;
pub mod topology;

pub use num_complex::Complex64;
