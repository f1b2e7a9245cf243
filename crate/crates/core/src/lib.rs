//! Spectral theory of Jacobi operators at desk scale: fundamental systems,
//! singular Weyl functions, spectral measures and transforms, Krein products,
//! inverse problems, and de Branges spaces on truncated lattices.

pub mod debranges;
pub mod error;
pub mod inverse;
pub mod io;
pub mod krein;
pub mod lattice;
pub mod poly;
pub mod quad;
pub mod spectra;
pub mod transform;
pub mod verify;
pub mod weyl;

pub use error::{Error, Result};
