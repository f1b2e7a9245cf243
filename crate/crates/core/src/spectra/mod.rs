//! Window spectra, restriction spectra, norming constants, spectral measures,
//! and growth estimators.

mod eigen;
mod growth;
mod measure;

pub use eigen::{
    eigen_tridiagonal, eigen_tridiagonal_with_vectors, sturm_count, sturm_count_matrix,
    tridiagonal_eigen, window_matrix, SpectrumResult,
};
pub use growth::{
    convergence_exponent, discreteness_probe, genus, Discreteness, DiscretenessReport,
    ExponentEstimate, GenusEstimate, SequenceKind, Side, MIN_POINTS, RATIO_BAND, RATIO_CUTOFF,
};
pub(crate) use growth::linear_fit;
pub use measure::{
    format_17, measure_from_spectrum, norming_constants, restriction_spectra, spectral_measure,
    strictly_interlaced, Atom, RestrictionSpectra, SpectralMeasure, LEFT_DIRICHLET,
};
