//! Coefficient models, the difference expression, and solutions on windows.

mod model;
mod solution;

pub use model::{CoefficientModel, Domain, LatticeWindow, ModelSpec};
pub use solution::{
    apply_tau, phi_at_eigenvalue, phi_fundamental, phi_polynomials, phi_real, solve_recurrence, theta_fundamental,
    theta_polynomials, wronskian, Sequence, SiteVector, SolutionSample,
};
