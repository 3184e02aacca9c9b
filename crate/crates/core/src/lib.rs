//! Implicit finite-difference solver and verification suite for a singular
//! entropy-balance phase-field system in one space dimension.
//!
//! The system couples an order parameter `chi` (Allen-Cahn-type equation
//! with homogeneous Neumann data) to an absolute temperature `theta` whose
//! diffusion acts through the logarithm and whose entropy source may be
//! singular at `theta = 0`. The solver discretizes the regularized system:
//! the logarithm is replaced by its Yosida approximation and the singular
//! source part by a smoothed truncation, both with parameter `eps`.
//!
//! Everything the analysis guarantees at the continuous level — the phase
//! window `chi in [chi_low, chi_high]`, emergent positivity and boundedness
//! of the temperature, uniform energy bounds, Lipschitz stability for
//! Lipschitz sources — is monitored or tested as an executable check rather
//! than assumed.

pub mod coeff;
pub mod diagnostics;
pub mod grid;
pub mod model;
pub mod monotone;
pub mod oracle;
pub mod stepper;
pub mod verify;
pub mod quad;

pub use coeff::{CoeffField, DomainBox};
pub use grid::{Field, Grid1D};
pub use model::{
    BoundaryValue, InitialField, Potentials, ProblemSpec, SourceKind, SourceSpec, ValidationReport,
};
pub use monotone::{BaseBeta, MollifiedBeta, MonotoneError, RegularizedLog};
