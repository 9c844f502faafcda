//! Simulation and attractor-dimension certificates for the delayed
//! reaction-diffusion equation
//!
//! ```text
//! u_t = u_xx - mu u + sigma u(t - tau) + f(u(t - tau)) + g(x)
//! ```
//!
//! on the real line, approximated by a large periodic box.
//!
//! Modules, roughly in dependency order:
//!
//! * [`model`]: parameters, catalogs of nonlinearities and forcings, config.
//! * [`semigroup`]: the exact damped heat step on the periodic box.
//! * [`solver`]: method-of-steps integration and segment functionals.
//! * [`estimates`]: closed-form a-priori constants and their empirical checks.
//! * [`spectrum`]: Dirichlet eigenvalues, characteristic roots, dichotomy.
//! * [`squeezing`]: projected contraction bounds and measurements.
//! * [`dimension`]: Hausdorff and fractal dimension certificates.
//! * [`export`]: CSV and binary snapshot formats.

pub mod dimension;
pub mod error;
pub mod estimates;
pub mod export;
pub mod model;
pub mod rng;
pub mod semigroup;
pub mod solver;
pub mod spectrum;
pub mod squeezing;

pub use dimension::{
    covering_bound, covering_bruteforce, eta, fractal_bound, hausdorff_bound,
    optimize_certificate, zeta, zeta_at, BallNorm, CertificateKind, DimensionCertificate,
    OptimizerOptions,
};
pub use error::{ConfigError, Error, Result};
pub use estimates::{
    absorbing_time, compute_estimates, verify_absorption, verify_energy_integral,
    verify_far_field, EstimateSet,
};
pub use model::{
    check_dissipativity, evaluate_nonlinearity, parse_config, CertificateMode, Config,
    ForcingKind, ForcingSpec, Grid, InitialHistorySpec, NonlinearityKind, NonlinearitySpec,
    ProblemParameters, RunOptions,
};
pub use rng::SeededRng;
pub use semigroup::{apply_semigroup, semigroup_decay_check, Field, HeatSemigroup};
pub use solver::{
    far_field_mass, integrate, segment_at, segment_norm, smooth_cutoff, split_fields,
    CutoffRadius, HistorySegment, Trajectory, CUTOFF_DERIVATIVE_BOUND,
};
pub use spectrum::{
    characteristic_roots, dichotomy_constant, dirichlet_eigenvalues, linear_delay_evolve,
    spectral_partition, DichotomyOptions, SpectralData,
};
pub use squeezing::{
    analytic_bounds, measure_contraction, project_p, project_q, project_r, ContractionInputs,
    ProjectionSet,
};
