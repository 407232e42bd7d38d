//! Numerical workbench for gap solitons in d-dimensional coupled-mode
//! systems: dispersion/band analysis of the Hermitian symbol, reduction to
//! an effective NLS envelope at a spectral gap edge, construction of the
//! slowly-varying ansatz, a Petviashvili fixed-point solver for stationary
//! states, and a convergence study comparing the two.

pub use num_complex;

pub mod bands;
pub mod field;
pub mod linalg;
pub mod model;
pub mod nls;
pub mod solver;
pub mod sweep;

pub use bands::{
    band_hessian, default_box_half_width, default_points_per_axis, eigen_decomposition, find_gap,
    locate_edge, sample_bands, symbol, BandError, BandStructure, EdgeSide, GapCandidate,
    SpectralEdge,
};
pub use field::{make_grid, ComplexField, Grid, Transformer};
pub use linalg::{hermitian_eigen, CMat, HermitianEigen, LinalgError};
pub use model::{CmeParameters, CubicTerm, ModelError};
pub use nls::{
    canonicalize, decay_moments, effective_coefficients, evaluate_envelope,
    integral_identity_admissible, solve_ground_state_radial, CanonicalScaling, EffectiveNls,
    NlsError, RadialProfile,
};
pub use solver::{
    build_ansatz, petviashvili_solve, stationary_residual, AnsatzReport, SolveDiagnostics,
    SolveError, SolveOptions,
};
pub use sweep::{
    fit_slope, run_convergence_study, ConvergenceReport, EpsFailure, EpsRecord, SlopeFit,
    SweepConfig, SweepError, SweepMetadata,
};
