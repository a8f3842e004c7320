//! Traveling waves `u'' + c u' = DW(u)` for vector gradient systems, computed by minimizing
//! the weighted energy `J(c, u) = int e^{c x} (|u'|^2 / 2 + W(u)) dx` over profiles pinned to
//! the zero set of `W` at `x = 0`, and locating the speed where the minimum energy vanishes.
//!
//! Modules, bottom-up:
//! - [`potential`]: potentials, derivatives, derived constants, zero-set projection.
//! - [`profile`]: grids, discrete profiles, derivatives, translation, CSV I/O.
//! - [`functional`]: discrete energy, its gradient, the penalty and the a-priori bounds.
//! - [`minimize`]: preconditioned projected gradient descent for `gamma(c)`.
//! - [`speed`]: bisection for the root speed.
//! - [`verify`]: residual checks and an independent shooting cross-check.

// Negated float comparisons are used so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod constrained;
pub mod error;
pub mod functional;
pub mod minimize;
pub mod numeric;
pub mod potential;
pub mod profile;
pub mod speed;
pub mod verify;

pub use error::{Result, WaveError};
pub use functional::{compute_bounds, eval_j, eval_penalty, grad_j, BoundsReport, FunctionalParams, WeightNormalization};
pub use minimize::{gamma_curve, minimize_profile, GammaResult, MinimizeOptions};
pub use potential::{
    compute_constants, eval_potential, find_equilibria, project_to_gamma, BoundingBox, BuiltinPotential, Monomial, PotentialConstants,
    PotentialModel, PotentialSpec,
};
pub use profile::{
    default_extent, derivative, initial_profile, read_profile_csv, translate_to_gamma, write_profile_csv, Grid, Profile,
    SpacingPolicy,
};
pub use speed::{find_speed, find_speed_with, gamma_zero_tol, wave_at_speed, BracketStep, SpeedOptions, SpeedResult};
pub use verify::{
    el_residual, first_integral_residual, fit_decay_rate, halfline_identities, jump_identity_gap, left_tail_report,
    shooting_check, verify_all, Check, VerifyOptions, VerifyReport,
};
