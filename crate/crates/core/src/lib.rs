//! Characteristic functions of affine jump-diffusions from series expansions
//! whose coefficients are built by recursion, plus a Riccati ODE oracle and a
//! Monte Carlo oracle to check them against.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generator;
pub mod log_affine;
pub mod mc;
pub mod models;
pub mod multiindex;
pub mod riccati;
pub mod series;
pub mod special1d;

pub use error::{Error, Result};
pub use generator::{
    build_generator, growth_profile, symbol_coefficients, AffineCoeff, DomainBox, GeneratorSpec,
    GrowthProfile, ModelSpec, SymbolCoefficients,
};
pub use multiindex::{enumerate_multiindices, stirling_unsigned, MultiIndex, StirlingTable};
pub use log_affine::{cd_from_h, log_affine_eval, rho_sequence, LogAffineExponent, RhoSeries};
pub use mc::{mc_char_fn, simulate_paths, MCEstimate, SDEModel, Simulation};
pub use riccati::{char_fn_riccati, solve_riccati, RiccatiSolution};
pub use series::{
    calibrate_eta, g_sequence, h_sequence, q_series_eval, select_eta, taylor_eval, EvalOptions,
    PolyInX, SeriesEvaluation, SeriesExpansion,
};
pub use special1d::{frak_h, g_r_explicit, pi_table, Normalization, PiTable, Special1DModel};
