//! q-deformed logarithm and exponential, q-numbers with their two arithmetics,
//! q-primes, q-generalized zeta functions and the extrapolation of the
//! divergence point `s_div(q)`.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`). The aliases below
//! fix the common `f64` instantiations.

pub mod acceptance;
pub mod error;
pub mod extrapolation;
pub mod primes;
pub mod qalgebra;
pub mod qfunctions;
pub mod scalar;
pub mod zeta;

pub use error::{QError, Result};
pub use extrapolation::{
    compute_grid, find_s_div, fit_parabola, pipeline_primes_first, pipeline_zdiv_first,
    run_pipeline, search_exponent, search_exponent_or_min, DivergenceGrid, DivergenceQuery,
    ExponentMethod, ExponentSearchResult, ParabolaFit, PipelineOrder, PipelineReport,
};
pub use primes::{factorize, first_n_primes, is_prime, prime_count_estimate, PrimeTable};
pub use qalgebra::{
    q_add_sub, q_add_sup, q_div_sup, q_mul_sub, q_mul_sup, q_pow_sup, q_sub_sup, solve_crossing_q,
    CrossingFamily, CrossingWindow, FoldOrder, SubValue,
};
pub use qfunctions::{q_exp, q_log, QNumber, QParam};
pub use scalar::Scalar;
pub use zeta::{evaluate, zeta_q, ZetaEvaluation, ZetaVariant};

pub type QParam64 = QParam<f64>;
pub type QNumber64 = QNumber<f64>;
pub type ZetaEvaluation64 = ZetaEvaluation<f64>;
pub type ParabolaFit64 = ParabolaFit<f64>;
pub type PipelineReport64 = PipelineReport<f64>;

pub type QParam32 = QParam<f32>;
pub type QNumber32 = QNumber<f32>;
pub type ZetaEvaluation32 = ZetaEvaluation<f32>;
