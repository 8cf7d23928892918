//! Complex special functions: gamma, the Stirling-normalised gamma ratio
//! `Λ(w, η)`, Bernoulli polynomials, low-order polylogarithms and the
//! double-sine type contour integrals `F`, `G` with their corrected
//! versions `F*`, `G*`.

pub mod bernoulli;
pub mod conifold;
pub mod gamma;
pub mod lambda;
pub mod polylog;

pub use bernoulli::{bernoulli_number, bernoulli_poly};
pub use conifold::{
    conifold_f, conifold_g, ln_continued, ln_starred, q_factors, starred_f, starred_g, ConifoldKind, QuadOptions,
    StarredParams,
};
pub use gamma::{gamma, ln_gamma};
pub use lambda::{lambda_fn, lambda_reflection_residual, ln_lambda, stirling_tail};
pub use polylog::polylog;
