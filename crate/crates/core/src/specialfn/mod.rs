//! Special functions: log-Gamma, Beta and the regularized incomplete Beta,
//! plus an adaptive quadrature used as an independent cross-check.

mod beta;
mod gamma;
mod quadrature;

pub use beta::{ln_reg_inc_beta, ln_reg_inc_beta_upper, reg_inc_beta, BetaPair};
pub use gamma::log_gamma;
pub(crate) use gamma::ln_gamma;
pub use quadrature::{adaptive_integrate, quadrature_oracle, BetaIntegrand, DEFAULT_TOL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFnError {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("quadrature did not converge (estimate {estimate}, error {error:e})")]
    QuadratureNoConvergence { estimate: f64, error: f64 },
    #[error("integrand produced a non-finite value")]
    NonFiniteIntegrand,
}
