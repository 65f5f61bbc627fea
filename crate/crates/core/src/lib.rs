//! Numerical toolkit for 2-Wasserstein space over [0, 1] equipped with the
//! entropic measure.
//!
//! Measures on [0, 1] are handled through their quantile functions, where the
//! Wasserstein distance is the L² distance and geodesics are straight lines.
//! On top of that sit the finite-dimensional marginals of the entropic
//! measure, a displacement-convexity audit showing that the entropy admits no
//! uniform lower curvature bound, and Monte Carlo probes of the Poincaré and
//! log-Sobolev inequalities of the associated Dirichlet form.

pub mod cli_report;
pub mod convexity_audit;
pub mod dirichlet_probe;
pub mod entropic_measure;
pub mod quantile_space;
pub mod rng;
pub mod specialfn;
