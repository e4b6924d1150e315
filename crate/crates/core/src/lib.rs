//! Monte Carlo estimates of expected Bell-type (CGLMP) violations for random
//! bipartite pure states, with analytic large-N references.

pub mod analytic;
pub mod bell;
pub mod engine;
pub mod ensembles;
pub mod linalg;
pub mod quad;
pub mod stream;
pub mod sum;
