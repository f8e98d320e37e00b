pub mod config;
pub mod exact;
pub mod lattice;
pub mod mcmc;
pub mod observe;
pub mod transform;
