pub mod acquisition;
pub mod benchmarks;
pub mod cli;
pub mod domain;
pub mod error;
pub mod gp;
pub mod metrics;
pub mod moo;
pub mod optimizer;
pub mod rff;
pub mod sobol;
pub mod stats;
