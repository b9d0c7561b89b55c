//! Locally differentially private data release and Laplace-perturbed
//! Gaussian naive Bayes, run over a simulated multi-party cloud protocol.

pub mod data;
pub mod dp;
pub mod model;
pub mod metrics;
pub mod protocol;
pub mod experiment;
