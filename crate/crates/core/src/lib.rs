//! Numerical laboratory for the Heisenberg group and rank-two Carnot groups:
//! group arithmetic, random-walk and Brownian samplers with Levy area,
//! entropy and energy estimators, and Monte Carlo checks of logarithmic
//! Sobolev inequalities and of a pointwise curvature inequality.

pub mod carnot;
pub mod clt;
pub mod config;
pub mod curvature;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod inequalities;
pub mod rng;
pub mod sampler;
pub mod selftest;
pub mod stats;
pub mod testfn;

pub use carnot::{CarnotPoint, CarnotSpec, GroupPoint};
pub use error::{Error, Result};
