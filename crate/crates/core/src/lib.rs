//! End-of-life spare parts inventory control posed as an optimal stopping
//! problem with ordering decisions.
//!
//! Demand is a non-homogeneous Poisson process whose intensity is constant on
//! each unit review period. The manufacturer reviews stock at integer epochs,
//! may place orders (zero lead time), and may stop holding inventory at any
//! epoch, after which an outside source serves all remaining demand.
//!
//! The crate is organised bottom-up:
//!
//! - [`demand`]: intensity models, increment distributions, path sampling.
//! - [`costkernel`]: exact expected one-period and stopping costs.
//! - [`solver`]: backward induction for the stop/order model family.
//! - [`analytics`]: stopping-time distributions, switching-time cost curves
//!   and their bounds.
//! - [`sim`]: Monte Carlo evaluation of policies in continuous time.

pub mod analytics;
pub mod costkernel;
pub mod demand;
pub mod error;
pub mod poisson;
pub mod quadrature;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
