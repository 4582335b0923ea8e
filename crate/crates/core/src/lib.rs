//! Pareto-efficient backsubsampling for time-series forecasting.
//!
//! Given `n` historical observations and a horizon `h`, decide how many of
//! the most recent `k` observations are enough to forecast nearly as well
//! as the full history. The crate provides:
//!
//! * [`series`]: the time-series container, CSV ingestion, log returns and
//!   forecast-error criteria;
//! * [`ar`]: Yule-Walker AR(p) fitting, recursive forecasting, stationarity
//!   checks and AR / threshold-AR simulators;
//! * [`asymptotics`]: closed-form A/B constants, the asymptotic predictive
//!   ratio and the optimal development size for AR models;
//! * [`order_select`]: adaptive LASSO / elastic-net order selection with
//!   sliding-window tuning;
//! * [`efficiency`]: efficiency curves over `k`, Monte Carlo studies and the
//!   overlapping-window baseline.
//!
//! Loops over replicates, grid points and development sizes run on rayon
//! when the `parallel` feature is enabled (the default); see [`Execution`].

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ar;
pub mod asymptotics;
pub mod efficiency;
mod error;
mod exec;
pub mod order_select;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Execution;
