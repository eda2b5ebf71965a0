//! Simulation and numerical verification for continuous-time trawl processes.
//!
//! A trawl process is `X(t) = Λ(A_t)` where `Λ` is a homogeneous Lévy basis on
//! `ℝ × ℝ` and `A_t = A + (0, t)` is the trawl set translated in time. The crate
//! provides exact simulation on a uniform grid, closed-form cumulants of the
//! integrated process `X*(t) = ∫_0^t X(u) du`, and estimation of the moment
//! scaling function `τ(q)`.

// `!(x > 0.0)` style guards deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod cumulant;
pub mod error;
pub mod io;
pub mod quad;
pub mod scaling;
pub mod seed;
pub mod simulator;
pub mod trawl;
pub mod verify;

pub use error::{Result, TrawlError};
pub use seed::{CumulantVector, SeedFamily, SeedSpec};
pub use trawl::{TrawlGeometry, TrawlSpec};
