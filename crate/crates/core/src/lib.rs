//! Solver competition in intent markets.
//!
//! Two models of solvers competing to fill a user's swap:
//!
//! * a probabilistic first-price (Dutch) auction with costly entry and costly,
//!   congestive effort ([`auction`], [`entry`], [`effort`], [`montecarlo`]);
//! * a deterministic welfare program solved by a descending-price primal-dual
//!   mechanism ([`market`]).
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod auction;
pub mod cli;
pub mod distributions;
pub mod effort;
pub mod entry;
pub mod error;
pub mod market;
pub mod montecarlo;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{Extended, Real};

pub type PriceDistributionF64 = distributions::PriceDistribution<f64>;
pub type PriceDistributionF32 = distributions::PriceDistribution<f32>;
pub type CostDistributionF64 = distributions::CostDistribution<f64>;
pub type CostDistributionF32 = distributions::CostDistribution<f32>;
pub type AuctionContextF64 = auction::AuctionContext<f64>;
pub type AuctionContextF32 = auction::AuctionContext<f32>;
pub type MarketConfigF64 = entry::MarketConfig<f64>;
pub type MarketConfigF32 = entry::MarketConfig<f32>;
pub type EffortModelF64 = effort::EffortModel<f64>;
pub type EffortModelF32 = effort::EffortModel<f32>;
pub type RatioExperimentConfigF64 = montecarlo::RatioExperimentConfig<f64>;
pub type RatioExperimentConfigF32 = montecarlo::RatioExperimentConfig<f32>;
pub type MarketF64 = market::Market<f64>;
pub type MarketF32 = market::Market<f32>;
pub type SolverProfileF64 = market::SolverProfile<f64>;
pub type SolverProfileF32 = market::SolverProfile<f32>;
