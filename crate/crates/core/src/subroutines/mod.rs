//! Combinatorial building blocks shared by the planners.

pub mod cover;
pub mod orienteering;
pub mod tsp;

pub use cover::{mccp, rmccp, CycleCover};
pub use orienteering::{orienteering, OrienteeringQuery, OrienteeringResult};
pub use tsp::tsp_tour;
