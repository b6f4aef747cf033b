//! Planners for multi-robot persistent monitoring on metric graphs.
//!
//! Every monitored vertex `v` carries a latency constraint `r(v)`: the
//! longest time the team may leave it unvisited. Robots must also return to a
//! single recharging depot at least every `D` time units. The crate answers
//! two questions:
//!
//! * how few robots satisfy every constraint ([`approx`], [`greedy`]), and
//! * how low the maximum weighted latency can go for a fixed fleet
//!   ([`minmax`]).
//!
//! All planners emit [`walks::Solution`]s that are checked by the shared
//! periodic-latency simulator in [`walks`], and [`oracle`] holds brute-force
//! ground truth for tiny instances.

pub mod approx;
pub mod bench;
pub mod config;
pub mod error;
pub mod greedy;
pub mod instance;
pub mod minmax;
pub mod oracle;
pub mod subroutines;
pub mod walks;

pub use config::PlannerConfig;
pub use error::{Error, Result};
pub use instance::{DistanceMatrix, InstanceDocument, MetricInstance};
pub use walks::{LatencyReport, Robot, Solution, Step, TimedWalk};

/// Global comparison tolerance for times and distances.
pub const EPS: f64 = 1e-9;

/// `a <= b` up to [`EPS`], relative for large magnitudes.
#[inline]
pub(crate) fn leq(a: f64, b: f64) -> bool {
    if b.is_infinite() && b > 0.0 {
        return true;
    }
    a <= b + EPS * b.abs().max(1.0)
}

/// `a == b` up to [`EPS`].
#[inline]
pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= EPS * a.abs().max(b.abs()).max(1.0)
}
