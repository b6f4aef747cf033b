use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tunable knobs shared by the planners.
///
/// Every field has a default, so a partial TOML table deserializes cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Orienteering queries with at most this many candidates (after the
    /// distance pre-filter) are solved exactly by branch-and-bound.
    pub exact_threshold: usize,
    /// Node budget for one exact orienteering search.
    pub exact_node_limit: u64,
    /// Cap on 2-opt improvement passes.
    pub two_opt_max_passes: usize,
    /// Tours over at most this many vertices try nearest-neighbour from
    /// every start; larger sets use one seeded start.
    pub tsp_multistart_limit: usize,
    pub tsp_seed: u64,
    /// Revisit discount `m` applied to orienteering weights of vertices
    /// already on the walk.
    pub revisit_discount: f64,
    /// Binary-search tolerance for the leg time `d`, as a fraction of the
    /// smallest latency constraint.
    pub leg_tolerance: f64,
    /// Also try equal spacing on one tour per level in the infinite-discharge
    /// approximation and keep whichever needs fewer robots.
    pub tsp_pick_min: bool,
    /// Latency stretch allowed by the bi-criterion reduction.
    pub stretch: f64,
    /// Use split tours instead of rooted cycle covers in the min-max
    /// planners, even when a depot exists.
    pub infinite_discharge_mode: bool,
    /// Common-period search bound, in multiples of the longest walk period.
    pub hyperperiod_multiple: u32,
    /// Safety cap on steps appended by one greedy walk builder, per vertex.
    pub max_steps_per_vertex: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            exact_threshold: 16,
            exact_node_limit: 2_000_000,
            two_opt_max_passes: 1_000,
            tsp_multistart_limit: 16,
            tsp_seed: 0,
            revisit_discount: 0.1,
            leg_tolerance: 1e-6,
            tsp_pick_min: true,
            stretch: 2.0,
            infinite_discharge_mode: false,
            hyperperiod_multiple: 64,
            max_steps_per_vertex: 64,
        }
    }
}

impl PlannerConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text).map_err(|message| Error::Parse { path: path.to_path_buf(), message })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_table_keeps_defaults() {
        let cfg = PlannerConfig::from_toml("stretch = 3.0\n").unwrap();
        assert_eq!(cfg.stretch, 3.0);
        assert_eq!(cfg.exact_threshold, 16);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(PlannerConfig::from_toml("strech = 3.0\n").is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = PlannerConfig { revisit_discount: 0.25, ..Default::default() };
        assert_eq!(PlannerConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
