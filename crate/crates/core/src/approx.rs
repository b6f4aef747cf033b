//! Level-partitioned approximation planners for the minimum robot count.
//!
//! Vertices are grouped into dyadic latency levels; each level is covered by
//! bounded-length cycles which are bundled into walks and staffed with
//! equally spaced robots.

use rayon::prelude::*;

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::instance::MetricInstance;
use crate::subroutines::tsp::tsp_tour;
use crate::subroutines::{mccp, rmccp};
use crate::walks::{concat_cycles, Solution, TimedWalk};
use crate::EPS;

/// Dyadic latency levels of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSchedule {
    pub r_min: f64,
    pub r_max: f64,
    /// `r_max / r_min`, plus one when that ratio is an exact power of two.
    pub rho: f64,
    /// `levels[i - 1]` holds `V_i = { v : r_min 2^(i-1) <= r(v) < r_min 2^i }`.
    pub levels: Vec<Vec<usize>>,
    /// Cycles per walk for each level, `max(1, floor(r_min 2^(i+1) / D))`.
    pub bundle: Vec<usize>,
}

impl PartitionSchedule {
    /// `ceil(log2 rho)`.
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Relaxed constraint `r_min 2^i` of level `i` (1-based).
    pub fn relaxed(&self, i: usize) -> f64 {
        self.r_min * 2f64.powi(i as i32)
    }
}

fn is_power_of_two(x: f64) -> bool {
    let k = x.log2().round();
    (x - 2f64.powf(k)).abs() <= EPS * x.max(1.0)
}

/// Smallest `L >= 0` with `2^L >= rho`.
fn ceil_log2(rho: f64) -> usize {
    let mut l = 0;
    while 2f64.powi(l as i32) < rho * (1.0 - EPS) {
        l += 1;
    }
    l
}

/// Splits the constrained vertices into dyadic latency levels.
pub fn partition_levels(inst: &MetricInstance) -> PartitionSchedule {
    let vs = inst.constrained();
    if vs.is_empty() {
        return PartitionSchedule { r_min: 0.0, r_max: 0.0, rho: 0.0, levels: Vec::new(), bundle: Vec::new() };
    }
    let r_min = vs.iter().map(|&v| inst.latency(v)).fold(f64::INFINITY, f64::min);
    let r_max = vs.iter().map(|&v| inst.latency(v)).fold(0.0, f64::max);
    let ratio = r_max / r_min;
    let rho = if is_power_of_two(ratio) { ratio + 1.0 } else { ratio };
    let n = ceil_log2(rho);
    let mut levels = vec![Vec::new(); n];
    for v in vs {
        let r = inst.latency(v);
        let mut x = 1;
        while x < n && r >= r_min * 2f64.powi(x as i32) * (1.0 - EPS) {
            x += 1;
        }
        levels[x - 1].push(v);
    }
    let d = inst.discharge();
    let bundle = (1..=n)
        .map(|i| {
            let b = (r_min * 2f64.powi(i as i32 + 1) / d + EPS).floor();
            if b.is_finite() && b >= 1.0 {
                b.min(usize::MAX as f64 / 2.0) as usize
            } else {
                1
            }
        })
        .collect();
    PartitionSchedule { r_min, r_max, rho, levels, bundle }
}

/// Robots needed on a walk of period `period` whose tightest constraint is
/// `r`: `ceil(period / r)`, at least one.
pub fn staffing(period: f64, r: f64) -> usize {
    if period <= 0.0 {
        return 1;
    }
    ((period / r) * (1.0 - EPS)).ceil().max(1.0) as usize
}

fn min_latency(inst: &MetricInstance, w: &TimedWalk) -> f64 {
    w.vertices()
        .filter(|&v| Some(v) != inst.depot())
        .map(|v| inst.latency(v))
        .fold(f64::INFINITY, f64::min)
}

fn members(inst: &MetricInstance, w: &TimedWalk) -> Vec<usize> {
    w.distinct().into_iter().filter(|&v| Some(v) != inst.depot()).collect()
}

/// Rooted-cycle-cover approximation for a finite discharge time.
///
/// Each level's cycles are bundled `b` at a time (a shorter remainder
/// bundle becomes one more walk) and every walk gets
/// `ceil(l(W) / min r)` equally spaced robots. Levels never share robots.
pub fn approximation_algorithm(inst: &MetricInstance, cfg: &PlannerConfig) -> Result<Solution> {
    inst.ensure_valid()?;
    let mu = match inst.depot() {
        Some(mu) if inst.discharge().is_finite() => mu,
        _ => return Err(Error::WrongMode("a finite discharge time; use approximation_no_recharge")),
    };
    let sched = partition_levels(inst);
    let dist = inst.distances();
    let per_level: Vec<Result<Vec<TimedWalk>>> = sched
        .levels
        .par_iter()
        .enumerate()
        .map(|(i, level)| {
            if level.is_empty() {
                return Ok(Vec::new());
            }
            let cover = rmccp(dist, level, mu, inst.discharge(), cfg)?;
            cover.cycles.chunks(sched.bundle[i]).map(|group| concat_cycles(group, mu)).collect()
        })
        .collect();

    let mut sol = Solution::new("approx");
    let mut resp = Vec::new();
    for walks in per_level {
        for w in walks? {
            let k = staffing(w.period(dist), min_latency(inst, &w));
            resp.push(members(inst, &w));
            sol.add_spaced(w, k, dist)?;
        }
    }
    sol.responsibility = Some(resp);
    sol.set_param("levels", sched.n_levels());
    Ok(sol)
}

/// Unrooted variant for an infinite discharge time.
///
/// Per level, covers `V_i` with cycles of length at most `r_min 2^(i+1)`
/// staffed individually, and (unless `cfg.tsp_pick_min` is off) compares
/// against one tour of `V_i` staffed as a whole, keeping the cheaper.
pub fn approximation_no_recharge(inst: &MetricInstance, cfg: &PlannerConfig) -> Result<Solution> {
    inst.ensure_valid()?;
    if inst.discharge().is_finite() {
        return Err(Error::WrongMode("an infinite discharge time; use approximation_algorithm"));
    }
    let sched = partition_levels(inst);
    let dist = inst.distances();
    let per_level: Vec<Vec<(TimedWalk, usize)>> = sched
        .levels
        .par_iter()
        .enumerate()
        .map(|(i, level)| {
            if level.is_empty() {
                return Vec::new();
            }
            let lambda = sched.r_min * 2f64.powi(i as i32 + 2);
            let cover = mccp(dist, level, lambda, cfg);
            let cycles: Vec<(TimedWalk, usize)> = cover
                .cycles
                .into_iter()
                .map(|c| {
                    let k = staffing(c.period(dist), min_latency(inst, &c));
                    (c, k)
                })
                .collect();
            if cfg.tsp_pick_min {
                let tour = tsp_tour(dist, level, cfg);
                let k = staffing(tour.period(dist), min_latency(inst, &tour));
                if k < cycles.iter().map(|c| c.1).sum() {
                    return vec![(tour, k)];
                }
            }
            cycles
        })
        .collect();

    let mut sol = Solution::new("approx");
    let mut resp = Vec::new();
    for (w, k) in per_level.into_iter().flatten() {
        resp.push(members(inst, &w));
        sol.add_spaced(w, k, dist)?;
    }
    sol.responsibility = Some(resp);
    sol.set_param("levels", sched.n_levels());
    Ok(sol)
}

/// Dispatches on the discharge time.
pub fn approximate(inst: &MetricInstance, cfg: &PlannerConfig) -> Result<Solution> {
    if inst.discharge().is_finite() {
        approximation_algorithm(inst, cfg)
    } else {
        approximation_no_recharge(inst, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::DistanceMatrix;
    use crate::walks::latency_of;

    fn line_instance(pos: &[f64], r: &[f64], d: f64, depot: Option<usize>) -> MetricInstance {
        let dist = DistanceMatrix::from_fn(pos.len(), |u, v| (pos[u] - pos[v]).abs());
        MetricInstance::new(dist, depot, r.to_vec(), vec![1.0; pos.len()], d).unwrap()
    }

    #[test]
    fn uniform_latency_is_one_level_with_rho_two() {
        let inst = line_instance(&[0.0, 1.0, 2.0], &[5.0, 5.0, 5.0], f64::INFINITY, None);
        let s = partition_levels(&inst);
        assert_eq!(s.rho, 2.0);
        assert_eq!(s.levels, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn one_and_three_split_into_two_levels() {
        let inst = line_instance(&[0.0, 0.1], &[1.0, 3.0], f64::INFINITY, None);
        let s = partition_levels(&inst);
        assert_eq!(s.rho, 3.0);
        assert_eq!(s.levels, vec![vec![0], vec![1]]);
    }

    #[test]
    fn one_and_four_use_three_levels() {
        let inst = line_instance(&[0.0, 0.1], &[1.0, 4.0], f64::INFINITY, None);
        let s = partition_levels(&inst);
        assert_eq!(s.rho, 5.0);
        assert_eq!(s.levels, vec![vec![0], vec![], vec![1]]);
    }

    #[test]
    fn staffing_is_tight() {
        assert_eq!(staffing(9.0, 3.0), 3);
        assert_eq!(staffing(9.000001, 3.0), 4);
        assert_eq!(staffing(0.0, 3.0), 1);
        for (p, r) in [(7.0, 2.0), (10.0, 2.5), (1.0, 4.0)] {
            let k = staffing(p, r);
            assert!(p / k as f64 <= r && (k == 1 || p / (k - 1) as f64 > r));
        }
    }

    #[test]
    fn single_vertex_gets_one_robot() {
        let inst = line_instance(&[0.0, 2.0], &[0.0, 4.0], 4.0, Some(0));
        let sol = approximation_algorithm(&inst, &PlannerConfig::default()).unwrap();
        assert_eq!(sol.robot_count(), 1);
        assert_eq!(sol.walks[0], TimedWalk::from_vertices(&[0, 1, 0]));
    }

    #[test]
    fn antipodal_vertices_need_two_robots() {
        let inst = line_instance(&[0.0, -3.0, 3.0], &[0.0, 6.0, 6.0], 6.0, Some(0));
        let sol = approximation_algorithm(&inst, &PlannerConfig::default()).unwrap();
        assert_eq!(sol.robot_count(), 2);
        let rep = latency_of(&sol, &inst, &PlannerConfig::default()).unwrap();
        assert!(rep.latency[1] <= 6.0 && rep.latency[2] <= 6.0);
    }

    #[test]
    fn long_latency_uses_one_tour() {
        let inst = line_instance(&[0.0, 1.0, 2.0, 3.0], &[6.0; 4], f64::INFINITY, None);
        let sol = approximation_no_recharge(&inst, &PlannerConfig::default()).unwrap();
        assert_eq!(sol.robot_count(), 1);
    }

    #[test]
    fn tour_a_third_of_latency_needs_three_robots() {
        // tour length 6 on a line of span 3, r = 2
        let inst = line_instance(&[0.0, 1.0, 2.0, 3.0], &[2.0; 4], f64::INFINITY, None);
        let cfg = PlannerConfig::default();
        let sol = approximation_no_recharge(&inst, &cfg).unwrap();
        let rep = latency_of(&sol, &inst, &cfg).unwrap();
        assert!(rep.latency.iter().all(|&l| l <= 2.0 + 1e-9));
        assert!(sol.robot_count() <= 3);
    }

    #[test]
    fn modes_are_enforced() {
        let finite = line_instance(&[0.0, 1.0], &[0.0, 4.0], 4.0, Some(0));
        let infinite = line_instance(&[0.0, 1.0], &[4.0, 4.0], f64::INFINITY, None);
        let cfg = PlannerConfig::default();
        assert!(matches!(approximation_no_recharge(&finite, &cfg), Err(Error::WrongMode(_))));
        assert!(matches!(approximation_algorithm(&infinite, &cfg), Err(Error::WrongMode(_))));
    }
}
