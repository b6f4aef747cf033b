//! Bounded-length cycle covers, unrooted (MCCP) and depot-rooted (RMCCP).

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::instance::DistanceMatrix;
use crate::leq;
use crate::walks::TimedWalk;

use super::orienteering::{orienteering, OrienteeringQuery};
use super::tsp::{cycle_length, tsp_order, two_opt_cycle};

/// Cycles with zero holds covering a vertex set.
///
/// Rooted cycles start and end at the depot (`(mu, ..., mu)`); unrooted
/// cycles are closed implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleCover {
    pub cycles: Vec<TimedWalk>,
    pub bound: f64,
    pub root: Option<usize>,
}

impl CycleCover {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn lengths(&self, dist: &DistanceMatrix) -> Vec<f64> {
        self.cycles.iter().map(|c| c.period(dist)).collect()
    }
}

/// Greedy contiguous split of `tour` starting at position `rot`.
fn split_from(dist: &DistanceMatrix, tour: &[usize], rot: usize, lambda: f64) -> Vec<Vec<usize>> {
    let n = tour.len();
    let mut segs: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut open = 0.0;
    for k in 0..n {
        let v = tour[(rot + k) % n];
        if let (Some(&first), Some(&last)) = (cur.first(), cur.last()) {
            let grown = open + dist.get(last, v);
            if leq(grown + dist.get(v, first), lambda) {
                cur.push(v);
                open = grown;
                continue;
            }
            segs.push(std::mem::take(&mut cur));
        }
        cur.push(v);
        open = 0.0;
    }
    segs.push(cur);
    segs
}

/// Covers `vertices` with cycles of length at most `lambda` by splitting one
/// heuristic tour into maximal closable segments.
///
/// Every rotation of the tour is tried; the split with the fewest cycles
/// wins, then the shortest total length, then the earliest rotation.
/// Singleton cycles have length 0, so a cover always exists.
pub fn mccp(dist: &DistanceMatrix, vertices: &[usize], lambda: f64, cfg: &PlannerConfig) -> CycleCover {
    let Some(tour) = tsp_order(dist, vertices, cfg) else {
        return CycleCover { cycles: Vec::new(), bound: lambda, root: None };
    };
    let mut best: Option<(usize, f64, Vec<Vec<usize>>)> = None;
    for rot in 0..tour.len() {
        let segs = split_from(dist, &tour, rot, lambda);
        let total: f64 = segs.iter().map(|s| cycle_length(dist, s)).sum();
        let better = match &best {
            None => true,
            Some((c, t, _)) => segs.len() < *c || (segs.len() == *c && total < *t - 1e-12 * t.max(1.0)),
        };
        if better {
            best = Some((segs.len(), total, segs));
        }
    }
    let cycles = best
        .unwrap()
        .2
        .into_iter()
        .map(|mut s| {
            two_opt_cycle(dist, &mut s, cfg.two_opt_max_passes);
            TimedWalk::from_vertices(&s)
        })
        .collect();
    CycleCover { cycles, bound: lambda, root: None }
}

/// Covers `vertices` with depot-rooted cycles of length at most `budget` by
/// repeated orienteering from the depot with unit scores on uncovered
/// vertices.
pub fn rmccp(dist: &DistanceMatrix, vertices: &[usize], depot: usize, budget: f64, cfg: &PlannerConfig) -> Result<CycleCover> {
    let mut uncovered: Vec<usize> = vertices.iter().copied().filter(|&v| v != depot).collect();
    uncovered.sort_unstable();
    uncovered.dedup();
    if let Some(&v) = uncovered.iter().find(|&&v| !leq(2.0 * dist.get(depot, v), budget)) {
        return Err(Error::Unreachable { vertex: v, budget });
    }
    let mut scores = vec![0.0; dist.len()];
    let mut cycles = Vec::new();
    while !uncovered.is_empty() {
        for &v in &uncovered {
            scores[v] = 1.0;
        }
        let q = OrienteeringQuery { candidates: &uncovered, start: depot, end: depot, budget, scores: &scores };
        let found = orienteering(dist, &q, cfg)?;
        let mut cyc: Vec<usize> = vec![depot];
        for &z in &found.path[1..found.path.len() - 1] {
            if !cyc.contains(&z) {
                cyc.push(z);
            }
        }
        if cyc.len() == 1 {
            cyc.push(uncovered[0]);
        }
        two_opt_cycle(dist, &mut cyc, cfg.two_opt_max_passes);
        let at = cyc.iter().position(|&v| v == depot).unwrap();
        cyc.rotate_left(at);
        debug_assert!(leq(cycle_length(dist, &cyc), budget));
        for &z in &cyc[1..] {
            scores[z] = 0.0;
        }
        uncovered.retain(|v| !cyc.contains(v));
        cyc.push(depot);
        cycles.push(TimedWalk::from_vertices(&cyc));
    }
    Ok(CycleCover { cycles, bound: budget, root: Some(depot) })
}
