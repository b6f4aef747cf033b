//! Score-maximizing budgeted `s`-`t` paths.
//!
//! Small queries are solved by depth-first branch-and-bound, larger ones by
//! ratio-greedy insertion with 2-opt repair. Endpoint scores are included
//! (once when `s = t`).

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::instance::DistanceMatrix;
use crate::leq;

use super::tsp::{path_length, two_opt_path};

#[derive(Debug, Clone, Copy)]
pub struct OrienteeringQuery<'a> {
    pub candidates: &'a [usize],
    pub start: usize,
    pub end: usize,
    pub budget: f64,
    /// Score per node index.
    pub scores: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrienteeringResult {
    /// `start, ..., end` (`[s, s]` for a closed query with nothing collected).
    pub path: Vec<usize>,
    pub score: f64,
    pub length: f64,
    /// Solved by branch-and-bound.
    pub exact: bool,
    /// Branch-and-bound finished within its node limit.
    pub proven_optimal: bool,
}

fn endpoint_score(q: &OrienteeringQuery) -> f64 {
    if q.start == q.end {
        q.scores[q.start]
    } else {
        q.scores[q.start] + q.scores[q.end]
    }
}

/// Candidates worth considering: positive score, not an endpoint, reachable
/// on a detour within budget. Sorted and deduplicated.
fn filtered(dist: &DistanceMatrix, q: &OrienteeringQuery) -> Vec<usize> {
    let mut c: Vec<usize> = q
        .candidates
        .iter()
        .copied()
        .filter(|&z| z != q.start && z != q.end && q.scores[z] > 0.0)
        .filter(|&z| leq(dist.get(q.start, z) + dist.get(z, q.end), q.budget))
        .collect();
    c.sort_unstable();
    c.dedup();
    c
}

fn check(dist: &DistanceMatrix, q: &OrienteeringQuery) -> Result<()> {
    let direct = dist.get(q.start, q.end);
    if !leq(direct, q.budget) {
        return Err(Error::OrienteeringInfeasible { distance: direct, budget: q.budget });
    }
    Ok(())
}

fn finish(dist: &DistanceMatrix, q: &OrienteeringQuery, mut path: Vec<usize>, cfg: &PlannerConfig, exact: bool, proven: bool) -> OrienteeringResult {
    two_opt_path(dist, &mut path, cfg.two_opt_max_passes);
    let score = endpoint_score(q) + path[1..path.len() - 1].iter().map(|&z| q.scores[z]).sum::<f64>();
    let length = path_length(dist, &path);
    OrienteeringResult { path, score, length, exact, proven_optimal: proven }
}

/// Exact below `cfg.exact_threshold` filtered candidates, heuristic above.
pub fn orienteering(dist: &DistanceMatrix, q: &OrienteeringQuery, cfg: &PlannerConfig) -> Result<OrienteeringResult> {
    check(dist, q)?;
    if filtered(dist, q).len() <= cfg.exact_threshold {
        orienteering_exact(dist, q, cfg)
    } else {
        orienteering_heuristic(dist, q, cfg)
    }
}

/// Greedy insertion by score per added length, repaired with 2-opt and
/// repeated until nothing more fits.
pub fn orienteering_heuristic(dist: &DistanceMatrix, q: &OrienteeringQuery, cfg: &PlannerConfig) -> Result<OrienteeringResult> {
    check(dist, q)?;
    let path = heuristic_path(dist, q, &filtered(dist, q), cfg);
    Ok(finish(dist, q, path, cfg, false, false))
}

fn heuristic_path(dist: &DistanceMatrix, q: &OrienteeringQuery, cand: &[usize], cfg: &PlannerConfig) -> Vec<usize> {
    let mut path = vec![q.start, q.end];
    let mut used = vec![false; cand.len()];
    let mut len = dist.get(q.start, q.end);
    loop {
        let mut inserted = false;
        loop {
            // (ratio, extra, candidate index, position)
            let mut best: Option<(f64, f64, usize, usize)> = None;
            for (ci, &z) in cand.iter().enumerate() {
                if used[ci] {
                    continue;
                }
                for p in 0..path.len() - 1 {
                    let (a, b) = (path[p], path[p + 1]);
                    let extra = dist.get(a, z) + dist.get(z, b) - dist.get(a, b);
                    if !leq(len + extra, q.budget) {
                        continue;
                    }
                    let ratio = q.scores[z] / extra.max(1e-12);
                    let better = match best {
                        None => true,
                        Some((br, be, _, _)) => ratio > br * (1.0 + 1e-12) || (ratio >= br * (1.0 - 1e-12) && extra < be),
                    };
                    if better {
                        best = Some((ratio, extra, ci, p));
                    }
                }
            }
            let Some((_, extra, ci, p)) = best else { break };
            path.insert(p + 1, cand[ci]);
            used[ci] = true;
            len += extra;
            inserted = true;
        }
        if !inserted {
            break;
        }
        two_opt_path(dist, &mut path, cfg.two_opt_max_passes);
        let shorter = path_length(dist, &path);
        if shorter >= len - 1e-12 * len.max(1.0) {
            break;
        }
        len = shorter;
    }
    path
}

struct Search<'a> {
    dist: &'a DistanceMatrix,
    cand: &'a [usize],
    scores: Vec<f64>,
    end: usize,
    budget: f64,
    nodes: u64,
    limit: u64,
    best_score: f64,
    best: Vec<usize>,
    stack: Vec<usize>,
}

impl Search<'_> {
    fn dfs(&mut self, cur: usize, mask: u64, len: f64, score: f64) {
        self.nodes += 1;
        if self.nodes > self.limit {
            return;
        }
        if score > self.best_score + 1e-12 && leq(len + self.dist.get(cur, self.end), self.budget) {
            self.best_score = score;
            self.best = self.stack.clone();
        }
        let mut bound = score;
        let mut next: Vec<(f64, usize)> = Vec::new();
        for (i, &z) in self.cand.iter().enumerate() {
            if mask & (1 << i) != 0 {
                continue;
            }
            let reach = len + self.dist.get(cur, z);
            if leq(reach + self.dist.get(z, self.end), self.budget) {
                bound += self.scores[i];
                next.push((self.scores[i] / self.dist.get(cur, z).max(1e-12), i));
            }
        }
        if bound <= self.best_score + 1e-12 {
            return;
        }
        next.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, i) in next {
            let z = self.cand[i];
            self.stack.push(z);
            self.dfs(z, mask | (1 << i), len + self.dist.get(cur, z), score + self.scores[i]);
            self.stack.pop();
            if self.nodes > self.limit {
                return;
            }
        }
    }
}

/// Branch-and-bound seeded with the heuristic path, so it never scores below
/// [`orienteering_heuristic`]. At most 64 filtered candidates.
pub fn orienteering_exact(dist: &DistanceMatrix, q: &OrienteeringQuery, cfg: &PlannerConfig) -> Result<OrienteeringResult> {
    check(dist, q)?;
    let cand = filtered(dist, q);
    if cand.len() > 64 {
        return Err(Error::Invalid(format!("{} candidates exceed the exact solver's limit of 64", cand.len())));
    }
    let seed = heuristic_path(dist, q, &cand, cfg);
    let mut search = Search {
        dist,
        cand: &cand,
        scores: cand.iter().map(|&z| q.scores[z]).collect(),
        end: q.end,
        budget: q.budget,
        nodes: 0,
        limit: cfg.exact_node_limit,
        best_score: seed[1..seed.len() - 1].iter().map(|&z| q.scores[z]).sum(),
        best: seed[1..seed.len() - 1].to_vec(),
        stack: Vec::new(),
    };
    search.dfs(q.start, 0, 0.0, 0.0);
    let proven = search.nodes <= search.limit;
    let mut path = vec![q.start];
    path.extend_from_slice(&search.best);
    path.push(q.end);
    Ok(finish(dist, q, path, cfg, true, proven))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, |u, v| (u as f64 - v as f64).abs())
    }

    #[test]
    fn zero_slack_takes_direct_edge() {
        let d = line(5);
        let scores = vec![1.0; 5];
        let q = OrienteeringQuery { candidates: &[1, 2, 3], start: 0, end: 4, budget: 4.0, scores: &scores };
        let r = orienteering(&d, &q, &PlannerConfig::default()).unwrap();
        assert_eq!(r.path, vec![0, 1, 2, 3, 4]);
        let q = OrienteeringQuery { candidates: &[], ..q };
        let r = orienteering(&d, &q, &PlannerConfig::default()).unwrap();
        assert_eq!(r.path, vec![0, 4]);
        assert_eq!(r.score, 2.0);
    }

    #[test]
    fn generous_budget_collects_everything() {
        let d = DistanceMatrix::from_fn(6, |u, v| if u == v { 0.0 } else { 1.0 + ((u * v) % 3) as f64 * 0.1 });
        let scores = vec![1.0; 6];
        let q = OrienteeringQuery { candidates: &[1, 2, 3, 4, 5], start: 0, end: 0, budget: 100.0, scores: &scores };
        let r = orienteering(&d, &q, &PlannerConfig::default()).unwrap();
        assert_eq!(r.score, 6.0);
        assert_eq!(r.path.len(), 7);
    }

    #[test]
    fn over_budget_endpoints_are_an_error() {
        let d = line(3);
        let scores = vec![1.0; 3];
        let q = OrienteeringQuery { candidates: &[1], start: 0, end: 2, budget: 1.5, scores: &scores };
        assert!(matches!(orienteering(&d, &q, &PlannerConfig::default()), Err(Error::OrienteeringInfeasible { .. })));
    }

    #[test]
    fn exact_beats_greedy_ratio_trap() {
        // One close cheap vertex versus two far valuable ones.
        let p = [(0.0, 0.0), (1.0, 0.0), (0.0, 5.0), (0.0, 5.5)];
        let d = DistanceMatrix::euclidean(&p);
        let scores = vec![0.0, 1.0, 1.0, 1.0];
        let q = OrienteeringQuery { candidates: &[1, 2, 3], start: 0, end: 0, budget: 11.0, scores: &scores };
        let cfg = PlannerConfig::default();
        let e = orienteering_exact(&d, &q, &cfg).unwrap();
        let h = orienteering_heuristic(&d, &q, &cfg).unwrap();
        assert!(e.score >= h.score);
        assert_eq!(e.score, 2.0);
        assert!(e.proven_optimal);
        assert!(e.length <= 11.0 + 1e-9);
    }
}
