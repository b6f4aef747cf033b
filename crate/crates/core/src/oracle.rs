//! Brute-force ground truth for tiny instances.
//!
//! Everything here is exponential and meant for cross-checking the planners:
//! an exact decision search for integer instances, Held-Karp tours,
//! exhaustive orienteering, exact cycle covers, the best cyclic single-robot
//! schedule for min-max latency, and the solution verifier.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::instance::{DistanceMatrix, MetricInstance};
use crate::subroutines::OrienteeringQuery;
use crate::walks::{latency_of, periodic_feasibility, LatencyReport, Robot, Solution, Step, TimedWalk};
use crate::{leq, PlannerConfig, EPS};

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Outcome of [`verify`].
#[derive(Debug, Clone)]
pub struct Verification {
    pub report: LatencyReport,
    pub pass: bool,
    /// Constrained vertices with `L(v) > stretch r(v)`.
    pub violations: Vec<usize>,
    /// Walks whose depot absence exceeds `D`.
    pub drained: Vec<usize>,
}

/// Checks `L(v) <= stretch r(v)` for every constrained vertex and every
/// walk's depot gap against `D`.
pub fn verify(sol: &Solution, inst: &MetricInstance, stretch: f64, cfg: &PlannerConfig) -> Result<Verification> {
    let report = latency_of(sol, inst, cfg)?;
    let violations: Vec<usize> = inst
        .constrained()
        .into_iter()
        .filter(|&v| !leq(report.latency[v], stretch * inst.latency(v)))
        .collect();
    let drained: Vec<usize> = report
        .depot_gaps
        .iter()
        .enumerate()
        .filter(|(i, g)| sol.robots.iter().any(|r| r.walk == *i) && g.is_some_and(|g| !leq(g, inst.discharge())))
        .map(|(i, _)| i)
        .collect();
    let pass = violations.is_empty() && drained.is_empty();
    Ok(Verification { report, pass, violations, drained })
}

// ---------------------------------------------------------------------------
// Tours, orienteering, covers
// ---------------------------------------------------------------------------

/// Optimal closed tour through `vertices` by Held-Karp, starting at
/// `vertices[0]`. At most 20 vertices.
pub fn held_karp(dist: &DistanceMatrix, vertices: &[usize]) -> Result<(f64, Vec<usize>)> {
    let n = vertices.len();
    if n > 20 {
        return Err(Error::OracleInput(format!("Held-Karp on {n} vertices (limit 20)")));
    }
    if n <= 1 {
        return Ok((0.0, vertices.to_vec()));
    }
    let m = n - 1;
    let full = 1usize << m;
    let d = |a: usize, b: usize| dist.get(vertices[a], vertices[b]);
    let mut dp = vec![f64::INFINITY; full * m];
    let mut parent = vec![usize::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = d(0, j + 1);
    }
    for s in 1..full {
        for j in 0..m {
            let cur = dp[s * m + j];
            if s & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            for k in 0..m {
                if s & (1 << k) != 0 {
                    continue;
                }
                let t = s | (1 << k);
                let c = cur + d(j + 1, k + 1);
                if c < dp[t * m + k] {
                    dp[t * m + k] = c;
                    parent[t * m + k] = j;
                }
            }
        }
    }
    let (mut best, mut last) = (f64::INFINITY, 0);
    for j in 0..m {
        let c = dp[(full - 1) * m + j] + d(j + 1, 0);
        if c < best {
            best = c;
            last = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut s = full - 1;
    let mut j = last;
    while j != usize::MAX {
        order.push(vertices[j + 1]);
        let p = parent[s * m + j];
        s &= !(1 << j);
        j = p;
    }
    order.push(vertices[0]);
    order.reverse();
    Ok((best, order))
}

/// Best orienteering path by enumerating every simple path. At most 12
/// candidates.
pub fn exhaustive_orienteering(dist: &DistanceMatrix, q: &OrienteeringQuery) -> Result<(f64, Vec<usize>)> {
    let cand: Vec<usize> = {
        let mut c: Vec<usize> = q.candidates.iter().copied().filter(|&z| z != q.start && z != q.end).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    if cand.len() > 12 {
        return Err(Error::OracleInput(format!("{} orienteering candidates (limit 12)", cand.len())));
    }
    if !leq(dist.get(q.start, q.end), q.budget) {
        return Err(Error::OrienteeringInfeasible { distance: dist.get(q.start, q.end), budget: q.budget });
    }
    let base = if q.start == q.end { q.scores[q.start] } else { q.scores[q.start] + q.scores[q.end] };
    let mut best = (base, vec![q.start, q.end]);
    let mut path = vec![q.start];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        dist: &DistanceMatrix,
        q: &OrienteeringQuery,
        cand: &[usize],
        used: &mut [bool],
        path: &mut Vec<usize>,
        len: f64,
        score: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        let cur = *path.last().unwrap();
        if score > best.0 && leq(len + dist.get(cur, q.end), q.budget) {
            let mut p = path.clone();
            p.push(q.end);
            *best = (score, p);
        }
        for i in 0..cand.len() {
            if used[i] {
                continue;
            }
            let z = cand[i];
            let l = len + dist.get(cur, z);
            if !leq(l + dist.get(z, q.end), q.budget) {
                continue;
            }
            used[i] = true;
            path.push(z);
            rec(dist, q, cand, used, path, l, score + q.scores[z], best);
            path.pop();
            used[i] = false;
        }
    }
    let mut used = vec![false; cand.len()];
    rec(dist, q, &cand, &mut used, &mut path, 0.0, base, &mut best);
    Ok(best)
}

fn subset_tours(dist: &DistanceMatrix, vertices: &[usize], root: Option<usize>) -> Result<Vec<f64>> {
    let n = vertices.len();
    if n > 14 {
        return Err(Error::OracleInput(format!("exact cover on {n} vertices (limit 14)")));
    }
    (0..1usize << n)
        .map(|s| {
            let mut set: Vec<usize> = root.into_iter().collect();
            set.extend((0..n).filter(|i| s & (1 << i) != 0).map(|i| vertices[i]));
            Ok(held_karp(dist, &set)?.0)
        })
        .collect()
}

/// Fewest parts in a partition of `0..n` where each part's mask passes `ok`.
fn min_partition(n: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
    let full = (1usize << n) - 1;
    let mut best = vec![usize::MAX; full + 1];
    best[0] = 0;
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s & !low;
        let mut t = rest;
        loop {
            let part = t | low;
            if ok(part) && best[s & !part] != usize::MAX {
                best[s] = best[s].min(best[s & !part] + 1);
            }
            if t == 0 {
                break;
            }
            t = (t - 1) & rest;
        }
    }
    (best[full] != usize::MAX).then_some(best[full])
}

/// Fewest depot-rooted cycles of length at most `budget` covering
/// `vertices`. At most 14 vertices.
pub fn exact_rooted_cover(dist: &DistanceMatrix, vertices: &[usize], depot: usize, budget: f64) -> Result<usize> {
    let vs: Vec<usize> = vertices.iter().copied().filter(|&v| v != depot).collect();
    let tours = subset_tours(dist, &vs, Some(depot))?;
    if let Some(&v) = vs.iter().find(|&&v| !leq(2.0 * dist.get(depot, v), budget)) {
        return Err(Error::Unreachable { vertex: v, budget });
    }
    Ok(min_partition(vs.len(), |s| leq(tours[s], budget)).unwrap_or(0))
}

/// Fewest cycles of length at most `lambda` covering `vertices`.
pub fn exact_cycle_cover(dist: &DistanceMatrix, vertices: &[usize], lambda: f64) -> Result<usize> {
    let tours = subset_tours(dist, vertices, None)?;
    Ok(min_partition(vertices.len(), |s| leq(tours[s], lambda)).unwrap_or(0))
}

// ---------------------------------------------------------------------------
// Exact decision search
// ---------------------------------------------------------------------------

/// Verdict of [`exact_decision`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
    /// The state cap was hit before the search could decide.
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Knobs of [`exact_decision`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionOptions {
    pub robots: usize,
    /// Explored states per search before giving up with `Unknown`.
    pub state_cap: usize,
    /// Require each robot to be solely responsible for its own vertex set.
    pub partitioned: bool,
}

impl Default for DecisionOptions {
    fn default() -> Self {
        Self { robots: 1, state_cap: 10_000_000, partitioned: false }
    }
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub verdict: Verdict,
    /// Periodic walks realizing a feasible verdict.
    pub witness: Option<Solution>,
    pub states: usize,
}

/// Per robot `(from, to, remaining)`, at a node when `remaining == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Pos {
    from: u8,
    to: u8,
    rem: u16,
}

struct Model {
    n: usize,
    robots: usize,
    nodes: Vec<usize>,
    dist: Vec<Vec<u16>>,
    /// Largest allowed absence `r - 1` per node, `None` when unconstrained.
    slack: Vec<Option<u16>>,
    depot: Option<usize>,
    charge_slack: Option<u16>,
    holds: bool,
}

fn as_u16(x: f64, what: &str) -> Result<u16> {
    if !x.is_finite() || x < 0.0 || (x - x.round()).abs() > EPS * x.abs().max(1.0) || x.round() > u16::MAX as f64 - 2.0 {
        return Err(Error::OracleInput(format!("{what} {x} is not a small non-negative integer")));
    }
    Ok(x.round() as u16)
}


type Frame = (Box<[u16]>, Vec<Box<[u16]>>, usize);

impl Model {
    fn new(inst: &MetricInstance, robots: usize) -> Result<Self> {
        let n = inst.n_nodes();
        if n > 255 {
            return Err(Error::OracleInput("too many nodes".into()));
        }
        let depot = inst.depot().filter(|_| inst.discharge().is_finite());
        let mut nodes: Vec<usize> = inst.constrained();
        if let Some(mu) = inst.depot() {
            nodes.insert(0, mu);
        }
        let mut dist = vec![vec![0u16; n]; n];
        for &u in &nodes {
            for &v in &nodes {
                dist[u][v] = as_u16(inst.dist(u, v), "distance")?;
                if u != v && dist[u][v] == 0 {
                    return Err(Error::OracleInput(format!("zero distance between {u} and {v}")));
                }
            }
        }
        let floor = |r: f64| -> u16 { (r + EPS).floor().min(u16::MAX as f64 - 2.0) as u16 };
        let mut slack = vec![None; n];
        for v in inst.constrained() {
            let r = floor(inst.latency(v));
            if r == 0 {
                return Err(Error::OracleInput(format!("vertex {v} has zero latency")));
            }
            slack[v] = Some(r - 1);
        }
        let charge_slack = match depot {
            Some(_) => {
                let d = floor(inst.discharge());
                if d == 0 {
                    return Err(Error::OracleInput("zero discharge time".into()));
                }
                Some(d - 1)
            }
            None => None,
        };
        // One robot never gains from waiting, unless there is nowhere to go.
        let holds = robots > 1 || nodes.len() <= 1;
        Ok(Model { n, robots, nodes, dist, slack, depot, charge_slack, holds })
    }

    /// Key layout: per robot `from, to, rem, charge`, then one age per node.
    fn key_len(&self) -> usize {
        4 * self.robots + self.n
    }

    fn moves(&self, p: Pos) -> Vec<Pos> {
        if p.rem > 0 {
            let rem = p.rem - 1;
            return vec![if rem == 0 { Pos { from: p.to, to: p.to, rem: 0 } } else { Pos { rem, ..p } }];
        }
        let v = p.to as usize;
        let mut out = Vec::new();
        if self.holds {
            out.push(p);
        }
        for &w in &self.nodes {
            if w == v {
                continue;
            }
            let rem = self.dist[v][w] - 1;
            out.push(if rem == 0 {
                Pos { from: w as u8, to: w as u8, rem: 0 }
            } else {
                Pos { from: v as u8, to: w as u8, rem }
            });
        }
        out
    }

    fn successors(&self, key: &[u16]) -> Vec<Box<[u16]>> {
        let r = self.robots;
        let options: Vec<Vec<Pos>> = (0..r)
            .map(|i| self.moves(Pos { from: key[4 * i] as u8, to: key[4 * i + 1] as u8, rem: key[4 * i + 2] }))
            .collect();
        let mut out = Vec::new();
        let mut choice = vec![0usize; r];
        'outer: loop {
            let mut next = vec![0u16; self.key_len()];
            let mut present = vec![false; self.n];
            let mut ok = true;
            for i in 0..r {
                let p = options[i][choice[i]];
                next[4 * i] = p.from as u16;
                next[4 * i + 1] = p.to as u16;
                next[4 * i + 2] = p.rem;
                let at = (p.rem == 0).then_some(p.to as usize);
                if let Some(v) = at {
                    present[v] = true;
                }
                if let (Some(mu), Some(cap)) = (self.depot, self.charge_slack) {
                    if at == Some(mu) {
                        next[4 * i + 3] = 0;
                    } else {
                        let c = key[4 * i + 3] + 1;
                        ok &= c <= cap;
                        next[4 * i + 3] = c;
                    }
                }
            }
            for v in 0..self.n {
                if let Some(cap) = self.slack[v] {
                    if present[v] {
                        next[4 * r + v] = 0;
                    } else {
                        let a = key[4 * r + v] + 1;
                        ok &= a <= cap;
                        next[4 * r + v] = a;
                    }
                }
            }
            if ok {
                out.push(next.into_boxed_slice());
            }
            for i in (0..r).rev() {
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    continue 'outer;
                }
                choice[i] = 0;
            }
            break;
        }
        out
    }

    fn initial(&self) -> Vec<Box<[u16]>> {
        let mut out = Vec::new();
        let k = self.nodes.len();
        let mut idx = vec![0usize; self.robots];
        loop {
            if idx.windows(2).all(|w| w[0] <= w[1]) {
                let mut key = vec![0u16; self.key_len()];
                for (i, &j) in idx.iter().enumerate() {
                    let v = self.nodes[j] as u16;
                    key[4 * i] = v;
                    key[4 * i + 1] = v;
                }
                out.push(key.into_boxed_slice());
            }
            let mut i = self.robots;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < k {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    /// Periodic walks from a cycle of states.
    fn witness(&self, cycle: &[Box<[u16]>]) -> Solution {
        let t = cycle.len();
        let mut sol = Solution::new("exact_decision");
        for i in 0..self.robots {
            let at: Vec<Option<usize>> = cycle
                .iter()
                .map(|k| (k[4 * i + 2] == 0).then_some(k[4 * i + 1] as usize))
                .collect();
            let prev = |s: usize| at[(s + t - 1) % t];
            let start = (0..t).find(|&s| at[s].is_some() && prev(s) != at[s]);
            let Some(start) = start else {
                let v = at[0].unwrap();
                sol.walks.push(TimedWalk::new(vec![Step { vertex: v, hold: t as f64 }]));
                sol.robots.push(Robot { walk: sol.walks.len() - 1, offset: 0.0 });
                continue;
            };
            let mut steps: Vec<Step> = Vec::new();
            for s in 0..t {
                let cur = at[(start + s) % t];
                match (cur, steps.last_mut()) {
                    (Some(v), Some(last)) if s > 0 && at[(start + s - 1) % t] == Some(v) => {
                        let _ = v;
                        last.hold += 1.0;
                    }
                    (Some(v), _) => steps.push(Step { vertex: v, hold: 0.0 }),
                    (None, _) => {}
                }
            }
            sol.walks.push(TimedWalk::new(steps));
            // The robot is at the walk's start at cycle time `start`.
            sol.robots.push(Robot { walk: sol.walks.len() - 1, offset: start as f64 });
        }
        sol
    }

    /// Depth-first search for a reachable cycle of valid states.
    fn search(&self, cap: usize) -> (Verdict, Option<Vec<Box<[u16]>>>, usize) {
        // 1 = on stack, 2 = finished
        let mut color: HashMap<Box<[u16]>, u8> = HashMap::new();
        for init in self.initial() {
            if color.contains_key(&init) {
                continue;
            }
            let mut stack: Vec<Frame> = Vec::new();
            color.insert(init.clone(), 1);
            let succ = self.successors(&init);
            stack.push((init, succ, 0));
            while let Some(top) = stack.last_mut() {
                if top.2 == top.1.len() {
                    let (k, _, _) = stack.pop().unwrap();
                    color.insert(k, 2);
                    continue;
                }
                let next = top.1[top.2].clone();
                top.2 += 1;
                match color.get(&next) {
                    Some(1) => {
                        let at = stack.iter().position(|f| f.0 == next).unwrap();
                        let cycle = stack[at..].iter().map(|f| f.0.clone()).collect();
                        return (Verdict::Feasible, Some(cycle), color.len());
                    }
                    Some(_) => {}
                    None => {
                        if color.len() >= cap {
                            return (Verdict::Unknown, None, color.len());
                        }
                        color.insert(next.clone(), 1);
                        let succ = self.successors(&next);
                        stack.push((next, succ, 0));
                    }
                }
            }
        }
        (Verdict::Infeasible, None, color.len())
    }
}

/// Decides whether `opts.robots` robots can keep every latency constraint on
/// an integer instance.
///
/// Time is discrete: each robot moves one unit along an edge or holds for one
/// unit per step. A vertex's age (time since a robot was last there) and a
/// robot's time away from the depot are part of the state, so any reachable
/// cycle of valid states is a periodic witness. Exact for integer-scaled
/// distances, latencies and discharge time.
pub fn exact_decision(inst: &MetricInstance, opts: &DecisionOptions) -> Result<Decision> {
    inst.ensure_valid()?;
    if opts.robots == 0 {
        return Err(Error::NoRobots);
    }
    let vs = inst.constrained();
    if vs.len() > 8 || (opts.robots > 3 && !opts.partitioned) {
        return Err(Error::OracleInput(format!(
            "{} vertices and {} robots exceed the exact search limits (8, 3)",
            vs.len(),
            opts.robots
        )));
    }
    if vs.is_empty() {
        return Ok(Decision { verdict: Verdict::Feasible, witness: Some(Solution::new("exact_decision")), states: 0 });
    }
    if opts.partitioned {
        return partitioned_decision(inst, opts);
    }
    let model = Model::new(inst, opts.robots)?;
    let (verdict, cycle, states) = model.search(opts.state_cap);
    let witness = cycle.map(|c| model.witness(&c));
    Ok(Decision { verdict, witness, states })
}

/// Single-robot feasibility of every subset of the constrained vertices,
/// indexed by bit mask over `inst.constrained()`.
fn subset_verdicts(inst: &MetricInstance, robots: usize, cap: usize) -> Result<Vec<(Verdict, Option<Solution>)>> {
    let vs = inst.constrained();
    let mut out = vec![(Verdict::Feasible, None); 1 << vs.len()];
    for (s, slot) in out.iter_mut().enumerate().skip(1) {
        let part: Vec<usize> = (0..vs.len()).filter(|i| s & (1 << i) != 0).map(|i| vs[i]).collect();
        let (sub, map) = inst.restrict(&part)?;
        let d = exact_decision(&sub, &DecisionOptions { robots, state_cap: cap, partitioned: false })?;
        *slot = (
            d.verdict,
            d.witness.map(|mut w| {
                w.map_vertices(&map);
                w
            }),
        );
    }
    Ok(out)
}

fn partitioned_decision(inst: &MetricInstance, opts: &DecisionOptions) -> Result<Decision> {
    let n = inst.constrained().len();
    let verdicts = subset_verdicts(inst, 1, opts.state_cap)?;
    let feasible = min_partition(n, |s| verdicts[s].0 == Verdict::Feasible);
    let optimistic = min_partition(n, |s| verdicts[s].0 != Verdict::Infeasible);
    let verdict = match (feasible, optimistic) {
        (Some(k), _) if k <= opts.robots => Verdict::Feasible,
        (_, Some(k)) if k <= opts.robots => Verdict::Unknown,
        _ => Verdict::Infeasible,
    };
    let witness = (verdict == Verdict::Feasible).then(|| {
        let parts = partition_masks(n, |s| verdicts[s].0 == Verdict::Feasible);
        let mut sol = Solution::new("exact_decision");
        for s in parts {
            sol.absorb(verdicts[s].1.clone().unwrap());
        }
        sol
    });
    Ok(Decision { verdict, witness, states: 0 })
}

/// Masks of a minimum partition (see [`min_partition`]).
fn partition_masks(n: usize, ok: impl Fn(usize) -> bool) -> Vec<usize> {
    let full = (1usize << n) - 1;
    let mut best = vec![usize::MAX; full + 1];
    let mut pick = vec![0usize; full + 1];
    best[0] = 0;
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s & !low;
        let mut t = rest;
        loop {
            let part = t | low;
            if ok(part) && best[s & !part] != usize::MAX && best[s & !part] + 1 < best[s] {
                best[s] = best[s & !part] + 1;
                pick[s] = part;
            }
            if t == 0 {
                break;
            }
            t = (t - 1) & rest;
        }
    }
    let mut out = Vec::new();
    let mut s = full;
    while s != 0 && best[s] != usize::MAX {
        out.push(pick[s]);
        s &= !pick[s];
    }
    out
}

/// Lower bound on the robots of any solution whose walks serve disjoint
/// vertex groups (several robots may share one group's walks).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionedMinimum {
    pub robots: usize,
    /// False when a group hit the per-group robot cap or the state cap, so
    /// `robots` is only a lower bound.
    pub exact: bool,
}

/// Minimum over partitions of the constrained vertices of the summed exact
/// per-group robot counts. Groups needing more than `max_per_group` robots
/// count as `max_per_group + 1`.
pub fn partitioned_minimum(inst: &MetricInstance, max_per_group: usize, state_cap: usize) -> Result<PartitionedMinimum> {
    inst.ensure_valid()?;
    let vs = inst.constrained();
    if vs.is_empty() {
        return Ok(PartitionedMinimum { robots: 0, exact: true });
    }
    if vs.len() > 8 {
        return Err(Error::OracleInput(format!("{} vertices (limit 8)", vs.len())));
    }
    // need[s] = (lower bound, exact)
    let mut need = vec![(1usize, true); 1 << vs.len()];
    let mut done = vec![false; 1 << vs.len()];
    for r in 1..=max_per_group {
        let verdicts = subset_verdicts_where(inst, r, state_cap, &done)?;
        for (s, v) in verdicts.into_iter().enumerate().skip(1) {
            let Some(v) = v else { continue };
            match v {
                Verdict::Feasible => {
                    if need[s].1 {
                        need[s].0 = r;
                    }
                    done[s] = true;
                }
                Verdict::Infeasible => need[s].0 = r + 1,
                Verdict::Unknown => need[s] = (r.max(need[s].0), false),
            }
        }
    }
    for s in 1..need.len() {
        if !done[s] {
            need[s].1 = false;
        }
    }
    let full = need.len() - 1;
    let mut best = vec![(usize::MAX, true); full + 1];
    best[0] = (0, true);
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s & !low;
        let mut t = rest;
        loop {
            let part = t | low;
            let (a, ea) = best[s & !part];
            let c = a + need[part].0;
            if c < best[s].0 || (c == best[s].0 && !best[s].1 && ea && need[part].1) {
                best[s] = (c, ea && need[part].1);
            }
            if t == 0 {
                break;
            }
            t = (t - 1) & rest;
        }
    }
    Ok(PartitionedMinimum { robots: best[full].0, exact: best[full].1 })
}

fn subset_verdicts_where(inst: &MetricInstance, robots: usize, cap: usize, skip: &[bool]) -> Result<Vec<Option<Verdict>>> {
    let vs = inst.constrained();
    (0..1usize << vs.len())
        .map(|s| {
            if s == 0 || skip[s] || robots > (s.count_ones() as usize).max(1) {
                return Ok(None);
            }
            let part: Vec<usize> = (0..vs.len()).filter(|i| s & (1 << i) != 0).map(|i| vs[i]).collect();
            let (sub, _) = inst.restrict(&part)?;
            let d = exact_decision(&sub, &DecisionOptions { robots, state_cap: cap, partitioned: false })?;
            Ok(Some(d.verdict))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Exhaustive single walks
// ---------------------------------------------------------------------------

/// Exhaustive search for a feasible single-robot walk without holds.
///
/// Works at the level of arrivals: a state is the current vertex and the
/// time since each vertex (and the depot) was last visited, and a move jumps
/// along one edge. Walks start at the depot when there is one, else at the
/// first constrained vertex, with every age at zero. A reachable cycle of
/// states is a periodic walk; it is returned after re-checking it with
/// [`periodic_feasibility`]. Unlike [`exact_decision`] this does not need
/// integer data.
pub fn exhaustive_single_walk(inst: &MetricInstance, state_cap: usize) -> Result<(Verdict, Option<TimedWalk>)> {
    inst.ensure_valid()?;
    let vs = inst.constrained();
    if vs.len() > 8 {
        return Err(Error::OracleInput(format!("{} vertices (limit 8)", vs.len())));
    }
    let mut nodes = vs.clone();
    if let Some(mu) = inst.depot() {
        nodes.insert(0, mu);
    }
    let Some(&root) = nodes.first() else {
        return Ok((Verdict::Feasible, Some(TimedWalk::default())));
    };
    if nodes.len() == 1 {
        return Ok((Verdict::Feasible, Some(TimedWalk::from_vertices(&[root]))));
    }
    let bound: Vec<f64> = nodes
        .iter()
        .map(|&v| if Some(v) == inst.depot() { inst.discharge() } else { inst.latency(v) })
        .collect();
    let k = nodes.len();
    // state: [current index, age bits per node]
    type Key = Box<[u64]>;
    let step = |key: &[u64], j: usize| -> Option<Key> {
        let i = key[0] as usize;
        let d = inst.dist(nodes[i], nodes[j]);
        let mut next = vec![0u64; k + 1];
        next[0] = j as u64;
        for w in 0..k {
            let age = f64::from_bits(key[w + 1]) + d;
            if !leq(age, bound[w]) {
                return None;
            }
            next[w + 1] = if w == j { 0f64.to_bits() } else { age.to_bits() };
        }
        Some(next.into_boxed_slice())
    };
    let succ = |key: &[u64]| -> Vec<Key> { (0..k).filter(|&j| j != key[0] as usize).filter_map(|j| step(key, j)).collect() };

    let init: Key = {
        let mut v = vec![0f64.to_bits(); k + 1];
        v[0] = 0;
        v.into_boxed_slice()
    };
    let mut color: HashMap<Key, u8> = HashMap::new();
    let mut stack: Vec<(Key, Vec<Key>, usize)> = Vec::new();
    color.insert(init.clone(), 1);
    let s0 = succ(&init);
    stack.push((init, s0, 0));
    while let Some(top) = stack.last_mut() {
        if top.2 == top.1.len() {
            let (key, _, _) = stack.pop().unwrap();
            color.insert(key, 2);
            continue;
        }
        let next = top.1[top.2].clone();
        top.2 += 1;
        match color.get(&next) {
            Some(1) => {
                let at = stack.iter().position(|f| f.0 == next).unwrap();
                let order: Vec<usize> = stack[at..].iter().map(|f| nodes[f.0[0] as usize]).collect();
                let walk = TimedWalk::from_vertices(&order);
                if !periodic_feasibility(&walk, inst, None) {
                    return Err(Error::OracleInput("cycle of valid states gave an infeasible walk".into()));
                }
                return Ok((Verdict::Feasible, Some(walk)));
            }
            Some(_) => {}
            None => {
                if color.len() >= state_cap {
                    return Ok((Verdict::Unknown, None));
                }
                color.insert(next.clone(), 1);
                let s = succ(&next);
                stack.push((next, s, 0));
            }
        }
    }
    Ok((Verdict::Infeasible, None))
}

// ---------------------------------------------------------------------------
// Cyclic min-max optimum
// ---------------------------------------------------------------------------

/// Best single-robot cyclic schedule for min-max weighted latency.
#[derive(Debug, Clone)]
pub struct CyclicOptimum {
    pub cost: f64,
    pub walk: TimedWalk,
}

/// Minimum of `max_v phi(v) L(v)` over walks that concatenate at most
/// `max_cycles` rooted cycles, each an optimal tour of its vertex subset of
/// length at most `D`. Cycles are rooted at the depot, or at the heaviest
/// vertex when there is none. At most 7 monitored vertices.
pub fn exact_minmax_cyclic(inst: &MetricInstance, max_cycles: usize) -> Result<CyclicOptimum> {
    inst.ensure_valid()?;
    let vs: Vec<usize> = inst.vertices().collect();
    if vs.len() > 7 {
        return Err(Error::OracleInput(format!("{} vertices (limit 7)", vs.len())));
    }
    if vs.is_empty() {
        return Ok(CyclicOptimum { cost: 0.0, walk: TimedWalk::default() });
    }
    let root = inst.depot().unwrap_or_else(|| {
        *vs.iter().max_by(|&&a, &&b| inst.weight(a).total_cmp(&inst.weight(b)).then(b.cmp(&a))).unwrap()
    });
    let others: Vec<usize> = vs.iter().copied().filter(|&v| v != root).collect();
    let dist = inst.distances();
    let mut cycles: Vec<(usize, TimedWalk)> = Vec::new();
    for s in 1..1usize << others.len() {
        let mut set = vec![root];
        set.extend((0..others.len()).filter(|i| s & (1 << i) != 0).map(|i| others[i]));
        let (len, order) = held_karp(dist, &set)?;
        if leq(len, inst.discharge()) {
            cycles.push((s, TimedWalk::from_vertices(&order)));
        }
    }
    let full = (1usize << others.len()) - 1;
    if others.is_empty() {
        let walk = TimedWalk::from_vertices(&[root]);
        return Ok(CyclicOptimum { cost: 0.0, walk });
    }
    let mut best = CyclicOptimum { cost: f64::INFINITY, walk: TimedWalk::default() };
    let mut seq: Vec<usize> = Vec::new();
    fn rec(
        inst: &MetricInstance,
        cycles: &[(usize, TimedWalk)],
        full: usize,
        max: usize,
        seq: &mut Vec<usize>,
        covered: usize,
        best: &mut CyclicOptimum,
    ) {
        if covered == full && !seq.is_empty() {
            // skip non-canonical rotations
            let k = seq.len();
            let canonical = (1..k).all(|r| {
                let rot: Vec<usize> = (0..k).map(|i| seq[(i + r) % k]).collect();
                rot >= *seq
            });
            if canonical {
                let mut walk = TimedWalk::default();
                for &c in seq.iter() {
                    for (j, s) in cycles[c].1.steps().iter().enumerate() {
                        if j == 0 && walk.last() == Some(s.vertex) {
                            continue;
                        }
                        walk.push(s.vertex, s.hold);
                    }
                }
                let cost = single_walk_cost(&walk, inst);
                if cost < best.cost - EPS * best.cost.abs().min(1e300) {
                    *best = CyclicOptimum { cost, walk };
                }
            }
        }
        if seq.len() == max {
            return;
        }
        for c in 0..cycles.len() {
            if seq.first().is_some_and(|&f| c < f) {
                continue;
            }
            seq.push(c);
            rec(inst, cycles, full, max, seq, covered | cycles[c].0, best);
            seq.pop();
        }
    }
    rec(inst, &cycles, full, max_cycles.max(1), &mut seq, 0, &mut best);
    if !best.cost.is_finite() {
        return Err(Error::OracleInput("no cyclic schedule within the cycle cap".into()));
    }
    Ok(best)
}

/// `max_v phi(v) L(v)` of one robot on `w`.
fn single_walk_cost(w: &TimedWalk, inst: &MetricInstance) -> f64 {
    let gaps = w.timeline(inst.distances()).gaps();
    let mut lat = vec![f64::INFINITY; inst.n_nodes()];
    for (v, g) in gaps {
        lat[v] = g;
    }
    inst.vertices()
        .map(|v| if inst.weight(v) == 0.0 { 0.0 } else { inst.weight(v) * lat[v] })
        .fold(0.0, f64::max)
}
