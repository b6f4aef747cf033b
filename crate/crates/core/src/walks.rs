//! Timed walks, multi-robot solutions and their periodic latency.
//!
//! A [`TimedWalk`] `((v_1,t_1),...,(v_k,t_k))` is traversed forever: the
//! robot holds `t_i` at `v_i`, travels to `v_{i+1}`, and after `v_k` travels
//! back to `v_1`. Latencies are measured cyclically over the steady state, so
//! the time before a vertex's first visit never counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::instance::{write_atomic, DistanceMatrix, MetricInstance};
use crate::{leq, EPS};

/// One stop of a timed walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, f64)", into = "(usize, f64)")]
pub struct Step {
    pub vertex: usize,
    pub hold: f64,
}

impl From<(usize, f64)> for Step {
    fn from((vertex, hold): (usize, f64)) -> Self {
        Step { vertex, hold }
    }
}

impl From<Step> for (usize, f64) {
    fn from(s: Step) -> Self {
        (s.vertex, s.hold)
    }
}

/// A stay at a vertex: arrival and departure times within one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visit {
    pub vertex: usize,
    pub arrive: f64,
    pub depart: f64,
}

/// Visit times of one period of a walk started at time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub visits: Vec<Visit>,
    pub period: f64,
}

impl Timeline {
    /// Largest cyclic gap per vertex, from the walk alone.
    ///
    /// Traverses the period twice, tracking each vertex's last departure.
    /// Returns `(vertex, gap)` pairs in first-visit order.
    pub fn gaps(&self) -> Vec<(usize, f64)> {
        let mut last: BTreeMap<usize, f64> = BTreeMap::new();
        let mut worst: BTreeMap<usize, f64> = BTreeMap::new();
        let mut order = Vec::new();
        for pass in 0..2 {
            let shift = pass as f64 * self.period;
            for v in &self.visits {
                if let Some(&dep) = last.get(&v.vertex) {
                    let gap = (v.arrive + shift - dep).max(0.0);
                    let w = worst.entry(v.vertex).or_insert(0.0);
                    *w = w.max(gap);
                } else {
                    order.push(v.vertex);
                }
                last.insert(v.vertex, v.depart + shift);
            }
        }
        order.into_iter().map(|v| (v, worst.get(&v).copied().unwrap_or(0.0))).collect()
    }

    /// True iff no visited vertex waits longer than `bound(v)` between a
    /// departure and the next arrival. Linear in the number of visits.
    pub fn feasible(&self, n_nodes: usize, bound: impl Fn(usize) -> f64) -> bool {
        let mut last = vec![f64::NAN; n_nodes];
        for pass in 0..2 {
            let shift = pass as f64 * self.period;
            for v in &self.visits {
                let dep = last[v.vertex];
                if !dep.is_nan() && !leq(v.arrive + shift - dep, bound(v.vertex)) {
                    return false;
                }
                last[v.vertex] = v.depart + shift;
            }
        }
        true
    }
}

/// A finite sequence of `(vertex, hold)` steps, repeated periodically.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimedWalk {
    steps: Vec<Step>,
}

impl TimedWalk {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    /// Zero-hold walk through `vertices`.
    pub fn from_vertices(vertices: &[usize]) -> Self {
        Self { steps: vertices.iter().map(|&vertex| Step { vertex, hold: 0.0 }).collect() }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.steps.first().map(|s| s.vertex)
    }

    pub fn last(&self) -> Option<usize> {
        self.steps.last().map(|s| s.vertex)
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.vertex)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.steps.iter().any(|s| s.vertex == v)
    }

    /// Distinct vertices in first-visit order.
    pub fn distinct(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        for v in self.vertices() {
            if !seen.contains(&v) {
                seen.push(v);
            }
        }
        seen
    }

    pub fn push(&mut self, vertex: usize, hold: f64) {
        self.steps.push(Step { vertex, hold });
    }

    /// Adds `extra` hold time to the last step.
    pub fn hold_last(&mut self, extra: f64) {
        if let Some(s) = self.steps.last_mut() {
            s.hold += extra;
        }
    }

    /// `[self, other]`.
    pub fn concat(&self, other: &TimedWalk) -> TimedWalk {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        TimedWalk { steps }
    }

    /// `l(W)`: edges between consecutive steps plus all holds. The closing
    /// edge back to the first vertex is not included.
    pub fn length(&self, dist: &DistanceMatrix) -> f64 {
        let holds: f64 = self.steps.iter().map(|s| s.hold).sum();
        let edges: f64 = self.steps.windows(2).map(|w| dist.get(w[0].vertex, w[1].vertex)).sum();
        holds + edges
    }

    /// Duration of one period: `l(W)` plus the closing edge.
    pub fn period(&self, dist: &DistanceMatrix) -> f64 {
        match (self.first(), self.last()) {
            (Some(a), Some(b)) => self.length(dist) + dist.get(b, a),
            _ => 0.0,
        }
    }

    pub fn timeline(&self, dist: &DistanceMatrix) -> Timeline {
        let mut visits = Vec::with_capacity(self.steps.len());
        let mut t = 0.0;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                t += dist.get(self.steps[i - 1].vertex, s.vertex);
            }
            visits.push(Visit { vertex: s.vertex, arrive: t, depart: t + s.hold });
            t += s.hold;
        }
        Timeline { visits, period: self.period(dist) }
    }

    /// Rotates the walk so it starts at the first occurrence of `v`.
    pub fn rotate_to(&self, v: usize) -> Option<TimedWalk> {
        let i = self.steps.iter().position(|s| s.vertex == v)?;
        let mut steps = self.steps[i..].to_vec();
        steps.extend_from_slice(&self.steps[..i]);
        Some(TimedWalk { steps })
    }
}

/// Single-robot feasibility of the periodic walk `Δ(W)`.
///
/// Each visited vertex must be revisited within its bound: `bounds[v]` when
/// given, else `r(v)`, with `r(depot) = D`. A walk that never reaches the
/// depot is infeasible when `D` is finite.
pub fn periodic_feasibility(w: &TimedWalk, inst: &MetricInstance, bounds: Option<&[f64]>) -> bool {
    if w.is_empty() {
        return true;
    }
    if let Some(mu) = inst.depot() {
        if inst.discharge().is_finite() && !w.contains(mu) {
            return false;
        }
    }
    let timeline = w.timeline(inst.distances());
    match bounds {
        Some(b) => timeline.feasible(inst.n_nodes(), |v| b[v]),
        None => timeline.feasible(inst.n_nodes(), |v| inst.latency(v)),
    }
}

/// Depot-rooted cycles joined into one walk through the shared depot.
///
/// A cycle that does not end at the depot is closed implicitly. The result
/// starts and ends at the depot.
pub fn concat_cycles(cycles: &[TimedWalk], depot: usize) -> Result<TimedWalk> {
    let mut out = TimedWalk::default();
    for (i, c) in cycles.iter().enumerate() {
        if c.first() != Some(depot) {
            return Err(Error::NotRooted(format!("cycle {i} does not start at the depot")));
        }
        let mut steps = c.steps().to_vec();
        if steps.len() == 1 || steps.last().map(|s| s.vertex) != Some(depot) {
            steps.push(Step { vertex: depot, hold: 0.0 });
        }
        if out.is_empty() {
            out.steps = steps;
        } else {
            out.hold_last(steps[0].hold);
            out.steps.extend_from_slice(&steps[1..]);
        }
    }
    Ok(out)
}

/// A robot following walk `walk` of a [`Solution`], lagging `offset` time
/// units behind a robot that starts the walk at time 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Robot {
    pub walk: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionProvenance {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

/// A set of periodic walks with the robots placed on them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Solution {
    pub walks: Vec<TimedWalk>,
    pub robots: Vec<Robot>,
    /// For partitioned planners: the vertices each walk is responsible for.
    pub responsibility: Option<Vec<Vec<usize>>>,
    pub provenance: SolutionProvenance,
}

impl Solution {
    pub fn new(algorithm: &str) -> Self {
        Self {
            provenance: SolutionProvenance { algorithm: algorithm.to_string(), params: BTreeMap::new() },
            ..Default::default()
        }
    }

    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    /// Adds a walk with `k` robots at offsets `j P / k`.
    pub fn add_spaced(&mut self, walk: TimedWalk, k: usize, dist: &DistanceMatrix) -> Result<usize> {
        if k == 0 {
            return Err(Error::NoRobots);
        }
        let p = walk.period(dist);
        let idx = self.walks.len();
        self.walks.push(walk);
        self.robots.extend((0..k).map(|j| Robot { walk: idx, offset: j as f64 * p / k as f64 }));
        Ok(idx)
    }

    /// Robots on walk `i`.
    pub fn robots_on(&self, i: usize) -> usize {
        self.robots.iter().filter(|r| r.walk == i).count()
    }

    pub fn set_param(&mut self, key: &str, value: impl ToString) {
        self.provenance.params.insert(key.to_string(), value.to_string());
    }

    /// Appends another solution's walks and robots.
    pub fn absorb(&mut self, other: Solution) {
        let base = self.walks.len();
        let resp = match (self.responsibility.take(), other.responsibility) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (None, None) if base == 0 => None,
            (a, b) => {
                let mut a = a.unwrap_or_else(|| self.walks.iter().map(TimedWalk::distinct).collect());
                a.extend(b.unwrap_or_else(|| other.walks.iter().map(TimedWalk::distinct).collect()));
                Some(a)
            }
        };
        self.walks.extend(other.walks);
        self.robots.extend(other.robots.into_iter().map(|r| Robot { walk: r.walk + base, offset: r.offset }));
        self.responsibility = resp;
    }

    /// Renames vertices, e.g. from a sub-instance back to its parent.
    pub fn map_vertices(&mut self, map: &[usize]) {
        for w in &mut self.walks {
            for s in &mut w.steps {
                s.vertex = map[s.vertex];
            }
        }
        if let Some(resp) = &mut self.responsibility {
            for set in resp {
                for v in set {
                    *v = map[*v];
                }
            }
        }
    }

    pub fn to_toml(&self) -> String {
        let file = SolutionFile {
            version: crate::instance::SCHEMA_VERSION,
            provenance: self.provenance.clone(),
            walk: self
                .walks
                .iter()
                .enumerate()
                .map(|(i, w)| WalkEntry {
                    steps: w.steps.clone(),
                    offsets: self.robots.iter().filter(|r| r.walk == i).map(|r| r.offset).collect(),
                    responsible: self.responsibility.as_ref().map(|r| r[i].clone()),
                })
                .collect(),
        };
        toml::to_string(&file).expect("solutions always serialize")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        let file: SolutionFile = toml::from_str(text).map_err(|e| e.to_string())?;
        file.into_solution().map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let file: SolutionFile = toml::from_str(&text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        file.into_solution()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_toml())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    version: u32,
    provenance: SolutionProvenance,
    #[serde(default)]
    walk: Vec<WalkEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkEntry {
    steps: Vec<Step>,
    offsets: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    responsible: Option<Vec<usize>>,
}

impl SolutionFile {
    fn into_solution(self) -> Result<Solution> {
        if self.version != crate::instance::SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.version,
                expected: crate::instance::SCHEMA_VERSION,
            });
        }
        let with_resp = self.walk.iter().filter(|w| w.responsible.is_some()).count();
        if with_resp != 0 && with_resp != self.walk.len() {
            return Err(Error::Malformed(
                "either every walk or no walk lists `responsible`".to_string(),
            ));
        }
        let mut sol = Solution { provenance: self.provenance, ..Default::default() };
        let mut resp = Vec::new();
        for (i, w) in self.walk.into_iter().enumerate() {
            for s in &w.steps {
                if !s.hold.is_finite() || s.hold < 0.0 {
                    return Err(Error::Malformed(format!("walk {i} has hold time {}", s.hold)));
                }
            }
            sol.walks.push(TimedWalk::new(w.steps));
            sol.robots.extend(w.offsets.into_iter().map(|offset| Robot { walk: i, offset }));
            if let Some(r) = w.responsible {
                resp.push(r);
            }
        }
        if with_resp > 0 {
            sol.responsibility = Some(resp);
        }
        Ok(sol)
    }
}

/// Realized latencies of a solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    /// `L(v)` per node; `+inf` when no robot visits `v`.
    pub latency: Vec<f64>,
    /// `C(v) = phi(v) L(v)` per node.
    pub weighted: Vec<f64>,
    /// `(departure, next arrival)` realizing `L(v)`, in the time frame of the
    /// common period of the robots visiting `v`.
    pub witness: Vec<Option<(f64, f64)>>,
    /// Longest depot absence of each walk, `None` without a depot.
    pub depot_gaps: Vec<Option<f64>>,
    /// Max of `C(v)` over monitored vertices.
    pub max_weighted: f64,
    /// Largest common period used for any vertex's fold.
    pub hyperperiod: f64,
}

impl LatencyReport {
    /// `max L(v) / r(v)` over constrained vertices.
    pub fn max_stretch(&self, inst: &MetricInstance) -> f64 {
        inst.constrained()
            .into_iter()
            .map(|v| self.latency[v] / inst.latency(v))
            .fold(0.0, f64::max)
    }

    /// Largest depot absence over all walks (0 without a depot).
    pub fn max_depot_gap(&self) -> f64 {
        self.depot_gaps.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Smallest common period `m P_max` (m up to `max_multiple`) of `periods`.
fn hyperperiod(periods: &[f64], max_multiple: u32) -> Result<f64> {
    let pmax = periods.iter().copied().fold(0.0, f64::max);
    if pmax <= 0.0 {
        return Ok(0.0);
    }
    'm: for m in 1..=max_multiple {
        let h = m as f64 * pmax;
        for &p in periods.iter().filter(|&&p| p > 0.0) {
            let q = (h / p).round();
            if (q * p - h).abs() > 1e-8 * h.max(1.0) {
                continue 'm;
            }
        }
        return Ok(h);
    }
    Err(Error::Incommensurable { multiple: max_multiple })
}

/// Largest cyclic gap between occupancy intervals folded onto `[0, h)`.
fn cyclic_max_gap(mut iv: Vec<(f64, f64)>, h: f64) -> (f64, Option<(f64, f64)>) {
    if iv.is_empty() {
        return (f64::INFINITY, None);
    }
    let tol = EPS * h.max(1.0);
    iv.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for (s, e) in iv {
        match merged.last_mut() {
            Some(last) if s <= last.1 + tol => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    let mut best = (0.0, None);
    for i in 0..merged.len() {
        let dep = merged[i].1;
        let arr = if i + 1 < merged.len() { merged[i + 1].0 } else { merged[0].0 + h };
        let gap = arr - dep;
        if gap > tol && gap > best.0 {
            best = (gap, Some((dep, arr)));
        }
    }
    best
}

/// Steady-state latency of every vertex under all robots of `sol`.
///
/// For each vertex, the visits of the robots whose walks contain it are
/// folded onto their common period and the largest cyclic gap between a
/// departure and the next arrival (by any robot) is `L(v)`. Simultaneous
/// arrival and departure close the gap. Every walk visits the depot, so its
/// robots may lack a common period; the depot entry then falls back to the
/// smallest single-walk depot gap.
pub fn latency_of(sol: &Solution, inst: &MetricInstance, cfg: &PlannerConfig) -> Result<LatencyReport> {
    let dist = inst.distances();
    let n = inst.n_nodes();
    for (i, w) in sol.walks.iter().enumerate() {
        if let Some(v) = w.vertices().find(|&v| v >= n) {
            return Err(Error::Malformed(format!("walk {i} visits unknown vertex {v}")));
        }
    }
    if let Some(r) = sol.robots.iter().find(|r| r.walk >= sol.walks.len() || !r.offset.is_finite()) {
        return Err(Error::Malformed(format!("robot on walk {} is misplaced", r.walk)));
    }
    let timelines: Vec<Timeline> = sol.walks.iter().map(|w| w.timeline(dist)).collect();

    let depot_gaps: Vec<Option<f64>> = timelines
        .iter()
        .map(|tl| {
            inst.depot().map(|mu| {
                tl.gaps().into_iter().find(|&(v, _)| v == mu).map_or(f64::INFINITY, |(_, g)| g)
            })
        })
        .collect();

    let mut visitors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, r) in sol.robots.iter().enumerate() {
        for v in sol.walks[r.walk].distinct() {
            visitors[v].push(i);
        }
    }
    let mut latency = vec![f64::INFINITY; n];
    let mut witness = vec![None; n];
    let mut h_max = 0.0f64;
    for v in 0..n {
        if visitors[v].is_empty() {
            continue;
        }
        let periods: Vec<f64> = visitors[v].iter().map(|&i| timelines[sol.robots[i].walk].period).collect();
        if periods.iter().any(|&p| p <= 0.0) {
            latency[v] = 0.0;
            continue;
        }
        let h = match hyperperiod(&periods, cfg.hyperperiod_multiple) {
            Ok(h) => h,
            Err(_) if Some(v) == inst.depot() => {
                latency[v] = depot_gaps.iter().flatten().copied().fold(f64::INFINITY, f64::min);
                continue;
            }
            Err(e) => return Err(e),
        };
        h_max = h_max.max(h);
        let mut occupancy = Vec::new();
        for &i in &visitors[v] {
            let r = &sol.robots[i];
            let tl = &timelines[r.walk];
            let copies = (h / tl.period).round() as usize;
            for q in 0..copies {
                let base = q as f64 * tl.period + r.offset;
                for vis in tl.visits.iter().filter(|x| x.vertex == v) {
                    let s = (vis.arrive + base).rem_euclid(h);
                    let e = s + (vis.depart - vis.arrive);
                    if e > h {
                        occupancy.push((s, h));
                        occupancy.push((0.0, e - h));
                    } else {
                        occupancy.push((s, e));
                    }
                }
            }
        }
        let (gap, wit) = cyclic_max_gap(occupancy, h);
        latency[v] = gap;
        witness[v] = wit;
    }
    let weighted: Vec<f64> = (0..n)
        .map(|v| if inst.weight(v) == 0.0 { 0.0 } else { inst.weight(v) * latency[v] })
        .collect();
    let max_weighted = inst.vertices().map(|v| weighted[v]).fold(0.0, f64::max);

    Ok(LatencyReport { latency, weighted, witness, depot_gaps, max_weighted, hyperperiod: h_max })
}

/// `k` robots equally spaced on `w`.
pub fn equally_space(w: &TimedWalk, k: usize, inst: &MetricInstance) -> Result<Solution> {
    let mut sol = Solution::new("equally_space");
    sol.add_spaced(w.clone(), k, inst.distances())?;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{metric_closure, Edge};

    /// Vertices a=0, b=1, c=2 with unit edges a-b and a-c, no depot.
    fn unit_star(r: [f64; 3]) -> MetricInstance {
        let edges = vec![Edge { u: 0, v: 1, length: 1.0 }, Edge { u: 0, v: 2, length: 1.0 }];
        let dist = metric_closure(3, &edges).unwrap();
        MetricInstance::new(dist, None, r.to_vec(), vec![1.0; 3], f64::INFINITY).unwrap()
    }

    fn unit_star_walk() -> TimedWalk {
        TimedWalk::from_vertices(&[0, 1, 0, 2, 0])
    }

    fn unit_pair() -> MetricInstance {
        let dist = DistanceMatrix::from_fn(2, |u, v| if u == v { 0.0 } else { 1.0 });
        MetricInstance::new(dist, None, vec![10.0; 2], vec![1.0; 2], f64::INFINITY).unwrap()
    }

    #[test]
    fn out_and_back_length() {
        let inst = unit_pair();
        assert_eq!(TimedWalk::from_vertices(&[0, 1, 0]).length(inst.distances()), 2.0);
    }

    #[test]
    fn unit_star_walk_length_is_four() {
        let inst = unit_star([2.0, 4.0, 4.0]);
        assert_eq!(unit_star_walk().length(inst.distances()), 4.0);
        assert_eq!(unit_star_walk().period(inst.distances()), 4.0);
    }

    #[test]
    fn held_pair_period() {
        let inst = unit_pair();
        let w = TimedWalk::new(vec![Step { vertex: 0, hold: 1.0 }, Step { vertex: 1, hold: 1.0 }]);
        assert_eq!(w.length(inst.distances()), 3.0);
        assert_eq!(w.period(inst.distances()), 4.0);
    }

    fn report(inst: &MetricInstance, w: TimedWalk, offsets: &[f64]) -> LatencyReport {
        let mut sol = Solution::new("test");
        sol.walks.push(w);
        sol.robots = offsets.iter().map(|&offset| Robot { walk: 0, offset }).collect();
        latency_of(&sol, inst, &PlannerConfig::default()).unwrap()
    }

    #[test]
    fn star_single_robot() {
        let inst = unit_star([2.0, 4.0, 4.0]);
        assert_eq!(report(&inst, unit_star_walk(), &[0.0]).latency, vec![2.0, 4.0, 4.0]);
    }

    #[test]
    fn star_lag_two_keeps_a() {
        let inst = unit_star([2.0, 4.0, 4.0]);
        assert_eq!(report(&inst, unit_star_walk(), &[0.0, 2.0]).latency[0], 2.0);
    }

    #[test]
    fn star_lag_one() {
        let inst = unit_star([2.0, 4.0, 4.0]);
        assert_eq!(report(&inst, unit_star_walk(), &[0.0, 1.0]).latency, vec![1.0, 3.0, 3.0]);
    }

    #[test]
    fn unvisited_vertex_is_infinite() {
        let inst = unit_star([2.0, 4.0, 4.0]);
        let r = report(&inst, TimedWalk::from_vertices(&[0, 1]), &[0.0]);
        assert_eq!(r.latency[2], f64::INFINITY);
        assert_eq!(r.max_weighted, f64::INFINITY);
    }

    #[test]
    fn feasibility_examples() {
        assert!(periodic_feasibility(&unit_star_walk(), &unit_star([2.0, 4.0, 4.0]), None));
        assert!(!periodic_feasibility(&unit_star_walk(), &unit_star([1.0, 4.0, 4.0]), None));
    }

    fn star() -> MetricInstance {
        let dist = DistanceMatrix::from_fn(4, |u, v| match (u, v) {
            _ if u == v => 0.0,
            (0, _) | (_, 0) => 1.0,
            _ => 2.0,
        });
        MetricInstance::new(dist, Some(0), vec![0.0, 20.0, 20.0, 20.0], vec![1.0; 4], 4.0).unwrap()
    }

    #[test]
    fn depot_alone_is_feasible() {
        assert!(periodic_feasibility(&TimedWalk::from_vertices(&[0]), &star(), None));
    }

    #[test]
    fn walk_without_depot_cannot_recharge() {
        assert!(!periodic_feasibility(&TimedWalk::from_vertices(&[1, 2]), &star(), None));
    }

    #[test]
    fn concat_single_cycle_is_identity() {
        let c = TimedWalk::from_vertices(&[0, 1, 0]);
        assert_eq!(concat_cycles(std::slice::from_ref(&c), 0).unwrap(), c);
    }

    #[test]
    fn concat_adds_lengths_and_bounds_depot_gap() {
        let inst = star();
        let a = TimedWalk::from_vertices(&[0, 1]);
        let b = TimedWalk::from_vertices(&[0, 2, 3, 0]);
        let w = concat_cycles(&[a, b], 0).unwrap();
        assert_eq!(w, TimedWalk::from_vertices(&[0, 1, 0, 2, 3, 0]));
        assert_eq!(w.length(inst.distances()), 2.0 + 4.0);
        let tl = w.timeline(inst.distances());
        let gap = tl.gaps().into_iter().find(|&(v, _)| v == 0).unwrap().1;
        assert_eq!(gap, 4.0);
    }

    #[test]
    fn concat_rejects_unrooted() {
        let c = TimedWalk::from_vertices(&[1, 0]);
        assert!(matches!(concat_cycles(&[c], 0), Err(Error::NotRooted(_))));
    }

    #[test]
    fn spacing_halves_a_cycle() {
        // 4-cycle of unit edges
        let dist = DistanceMatrix::from_fn(4, |u, v| {
            let d = (u as i64 - v as i64).rem_euclid(4).min((v as i64 - u as i64).rem_euclid(4));
            d as f64
        });
        let inst = MetricInstance::new(dist, None, vec![4.0; 4], vec![1.0; 4], f64::INFINITY).unwrap();
        let sol = equally_space(&TimedWalk::from_vertices(&[0, 1, 2, 3]), 2, &inst).unwrap();
        let r = latency_of(&sol, &inst, &PlannerConfig::default()).unwrap();
        assert_eq!(r.latency, vec![2.0; 4]);
    }

    #[test]
    fn zero_robots_is_an_error() {
        assert!(matches!(equally_space(&unit_star_walk(), 0, &unit_star([2.0, 4.0, 4.0])), Err(Error::NoRobots)));
    }

    #[test]
    fn incommensurable_periods_are_reported() {
        let dist = DistanceMatrix::from_fn(3, |u, v| match (u.min(v), u.max(v)) {
            (a, b) if a == b => 0.0,
            (0, 1) => 1.0,
            (0, 2) => std::f64::consts::SQRT_2,
            _ => 1.0 + std::f64::consts::SQRT_2,
        });
        let inst = MetricInstance::new(dist, None, vec![9.0; 3], vec![1.0; 3], f64::INFINITY).unwrap();
        let mut sol = Solution::new("t");
        sol.add_spaced(TimedWalk::from_vertices(&[0, 1]), 1, inst.distances()).unwrap();
        sol.add_spaced(TimedWalk::from_vertices(&[0, 2]), 1, inst.distances()).unwrap();
        let cfg = PlannerConfig { hyperperiod_multiple: 8, ..Default::default() };
        assert!(matches!(latency_of(&sol, &inst, &cfg), Err(Error::Incommensurable { multiple: 8 })));
    }

    #[test]
    fn stationary_robot_holds_latency_at_zero() {
        let inst = unit_star([2.0, 4.0, 4.0]);
        let mut sol = Solution::new("t");
        sol.add_spaced(TimedWalk::from_vertices(&[1]), 1, inst.distances()).unwrap();
        let r = latency_of(&sol, &inst, &PlannerConfig::default()).unwrap();
        assert_eq!(r.latency[1], 0.0);
    }

    #[test]
    fn solution_round_trip() {
        let inst = unit_star([2.0, 4.0, 4.0]);
        let mut sol = Solution::new("test");
        sol.add_spaced(unit_star_walk(), 3, inst.distances()).unwrap();
        sol.add_spaced(TimedWalk::new(vec![Step { vertex: 1, hold: 0.1 }]), 1, inst.distances()).unwrap();
        sol.responsibility = Some(vec![vec![0, 2], vec![1]]);
        sol.set_param("seed", 3);
        let back = Solution::from_toml(&sol.to_toml()).unwrap();
        assert_eq!(back, sol);
    }

    #[test]
    fn corrupted_solution_fails_to_parse() {
        assert!(Solution::from_toml("version = 1\n[provenance]\nalgorithm = 3").is_err());
    }
}
