//! Partitioned greedy planners driven by time-to-expiry.
//!
//! Each planner grows one walk from the depot, appending vertices in order of
//! increasing time to expiry `s_i` while the closed walk stays periodically
//! feasible. Vertices that cannot be added expire and are left for the next
//! robot. The recharging constraint is handled as the latency `r(mu) = D`.

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::instance::MetricInstance;
use crate::subroutines::orienteering::{orienteering, OrienteeringQuery};
use crate::walks::{periodic_feasibility, Solution, Timeline, TimedWalk, Visit};

/// Walk construction strategy for [`plan_partitioned`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builder {
    Greedy,
    Recursive,
    Orienteering,
}

impl Builder {
    pub fn name(self) -> &'static str {
        match self {
            Builder::Greedy => "greedy",
            Builder::Recursive => "recursive",
            Builder::Orienteering => "orienteering",
        }
    }
}

/// State of one walk under construction.
///
/// Times to expiry are derived from the last departure of each vertex:
/// `s_i = r(i) - (now - last departure)`, or `r(i) - now` before the first
/// visit, which is exactly the step recursion of the expiry dynamics.
#[derive(Debug, Clone)]
pub struct GreedyState<'a> {
    inst: &'a MetricInstance,
    walk: TimedWalk,
    visits: Vec<Visit>,
    start: usize,
    now: f64,
    last_departure: Vec<f64>,
    expired: Vec<bool>,
    allowed: Vec<bool>,
}

impl<'a> GreedyState<'a> {
    /// Fresh walk at the depot, or at the tightest remaining vertex when the
    /// instance has no depot.
    pub fn new(inst: &'a MetricInstance, remaining: &[usize]) -> Self {
        let n = inst.n_nodes();
        let mut allowed = vec![false; n];
        for &v in remaining {
            allowed[v] = true;
        }
        let start = inst.depot().unwrap_or_else(|| {
            *remaining
                .iter()
                .min_by(|&&a, &&b| inst.latency(a).total_cmp(&inst.latency(b)).then(a.cmp(&b)))
                .expect("remaining vertices")
        });
        allowed[start] = true;
        let mut st = Self {
            inst,
            walk: TimedWalk::default(),
            visits: Vec::new(),
            start,
            now: 0.0,
            last_departure: vec![f64::NAN; n],
            expired: vec![false; n],
            allowed,
        };
        st.append(start, 0.0);
        st
    }

    pub fn walk(&self) -> &TimedWalk {
        &self.walk
    }

    pub fn current(&self) -> usize {
        self.walk.last().unwrap()
    }

    /// Elapsed time at departure from the current vertex.
    pub fn now(&self) -> f64 {
        self.now
    }

    /// Time to expiry `s_v`.
    pub fn expiry(&self, v: usize) -> f64 {
        let dep = self.last_departure[v];
        let idle = if dep.is_nan() { self.now } else { self.now - dep };
        self.inst.latency(v) - idle
    }

    /// Remaining charge `c = s_mu`.
    pub fn charge(&self) -> Option<f64> {
        self.inst.depot().map(|mu| self.expiry(mu))
    }

    pub fn is_expired(&self, v: usize) -> bool {
        self.expired[v]
    }

    pub fn on_walk(&self, v: usize) -> bool {
        !self.last_departure[v].is_nan()
    }

    fn append(&mut self, v: usize, hold: f64) {
        if let Some(last) = self.walk.last() {
            self.now += self.inst.dist(last, v);
        }
        self.visits.push(Visit { vertex: v, arrive: self.now, depart: self.now + hold });
        self.now += hold;
        self.last_departure[v] = self.now;
        self.walk.push(v, hold);
    }

    /// Remaining, unexpired vertices (and the depot) other than the current
    /// one, by increasing time to expiry, ties by id.
    fn candidates(&self) -> Vec<usize> {
        let cur = self.current();
        let mut c: Vec<usize> = (0..self.allowed.len())
            .filter(|&v| self.allowed[v] && !self.expired[v] && v != cur)
            .collect();
        c.sort_by(|&a, &b| self.expiry(a).total_cmp(&self.expiry(b)).then(a.cmp(&b)));
        c
    }

    /// Remaining vertices neither on the walk nor expired.
    fn open(&self) -> usize {
        (0..self.allowed.len())
            .filter(|&v| self.allowed[v] && Some(v) != self.inst.depot() && !self.on_walk(v) && !self.expired[v])
            .count()
    }

    /// Feasibility of `[W, path...]` with the final vertex reached `leg`
    /// time units after departing the current vertex (direct travel when
    /// `None`).
    fn feasible_with(&self, path: &[usize], leg: Option<f64>) -> bool {
        let mut visits = self.visits.clone();
        let mut t = self.now;
        let mut last = self.current();
        for (i, &v) in path.iter().enumerate() {
            t = match leg {
                Some(d) if i + 1 == path.len() => self.now + d,
                _ => t + self.inst.dist(last, v),
            };
            visits.push(Visit { vertex: v, arrive: t, depart: t });
            last = v;
        }
        let tl = Timeline { visits, period: t + self.inst.dist(last, self.start) };
        tl.feasible(self.inst.n_nodes(), |v| self.inst.latency(v))
    }

    /// Vertices of the remaining set covered by the walk.
    pub fn covered(&self) -> Vec<usize> {
        (0..self.allowed.len())
            .filter(|&v| self.allowed[v] && Some(v) != self.inst.depot() && self.on_walk(v))
            .collect()
    }

    /// First candidate `y` (by expiry) with `[W, y]` feasible; candidates
    /// tried before it expire.
    fn pick_target(&mut self) -> Option<usize> {
        for y in self.candidates() {
            if self.feasible_with(&[y], None) {
                return Some(y);
            }
            self.expired[y] = true;
        }
        None
    }

    fn debug_check(&self) {
        debug_assert!(
            periodic_feasibility(&self.walk, self.inst, None),
            "greedy walk became infeasible: {:?}",
            self.walk
        );
    }
}

fn step_cap(remaining: &[usize], cfg: &PlannerConfig) -> usize {
    cfg.max_steps_per_vertex.max(1) * (remaining.len() + 1)
}

/// Simple greedy: repeatedly append the most urgent vertex that keeps the
/// closed walk feasible.
pub fn greedy_walk(inst: &MetricInstance, remaining: &[usize], cfg: &PlannerConfig) -> (TimedWalk, Vec<usize>) {
    let mut st = GreedyState::new(inst, remaining);
    let mut steps = 0;
    while st.open() > 0 && steps < step_cap(remaining, cfg) {
        match st.pick_target() {
            Some(y) => st.append(y, 0.0),
            None => break,
        }
        st.debug_check();
        steps += 1;
    }
    let covered = st.covered();
    (st.walk, covered)
}

/// Greedy with detours: before travelling to the target, interpose the most
/// urgent vertex that keeps `[W, j, ..., target]` feasible, recursively.
pub fn recursive_greedy_walk(inst: &MetricInstance, remaining: &[usize], cfg: &PlannerConfig) -> (TimedWalk, Vec<usize>) {
    let mut st = GreedyState::new(inst, remaining);
    let mut steps = 0;
    while st.open() > 0 && steps < step_cap(remaining, cfg) {
        let Some(target) = st.pick_target() else { break };
        let mut chain = vec![target];
        loop {
            let detour = st
                .candidates()
                .into_iter()
                .filter(|v| !chain.contains(v))
                .find(|&j| {
                    let mut path = vec![j];
                    path.extend_from_slice(&chain);
                    st.feasible_with(&path, None)
                });
            match detour {
                Some(j) => chain.insert(0, j),
                None => break,
            }
        }
        for v in chain {
            st.append(v, 0.0);
        }
        st.debug_check();
        steps += 1;
    }
    let covered = st.covered();
    (st.walk, covered)
}

/// Orienteering greedy: spend the largest feasible leg time `d` towards the
/// target on an orienteering path that favours urgent, unvisited vertices.
///
/// The leg travels the path and then holds the slack at the target, so the
/// target departs exactly `d` after the current vertex as in the feasibility
/// search.
pub fn orienteering_walk(inst: &MetricInstance, remaining: &[usize], cfg: &PlannerConfig) -> Result<(TimedWalk, Vec<usize>)> {
    let mut st = GreedyState::new(inst, remaining);
    let r_min = inst.constrained().iter().map(|&v| inst.latency(v)).fold(f64::INFINITY, f64::min);
    let tol = (cfg.leg_tolerance * r_min).max(1e-12);
    let mut steps = 0;
    while st.open() > 0 && steps < step_cap(remaining, cfg) {
        let Some(y) = st.pick_target() else { break };
        let x = st.current();
        let lo0 = inst.dist(x, y);
        let hi0 = st.expiry(y).max(lo0);
        let d = if st.feasible_with(&[y], Some(hi0)) {
            hi0
        } else {
            let (mut lo, mut hi) = (lo0, hi0);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if st.feasible_with(&[y], Some(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };

        let back = inst.dist(y, st.start);
        for z in 0..inst.n_nodes() {
            if st.allowed[z] && Some(z) != inst.depot() && !st.expired[z] && !st.on_walk(z) && z != y && st.expiry(z) < d + back {
                st.expired[z] = true;
            }
        }

        let mut scores = vec![0.0; inst.n_nodes()];
        let mut cands = Vec::new();
        for (z, score) in scores.iter_mut().enumerate() {
            if st.allowed[z] && Some(z) != inst.depot() && !st.expired[z] {
                let mut psi = 1.0 / st.expiry(z).max(1e-12);
                if st.on_walk(z) {
                    psi *= cfg.revisit_discount;
                }
                *score = psi;
                cands.push(z);
            }
        }
        let q = OrienteeringQuery { candidates: &cands, start: x, end: y, budget: d, scores: &scores };
        let path = orienteering(inst.distances(), &q, cfg)?;
        for &z in &path.path[1..path.path.len() - 1] {
            st.append(z, 0.0);
        }
        st.append(y, (d - path.length).max(0.0));
        st.debug_check();
        steps += 1;
    }
    let covered = st.covered();
    Ok((st.walk, covered))
}

/// Runs `builder` on the remaining vertices until every constrained vertex
/// is covered, one robot per walk.
pub fn plan_partitioned(inst: &MetricInstance, builder: Builder, cfg: &PlannerConfig) -> Result<Solution> {
    inst.ensure_valid()?;
    let mut remaining = inst.constrained();
    let mut sol = Solution::new(builder.name());
    let mut resp = Vec::new();
    while !remaining.is_empty() {
        let (walk, covered) = match builder {
            Builder::Greedy => greedy_walk(inst, &remaining, cfg),
            Builder::Recursive => recursive_greedy_walk(inst, &remaining, cfg),
            Builder::Orienteering => orienteering_walk(inst, &remaining, cfg)?,
        };
        if covered.is_empty() {
            return Err(Error::Invalid(format!("vertex {} cannot be served by any single walk", remaining[0])));
        }
        remaining.retain(|v| !covered.contains(v));
        sol.add_spaced(walk, 1, inst.distances())?;
        resp.push(covered);
    }
    sol.responsibility = Some(resp);
    Ok(sol)
}
