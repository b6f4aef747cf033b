//! Min-max weighted latency planners for a fixed fleet.
//!
//! Weight levels are dyadic relative to the heaviest vertex:
//! `V_i = { v : phi_max / 2^(i+1) < phi(v) <= phi_max / 2^i }`. Level `i` is
//! covered by rooted cycles split into `2^i` pieces, and the single-robot
//! walk interleaves pieces so heavier levels are visited more often.

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::instance::MetricInstance;
use crate::subroutines::rmccp;
use crate::subroutines::tsp::tsp_order;
use crate::walks::{concat_cycles, latency_of, Solution, TimedWalk};
use crate::EPS;

/// Non-empty weight levels, heaviest first, with their level index.
pub fn weight_levels(inst: &MetricInstance) -> Vec<(usize, Vec<usize>)> {
    let vs: Vec<usize> = inst.vertices().collect();
    if vs.is_empty() {
        return Vec::new();
    }
    let phi_max = vs.iter().map(|&v| inst.weight(v)).fold(0.0, f64::max);
    let phi_min = vs.iter().map(|&v| inst.weight(v)).fold(f64::INFINITY, f64::min);
    let ratio = phi_max / phi_min;
    let k = ratio.log2().round();
    let rho = if (ratio - 2f64.powf(k)).abs() <= EPS * ratio { ratio + 1.0 } else { ratio };
    let mut n = 0usize;
    while 2f64.powi(n as i32) < rho * (1.0 - EPS) {
        n += 1;
    }
    let mut levels = vec![Vec::new(); n.max(1)];
    for v in vs {
        let rel = inst.weight(v) / phi_max;
        let mut i = 0;
        while i + 1 < levels.len() && rel <= 2f64.powi(-(i as i32 + 1)) * (1.0 + EPS) {
            i += 1;
        }
        levels[i].push(v);
    }
    levels.into_iter().enumerate().filter(|(_, l)| !l.is_empty()).collect()
}

/// The interleaved single-robot walk and its parts.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryWalkSchedule {
    /// `(level index i, vertices)` for non-empty levels.
    pub levels: Vec<(usize, Vec<usize>)>,
    /// Number of segments `t`.
    pub t: usize,
    /// `pieces[l][j]` is `W_{i,j}` for the `l`-th non-empty level; empty
    /// pieces are allowed when a level has fewer cycles than pieces.
    pub pieces: Vec<Vec<TimedWalk>>,
    pub segments: Vec<TimedWalk>,
    pub walk: TimedWalk,
}

/// Splits cycles into `parts` groups, longest first onto the lightest group.
fn balance(cycles: Vec<(TimedWalk, f64)>, parts: usize) -> Vec<Vec<TimedWalk>> {
    let mut order: Vec<usize> = (0..cycles.len()).collect();
    order.sort_by(|&a, &b| cycles[b].1.total_cmp(&cycles[a].1).then(a.cmp(&b)));
    let mut load = vec![0.0f64; parts];
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for c in order {
        let g = (0..parts).min_by(|&a, &b| load[a].total_cmp(&load[b]).then(a.cmp(&b))).unwrap();
        load[g] += cycles[c].1;
        groups[g].push(c);
    }
    groups
        .into_iter()
        .map(|mut g| {
            g.sort_unstable();
            g.into_iter().map(|c| cycles[c].0.clone()).collect()
        })
        .collect()
}

/// Joins walks, merging a repeated vertex at each seam.
fn join(parts: &[TimedWalk]) -> TimedWalk {
    let mut out = TimedWalk::default();
    for p in parts {
        for (i, s) in p.steps().iter().enumerate() {
            if i == 0 && out.last() == Some(s.vertex) {
                out.hold_last(s.hold);
            } else {
                out.push(s.vertex, s.hold);
            }
        }
    }
    out
}

fn rooted_mode(inst: &MetricInstance, cfg: &PlannerConfig) -> bool {
    inst.depot().is_some() && !cfg.infinite_discharge_mode
}

/// Pieces `W_{i,0..2^i}` of one level.
fn level_pieces(inst: &MetricInstance, level: usize, vs: &[usize], cfg: &PlannerConfig) -> Result<Vec<TimedWalk>> {
    let parts = 1usize << level;
    let dist = inst.distances();
    if rooted_mode(inst, cfg) {
        let mu = inst.depot().unwrap();
        let cover = rmccp(dist, vs, mu, inst.discharge(), cfg)?;
        let cycles = cover.cycles.into_iter().map(|c| {
            let l = c.period(dist);
            (c, l)
        });
        balance(cycles.collect(), parts)
            .into_iter()
            .map(|g| if g.is_empty() { Ok(TimedWalk::default()) } else { concat_cycles(&g, mu) })
            .collect()
    } else {
        let tour = tsp_order(dist, vs, cfg).unwrap_or_default();
        let per = tour.len().div_ceil(parts).max(1);
        Ok((0..parts)
            .map(|j| {
                let lo = (j * per).min(tour.len());
                let hi = ((j + 1) * per).min(tour.len());
                TimedWalk::from_vertices(&tour[lo..hi])
            })
            .collect())
    }
}

/// Builds the interleaved walk `S = [S_1, ..., S_t]`.
pub fn binary_walk_schedule(inst: &MetricInstance, cfg: &PlannerConfig) -> Result<BinaryWalkSchedule> {
    let levels = weight_levels(inst);
    let top = levels.last().map_or(0, |(i, _)| *i);
    let t = 1usize << (top + 2);
    let pieces: Vec<Vec<TimedWalk>> = levels
        .iter()
        .map(|(i, vs)| level_pieces(inst, *i, vs, cfg))
        .collect::<Result<_>>()?;
    let depot = inst.depot();
    let root = depot.map(|mu| TimedWalk::from_vertices(&[mu]));
    let mut segments = Vec::with_capacity(t);
    for k in 0..t {
        let mut parts = Vec::new();
        if let Some(r) = &root {
            parts.push(r.clone());
        }
        for ((i, _), p) in levels.iter().zip(&pieces) {
            let piece = &p[k % (1usize << i)];
            if piece.is_empty() {
                continue;
            }
            parts.push(piece.clone());
            if let Some(r) = &root {
                parts.push(r.clone());
            }
        }
        segments.push(join(&parts));
    }
    let mut walk = join(&segments);
    if walk.is_empty() {
        if let Some(mu) = depot {
            walk.push(mu, 0.0);
        }
    }
    if depot.is_some() && walk.len() > 1 && walk.last() == walk.first() {
        let hold = walk.steps().last().unwrap().hold;
        let mut steps = walk.steps().to_vec();
        steps.pop();
        steps[0].hold += hold;
        walk = TimedWalk::new(steps);
    }
    Ok(BinaryWalkSchedule { levels, t, pieces, segments, walk })
}

/// Single-robot min-max weighted latency walk.
pub fn minmax_one_robot(inst: &MetricInstance, cfg: &PlannerConfig) -> Result<TimedWalk> {
    inst.ensure_valid()?;
    Ok(binary_walk_schedule(inst, cfg)?.walk)
}

fn level_walk(inst: &MetricInstance, vs: &[usize], cfg: &PlannerConfig) -> Result<TimedWalk> {
    let dist = inst.distances();
    if rooted_mode(inst, cfg) {
        let mu = inst.depot().unwrap();
        concat_cycles(&rmccp(dist, vs, mu, inst.discharge(), cfg)?.cycles, mu)
    } else {
        let mut set = vs.to_vec();
        if let Some(mu) = inst.depot() {
            set.insert(0, mu);
        }
        Ok(TimedWalk::from_vertices(&tsp_order(dist, &set, cfg).unwrap_or_default()))
    }
}

/// `R` robots for min-max weighted latency.
///
/// With fewer robots than non-empty weight levels, contiguous bands of
/// levels each get one interleaved walk. Otherwise every level's cover walk
/// gets `floor(R / L)` equally spaced robots and each remaining robot goes to
/// the level with the largest `phi_max(V_i) l(W_i) / k_i`.
///
/// That rule alone is not monotone in `R` (going from `R` to `R + 1` can
/// reset a level from `floor(R / L) + 2` robots to `floor(R / L) + 1`), so
/// the result for `R` is the cheaper of the plain plan and the best plan for
/// `R - 1` with one more robot inserted into the largest gap at the
/// worst vertex. The cost is therefore non-increasing in `R`.
pub fn latency_walks(inst: &MetricInstance, robots: usize, cfg: &PlannerConfig) -> Result<Solution> {
    if robots == 0 {
        return Err(Error::NoRobots);
    }
    let mut sweep = Sweep::new(inst, cfg)?;
    let mut sol = sweep.get(robots)?.0.clone();
    sol.set_param("robots", robots);
    Ok(sol)
}

/// Guarded [`latency_walks`] plans for `R = 1, 2, ...`, built incrementally.
struct Sweep<'a> {
    inst: &'a MetricInstance,
    cfg: &'a PlannerConfig,
    levels: Vec<(usize, Vec<usize>)>,
    cache: Option<Vec<TimedWalk>>,
    best: Vec<(Solution, f64)>,
}

impl<'a> Sweep<'a> {
    fn new(inst: &'a MetricInstance, cfg: &'a PlannerConfig) -> Result<Self> {
        inst.ensure_valid()?;
        Ok(Sweep { inst, cfg, levels: weight_levels(inst), cache: None, best: Vec::new() })
    }

    fn get(&mut self, robots: usize) -> Result<&(Solution, f64)> {
        while self.best.len() < robots {
            let r = self.best.len() + 1;
            let plain = plan(self.inst, &self.levels, r, &mut self.cache, self.cfg)?;
            let plain_cost = latency_of(&plain, self.inst, self.cfg)?.max_weighted;
            let next = match self.best.last() {
                Some((prev, _)) => match add_robot(prev.clone(), self.inst, self.cfg)? {
                    (g, c) if c < plain_cost * (1.0 - EPS) => (g, c),
                    _ => (plain, plain_cost),
                },
                None => (plain, plain_cost),
            };
            self.best.push(next);
        }
        Ok(&self.best[robots - 1])
    }
}

/// The plain level plan, without the monotonicity guard.
pub fn latency_walks_plain(inst: &MetricInstance, robots: usize, cfg: &PlannerConfig) -> Result<Solution> {
    if robots == 0 {
        return Err(Error::NoRobots);
    }
    inst.ensure_valid()?;
    plan(inst, &weight_levels(inst), robots, &mut None, cfg)
}

fn plan(
    inst: &MetricInstance,
    levels: &[(usize, Vec<usize>)],
    robots: usize,
    cache: &mut Option<Vec<TimedWalk>>,
    cfg: &PlannerConfig,
) -> Result<Solution> {
    let l = levels.len();
    let dist = inst.distances();
    let mut sol = Solution::new("latency_walks");
    sol.set_param("robots", robots);
    if l == 0 {
        sol.responsibility = Some(Vec::new());
        return Ok(sol);
    }
    if robots < l {
        let mut resp = Vec::new();
        for j in 1..=robots {
            let lo = ((j - 1) * l).div_ceil(robots);
            let hi = (j * l).div_ceil(robots);
            let band: Vec<usize> = levels[lo..hi].iter().flat_map(|(_, vs)| vs.iter().copied()).collect();
            let (sub, map) = inst.restrict(&band)?;
            let mut part = Solution::default();
            part.add_spaced(minmax_one_robot(&sub, cfg)?, 1, sub.distances())?;
            part.map_vertices(&map);
            resp.push(band);
            sol.add_spaced(part.walks.pop().unwrap(), 1, dist)?;
        }
        sol.responsibility = Some(resp);
        return Ok(sol);
    }
    if cache.is_none() {
        *cache = Some(levels.iter().map(|(_, vs)| level_walk(inst, vs, cfg)).collect::<Result<_>>()?);
    }
    let walks = cache.as_ref().unwrap();
    let heaviest: Vec<f64> = levels
        .iter()
        .map(|(_, vs)| vs.iter().map(|&v| inst.weight(v)).fold(0.0, f64::max))
        .collect();
    let lengths: Vec<f64> = walks.iter().map(|w| w.period(dist)).collect();
    let mut counts = vec![robots / l; l];
    for _ in 0..robots - (robots / l) * l {
        let worst = (0..l)
            .max_by(|&a, &b| {
                let ca = heaviest[a] * lengths[a] / counts[a] as f64;
                let cb = heaviest[b] * lengths[b] / counts[b] as f64;
                ca.total_cmp(&cb).then(b.cmp(&a))
            })
            .unwrap();
        counts[worst] += 1;
    }
    for (w, &k) in walks.iter().zip(&counts) {
        sol.add_spaced(w.clone(), k, dist)?;
    }
    sol.responsibility = Some(levels.iter().map(|(_, vs)| vs.clone()).collect());
    Ok(sol)
}

/// Adds one robot to the walk serving the worst vertex, at the cyclic
/// midpoint between two existing robots that minimizes the cost.
fn add_robot(sol: Solution, inst: &MetricInstance, cfg: &PlannerConfig) -> Result<(Solution, f64)> {
    let rep = latency_of(&sol, inst, cfg)?;
    let worst = inst
        .vertices()
        .max_by(|&a, &b| rep.weighted[a].total_cmp(&rep.weighted[b]).then(b.cmp(&a)));
    let Some(w) = worst.and_then(|v| sol.walks.iter().position(|w| w.contains(v))) else {
        return Ok((sol, rep.max_weighted));
    };
    let p = sol.walks[w].period(inst.distances());
    let mut offs: Vec<f64> = sol.robots.iter().filter(|r| r.walk == w).map(|r| r.offset.rem_euclid(p.max(EPS))).collect();
    offs.sort_by(f64::total_cmp);
    let mut best: Option<(Solution, f64)> = None;
    for i in 0..offs.len() {
        let next = if i + 1 < offs.len() { offs[i + 1] } else { offs[0] + p };
        let mut cand = sol.clone();
        cand.robots.push(crate::walks::Robot { walk: w, offset: ((offs[i] + next) / 2.0).rem_euclid(p.max(EPS)) });
        let c = latency_of(&cand, inst, cfg)?.max_weighted;
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((cand, c));
        }
    }
    Ok(best.unwrap())
}

/// Outcome of [`bicriterion_min_robots`].
#[derive(Debug, Clone)]
pub struct Bicriterion {
    pub robots: usize,
    pub solution: Solution,
    /// `max_v L(v) / r(v)`.
    pub stretch: f64,
}

/// Smallest fleet whose [`latency_walks`] solution keeps every latency
/// within `cfg.stretch` times its constraint, under weights
/// `phi(v) = r_min / r(v)`. The search doubles `R` until the stretch is met
/// and then bisects the last interval.
pub fn bicriterion_min_robots(inst: &MetricInstance, cfg: &PlannerConfig) -> Result<Bicriterion> {
    inst.ensure_valid()?;
    let vs = inst.constrained();
    if vs.is_empty() {
        let mut solution = Solution::new("bicriterion");
        solution.responsibility = Some(Vec::new());
        return Ok(Bicriterion { robots: 0, solution, stretch: 0.0 });
    }
    let (sub, map) = inst.restrict(&vs)?;
    let r_min = vs.iter().map(|&v| inst.latency(v)).fold(f64::INFINITY, f64::min);
    let weights = (0..sub.n_nodes())
        .map(|v| if Some(v) == sub.depot() { 0.0 } else { r_min / sub.latency(v) })
        .collect();
    let weighted = sub.with_weights(weights)?;

    let mut sweep = Sweep::new(&weighted, cfg)?;
    let mut best = f64::INFINITY;
    let mut eval = |r: usize| -> Result<(bool, Solution, f64)> {
        let sol = sweep.get(r)?.0.clone();
        let rep = latency_of(&sol, &weighted, cfg)?;
        let stretch = rep.max_stretch(&weighted);
        let recharge_ok = weighted.depot().is_none() || rep.max_depot_gap() <= weighted.discharge() * (1.0 + EPS);
        best = best.min(stretch);
        Ok((stretch <= cfg.stretch * (1.0 + EPS) && recharge_ok, sol, stretch))
    };

    // Gallop to bracket the answer, then bisect; feasibility is monotone in
    // R because the guarded cost is.
    let max = vs.len();
    let mut lo = 1usize;
    let mut hi = 1usize;
    let (mut found, mut stretch) = loop {
        let (ok, sol, s) = eval(hi)?;
        if ok {
            break (sol, s);
        }
        if hi == max {
            return Err(Error::StretchUnreachable { max, target: cfg.stretch, best });
        }
        lo = hi + 1;
        hi = (hi * 2).min(max);
    };
    while lo < hi {
        let mid = (lo + hi) / 2;
        let (ok, sol, s) = eval(mid)?;
        if ok {
            hi = mid;
            found = sol;
            stretch = s;
        } else {
            lo = mid + 1;
        }
    }
    found.map_vertices(&map);
    found.provenance.algorithm = "bicriterion".to_string();
    found.set_param("stretch_target", cfg.stretch);
    Ok(Bicriterion { robots: hi, solution: found, stretch })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::DistanceMatrix;
    use crate::walks::periodic_feasibility;

    fn star(pos: &[(f64, f64)], phi: &[f64], d: f64) -> MetricInstance {
        let dist = DistanceMatrix::euclidean(pos);
        let r = vec![1e6; pos.len()];
        MetricInstance::new(dist, Some(0), r, phi.to_vec(), d).unwrap()
    }

    fn cost(inst: &MetricInstance, sol: &Solution) -> f64 {
        latency_of(sol, inst, &PlannerConfig::default()).unwrap().max_weighted
    }

    #[test]
    fn one_vertex_is_out_and_back() {
        let inst = star(&[(0.0, 0.0), (2.0, 0.0)], &[0.0, 1.0], 10.0);
        let w = minmax_one_robot(&inst, &PlannerConfig::default()).unwrap();
        let mut sol = Solution::default();
        sol.add_spaced(w, 1, inst.distances()).unwrap();
        assert_eq!(cost(&inst, &sol), 4.0);
    }

    #[test]
    fn uniform_weights_cost_is_cover_length() {
        let pts = [(0.0, 0.0), (3.0, 0.0), (-3.0, 0.0), (0.0, 3.0)];
        let inst = star(&pts, &[0.0, 1.0, 1.0, 1.0], 7.0);
        let cfg = PlannerConfig::default();
        let sched = binary_walk_schedule(&inst, &cfg).unwrap();
        assert_eq!(sched.levels.len(), 1);
        let total: f64 = sched.pieces[0].iter().map(|p| p.period(inst.distances())).sum();
        let mut sol = Solution::default();
        sol.add_spaced(sched.walk.clone(), 1, inst.distances()).unwrap();
        assert!((cost(&inst, &sol) - total).abs() < 1e-9);
    }

    #[test]
    fn heavy_cluster_visited_twice_as_often() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (-1.0, 0.0), (-1.0, 0.5)];
        let inst = star(&pts, &[0.0, 1.0, 1.0, 0.5, 0.5], 2.0 * 1.2);
        let sched = binary_walk_schedule(&inst, &PlannerConfig::default()).unwrap();
        let count = |v| sched.walk.vertices().filter(|&u| u == v).count();
        assert_eq!(count(1), 2 * count(3));
    }

    #[test]
    fn walk_respects_reported_cost() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (-1.0, -1.0), (2.0, 2.0)];
        let inst = star(&pts, &[0.0, 1.0, 0.3, 0.7, 0.1], 6.0);
        let cfg = PlannerConfig::default();
        let w = minmax_one_robot(&inst, &cfg).unwrap();
        let mut sol = Solution::default();
        sol.add_spaced(w.clone(), 1, inst.distances()).unwrap();
        let c = cost(&inst, &sol);
        let bounds: Vec<f64> = (0..inst.n_nodes())
            .map(|v| if v == 0 { inst.discharge() } else { c / inst.weight(v) })
            .collect();
        assert!(periodic_feasibility(&w, &inst, Some(&bounds)));
    }

    #[test]
    fn level_pieces_appear_every_two_to_the_i_segments() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (0.7, 0.7)];
        let inst = star(&pts, &[0.0, 1.0, 0.4, 0.2, 0.2, 0.1], 2.0);
        let sched = binary_walk_schedule(&inst, &PlannerConfig::default()).unwrap();
        for ((i, vs), _) in sched.levels.iter().zip(&sched.pieces) {
            for &v in vs {
                for window in sched.segments.windows(1usize << i) {
                    assert!(window.iter().any(|s| s.contains(v)), "level {i} vertex {v}");
                }
            }
        }
    }

    #[test]
    fn one_robot_matches_single_walk() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (-1.0, -1.0)];
        let inst = star(&pts, &[0.0, 1.0, 0.3, 0.7], 6.0);
        let cfg = PlannerConfig::default();
        let sol = latency_walks(&inst, 1, &cfg).unwrap();
        assert_eq!(sol.walks, vec![minmax_one_robot(&inst, &cfg).unwrap()]);
    }

    #[test]
    fn two_robots_halve_uniform_cost() {
        let pts = [(0.0, 0.0), (3.0, 0.0), (-3.0, 0.0), (0.0, 3.0)];
        let inst = star(&pts, &[0.0, 1.0, 1.0, 1.0], 100.0);
        let cfg = PlannerConfig::default();
        let one = cost(&inst, &latency_walks(&inst, 1, &cfg).unwrap());
        let two = cost(&inst, &latency_walks(&inst, 2, &cfg).unwrap());
        assert!((two - one / 2.0).abs() < 1e-9);
    }

    #[test]
    fn leftover_robot_goes_to_worse_level() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (-5.0, 0.0)];
        let inst = star(&pts, &[0.0, 1.0, 0.4], 10.0);
        let cfg = PlannerConfig::default();
        let two = latency_walks(&inst, 2, &cfg).unwrap();
        let three = latency_walks(&inst, 3, &cfg).unwrap();
        assert_eq!(three.robot_count(), 3);
        assert!(cost(&inst, &three) <= cost(&inst, &two) + 1e-9);
        assert_eq!(three.robots_on(1), 2);
    }

    #[test]
    fn zero_robots_rejected() {
        let inst = star(&[(0.0, 0.0), (1.0, 0.0)], &[0.0, 1.0], 2.0);
        assert!(matches!(latency_walks(&inst, 0, &PlannerConfig::default()), Err(Error::NoRobots)));
    }

    #[test]
    fn bicriterion_single_vertex() {
        let dist = DistanceMatrix::euclidean(&[(0.0, 0.0), (1.0, 0.0)]);
        let inst = MetricInstance::new(dist, Some(0), vec![0.0, 2.0], vec![0.0, 1.0], 2.0).unwrap();
        let cfg = PlannerConfig { stretch: 1.0, ..Default::default() };
        let b = bicriterion_min_robots(&inst, &cfg).unwrap();
        assert_eq!(b.robots, 1);
        assert!(b.stretch <= 1.0 + 1e-9);
    }

    #[test]
    fn bicriterion_uniform_tour_twice_latency() {
        // square tour of length 4 without depot, r = 2: two robots at stretch 1
        let dist = DistanceMatrix::euclidean(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let inst = MetricInstance::new(dist, None, vec![2.0; 4], vec![1.0; 4], f64::INFINITY).unwrap();
        let cfg = PlannerConfig { stretch: 1.0, ..Default::default() };
        let b = bicriterion_min_robots(&inst, &cfg).unwrap();
        assert_eq!(b.robots, 2);
        assert!(b.stretch <= 1.0 + 1e-9);
    }
}
