//! Nearest-neighbour tours improved by 2-opt.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::PlannerConfig;
use crate::instance::DistanceMatrix;
use crate::walks::TimedWalk;

/// Closed tour length of a vertex cycle.
pub fn cycle_length(dist: &DistanceMatrix, tour: &[usize]) -> f64 {
    match tour.len() {
        0 | 1 => 0.0,
        n => (0..n).map(|i| dist.get(tour[i], tour[(i + 1) % n])).sum(),
    }
}

/// Open path length.
pub fn path_length(dist: &DistanceMatrix, path: &[usize]) -> f64 {
    path.windows(2).map(|w| dist.get(w[0], w[1])).sum()
}

fn improves(delta: f64, scale: f64) -> bool {
    delta < -1e-10 * scale.max(1.0)
}

/// 2-opt on a closed tour until no improving move is left or the pass cap
/// is hit. Never lengthens the tour.
pub fn two_opt_cycle(dist: &DistanceMatrix, tour: &mut [usize], max_passes: usize) {
    let n = tour.len();
    if n < 4 {
        return;
    }
    let scale = cycle_length(dist, tour);
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n - 2 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, d) = (tour[j], tour[(j + 1) % n]);
                let delta = dist.get(a, c) + dist.get(b, d) - dist.get(a, b) - dist.get(c, d);
                if improves(delta, scale) {
                    tour[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// 2-opt on a path whose two endpoints stay fixed.
pub fn two_opt_path(dist: &DistanceMatrix, path: &mut [usize], max_passes: usize) {
    let n = path.len();
    if n < 4 {
        return;
    }
    let scale = path_length(dist, path);
    for _ in 0..max_passes {
        let mut improved = false;
        for i in 0..n - 3 {
            for j in i + 2..n - 1 {
                let (a, b) = (path[i], path[i + 1]);
                let (c, d) = (path[j], path[j + 1]);
                let delta = dist.get(a, c) + dist.get(b, d) - dist.get(a, b) - dist.get(c, d);
                if improves(delta, scale) {
                    path[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

fn nearest_neighbour(dist: &DistanceMatrix, vertices: &[usize], start: usize) -> Vec<usize> {
    let mut left: Vec<usize> = vertices.to_vec();
    let mut tour = vec![left.remove(start)];
    while !left.is_empty() {
        let cur = *tour.last().unwrap();
        let (k, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| dist.get(cur, *a.1).total_cmp(&dist.get(cur, *b.1)))
            .unwrap();
        tour.push(left.remove(k));
    }
    tour
}

/// Heuristic Hamiltonian cycle over `vertices`, rotated to start at
/// `vertices[0]`. Deterministic in `cfg.tsp_seed`.
pub fn tsp_tour(dist: &DistanceMatrix, vertices: &[usize], cfg: &PlannerConfig) -> TimedWalk {
    tsp_order(dist, vertices, cfg).map_or_else(TimedWalk::default, |t| TimedWalk::from_vertices(&t))
}

/// Vertex order of [`tsp_tour`].
pub fn tsp_order(dist: &DistanceMatrix, vertices: &[usize], cfg: &PlannerConfig) -> Option<Vec<usize>> {
    let first = *vertices.first()?;
    if vertices.len() <= 3 {
        return Some(vertices.to_vec());
    }
    let starts: Vec<usize> = if vertices.len() <= cfg.tsp_multistart_limit {
        (0..vertices.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.tsp_seed);
        vec![rng.random_range(0..vertices.len())]
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s in starts {
        let mut tour = nearest_neighbour(dist, vertices, s);
        two_opt_cycle(dist, &mut tour, cfg.two_opt_max_passes);
        let len = cycle_length(dist, &tour);
        if best.as_ref().is_none_or(|(b, _)| len < *b - 1e-12 * b.max(1.0)) {
            best = Some((len, tour));
        }
    }
    let mut tour = best.unwrap().1;
    let at = tour.iter().position(|&v| v == first).unwrap();
    tour.rotate_left(at);
    Some(tour)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(p: &[(f64, f64)]) -> DistanceMatrix {
        DistanceMatrix::euclidean(p)
    }

    #[test]
    fn single_vertex_with_depot_is_out_and_back() {
        let d = points(&[(0.0, 0.0), (3.0, 4.0)]);
        let t = tsp_tour(&d, &[0, 1], &PlannerConfig::default());
        assert_eq!(t.period(&d), 10.0);
    }

    #[test]
    fn unit_square_tour_is_four() {
        let d = points(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]);
        let t = tsp_tour(&d, &[0, 1, 2, 3], &PlannerConfig::default());
        assert!((t.period(&d) - 4.0).abs() < 1e-12);
        assert_eq!(t.first(), Some(0));
    }

    #[test]
    fn two_opt_never_lengthens() {
        let d = points(&[(0.0, 0.0), (5.0, 1.0), (1.0, 3.0), (4.0, 4.0), (2.0, 0.5), (3.0, 2.0)]);
        let mut tour = vec![0, 3, 1, 5, 2, 4];
        let before = cycle_length(&d, &tour);
        two_opt_cycle(&d, &mut tour, 100);
        assert!(cycle_length(&d, &tour) <= before);
    }

    #[test]
    fn path_two_opt_keeps_endpoints() {
        let d = points(&[(0.0, 0.0), (3.0, 0.0), (1.0, 0.0), (2.0, 0.0), (4.0, 0.0)]);
        let mut path = vec![0, 1, 2, 3, 4];
        two_opt_path(&d, &mut path, 100);
        assert_eq!(path, vec![0, 2, 3, 1, 4]);
        assert_eq!(path_length(&d, &path), 4.0);
    }
}
