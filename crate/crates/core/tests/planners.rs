use patrol_core::approx::approximate;
use patrol_core::greedy::{plan_partitioned, Builder};
use patrol_core::instance::{generate_random, DepotPlacement, GeneratorParams};
use patrol_core::minmax::{bicriterion_min_robots, latency_walks, minmax_one_robot};
use patrol_core::oracle::{exact_decision, exact_minmax_cyclic, verify, DecisionOptions, Verdict};
use patrol_core::walks::latency_of;
use patrol_core::*;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn one_robot(w: TimedWalk) -> Solution {
    let mut sol = Solution::new("probe");
    sol.walks.push(w);
    sol.robots.push(Robot { walk: 0, offset: 0.0 });
    sol
}

fn tiny_integer(n: usize, seed: u64) -> MetricInstance {
    let p = GeneratorParams {
        n,
        integer: true,
        extent: 6.0,
        k_range: [0.5, 1.5],
        discharge: 14.0,
        ..Default::default()
    };
    generate_random(&p, seed).instance
}

#[test]
fn data_files_load_and_validate() {
    for name in ["star.toml", "shared_path.toml"] {
        let doc = InstanceDocument::load(format!("{DATA}/{name}")).unwrap();
        assert!(doc.instance.validate().is_valid(), "{name}");
    }
}

#[test]
fn approx_on_thirty_vertices_seed_seven() {
    let cfg = PlannerConfig::default();
    let inst = generate_random(&GeneratorParams { n: 30, ..Default::default() }, 7).instance;
    let sol = approximate(&inst, &cfg).unwrap();
    assert!(verify(&sol, &inst, 1.0, &cfg).unwrap().pass);
    assert_eq!(sol.robot_count(), 6);
}

#[test]
fn partitioned_planners_on_the_shared_walk_example() {
    let cfg = PlannerConfig::default();
    let inst = InstanceDocument::load(format!("{DATA}/shared_path.toml")).unwrap().instance;
    for b in [Builder::Greedy, Builder::Recursive, Builder::Orienteering] {
        let sol = plan_partitioned(&inst, b, &cfg).unwrap();
        assert_eq!(sol.robot_count(), 4, "{}", b.name());
        assert!(verify(&sol, &inst, 1.0, &cfg).unwrap().pass);
    }
}

#[test]
fn generous_budgets_need_one_robot() {
    let cfg = PlannerConfig::default();
    let inst = generate_random(&GeneratorParams { n: 5, k_range: [50.0, 50.0], discharge: 1e6, ..Default::default() }, 3).instance;
    let big: Vec<f64> = inst.latencies().iter().map(|r| r * 1e3).collect();
    let inst = inst.with_latency(big).unwrap();
    let sol = plan_partitioned(&inst, Builder::Orienteering, &cfg).unwrap();
    assert_eq!(sol.robot_count(), 1);
    assert!(verify(&sol, &inst, 1.0, &cfg).unwrap().pass);
}

#[test]
fn minmax_two_clusters_within_three_of_cyclic_optimum() {
    let cfg = PlannerConfig::default();
    let pts = [(0.0, 0.0), (3.0, 0.0), (3.0, 1.0), (-3.0, 0.0), (-3.0, 1.0)];
    let dist = DistanceMatrix::euclidean(&pts);
    let inst = MetricInstance::new(dist, Some(0), vec![1e9; 5], vec![0.0, 1.0, 1.0, 0.5, 0.5], 20.0).unwrap();
    let w = minmax_one_robot(&inst, &cfg).unwrap();
    let heavy = w.vertices().filter(|&v| v == 1).count();
    let light = w.vertices().filter(|&v| v == 3).count();
    assert!(heavy >= 2 * light, "heavy {heavy} light {light}");
    let cost = latency_of(&one_robot(w), &inst, &cfg).unwrap().max_weighted;
    let opt = exact_minmax_cyclic(&inst, 4).unwrap().cost;
    assert!(cost <= 3.0 * opt + 1e-9, "{cost} vs {opt}");
}

#[test]
fn third_robot_does_not_hurt() {
    let cfg = PlannerConfig::default();
    let pts = [(0.0, 0.0), (3.0, 0.0), (3.0, 1.0), (-3.0, 0.0), (-3.0, 1.0)];
    let dist = DistanceMatrix::euclidean(&pts);
    let inst = MetricInstance::new(dist, Some(0), vec![1e9; 5], vec![0.0, 1.0, 1.0, 0.5, 0.5], 20.0).unwrap();
    let cost = |r| latency_of(&latency_walks(&inst, r, &cfg).unwrap(), &inst, &cfg).unwrap().max_weighted;
    assert!(cost(3) <= cost(2) + 1e-9);
    assert!(cost(2) <= cost(1) + 1e-9);
}

#[test]
fn bicriterion_at_unit_stretch_is_no_better_than_exact() {
    let cfg = PlannerConfig { stretch: 1.0, ..Default::default() };
    for seed in 0..12 {
        let inst = tiny_integer(6, seed);
        let b = match bicriterion_min_robots(&inst, &cfg) {
            Ok(b) => b,
            Err(Error::StretchUnreachable { .. }) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        };
        assert!(verify(&b.solution, &inst, 1.0, &cfg).unwrap().pass, "seed {seed}");
        if b.robots <= 3 {
            let at = exact_decision(&inst, &DecisionOptions { robots: b.robots, ..Default::default() }).unwrap();
            assert_eq!(at.verdict, Verdict::Feasible, "seed {seed}: exact rejects {} robots", b.robots);
        }
    }
}

#[test]
fn bicriterion_meets_its_stretch() {
    let cfg = PlannerConfig::default();
    for seed in 0..10 {
        let inst = generate_random(&GeneratorParams { n: 10, ..Default::default() }, seed).instance;
        let b = bicriterion_min_robots(&inst, &cfg).unwrap();
        assert!(b.stretch <= cfg.stretch + 1e-9);
        assert!(verify(&b.solution, &inst, cfg.stretch, &cfg).unwrap().pass, "seed {seed}");
    }
}

#[test]
fn cyclic_optimum_within_tightest_budget_matches_oracle() {
    let cfg = PlannerConfig::default();
    for seed in 0..15 {
        let p = GeneratorParams {
            n: 4,
            integer: true,
            extent: 5.0,
            k_range: [0.5, 1.5],
            depot: DepotPlacement::None,
            discharge: f64::INFINITY,
            ..Default::default()
        };
        let inst = generate_random(&p, seed).instance;
        let vs = inst.constrained();
        let r_min = vs.iter().map(|&v| inst.latency(v)).fold(f64::INFINITY, f64::min);
        let phi: Vec<f64> = (0..inst.n_nodes()).map(|v| r_min / inst.latency(v)).collect();
        let weighted = inst.with_weights(phi).unwrap();
        let budget = r_min;

        let decided = exact_decision(&inst, &DecisionOptions::default()).unwrap();
        assert_ne!(decided.verdict, Verdict::Unknown);
        if let Some(w) = &decided.witness {
            let cost = latency_of(w, &weighted, &cfg).unwrap().max_weighted;
            assert!(cost <= budget + 1e-9, "seed {seed}: feasible walk costs {cost} > {budget}");
        }
        let cyclic = exact_minmax_cyclic(&weighted, 4).unwrap();
        if cyclic.cost <= budget + 1e-9 {
            assert_eq!(decided.verdict, Verdict::Feasible, "seed {seed}: cyclic optimum {} fits", cyclic.cost);
        }
    }
}
