"""Smoke test for the `patrol` Python module.

Uses an installed `patrol` when importable, else the library built by
`cargo build -p patrol-py --release --features extension-module`.
"""

import importlib
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def import_patrol():
    try:
        return importlib.import_module("patrol")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libpatrol.so", "libpatrol.dylib", "patrol.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                tmp = Path(tempfile.mkdtemp())
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                shutil.copy(lib, tmp / f"patrol{suffix}")
                sys.path.insert(0, str(tmp))
                return importlib.import_module("patrol")
    sys.exit("patrol module not found; build crates/py first")


def main():
    patrol = import_patrol()

    # Star with unit edges: one robot on a-b-a-c gives (2, 4, 4); a second
    # robot one time unit behind gives (1, 3, 3).
    star = patrol.Instance([[0, 1, 1], [1, 0, 2], [1, 2, 0]], [4, 4, 4])
    walk = [(0, 0.0), (1, 0.0), (0, 0.0), (2, 0.0)]
    assert patrol.latency(patrol.Solution([walk]), star)["latency"] == [2.0, 4.0, 4.0]
    lagged = patrol.Solution([walk], robots=[(0, 0.0), (0, 1.0)])
    assert patrol.latency(lagged, star)["latency"] == [1.0, 3.0, 3.0]

    inst = patrol.Instance.generate(n=10, seed=3)
    assert inst.validate() == []
    assert inst.depot is not None
    again = patrol.Instance.from_toml(inst.to_toml())
    assert again.dist == inst.dist

    for algo in patrol.ALGORITHMS:
        sol = patrol.solve(inst, algo, robots=2)
        stretch = 2.0 if algo == "bicriterion" else (math.inf if algo == "minmax" else 1.0)
        report = patrol.verify(sol, inst, stretch=stretch)
        assert report["pass"], (algo, report)
        print(f"{algo:>12}: {sol.robot_count} robots, max weighted latency {report['max_weighted']:.1f}")

    with tempfile.TemporaryDirectory() as d:
        path = str(Path(d) / "sol.toml")
        sol = patrol.solve(inst, "orienteering")
        sol.save(path)
        assert patrol.Solution.load(path).walks == sol.walks

    # Path a-b-c-d with lengths 2, 3, 2: three shared robots suffice, four
    # are needed when each robot owns its vertices.
    pos = [0, 2, 5, 7]
    path_dist = [[abs(pos[u] - pos[v]) for v in range(4)] for u in range(4)]
    example = patrol.Instance(path_dist, [5, 3, 3, 5])
    verdict, witness = patrol.exact_decision(example, robots=3)
    assert verdict == "feasible" and patrol.verify(witness, example)["pass"]
    verdict, _ = patrol.exact_decision(example, robots=3, partitioned=True)
    assert verdict == "infeasible"

    cfg = patrol.Config(stretch=1.5, m=0.2)
    assert "stretch = 1.5" in cfg.to_toml()
    try:
        patrol.Config(no_such_knob=1)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown knob accepted")
    try:
        patrol.Solution.from_toml("walks = [[")
    except patrol.PatrolError:
        pass
    else:
        raise AssertionError("corrupted solution accepted")

    tables = patrol.run_suite([5], seeds=2, algorithms=["greedy", "orienteering"])
    assert tables["rows"].splitlines()[0].startswith("size,seed,algorithm")
    assert len(tables["rows"].splitlines()) == 5

    print("smoke test passed")


if __name__ == "__main__":
    main()
