"""Recompute the loop-based oracle values and freeze them to tests/data/oracle_values.json.

Run once after changing an oracle; the test suite compares the package
against the frozen numbers and the live oracle both.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402

GRAPHS = {
    "path5": (5, [(0, 1), (1, 2), (2, 3), (3, 4)]),
    "cycle6": (6, [(i, (i + 1) % 6) for i in range(6)]),
    "star5": (5, [(0, i) for i in range(1, 5)]),
    "petersen": (10, [(i, (i + 1) % 5) for i in range(5)]
                 + [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
                 + [(i, i + 5) for i in range(5)]),
    "k4_plus_isolated": (5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
}


def main():
    out = {"exact_moments_K12": {}, "w1": [], "jackson_K8": oracles.jackson(8)}
    for name, (n, edges) in GRAPHS.items():
        out["exact_moments_K12"][name] = {"n": n, "edges": edges,
                                          "moments": oracles.exact_moments(n, edges, 12).tolist()}
    for a, b in [([-1, 1], [0, 0]), ([-1, 1, 1], [-1, -1, 1]), ([-0.5, 0.2], [0.1, 0.3, 0.9]),
                 ([0.0], [-1, 0, 0.5, 1])]:
        out["w1"].append({"a": a, "b": b, "w1": oracles.w1_cdf(a, b)})
    step = [[0.0]] * 49 + [[1.0]] * 51
    out["step_stream"] = {
        "c5": oracles.forward_pass(step, 3, 3, "centroid", 1, 0.5, 5),
        "c1": oracles.forward_pass(step, 3, 3, "centroid", 1, 0.5, 1),
    }
    out["dos_empty_K50_8bins"] = oracles.dos_mass_near_zero_empty_graph(50, 8)
    path = ROOT / "tests" / "data" / "oracle_values.json"
    path.parent.mkdir(exist_ok=True)
    path.write_text(json.dumps(out, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
