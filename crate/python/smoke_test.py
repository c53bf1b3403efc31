#!/usr/bin/env python3
"""Smoke test for the ekgd_py extension module.

Builds nothing itself: expects the cdylib under target/. Run after
`cargo build -p ekgd-py` (add --release to prefer the release artifact):

    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libekgd_py.so",
        REPO / "target" / "debug" / "libekgd_py.so",
        REPO / "target" / "release" / "libekgd_py.dylib",
        REPO / "target" / "debug" / "libekgd_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p ekgd-py")
    staging = Path(tempfile.mkdtemp(prefix="ekgd_py_"))
    shutil.copy(built, staging / "ekgd_py.so")
    sys.path.insert(0, str(staging))
    import ekgd_py

    return ekgd_py


EIGHT_EVENTS = """event,X1,X2,X3,X4
e1,A,B,F,
e2,A,B,F,H
e3,A,C,,H
e4,A,C,,
e5,A,D,G,
e6,A,D,G,I
e7,A,E,,I
e8,A,E,,
"""


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    ekgd = load_module()

    table = ekgd.EventTable.from_csv(EIGHT_EVENTS)
    assert len(table) == 8
    assert table.features == ["X1", "X2", "X3", "X4"]

    # Entropies of the four columns: constant, four pairs, two sparse.
    approx(ekgd.normalized_entropy(table, ["X1"]), 0.0)
    approx(ekgd.normalized_entropy(table, ["X2"]), 0.5)
    approx(ekgd.normalized_entropy(table, ["X3"]), 0.375)
    approx(ekgd.normalized_entropy(table, ["X4"]), 0.375)

    # X2 partitions the total order into four 2-chains: 8!/2^4 extensions.
    whole = list(range(8))
    assert ekgd.count_extensions(table, whole, [["X2"]]) == 2520
    lo, hi, exact = ekgd.extension_bounds(table, whole, [["X2"]])
    assert exact
    approx(lo, math.log2(2520))

    score = ekgd.score_model(table, [["X2"]], [whole])
    assert score["exact"]
    approx(score["score_lo"], -1.0 - math.log2(2520))

    # Bounded counting still sandwiches the truth.
    lo, hi, _ = ekgd.extension_bounds(table, whole, [["X2"]], work=2)
    assert lo - 1e-9 <= math.log2(2520) <= hi + 1e-9

    # Full discovery agrees with the known argmax on this table.
    result = ekgd.discover(table, [whole], unbounded=True)
    assert result["best_model"] == [["X2"], ["X4"]], result["best_model"]
    assert result["score"]["exact"]
    scores = [point[1] for point in result["trace"]]
    assert scores == sorted(scores), "trace must be nondecreasing"

    # Sampling is deterministic per seed and DOT export is well-formed.
    first = ekgd.sample_observations(table, 3, 4, seed=9)
    second = ekgd.sample_observations(table, 3, 4, seed=9)
    assert first == second
    dot = ekgd.export_model_dot(table, whole, [["X2"], ["X4"]])
    assert dot.startswith("digraph") and dot.rstrip().endswith("}")
    assert '"e1" -> "e2"' in dot

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
