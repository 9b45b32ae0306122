"""Smoke test for the `assc` extension module.

Build and run from the repository root:

    cargo build --release -p assc-py
    cp target/release/libassc.so python/assc.so
    python3 python/smoke_test.py
"""

import json
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import assc  # noqa: E402


def main():
    toy = assc.make_toy("two-lines-r3")
    data = toy.dataset
    assert len(data) == 10 and data.ambient_dim == 3
    assert toy.subspace_dims == [1, 1]

    cm = assc.build_coefficient_matrix(data, assc.SolverConfig("assc"))
    assert not cm.nonconverged()
    pred = assc.spectral_cluster(cm, 2, seed=0)
    err = assc.clustering_error(pred, data.labels)
    assert err == 0.0, err

    # ADMM agrees with the LP on every column.
    for j in range(len(data)):
        a = assc.solve_column(data, j)
        o = assc.solve_column_oracle(data, j, "assc")
        assert abs(a.objective - o.objective) < 1e-6, (j, a.objective, o.objective)
        assert a.objective >= 1 - 1e-6

    v = assc.compute_dual_point([[0.0, 1.0, 1.0], [1.0, 1.0, 1.0], [2.0, 1.0, 1.0]], [-1.0, 1.0, 1.0])
    assert len(v) == 3

    report = json.loads(assc.certify(toy, cm))
    assert report["correct_clustering"] is True
    assert not report["theory_violations"]

    arr = assc.random_arrangement([1, 2], 4, 8, seed=5)
    lam = assc.compute_lambda(arr.dataset, 20.0)
    noisy = assc.build_coefficient_matrix(arr.dataset, assc.SolverConfig("ssc", lam=lam))
    assert len(noisy) == 16

    try:
        assc.SolverConfig("lasso")
    except ValueError:
        pass
    else:
        raise AssertionError("bad mode accepted")

    print(f"ok: two-lines-r3 error {err}, lambda {lam:.3f}")


if __name__ == "__main__":
    main()
