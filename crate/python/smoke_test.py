"""Smoke test for the mlpart extension module.

Build and copy the module next to this script first:

    cargo build -p mlpart-py --release --features extension-module
    cp target/release/libmlpart.so python/mlpart.so
    python3 python/smoke_test.py
"""

import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import mlpart  # noqa: E402


def main():
    # two triangles joined by one edge
    g = mlpart.Graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3, 1)])
    assert (g.n, g.m, len(g)) == (6, 7, 6)
    assert sorted(g.neighbors(2)) == [0, 1, 3]

    res = mlpart.partition(g, 2, epsilon=0.03, workers=2, seed=1)
    assert res.cut == 1, res
    assert res.balanced
    assert mlpart.cut_size(g, res.assignment) == 1
    assert res.metrics[-1][0] == "total"

    best, witness = mlpart.brute_force_optimal(g, 2, 0.03)
    assert best == 1 and mlpart.cut_size(g, witness) == 1
    assert abs(mlpart.l_max(6, 2, 0.03) - 3.09) < 1e-12

    rgg = mlpart.gen_rgg(5000, seed=3)
    r8 = mlpart.partition(rgg, 8, workers=4, seed=0)
    assert r8.balanced and len(set(r8.assignment)) == 8
    a = mlpart.partition(rgg, 8, workers=1, seed=5).assignment
    b = mlpart.partition(rgg, 8, workers=1, seed=5).assignment
    assert a == b

    er = mlpart.gen_er(2000, seed=1)
    assert mlpart.partition(er, 4, fast=True).balanced
    torus = mlpart.gen_grid(10, 10, wrap=True)
    assert torus.m == 200

    h = mlpart.TabularHasher(seed=9)
    assert h.hash(0x12340) >> h.low_bits == h.hash(0x1235F) >> h.low_bits

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "g.metis")
        g.write_metis(path)
        assert mlpart.Graph.read_metis(path).edges() == g.edges()
        try:
            mlpart.Graph.read_metis(os.path.join(d, "missing"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file accepted")

    try:
        mlpart.partition(g, 7)
    except ValueError:
        pass
    else:
        raise AssertionError("k > n accepted")

    print(f"ok: {res!r}, rgg cut {r8.cut}")


if __name__ == "__main__":
    main()
