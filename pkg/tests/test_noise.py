import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sisde.noise import (BrownianPath, TimeGrid, cell_slope, counter_normals, parse_seed,
                         path_seed, polygonal_eval, refine_bridge, sample_path, sample_values)

seeds = st.integers(0, 2**64 - 1)


def test_grid_knots():
    g = TimeGrid(2.0, 8)
    k = g.knots
    assert k[0] == 0.0 and k[-1] == 2.0 and len(k) == 9
    assert np.all(np.diff(k) > 0)
    assert g.dt == 0.25
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)
    with pytest.raises(ValueError):
        TimeGrid(-1.0, 4)


@given(seeds, st.integers(1, 64))
@settings(max_examples=50)
def test_starts_at_zero_and_deterministic(seed, n):
    g = TimeGrid(1.0, n)
    a, b = sample_path(g, seed), sample_path(g, seed)
    assert a.values[0] == 0.0
    assert len(a.values) == n + 1
    assert np.array_equal(a.values, b.values)


def test_increment_moments():
    dt = 0.01
    g = TimeGrid(dt * 1000, 1000)
    inc = np.concatenate([sample_path(g, s).increments for s in range(100)])
    assert inc.size == 10**5
    assert abs(inc.mean()) <= 4 * math.sqrt(dt / 1e5)
    assert 0.01 * 0.95 <= inc.var() <= 0.01 * 1.05


def test_seed_parsing():
    assert parse_seed("0x1F") == 31
    assert parse_seed("31") == 31
    assert parse_seed(7) == 7
    assert sample_path(TimeGrid(1, 4), "0x10").values.tolist() == sample_path(TimeGrid(1, 4), 16).values.tolist()
    with pytest.raises(ValueError):
        parse_seed(-1)
    with pytest.raises(ValueError):
        parse_seed(2**64)


def test_counter_normals_prefix_stable():
    a = counter_normals(5, 0, 10)
    b = counter_normals(5, 0, 1000)
    assert np.array_equal(a, b[:10])
    assert not np.array_equal(counter_normals(5, 1, 10), a)


def test_batch_matches_single():
    g = TimeGrid(1.0, 64)
    seeds_ = [path_seed(3, i) for i in range(5)]
    vals = sample_values(g, seeds_)
    for j, s in enumerate(seeds_):
        assert np.array_equal(vals[:, j], sample_path(g, s).values)


def test_path_seed_distinct():
    s = {path_seed(0, i) for i in range(1000)}
    assert len(s) == 1000
    assert path_seed(0, 1) != path_seed(1, 0)


@given(seeds, st.integers(1, 32))
@settings(max_examples=40)
def test_refine_preserves_knots(seed, n):
    p = sample_path(TimeGrid(1.0, n), seed)
    r = refine_bridge(p)
    assert r.grid.n_cells == 2 * n and r.level == p.level + 1
    assert np.array_equal(r.restrict(n), p.values)
    for k, t in enumerate(p.grid.knots):
        assert polygonal_eval(r, t) == polygonal_eval(p, t) == p.values[k]


def test_refine_twice():
    p = sample_path(TimeGrid(1.0, 8), 1)
    r = refine_bridge(refine_bridge(p))
    assert r.grid.n_cells == 32 and r.level == 2


def test_bridge_variance():
    dt = 0.01
    resid = []
    for s in range(100):
        p = sample_path(TimeGrid(dt * 1000, 1000), s)
        r = refine_bridge(p)
        resid.append(r.values[1::2] - 0.5 * (p.values[:-1] + p.values[1:]))
    resid = np.concatenate(resid)
    assert resid.size == 10**5
    assert 0.0025 * 0.95 <= resid.var() <= 0.0025 * 1.05


def test_refine_independent_of_order():
    p = sample_path(TimeGrid(1.0, 16), 9)
    a = refine_bridge(refine_bridge(p))
    b = refine_bridge(refine_bridge(sample_path(TimeGrid(1.0, 16), 9)))
    assert np.array_equal(a.values, b.values)


def test_polygonal_eval():
    p = sample_path(TimeGrid(1.0, 10), 4)
    assert polygonal_eval(p, 0.0) == 0.0
    k = 3
    tm = 0.5 * (p.grid.knots[k] + p.grid.knots[k + 1])
    assert polygonal_eval(p, tm) == pytest.approx(0.5 * (p.values[k] + p.values[k + 1]), abs=1e-15)
    assert polygonal_eval(p, 1.0) == p.values[-1]
    with pytest.raises(ValueError):
        polygonal_eval(p, 1.0001)
    with pytest.raises(ValueError):
        polygonal_eval(p, -1e-9)


def test_cell_slope():
    g = TimeGrid(0.02, 2)
    flat = BrownianPath(g, np.zeros(3), seed=0, level=0)
    assert cell_slope(flat, 0) == 0.0
    p = BrownianPath(g, np.array([0.0, 0.1, 0.1]), seed=0, level=0)
    assert cell_slope(p, 0) == pytest.approx(10.0)
    with pytest.raises(IndexError):
        cell_slope(p, 2)
    q = sample_path(TimeGrid(1.0, 50), 2)
    total = sum(cell_slope(q, k) * q.grid.dt for k in range(50))
    assert total == pytest.approx(q.values[-1], abs=1e-12)


def test_path_invariants_enforced():
    g = TimeGrid(1.0, 2)
    with pytest.raises(ValueError):
        BrownianPath(g, np.array([0.1, 0.0, 0.0]), seed=0, level=0)
    with pytest.raises(ValueError):
        BrownianPath(g, np.zeros(4), seed=0, level=0)
    p = sample_path(g, 0)
    with pytest.raises(ValueError):
        p.values[1] = 3.0


def test_quadratic_variation():
    g = TimeGrid(1.0, 2**14)
    vals = sample_values(g, [path_seed(77, i) for i in range(1000)])
    qv = np.sum(np.diff(vals, axis=0) ** 2, axis=0)
    assert np.mean((qv >= 0.9) & (qv <= 1.1)) >= 0.95


def test_csv_export():
    p = sample_path(TimeGrid(1.0, 4), 0)
    fh = io.StringIO()
    p.to_csv(fh)
    lines = fh.getvalue().splitlines()
    assert lines[0] == "t,B"
    assert len(lines) == 6
    assert lines[1] == "0.0,0.0"
