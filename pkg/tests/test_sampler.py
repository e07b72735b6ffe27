import numpy as np
import pytest

from scldpc import (EnsembleSpec, build_base, couple, dd_from_protograph, lift,
                    sample_graph, sample_random, to_alist)
from scldpc.sampler import empirical_dd, make_rng


def _neighborhood_pairs(graph):
    order = np.argsort(graph.edge_var, kind="stable")
    nb = np.sort(graph.edge_chk[order].reshape(graph.n_var, graph.l), axis=1)
    keys = []
    for a in range(graph.l):
        for b in range(a + 1, graph.l):
            keys.append(nb[:, a].astype(np.uint64) * np.uint64(graph.n_chk)
                        + nb[:, b].astype(np.uint64))
    return np.concatenate(keys)


def test_lift_counts(cp363):
    g = lift(cp363, 64, seed=5)
    assert g.n_var == 3 * 64
    assert g.n_chk == 5 * 32
    assert g.n_edges == 18 * 32


def test_lift_counts_large():
    cp = couple(build_base(3, 6), 100)
    g = lift(cp, 200, seed=0, girth_guard="twin")
    assert g.n_var == 100 * 200
    assert g.n_edges == 3 * 100 * 200


def test_lift_preserves_dd(cp363):
    M = 64
    g = lift(cp363, M, seed=7)
    emp = empirical_dd(g)
    ref = dd_from_protograph(cp363, M)
    assert emp.var_counts == ref.var_counts
    assert emp.chk_counts == ref.chk_counts


def test_lift_matching_per_type(cp363):
    M = 64
    C = M // 2
    g = lift(cp363, M, seed=11)
    for t in range(cp363.m):
        sel = g.edge_type == t
        vars_ = g.edge_var[sel] % C
        chks = g.edge_chk[sel] % C
        assert sorted(vars_.tolist()) == list(range(C))
        assert sorted(chks.tolist()) == list(range(C))


def test_lift_seed_determinism(cp363):
    a = lift(cp363, 64, seed=123)
    b = lift(cp363, 64, seed=123)
    c = lift(cp363, 64, seed=124)
    assert np.array_equal(a.edge_chk, b.edge_chk)
    assert not np.array_equal(a.edge_chk, c.edge_chk)


def test_lift_no_parallel_edges(cp363):
    g = lift(cp363, 128, seed=3)
    pairs = set(zip(g.edge_var.tolist(), g.edge_chk.tolist()))
    assert len(pairs) == g.n_edges


def test_lift_no_4cycles_under_default_guard(cp363):
    g = lift(cp363, 128, seed=3)
    keys = _neighborhood_pairs(g)
    assert len(np.unique(keys)) == keys.size


def test_lift_single_copy_identity(cp363):
    g = lift(cp363, 2, seed=9, girth_guard="none")
    assert g.n_var == cp363.n_var
    assert np.array_equal(np.sort(g.edge_chk), np.sort(cp363.edge_chk))
    with pytest.raises(ValueError):
        lift(cp363, 2, seed=9)  # guards need at least two copies


def test_lift_rejects_bad_M(cp363):
    with pytest.raises(ValueError):
        lift(cp363, 63, seed=0)


def test_random_counts():
    g = sample_random(3, 6, 100, 512, seed=1, girth_guard="twin")
    assert g.n_var == 51_200
    assert g.n_edges == 153_600
    assert g.n_chk == 102 * 256


def test_random_socket_counts_exact():
    g = sample_random(3, 6, 10, 64, seed=4)
    # interior check positions absorb exactly l*M edges; no check exceeds degree r
    ncpp = 64 * 3 // 6
    deg = np.bincount(g.edge_chk, minlength=g.n_chk)
    assert deg.max() <= 6
    per_pos = deg.reshape(12, ncpp).sum(axis=1)
    assert list(per_pos[2:10]) == [3 * 64] * 8
    assert per_pos[0] == per_pos[11] == 64
    assert per_pos[1] == per_pos[10] == 2 * 64


def test_random_each_variable_covers_its_window():
    g = sample_random(3, 6, 10, 64, seed=4)
    order = np.argsort(g.edge_var, kind="stable")
    pos = g.chk_pos[g.edge_chk[order]].reshape(g.n_var, 3)
    u = g.var_pos
    assert np.array_equal(np.sort(pos, axis=1),
                          np.stack([u, u + 1, u + 2], axis=1))


def test_random_seed_determinism():
    a = sample_random(3, 6, 20, 64, seed=42)
    b = sample_random(3, 6, 20, 64, seed=42)
    assert np.array_equal(a.edge_chk, b.edge_chk)


def test_random_no_4cycles_under_default_guard():
    g = sample_random(3, 6, 20, 128, seed=2)
    keys = _neighborhood_pairs(g)
    assert len(np.unique(keys)) == keys.size


def test_random_rejects_bad_M():
    with pytest.raises(ValueError):
        sample_random(3, 6, 10, 63, seed=0)


def test_sample_graph_dispatch():
    gp = sample_graph(EnsembleSpec("protograph", 3, 6, 5), 32, seed=8)
    gr = sample_graph(EnsembleSpec("random", 3, 6, 5), 32, seed=8)
    assert gp.family == "protograph" and gr.family == "random"


def test_alist_export(cp363):
    g = lift(cp363, 4, seed=1, girth_guard="twin")
    text = to_alist(g)
    lines = text.strip().split("\n")
    assert lines[0] == f"{g.n_var} {g.n_chk}"
    assert lines[1] == "3 6"
    assert len(lines) == 4 + g.n_var + g.n_chk
    # adjacency rows are 1-based
    first = [int(x) for x in lines[4].split()]
    assert len(first) == 3 and all(1 <= c <= g.n_chk for c in first)


def test_make_rng_substreams_independent_of_order():
    a = make_rng(7, 2, 5).random(4)
    b = make_rng(7, 2, 5).random(4)
    c = make_rng(7, 2, 6).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
