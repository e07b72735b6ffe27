from fractions import Fraction

import numpy as np
import pytest

from scldpc import build_base, couple, design_rate, to_edge_list_text


def test_base_3_6():
    b = build_base(3, 6)
    assert (b.n_v, b.n_c) == (2, 1)
    assert len(b.edges) == 6
    degs_v = [sum(1 for e in b.edges if e[0] == v) for v in range(b.n_v)]
    degs_c = [sum(1 for e in b.edges if e[1] == c) for c in range(b.n_c)]
    assert degs_v == [3, 3] and degs_c == [6]


def test_base_3_3_parallel():
    b = build_base(3, 3)
    assert (b.n_v, b.n_c) == (1, 1)
    assert b.edges == ((0, 0), (0, 0), (0, 0))
    assert b.has_multi_edges()


def test_base_4_8():
    b = build_base(4, 8)
    assert (b.n_v, b.n_c) == (2, 1)
    assert len(b.edges) == 8
    assert 2 * 4 == 1 * 8


@pytest.mark.parametrize("l,r", [(1, 6), (3, 2), (0, 0)])
def test_base_rejects_bad_degrees(l, r):
    with pytest.raises(ValueError):
        build_base(l, r)


def test_couple_3_6_3_structure(cp363):
    assert cp363.n_var == 6
    assert cp363.n_chk == 5
    assert cp363.m == 18
    # the template's multi-edge types, 0-based version of the worked example
    assert [tuple(row) for row in cp363.var_types] == [
        (0, 1, 2), (3, 4, 5), (6, 7, 8), (9, 10, 11), (12, 13, 14), (15, 16, 17)]
    assert cp363.chk_types == (
        (0, 3), (1, 4, 6, 9), (2, 5, 7, 10, 12, 15), (8, 11, 13, 16), (14, 17))


def test_couple_3_6_3_degrees(cp363):
    assert list(cp363.chk_degrees()) == [2, 4, 6, 4, 2]


def test_couple_3_6_1():
    cp = couple(build_base(3, 6), 1)
    assert cp.n_var == 2
    assert cp.n_chk == 3
    assert cp.m == 6


def test_couple_edge_types_unique(cp363):
    # each type has exactly one variable socket and one check socket
    assert len(set(cp363.edge_var.tolist())) == cp363.n_var
    seen = set()
    for types in cp363.chk_types:
        for t in types:
            assert t not in seen
            seen.add(t)
    assert seen == set(range(cp363.m))


def test_couple_degree_sums(cp36_50):
    assert cp36_50.var_types.size == cp36_50.m
    assert sum(len(s) for s in cp36_50.chk_types) == cp36_50.m
    assert cp36_50.m == 3 * 2 * 50


def test_couple_variable_positions_consecutive(cp36_50):
    for t in range(cp36_50.m):
        u = cp36_50.edge_var_pos[t]
        o = t % cp36_50.l
        assert cp36_50.edge_chk_pos[t] == u + o


def test_couple_interior_boundary_degrees(cp36_50):
    degs = cp36_50.chk_degrees()
    assert all(degs[p] == 6 for p in range(2, 50))
    assert degs[0] == degs[51] == 2
    assert degs[1] == degs[50] == 4


def test_couple_deterministic():
    a = couple(build_base(3, 6), 7)
    b = couple(build_base(3, 6), 7)
    assert to_edge_list_text(a) == to_edge_list_text(b)
    assert np.array_equal(a.edge_chk, b.edge_chk)


def test_couple_rejects_bad_L():
    with pytest.raises(ValueError):
        couple(build_base(3, 6), 0)


def test_design_rate_3_6_3(cp363):
    assert design_rate(cp363) == Fraction(1, 6)


def test_design_rate_3_6_100():
    cp = couple(build_base(3, 6), 100)
    assert design_rate(cp) == Fraction(1) - Fraction(102, 200)
    assert float(design_rate(cp)) == pytest.approx(0.49)


def test_design_rate_monotone_in_L():
    rates = [design_rate(couple(build_base(3, 6), L)) for L in (2, 5, 10, 50, 200, 1000)]
    assert all(a < b for a, b in zip(rates, rates[1:]))
    assert all(r < Fraction(1, 2) for r in rates)
    assert float(rates[-1]) == pytest.approx(0.5, abs=2e-3)


def test_serialization_golden(cp363):
    text = to_edge_list_text(cp363)
    lines = text.strip().split("\n")
    assert len(lines) == 18
    assert lines[0] == "0 0 0 0 0"
    # variable 0's last edge lands on the position-2 check
    assert lines[2] == "2 0 2 0 2"
    # the final type belongs to the last variable and the last check position
    assert lines[17] == "17 5 4 2 4"
