import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilspec.group_core import (
    LatticeSubgroup,
    abelian,
    ball_exponents,
    canonical_lattice,
    conjugation_matrix,
    dilate,
    direct_product,
    element,
    fundamental_domain_grid,
    heisenberg,
    identity,
    inverse,
    lattice_ball,
    lattice_tail_bound,
    lattice_tail_sum,
    multiply,
    quasi_norm,
    quasi_norm_array,
)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)

GROUPS = [
    abelian(1),
    abelian(3),
    heisenberg(1),
    heisenberg(2),
    direct_product(heisenberg(1), abelian(1)),
    direct_product(heisenberg(1), heisenberg(1)),
]


def _points(g):
    return st.lists(fractions, min_size=g.dim, max_size=g.dim).map(lambda c: element(*c))


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.describe())
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_group_axioms(g, data):
    x, y, z = (data.draw(_points(g)) for _ in range(3))
    assert multiply(g, multiply(g, x, y), z) == multiply(g, x, multiply(g, y, z))
    assert multiply(g, x, identity(g)) == x
    assert multiply(g, identity(g), x) == x
    assert multiply(g, x, inverse(g, x)) == identity(g)


@pytest.mark.parametrize("g", GROUPS, ids=lambda g: g.describe())
@settings(max_examples=40, deadline=None)
@given(data=st.data(), r=st.fractions(min_value=Fraction(1, 8), max_value=8, max_denominator=8))
def test_dilations_are_automorphisms(g, data, r):
    x, y = data.draw(_points(g)), data.draw(_points(g))
    assert dilate(g, r, multiply(g, x, y)) == multiply(g, dilate(g, r, x), dilate(g, r, y))
    assert quasi_norm(g, dilate(g, r, x)) == pytest.approx(float(r) * quasi_norm(g, x), rel=1e-12)
    assert quasi_norm(g, inverse(g, x)) == quasi_norm(g, x)


def test_weights_and_homogeneous_dimension():
    assert heisenberg(1).weights == (1, 1, 2)
    assert heisenberg(3).weights == (1,) * 6 + (2,)
    assert heisenberg(3).Q == 8
    assert abelian(4).Q == 4
    assert heisenberg(2).step == 2 and abelian(2).step == 1


def test_multiply_examples():
    H = heisenberg(1)
    assert multiply(H, element(1, 0, 0), element(0, 1, 0)) == element(1, 1, Fraction(1, 2))
    x = element(Fraction(2, 3), -1, 5)
    assert multiply(H, x, element(Fraction(-2, 3), 1, -5)) == identity(H)


def test_inverse_examples():
    assert inverse(abelian(2), element(3, -1)) == element(-3, 1)
    H = heisenberg(1)
    assert inverse(H, element(1, 2, 5)) == element(-1, -2, -5)
    assert multiply(H, element(1, 2, 5), inverse(H, element(1, 2, 5))) == identity(H)
    x = element(Fraction(1, 3), 7, -2)
    assert inverse(H, inverse(H, x)) == x


def test_dilate_examples():
    H = heisenberg(1)
    x = element(1, 1, 1)
    assert dilate(H, 2, x) == element(2, 2, 4)
    assert dilate(H, 1, x) == x
    assert dilate(H, 2, dilate(H, 3, x)) == dilate(H, 6, x)
    with pytest.raises(ValueError):
        dilate(H, 0, x)


def test_quasi_norm_examples():
    H = heisenberg(1)
    assert quasi_norm(H, identity(H)) == 0
    assert quasi_norm(H, element(3, 4, 5)) == 4
    assert quasi_norm(H, element(0, 0, 9)) == 3
    X = np.array([[3.0, 4.0, 5.0], [0.0, 0.0, -16.0]])
    assert quasi_norm_array(H, X).tolist() == [4.0, 4.0]


def test_conjugation_matrix_matches_group_law():
    g = direct_product(heisenberg(2), abelian(1))
    x = element(Fraction(1, 3), -2, Fraction(5, 7), 1, Fraction(-3, 2), 4)
    gam = element(1, 2, -1, 3, Fraction(1, 2), -2)
    M = conjugation_matrix(g, x)
    lhs = multiply(g, multiply(g, inverse(g, x), gam), x)
    rhs = tuple(sum(M[i][j] * gam[j] for j in range(g.dim)) for i in range(g.dim))
    assert lhs.coords == rhs


def test_heisenberg_lattice_closure():
    H = heisenberg(1)
    lat = canonical_lattice(H)
    assert lat.scales == (1, 1, Fraction(1, 2))
    pts = lattice_ball(lat, 2)
    rng = np.random.default_rng(7)
    for i, j in rng.integers(0, len(pts), size=(200, 2)):
        assert lat.is_member(multiply(H, pts[i], pts[j]))
        assert lat.is_member(inverse(H, pts[i]))
    assert lat.is_member(identity(H))
    assert not lat.is_member(element(0, 0, Fraction(1, 4)))


def test_heisenberg_lattice_rejects_non_closed_scales():
    with pytest.raises(ValueError, match="not closed"):
        LatticeSubgroup(heisenberg(1), (1, 1, 1))
    LatticeSubgroup(heisenberg(1), (2, 1, 1))  # 2*1/(2*1) = 1 is fine


def test_lattice_ball_examples():
    Z = canonical_lattice(abelian(1))
    assert [x[0] for x in lattice_ball(Z, 2.5)] == [-2, -1, 0, 1, 2]
    H = canonical_lattice(heisenberg(1))
    assert lattice_ball(H, 0) == [identity(heisenberg(1))]
    assert len(lattice_ball(H, 1)) == 45
    assert len(lattice_ball(canonical_lattice(heisenberg(2)), 0)) == 1


def test_ball_exponents_brute_force():
    lat = canonical_lattice(heisenberg(1))
    R = 2.3
    exps = ball_exponents(lat, R)
    brute = []
    for a in range(-4, 5):
        for b in range(-4, 5):
            for c in range(-30, 31):
                if quasi_norm(lat.group, lat.point((a, b, c))) <= R:
                    brute.append((a, b, c))
    assert sorted(map(tuple, exps.tolist())) == sorted(brute)
    assert exps.tolist() == sorted(exps.tolist())


def test_lattice_tail_sum_torus_limit():
    Z = canonical_lattice(abelian(1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = lattice_tail_sum(Z, 2, 20000)
    assert s == pytest.approx(math.pi**2 / 3, abs=2e-4)
    assert lattice_tail_sum(Z, 3, 0.5) == 0.0


def test_lattice_tail_sum_warns_below_threshold():
    with pytest.warns(RuntimeWarning):
        lattice_tail_sum(canonical_lattice(heisenberg(1)), 5, 2)


def test_lattice_tail_bound_heisenberg():
    lat = canonical_lattice(heisenberg(1))
    s10 = lattice_tail_sum(lat, 9, 10)
    s20 = lattice_tail_sum(lat, 9, 20)
    bound = lattice_tail_bound(lat, 9, 10)
    assert 0 < s20 - s10 < bound
    assert math.isinf(lattice_tail_bound(lat, 4, 10))
    assert math.isinf(lattice_tail_bound(lat, 9, 0))


def test_fundamental_domain_grid():
    grid = fundamental_domain_grid(canonical_lattice(abelian(1)), 4)
    assert [x[0] for x in grid.nodes] == [Fraction(-3, 8), Fraction(-1, 8), Fraction(1, 8), Fraction(3, 8)]
    assert grid.weights == (Fraction(1, 4),) * 4
    assert grid.total_volume == 1
    latH = canonical_lattice(heisenberg(1))
    gH = fundamental_domain_grid(latH, 3)
    assert gH.total_volume == Fraction(1, 2)
    for x in gH.nodes:
        assert all(-k / 2 <= c < k / 2 for c, k in zip(x, latH.scales))
    assert fundamental_domain_grid(canonical_lattice(abelian(3)), 2).total_volume == 1
    with pytest.raises(ValueError):
        fundamental_domain_grid(latH, 0)


def test_direct_product():
    g = direct_product(abelian(1), abelian(1))
    assert g.Q == 2 and g.dim == 2
    # H_1 x R with R reweighted from 1 to 1 is Q=5; reweighting H_1 doubles its part
    assert direct_product(heisenberg(1), abelian(1)).Q == 5
    assert direct_product(heisenberg(1), abelian(1), 1, 2).Q == 6
    gp = direct_product(heisenberg(1), abelian(2))
    a, c = element(1, 2, 3), element(Fraction(1, 2), -1, 4)
    b, d = element(5, -1), element(2, 2)
    prod = multiply(gp, element(*a, *b), element(*c, *d))
    assert prod == element(*multiply(heisenberg(1), a, c), *multiply(abelian(2), b, d))
