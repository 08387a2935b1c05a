import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eigs.spectral import (
    BudgetExceeded,
    choice_family,
    condensation,
    degree_matrix,
    growth_descriptor,
    kappa_chain,
    mass_matrix,
    pair_growth,
    perron_vector,
    reachability,
    rho_equal,
    spectral_radius,
    vec_mat,
)

FIG3 = [
    [4, 1, 0, 0, 0, 0],
    [0, 1, 2, 0, 0, 1],
    [0, 3, 2, 0, 2, 0],
    [0, 0, 0, 2, 1, 3],
    [0, 0, 0, 1, 2, 1],
    [0, 0, 0, 2, 0, 1],
]

SPLENDOR_N = (
    (2, 0, 0, 0, 0, 0),
    (0, 0, 0, 1, 0, 1),
    (0, 0, 2, 0, 0, 0),
    (0, 0, 0, 2, 0, 0),
    (0, 0, 0, 0, 2, 0),
    (0, 0, 0, 0, 0, 2),
)


def test_mass_matrices(splendor, broken, path3):
    assert mass_matrix(splendor) == ((2, 1, 1), (0, 4, 0), (0, 0, 5))
    assert mass_matrix(broken) == ((3, 1), (0, 2))
    assert mass_matrix(path3) == ((3,),)


def test_degree_matrices(splendor, broken, path3):
    assert degree_matrix(broken) == ((2, 0, 0, 0), (0, 1, 0, 1), (0, 0, 1, 0), (0, 0, 0, 1))
    assert degree_matrix(splendor) == SPLENDOR_N
    assert degree_matrix(path3) == ((1, 0), (0, 1))


def test_degree_projection(splendor, broken, tree):
    for spec in (splendor, broken, tree):
        M, N = mass_matrix(spec), degree_matrix(spec)
        for a, row in enumerate(N):
            for b, x in enumerate(row):
                if x:
                    assert M[a // 2][b // 2] > 0


def test_choice_families(splendor, broken, path3, tree):
    assert set(choice_family(broken).options(1)) == {(2, 0), (1, 1)}
    assert set(choice_family(splendor).options(3)) == {(0, 0, 2), (0, 0, 3)}
    assert choice_family(path3).options(1) == ((3,),)
    assert choice_family(tree).rows == (((1, 1),), ((0, 2),))
    cf = choice_family(splendor)
    assert cf.product_size == 4
    M = mass_matrix(splendor)
    for c in range(1, 4):
        for v in cf.options(c):
            assert sum(v) >= 2
            assert all(x <= y for x, y in zip(v, M[c - 1]))


def test_path_budget():
    from eigs.model import ColouredGraph, IgsSpec, RuleGraph

    # complete graph on 7 vertices has many simple paths
    names = [f"v{k}" for k in range(7)]
    edges = tuple((a, b, 1) for i, a in enumerate(names) for b in names[i + 1:]
                  if {a, b} != {"v0", "v1"})
    rule = RuleGraph(1, ColouredGraph(tuple(names), edges), "v0", "v1")
    spec = IgsSpec(1, (rule,), 1)
    with pytest.raises(BudgetExceeded):
        choice_family(spec, path_budget=50)
    assert choice_family(spec).options(1)  # default budget suffices


def test_parallel_edges_count_as_distinct_paths():
    from eigs.model import ColouredGraph, IgsSpec, RuleGraph

    g = ColouredGraph(("p", "x", "m"), (("p", "x", 1), ("p", "x", 2), ("x", "m", 2)))
    spec = IgsSpec(2, (RuleGraph(1, g, "p", "m"), RuleGraph(2, g, "p", "m")), 1)
    assert set(choice_family(spec).options(1)) == {(1, 1), (0, 2)}


def test_fig3_condensation():
    form = condensation(FIG3)
    assert [b.members for b in form.blocks] == [(0,), (1, 2), (3, 4, 5)]
    assert all(b.primitive for b in form.blocks)
    for b in form.blocks:
        sub = np.array(FIG3)[np.ix_(b.members, b.members)]
        assert b.rho == pytest.approx(max(abs(np.linalg.eigvals(sub))), rel=1e-9)


def test_broken_block_radii(broken):
    assert sorted(b.rho for b in condensation(mass_matrix(broken)).blocks) == [2, 3]
    assert sorted(b.rho for b in condensation(degree_matrix(broken)).blocks) == [1, 1, 1, 2]


def test_primitivity_flags():
    form = condensation([[0, 1], [1, 0]])
    assert form.h == 1 and form.blocks[0].irreducible and not form.blocks[0].primitive
    assert form.blocks[0].period == 2
    zero = condensation([[0]])
    assert not zero.blocks[0].primitive and zero.blocks[0].rho == 0
    assert condensation([[3]]).blocks[0].primitive


def test_spectral_radius_small_cases():
    assert spectral_radius([[4]]) == 4
    assert spectral_radius([[2]]) == 2
    assert spectral_radius([[0, 1], [1, 0]]) == pytest.approx(1, rel=1e-12)
    assert spectral_radius([[1, 1], [1, 1]]) == pytest.approx(2, rel=1e-12)


def test_perron_vector():
    A = [[1, 2], [3, 1]]
    rho, v = perron_vector(A, side="right")
    assert rho == pytest.approx(1 + math.sqrt(6), rel=1e-12)
    assert np.allclose(np.array(A) @ v, rho * v, rtol=1e-10)
    assert (v > 0).all()


def test_reachability(splendor):
    M = mass_matrix(splendor)
    idx, blocks = reachability(M, 0)
    assert idx == {0, 1, 2} and len(blocks) == 3
    idx, _ = reachability(M, 1)
    assert idx == {1}


def test_kappa_chain():
    M = ((2, 1, 1), (0, 4, 0), (0, 0, 5))
    assert kappa_chain(M, 0) == 1
    chain = ((2, 1, 0), (0, 2, 1), (0, 0, 2))
    assert kappa_chain(chain, 0) == 3
    assert kappa_chain(((7,),), 0) == 1


def test_growth_chain_polynomial_factor():
    # xi_1 X^n = (2^n, n 2^(n-1), C(n,2) 2^(n-2)): the n^2 2^n coefficient is 1/8
    chain = ((2, 1, 0), (0, 2, 1), (0, 0, 2))
    g = growth_descriptor(chain, (1, 0, 0))
    assert (g.rate, g.poly_exponent) == (2.0, 2)
    assert g.constant == pytest.approx(1 / 8, rel=1e-4)
    assert g.stop == "cap" and not g.divergent


def test_growth_descriptors(broken, splendor):
    g = growth_descriptor(degree_matrix(broken), (1, 0, 0, 0))
    assert (g.rate, g.poly_exponent) == (2.0, 0)
    assert g.constant == pytest.approx(1.0)
    g = growth_descriptor(((1,),), (3,))
    assert (g.rate, g.poly_exponent) == (1.0, 0)
    assert g.constant == pytest.approx(3.0)
    # ||xi_1 M^n|| = (5^n - 2^n)/3 + (4^n - 2^n)/2 + 2^n, so the constant is 1/3
    g = growth_descriptor(mass_matrix(splendor), (1, 0, 0))
    assert (g.rate, g.poly_exponent) == (5.0, 0)
    assert g.constant == pytest.approx(1 / 3, rel=1e-8)
    assert g.stop == "converged"


def test_growth_rejects_bad_vectors():
    with pytest.raises(ValueError):
        growth_descriptor(((1,),), (0,))


def test_pair_growth(broken):
    form = condensation(mass_matrix(broken))
    assert pair_growth(form, [0], [0]) == (3.0, 0)
    assert pair_growth(form, [0], [1]) == (3.0, 0)
    assert pair_growth(form, [1], [0]) == (0.0, 0)
    chain = condensation(((2, 1), (0, 2)))
    assert pair_growth(chain, [0], [1]) == (2.0, 1)


def test_rho_equal_warns_on_near_tie():
    assert rho_equal(2.0, 2.0 + 1e-12)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assert not rho_equal(2.0, 2.0 * (1 + 5e-9))
    assert caught


@pytest.mark.parametrize("X", [FIG3, ((2, 1, 1), (0, 4, 0), (0, 0, 5)), SPLENDOR_N])
def test_growth_sandwich(X):
    X = tuple(tuple(r) for r in X)
    g = growth_descriptor(X, (1,) + (0,) * (len(X) - 1))
    v = (1,) + (0,) * (len(X) - 1)
    ratios = []
    for n in range(1, 61):
        v = vec_mat(v, X)
        if n >= 10:
            ratios.append(sum(v) / (n ** g.poly_exponent * g.rate ** n))
    c1, c2 = min(ratios), max(ratios)
    assert c1 > 0 and c2 / c1 < 10


def irreducible_matrices(max_size=6):
    @st.composite
    def build(draw):
        n = draw(st.integers(min_value=2, max_value=max_size))
        entries = draw(st.lists(st.integers(0, 4), min_size=n * n, max_size=n * n))
        X = np.array(entries).reshape(n, n)
        for i in range(n):  # a Hamiltonian cycle makes it irreducible
            X[i, (i + 1) % n] = max(X[i, (i + 1) % n], 1)
        return X

    return build()


@settings(max_examples=60, deadline=None)
@given(irreducible_matrices())
def test_spectral_radius_against_dense_eigensolver(X):
    ref = max(abs(np.linalg.eigvals(X.astype(float))))
    assert spectral_radius(X) == pytest.approx(ref, rel=1e-9)


@st.composite
def square_matrices(draw, max_size=6):
    n = draw(st.integers(min_value=1, max_value=max_size))
    entries = draw(st.lists(st.sampled_from([0, 0, 0, 1, 2, 3]), min_size=n * n, max_size=n * n))
    return np.array(entries).reshape(n, n)


@settings(max_examples=80, deadline=None)
@given(square_matrices(), st.randoms(use_true_random=False))
def test_condensation_structure_and_permutation_invariance(X, rnd):
    n = X.shape[0]
    form = condensation(X)
    order = form.order()
    assert sorted(order) == list(range(n))
    P = X[np.ix_(order, order)]
    for a in range(n):
        for b in range(n):
            if P[a, b]:
                assert form.block_of[order[a]] <= form.block_of[order[b]]
    perm = list(range(n))
    rnd.shuffle(perm)
    Y = X[np.ix_(perm, perm)]
    formY = condensation(Y)
    assert sorted(round(b.rho, 9) for b in form.blocks) == sorted(round(b.rho, 9) for b in formY.blocks)
    for i in range(n):
        if X[i].any():
            u = tuple(int(k == i) for k in range(n))
            uy = tuple(int(perm[k] == i) for k in range(n))
            gx = growth_descriptor(X, u, form, n_max=50)
            gy = growth_descriptor(Y, uy, formY, n_max=50)
            assert gx.rate == pytest.approx(gy.rate, rel=1e-9)
            assert gx.poly_exponent == gy.poly_exponent
