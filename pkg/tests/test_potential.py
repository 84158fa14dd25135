import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mehlerlab.potential import (BalayageMethod, FiniteChain, birth_death_chain,
                                 certify_minimality, hitting_balayage, is_excessive, mc_balayage,
                                 nest_check, polar_null_set, random_chain, reduced_lp, resolvent,
                                 two_state_chain)
from mehlerlab.rng import SeedSpec

seeds = st.integers(0, 2**32 - 1)


def _excessive_u(chain, alpha, rng):
    """``alpha U_alpha f`` is excessive for any ``f >= 0``."""
    return alpha * resolvent(chain, alpha) @ rng.uniform(0, 1, chain.n_states)


# chains and resolvents

def test_chain_validation():
    with pytest.raises(ValueError):
        FiniteChain([[-1.0, 0.5], [1.0, -1.0]])
    with pytest.raises(ValueError):
        FiniteChain([[1.0, -1.0], [1.0, -1.0]])


def test_csv_chain(tmp_path):
    p = tmp_path / "q.csv"
    p.write_text("# two states\n-1,1\n2,-2\n")
    assert FiniteChain.from_csv(p).n_states == 2


@given(seeds, st.integers(2, 8), st.floats(0.05, 5), st.floats(0.05, 5))
@settings(max_examples=50, deadline=None)
def test_resolvent_identity(seed, n, a, b):
    chain = random_chain(n, seed)
    Ua, Ub = resolvent(chain, a), resolvent(chain, b)
    assert np.allclose(Ua - Ub, (b - a) * Ua @ Ub, atol=1e-10)
    # alpha U_alpha is a Markov matrix
    assert np.allclose(a * Ua.sum(1), 1.0) and np.all(Ua >= -1e-14)


# excessive functions

def test_excessive_examples():
    chain = two_state_chain(1.0)
    assert is_excessive(chain, 1.0, np.ones(2)).excessive
    v = resolvent(chain, 1.0) @ np.array([1.0, 0.0])
    assert np.allclose(v, [2 / 3, 1 / 3])
    assert is_excessive(chain, 1.0, v).excessive
    bad = is_excessive(chain, 1.0, np.array([1.0, -1.0]))
    assert not bad.excessive and bad.witness == 1  # 0-based index of the second state


@given(seeds, st.integers(2, 8), st.floats(0.1, 3))
@settings(max_examples=40, deadline=None)
def test_potentials_excessive_and_resolvent_consistent(seed, n, alpha):
    chain = random_chain(n, seed)
    v = _excessive_u(chain, alpha, np.random.default_rng(seed))
    chk = is_excessive(chain, alpha, v)
    assert chk.excessive and chk.resolvent_consistent


# balayage

def test_two_state_closed_form():
    chain = two_state_chain(1.0)
    for solver in (reduced_lp, hitting_balayage):
        res = solver(chain, 1.0, [1], np.ones(2))
        assert np.allclose(res.values, [0.5, 1.0], atol=1e-10)
    assert reduced_lp(chain, 1.0, [1], np.ones(2)).method is BalayageMethod.LP


def test_balayage_edge_cases():
    chain = random_chain(5, 3)
    u = _excessive_u(chain, 1.0, np.random.default_rng(0))
    assert np.allclose(reduced_lp(chain, 1.0, range(5), u).values, u, atol=1e-9)
    for solver in (reduced_lp, hitting_balayage):
        assert np.all(solver(chain, 1.0, [], u).values == 0)
        assert np.allclose(solver(chain, 1.0, [2], np.zeros(5)).values, 0)


def test_unreachable_target_gives_zero():
    Q = np.array([[-1, 1, 0], [1, -1, 0], [0, 0, 0]], dtype=float)
    h = hitting_balayage(FiniteChain(Q), 1.0, [2], np.ones(3)).values
    assert h[0] == 0 and h[1] == 0 and h[2] == 1


@given(seeds, st.integers(2, 8), st.floats(0.1, 3), st.floats(0, 0.6))
@settings(max_examples=60, deadline=None)
def test_lp_equals_hitting_for_excessive_u(seed, n, alpha, sparsity):
    rng = np.random.default_rng(seed)
    chain = random_chain(n, seed, sparsity)
    A = np.flatnonzero(rng.uniform(size=n) < 0.5)
    u = _excessive_u(chain, alpha, rng)
    lp = reduced_lp(chain, alpha, A, u)
    hit = hitting_balayage(chain, alpha, A, u)
    assert np.allclose(lp.values, hit.values, atol=1e-8)
    assert is_excessive(chain, alpha, lp.values, tol=1e-8).excessive
    assert np.all(lp.values[A] >= u[A] - 1e-9)


def test_lp_dominates_hitting_for_general_u():
    rng = np.random.default_rng(7)
    for i in range(20):
        chain = random_chain(6, i)
        A = [0, 3]
        u = rng.uniform(0, 1, 6)
        lp = reduced_lp(chain, 1.0, A, u).values
        assert np.all(lp >= hitting_balayage(chain, 1.0, A, u).values - 1e-9)


def test_minimality_certificate():
    chain = random_chain(5, 11)
    u = _excessive_u(chain, 0.7, np.random.default_rng(1))
    res = reduced_lp(chain, 0.7, [1, 4], u)
    ok, gap = certify_minimality(chain, 0.7, [1, 4], u, res)
    assert ok and gap < 1e-8


@given(seeds, st.integers(3, 7))
@settings(max_examples=30, deadline=None)
def test_balayage_monotone_in_set(seed, n):
    chain = random_chain(n, seed)
    rng = np.random.default_rng(seed)
    u = _excessive_u(chain, 1.0, rng)
    A = [0]
    B = [0] + [int(i) for i in np.flatnonzero(rng.uniform(size=n) < 0.5)]
    assert np.all(hitting_balayage(chain, 1.0, A, u).values
                  <= hitting_balayage(chain, 1.0, B, u).values + 1e-12)


def test_mc_two_state():
    res = mc_balayage(two_state_chain(1.0), 1.0, [1], np.ones(2), 100_000, SeedSpec(1))
    assert np.all(np.abs(res.values - [0.5, 1.0]) <= 3 * np.maximum(res.std_errors, 1e-15))
    assert res.values[1] == 1.0 and res.std_errors[1] == 0.0


def test_mc_target_everywhere_and_large_alpha():
    chain = random_chain(4, 2)
    u = np.array([0.3, 1.0, 0.2, 0.5])
    assert np.array_equal(mc_balayage(chain, 1.0, range(4), u, 100, 0).values, u)
    far = mc_balayage(chain, 1e3, [0], u, 2000, 0)
    exact = hitting_balayage(chain, 1e3, [0], u).values
    # killing at rate 1e3 against unit jump rates leaves about 1e-3 of the mass
    assert np.all(far.values[1:] < 2e-3)
    assert np.all(np.abs(far.values - exact) <= 3 * far.std_errors + 1e-12)


def test_mc_reproducible():
    chain = random_chain(5, 9)
    a = mc_balayage(chain, 0.5, [0], np.ones(5), 500, SeedSpec(3))
    b = mc_balayage(chain, 0.5, [0], np.ones(5), 500, SeedSpec(3))
    assert np.array_equal(a.values, b.values)


# polar sets

def test_polar_examples():
    assert polar_null_set(random_chain(5, 0), [2]) == []
    Q = np.zeros((4, 4))
    Q[0, 1] = Q[1, 0] = Q[2, 3] = Q[3, 2] = 1.0
    np.fill_diagonal(Q, -Q.sum(1))
    chain = FiniteChain(Q)
    assert polar_null_set(chain, [0]) == [2, 3]
    assert polar_null_set(chain, []) == [0, 1, 2, 3]


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@given(seed=seeds, n=st.integers(2, 8), sparsity=st.floats(0.3, 0.9))
@settings(max_examples=25, deadline=None)
def test_polar_set_is_zero_set_of_hitting(alpha, seed, n, sparsity):
    chain = random_chain(n, seed, sparsity)
    A = [int(np.random.default_rng(seed).integers(n))]
    h = hitting_balayage(chain, alpha, A, np.ones(n)).values
    assert polar_null_set(chain, A) == [int(i) for i in np.flatnonzero(h == 0)]


# nests

def test_nest_birth_death_small():
    chain = birth_death_chain(30, 0.2, 1.0)
    rep = nest_check(chain, 1.0, [list(range(k + 1)) for k in (5, 10, 15, 20)], 300, SeedSpec(4))
    assert rep.analytic_verdict == "nest" and rep.agree
    assert rep.balayage_max[0] >= 10 * rep.balayage_max[-1]


def test_constant_family_is_not_a_nest():
    chain = birth_death_chain(20, 0.5, 0.5)
    rep = nest_check(chain, 1.0, [list(range(6))] * 4, 300, SeedSpec(5))
    assert rep.analytic_verdict == "not a nest" and rep.mc_verdict == "not a nest"


def test_family_reaching_full_space():
    chain = birth_death_chain(10, 1.0, 1.0)
    fam = [list(range(5)), list(range(8)), list(range(11))]
    rep = nest_check(chain, 1.0, fam, 200, SeedSpec(6))
    assert rep.balayage_max[-1] == 0.0 and rep.exit_fraction[-1] == 0.0
    assert rep.analytic_verdict == "nest" and rep.agree


def test_nest_requires_increasing_sets():
    with pytest.raises(ValueError):
        nest_check(two_state_chain(), 1.0, [[0, 1], [0]])
