"""Clifford fiber algebra: gammas, projections, stabilizers, states, averages."""

import numpy as np
import pytest
from scipy.stats import ortho_group

from framelab import clifford as cl
from framelab.commutant import commutant, match_labels
from framelab.errors import ArgumentError, CapabilityError


@pytest.mark.parametrize("n,rank", [(2, 2), (3, 2), (4, 4), (5, 4), (6, 8), (7, 8), (8, 16)])
def test_build_clifford_rank_and_relations(n, rank):
    rep = cl.build_clifford(n)
    assert rep.rank == rank
    eye = np.eye(rank)
    for i in range(n):
        assert np.abs(rep.gammas[i] - rep.gammas[i].conj().T).max() <= 1e-14
        for j in range(n):
            ac = rep.gammas[i] @ rep.gammas[j] + rep.gammas[j] @ rep.gammas[i]
            assert np.abs(ac - 2 * (i == j) * eye).max() <= 1e-13


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_chirality_even_dimensions(n):
    rep = cl.build_clifford(n)
    G = rep.chirality
    assert G is not None
    assert np.abs(G @ G - np.eye(rep.rank)).max() <= 1e-13
    assert abs(np.trace(G)) <= 1e-12
    for g in rep.gammas:
        assert np.abs(G @ g + g @ G).max() <= 1e-13


def test_chirality_absent_odd():
    assert cl.build_clifford(5).chirality is None


def test_symbol_F_basics(rng):
    rep = cl.build_clifford(4)
    assert np.abs(cl.symbol_F(rep, [1, 0, 0, 0]) - rep.gammas[0]).max() == 0.0
    for _ in range(20):
        xi = rng.standard_normal(4)
        xi /= np.linalg.norm(xi)
        sF = cl.symbol_F(rep, xi)
        assert np.abs(sF @ sF - np.eye(4)).max() <= 1e-13
        assert abs(np.trace(sF)) <= 1e-12
        assert np.abs(sF - sF.conj().T).max() <= 1e-14
    with pytest.raises(ArgumentError):
        cl.symbol_F(rep, [1.0, 0.2, 0, 0])


def test_projections_pm_rank_one_for_n3():
    rep = cl.build_clifford(3)
    Pp, Pm = cl.projections_pm(rep, [1.0, 0, 0])
    for P, sign in ((Pp, 1), (Pm, -1)):
        w, v = np.linalg.eigh(rep.gammas[0])
        proj = v[:, w > 0] @ v[:, w > 0].conj().T if sign > 0 else v[:, w < 0] @ v[:, w < 0].conj().T
        assert np.abs(P - proj).max() <= 1e-13
        assert abs(np.trace(P) - 1.0) <= 1e-13


@pytest.mark.parametrize("n", range(3, 9))
def test_projection_traces_and_chirality_swap(n, rng):
    rep = cl.build_clifford(n)
    xi = rng.standard_normal(n)
    xi /= np.linalg.norm(xi)
    Pp, Pm = cl.projections_pm(rep, xi)
    assert abs(np.trace(Pp) - 2 ** (n // 2 - 1)) <= 1e-12
    if rep.chirality is not None:
        G = rep.chirality
        assert np.abs(G @ Pp - Pm @ G).max() <= 1e-13


@pytest.mark.parametrize("n", [3, 5, 6])
def test_spin_stabilizer_generators(n, rng):
    rep = cl.build_clifford(n)
    xi = rng.standard_normal(n)
    xi /= np.linalg.norm(xi)
    gens = cl.spin_stabilizer_generators(rep, xi)
    assert len(gens) == (n - 1) * (n - 2) // 2
    sF = cl.symbol_F(rep, xi)
    Pp, Pm = cl.projections_pm(rep, xi)
    for G in gens:
        assert np.abs(G @ sF - sF @ G).max() <= 1e-12
        assert np.abs(G @ Pp - Pp @ G).max() <= 1e-12
        assert np.abs(G @ Pm - Pm @ G).max() <= 1e-12


def test_single_generator_n3():
    rep = cl.build_clifford(3)
    gens = cl.spin_stabilizer_generators(rep, [0.0, 0.0, 1.0])
    assert len(gens) == 1
    assert np.abs(gens[0] - 0.5 * rep.gammas[0] @ rep.gammas[1]).max() <= 1e-14
    g3 = rep.gammas[2]
    assert np.abs(gens[0] @ g3 - g3 @ gens[0]).max() <= 1e-13


@pytest.mark.parametrize("n,full,labels", [
    (3, 2, {"P+", "P-"}), (4, 4, {"P+", "P-", "Gamma"}),
    (5, 2, {"P+", "P-"}), (6, 4, {"P+", "P-", "Gamma"}),
    (7, 2, {"P+", "P-"}), (8, 4, {"P+", "P-", "Gamma"}),
])
def test_commutant_table(n, full, labels, rng):
    rep = cl.build_clifford(n)
    xi = rng.standard_normal(n)
    xi /= np.linalg.norm(xi)
    gens = cl.spin_stabilizer_generators(rep, xi)
    res = commutant(gens)
    assert res.dimension == full
    assert res.gap >= 1e3
    cands = {"P+": cl.projections_pm(rep, xi)[0], "P-": cl.projections_pm(rep, xi)[1]}
    if rep.chirality is not None:
        cands["Gamma"] = rep.chirality
    assert set(match_labels(res, cands)) >= (labels & set(cands))
    for Q in cl.projections_pm(rep, xi):
        r2 = commutant(gens, restriction=Q)
        assert r2.dimension == 1
        assert r2.contains(Q / np.linalg.norm(Q))


def test_commutant_invariant_under_basis_rerandomization(rng):
    rep = cl.build_clifford(6)
    xi = rng.standard_normal(6)
    xi /= np.linalg.norm(xi)
    dims = set()
    for k in range(3):
        gens = cl.spin_stabilizer_generators(rep, xi, rng=np.random.default_rng(k))
        dims.add(commutant(gens).dimension)
    assert dims == {4}


def test_commutant_requires_generators():
    with pytest.raises(ArgumentError):
        commutant([])


def test_haar_average_identity_and_squares(rng):
    rep = cl.build_clifford(4)
    xi = rng.standard_normal(4)
    xi /= np.linalg.norm(xi)
    out = cl.haar_average_T(rep, xi, [(1.0, ())], samples=200, seed=0)
    assert np.abs(out - np.eye(4)).max() <= 1e-14
    # gamma(v_2)^2 = Id exactly, sample by sample
    out = cl.haar_average_T(rep, xi, [(1.0, (2, 2))], samples=200, seed=0)
    assert np.abs(out - np.eye(4)).max() <= 1e-12


def test_haar_average_odd_letter_vanishes(rng):
    rep = cl.build_clifford(3)
    xi = rng.standard_normal(3)
    xi /= np.linalg.norm(xi)
    samples = 2500
    out = cl.haar_average_T(rep, xi, [(1.0, (2,))], samples=samples, seed=3)
    assert np.abs(out).max() <= 5.0 / np.sqrt(samples)


def test_haar_average_exact_mode_matches_rules(rng):
    rep = cl.build_clifford(5)
    xi = rng.standard_normal(5)
    xi /= np.linalg.norm(xi)
    poly = [(0.7, ()), (2.0, (1,)), (1.0, (2,)), (3.0, (2, 2)), (1.0, (2, 3)), (1.0, (1, 1))]
    exact = cl.haar_average_T(rep, xi, poly, exact=True)
    expect = (0.7 + 3.0 + 1.0) * np.eye(4) + 2.0 * rep.gamma(xi)
    assert np.abs(exact - expect).max() <= 1e-13
    mc = cl.haar_average_T(rep, xi, poly, samples=4000, seed=1)
    assert np.abs(mc - exact).max() <= 5.0 / np.sqrt(4000) * 4


def test_haar_average_commutes_with_stabilizer(rng):
    rep = cl.build_clifford(4)
    xi = rng.standard_normal(4)
    xi /= np.linalg.norm(xi)
    samples = 4000
    out = cl.haar_average_T(rep, xi, [(1.0, (2, 3)), (0.5, (1, 2))], samples=samples, seed=2)
    tol = 5.0 / np.sqrt(samples)
    for G in cl.spin_stabilizer_generators(rep, xi):
        assert np.abs(G @ out - out @ G).max() <= tol


def test_haar_average_preconditions(rng):
    rep = cl.build_clifford(3)
    xi = np.array([1.0, 0.0, 0.0])
    with pytest.raises(ArgumentError):
        cl.haar_average_T(rep, xi, [(1.0, (4,))], samples=200)
    with pytest.raises(ArgumentError):
        cl.haar_average_T(rep, xi, [(1.0, (2,))], samples=50)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_fiber_states_identities(n, rng):
    rep = cl.build_clifford(n)
    xi = rng.standard_normal(n)
    xi /= np.linalg.norm(xi)
    vId = cl.fiber_states(rep, xi, np.eye(rep.rank))
    assert abs(vId["omega"] - 1) <= 1e-14
    assert abs(vId["omega_plus"] - 1) <= 1e-14
    for _ in range(100):
        a = rng.standard_normal((rep.rank,) * 2) + 1j * rng.standard_normal((rep.rank,) * 2)
        v = cl.fiber_states(rep, xi, a)
        assert abs(v["omega"] - 0.5 * (v["omega_plus"] + v["omega_minus"])) <= 1e-12
        if n % 2 == 0:
            assert abs(v["omega"] - 0.5 * (v["omega_1"] + v["omega_2"])) <= 1e-12
        pos = cl.fiber_states(rep, xi, a.conj().T @ a)
        assert np.real(pos["omega_plus"]) >= -1e-12


def test_fiber_states_odd_chirality_unavailable(rng):
    rep = cl.build_clifford(5)
    xi = np.array([1.0, 0, 0, 0, 0])
    with pytest.raises(CapabilityError):
        cl.fiber_state(rep, xi, np.eye(4), "omega_1")


@pytest.mark.parametrize("n", [3, 4, 5])
def test_spin_lift_conjugation(n, rng):
    rep = cl.build_clifford(n)
    R = ortho_group.rvs(n, random_state=7)
    if np.linalg.det(R) < 0:
        R[:, 0] *= -1
    U = cl.spin_lift(rep, R)
    assert np.abs(U @ U.conj().T - np.eye(rep.rank)).max() <= 1e-12
    for _ in range(10):
        xi = rng.standard_normal(n)
        xi /= np.linalg.norm(xi)
        lhs = U @ rep.gamma(xi) @ U.conj().T
        assert np.abs(lhs - rep.gamma(R @ xi)).max() <= 1e-10
