"""Geometry module: metrics, Christoffel symbols, flows, transport, sampling."""

import numpy as np
import pytest

from framelab import geometry as geo
from framelab import models as M
from framelab.errors import ArgumentError, DomainError, GeometryError


def _sample_points(model, rng, count=16):
    xs, _ = geo.sample_liouville(model, count, seed=int(rng.integers(1 << 30)))
    return xs


# ---------------------------------------------------------------------------
# chart metric invariants


@pytest.mark.parametrize("name", ["torus2", "sphere2", "sphere3", "genus2", "kaehler"])
def test_metric_symmetric_positive(name, rng, request):
    model = request.getfixturevalue(name)
    xs = _sample_points(model, rng)
    G = model.metric(xs)
    assert np.abs(G - np.transpose(G, (0, 2, 1))).max() <= 1e-14
    assert np.linalg.eigvalsh(G).min() > 0


@pytest.mark.parametrize("name", ["sphere2", "genus2", "kaehler"])
def test_analytic_dg_matches_finite_differences(name, rng, request):
    model = request.getfixturevalue(name)
    xs = _sample_points(model, rng, 8)
    dg = model.metric_deriv(xs)
    fd = geo.finite_difference_dg(model.chart.g, xs)
    scale = max(np.abs(dg).max(), 1.0)
    assert np.abs(dg - fd).max() / scale <= 1e-6


# ---------------------------------------------------------------------------
# Christoffel symbols


def test_christoffel_flat_torus_zero(torus2):
    Gam = geo.christoffel(torus2.chart, np.array([0.3, 0.7]))
    assert np.abs(Gam).max() == 0.0


def test_christoffel_sphere_closed_form(sphere2):
    th, ph = 0.9, 0.4
    Gam = geo.christoffel(sphere2.chart, np.array([th, ph]))
    assert abs(Gam[0, 1, 1] + np.sin(th) * np.cos(th)) <= 1e-9
    assert abs(Gam[1, 0, 1] - 1.0 / np.tan(th)) <= 1e-9
    assert np.abs(Gam - np.transpose(Gam, (0, 2, 1))).max() <= 1e-12


def test_christoffel_disk_origin_zero(genus2):
    # conformal factor gradient vanishes at the disk center
    Gam = geo.christoffel(genus2.chart, np.zeros(2))
    assert np.abs(Gam).max() <= 1e-12


def test_christoffel_outside_domain_raises(sphere2):
    with pytest.raises(DomainError):
        geo.christoffel(sphere2.chart, np.array([-0.5, 0.0]))


# ---------------------------------------------------------------------------
# geodesic flow


def test_flat_torus_straight_lines(torus2):
    p = geo.CotangentPoint([0.0, 0.0], [1.0, 0.0])
    traj = geo.geodesic_flow(torus2, p, 1.0, 1e-2)
    assert np.abs(traj.xs[-1] - 0.0).max() <= 1e-12  # period 1: back to start
    assert np.abs(traj.xis[-1] - [1.0, 0.0]).max() == 0.0


def test_sphere_great_circle_closes(sphere2):
    p = geo.CotangentPoint([np.pi / 2, 0.0], [0.0, 1.0]).normalize_unit(sphere2)
    traj = geo.geodesic_flow(sphere2, p, 2 * np.pi, 1e-3)
    dphi = traj.xs[-1, 1] % (2 * np.pi)
    assert abs(traj.xs[-1, 0] - np.pi / 2) <= 1e-8
    assert min(dphi, 2 * np.pi - dphi) <= 1e-8
    assert np.abs(traj.xis[-1] - p.xi).max() <= 1e-8


def test_genus2_confined_to_octagon(genus2):
    xs, xis = geo.sample_liouville(genus2, 3, seed=5)
    octa = genus2.params["octagon"]
    for b in range(3):
        traj = geo.geodesic_flow(genus2, geo.CotangentPoint(xs[b], xis[b]), 10.0, 2e-3)
        assert octa.contains(traj.xs[-1:])[0]
        gi = genus2.inverse_metric(traj.xs[-1:])[0]
        assert abs(traj.xis[-1] @ gi @ traj.xis[-1] - 1.0) <= 1e-10


@pytest.mark.parametrize("name", ["torus2", "sphere2", "genus2", "kaehler"])
def test_energy_conserved_along_flow(name, request):
    model = request.getfixturevalue(name)
    xs, xis = geo.sample_liouville(model, 1, seed=11)
    if model.tag == "round-sphere":
        xs = np.array([[np.pi / 2, 0.3]])
        xis = np.array([[0.2, 1.0]])
        xis /= np.sqrt(np.einsum("bij,bi,bj->b", model.inverse_metric(xs), xis, xis))
    traj = geo.geodesic_flow(model, geo.CotangentPoint(xs[0], xis[0]), 3.0, 1e-3)
    gi = model.inverse_metric(traj.xs)
    nrm = np.einsum("bij,bi,bj->b", gi, traj.xis, traj.xis)
    assert np.abs(nrm - 1.0).max() <= 1e-10


@pytest.mark.parametrize("name", ["genus2", "kaehler"])
def test_flow_reversibility(name, request):
    model = request.getfixturevalue(name)
    xs, xis = geo.sample_liouville(model, 1, seed=3)
    p = geo.CotangentPoint(xs[0], xis[0])
    fwd = geo.geodesic_flow(model, p, 10.0, 1e-3, record=False)
    back = geo.geodesic_flow(model, geo.CotangentPoint(fwd.x, -fwd.xi), 10.0, 1e-3,
                             record=False)
    # compare modulo the fundamental domain
    dx, _, _, _ = model.wrap(np.vstack([back.x[None], p.x[None]]))
    assert np.abs(dx[0] - dx[1]).max() <= 1e-8
    assert np.abs(back.xi + p.xi).max() <= 1e-8


def test_sphere_polar_exit_raises(sphere2):
    p = geo.CotangentPoint([np.pi / 2, 0.0], [1.0, 0.0]).normalize_unit(sphere2)
    with pytest.raises(GeometryError):
        geo.geodesic_flow(sphere2, p, 3.0, 1e-3, record=False)


# ---------------------------------------------------------------------------
# parallel transport


def test_transport_trivial_on_flat_torus(torus2):
    p = geo.CotangentPoint([0.1, 0.9], [0.6, 0.8])
    traj = geo.geodesic_flow(torus2, p.normalize_unit(torus2), 2.0, 1e-2)
    v = np.array([0.3, -0.4])
    out = geo.parallel_transport(torus2, traj, v)
    assert np.abs(out - v).max() <= 1e-12


def test_latitude_holonomy_matches_closed_form(sphere2):
    for th0 in (0.7, 1.1):
        curve = geo.sampled_curve(sphere2, lambda t: np.array([th0, t]),
                                  lambda t: np.array([0.0, 1.0]), 2 * np.pi, 1e-3)
        v1 = geo.parallel_transport(sphere2, curve, np.array([1.0, 0.0]))
        a1 = np.array([v1[0], v1[1] / np.sin(th0)])
        assert abs(np.linalg.norm(a1) - 1.0) <= 1e-10
        ang = np.arctan2(-a1[1], a1[0])
        expect = 2 * np.pi * (1 - np.cos(th0))
        err = min(abs(np.angle(np.exp(1j * (s * ang - expect)))) for s in (1, -1))
        assert err <= 1e-6


def test_transport_preserves_norm(genus2):
    xs, xis = geo.sample_liouville(genus2, 1, seed=8)
    p = geo.CotangentPoint(xs[0], xis[0])
    traj = geo.geodesic_flow(genus2, p, 10.0, 2e-3)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(2)
    out = geo.parallel_transport(genus2, traj, v)
    gi0 = genus2.inverse_metric(traj.xs[:1])[0]
    gi1 = genus2.inverse_metric(traj.xs[-1:])[0]
    assert abs(out @ gi1 @ out - v @ gi0 @ v) <= 1e-10


def test_transport_empty_trajectory_raises(torus2):
    traj = geo.Trajectory(np.array([0.0]), np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ArgumentError):
        geo.parallel_transport(torus2, traj, np.array([1.0, 0.0]))


def test_identification_consistency(genus2):
    """Flowing from a point and from its deck image gives deck-related output."""
    octa = genus2.params["octagon"]
    xs, xis = geo.sample_liouville(genus2, 1, seed=21)
    p = geo.CotangentPoint(xs[0], xis[0])
    # deck image through pairing 0 (may land outside the octagon: that is the
    # point - the flow must agree after re-wrapping)
    q_x, J = octa.pairings[0].apply(p.x[None])
    q_xi = np.einsum("bij,bj->bi", np.linalg.inv(np.transpose(J, (0, 2, 1))), p.xi[None])
    end1 = geo.geodesic_flow(genus2, p, 2.0, 1e-3, record=False)
    wrapped, wxis, _, _ = genus2.wrap(q_x, q_xi[:, None, :])
    q = geo.CotangentPoint(wrapped[0], wxis[0, 0])
    end2 = geo.geodesic_flow(genus2, q, 2.0, 1e-3, record=False)
    assert np.abs(end1.x - end2.x).max() <= 1e-10
    assert np.abs(end1.xi - end2.xi).max() <= 1e-10


# ---------------------------------------------------------------------------
# Liouville sampling


@pytest.mark.parametrize("name", ["torus2", "sphere2", "genus2", "kaehler"])
def test_liouville_unit_covectors(name, request):
    model = request.getfixturevalue(name)
    xs, xis = geo.sample_liouville(model, 200, seed=7)
    gi = model.inverse_metric(xs)
    assert np.abs(np.einsum("bij,bi,bj->b", gi, xis, xis) - 1.0).max() <= 1e-13


def test_liouville_flat_torus_uniform(torus2):
    xs, _ = geo.sample_liouville(torus2, 100000, seed=1)
    se = 1.0 / np.sqrt(12 * len(xs))
    assert np.abs(xs.mean(axis=0) - 0.5).max() <= 3 * se


def test_liouville_sphere_costheta_mean(sphere2):
    xs, _ = geo.sample_liouville(sphere2, 100000, seed=2)
    vals = np.cos(xs[:, 0])
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean()) <= 3 * se  # surface average of cos(theta) is 0


def test_liouville_count_precondition(torus2):
    with pytest.raises(ArgumentError):
        geo.sample_liouville(torus2, 0, seed=0)


def test_octagon_matches_hyperbolic_closed_forms(genus2):
    octa = genus2.params["octagon"]
    # vertex radius and apothem of the regular angle-sum-2pi octagon
    expect_rho = np.tanh(np.arccosh(1.0 / np.tan(np.pi / 8) ** 2) / 2.0)
    assert abs(octa.rho - expect_rho) <= 1e-12
    assert abs(octa.apothem - np.arccosh(1.0 + np.sqrt(2.0))) <= 1e-12


def test_octagon_vertex_loop_closes(genus2):
    """Going around the single glued vertex composes to the identity."""
    octa = genus2.params["octagon"]
    # the vertex cycle visits all 8 corners; composing the corner-to-corner
    # deck maps in sequence must give the identity Mobius transformation
    from framelab.models import Mobius
    g = [octa.pairings[k] for k in range(8)]
    # vertex identifications: pairing k maps V_{k+4} -> V_{k+1}
    word = Mobius(1.0, 0.0)
    v = 0
    seen = []
    for _ in range(8):
        seen.append(v)
        k = (v - 4) % 8   # pairing k maps V_{k+4} = V_v
        word = g[k].compose(word)
        v = (k + 1) % 8
    assert sorted(seen) == list(range(8))
    z = 0.31 + 0.12j
    assert abs(word.apply_complex(z) - z) <= 1e-9
