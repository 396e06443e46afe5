"""Concrete manifold models: flat tori, round spheres, the hyperbolic
octagon surface, and a curved Kaehler 4-torus.

The genus-2 surface lives in the Poincare disk; the regular hyperbolic
octagon with interior angle pi/4 is solved for numerically at construction
(the vertex radius is the root of the interior-angle equation), and the four
side-pairing translations are built from the solved geometry rather than
transcribed constants.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .errors import ArgumentError, CapabilityError
from .geometry import Box, ChartMetric, Disk, Identification, ManifoldModel

__all__ = [
    "flat_torus",
    "round_sphere",
    "genus2_hyperbolic",
    "kaehler_torus",
    "make_model",
    "Octagon",
]


# ---------------------------------------------------------------------------
# flat torus


def flat_torus(n=2, periods=1.0):
    """Flat torus R^n / (periods Z)^n with the Euclidean metric."""
    periods = np.broadcast_to(np.asarray(periods, dtype=float), (n,)).copy()

    def g(xs):
        return np.broadcast_to(np.eye(n), (xs.shape[0], n, n)).copy()

    def dg(xs):
        return np.zeros((xs.shape[0], n, n, n))

    idents = [_torus_wrap(periods)]
    chart = ChartMetric(n, Box(np.zeros(n), periods), g, dg)
    return ManifoldModel("flat-torus", chart, idents, None, {"periods": periods})


def _torus_wrap(periods):
    def detect(xs):
        return np.any((xs < 0) | (xs >= periods), axis=1)

    def mapping(xs):
        n = xs.shape[1]
        return np.mod(xs, periods), np.broadcast_to(np.eye(n), (xs.shape[0], n, n)).copy()

    return Identification(detect, mapping)


# ---------------------------------------------------------------------------
# round sphere S^n, hyperspherical chart


def round_sphere(n=2, polar_margin=0.02):
    """Round unit sphere S^n in hyperspherical coordinates.

    Chart (theta_1 .. theta_{n-1}, phi) with metric
    diag(1, sin^2 th_1, sin^2 th_1 sin^2 th_2, ...).  The chart degenerates at
    the poles; trajectories entering the polar margin raise a geometry error,
    so tests use starts whose orbits stay clear of the poles.
    """
    if n < 2:
        raise ArgumentError("sphere dimension must be >= 2")

    def g(xs):
        B = xs.shape[0]
        out = np.zeros((B, n, n))
        out[:, 0, 0] = 1.0
        acc = np.ones(B)
        for i in range(1, n):
            acc = acc * np.sin(xs[:, i - 1]) ** 2
            out[:, i, i] = acc
        return out

    def dg(xs):
        B = xs.shape[0]
        out = np.zeros((B, n, n, n))
        G = g(xs)
        for i in range(1, n):
            for k in range(i):
                out[:, i, i, k] = G[:, i, i] * 2.0 / np.tan(xs[:, k])
        return out

    lo = np.array([polar_margin] * (n - 1) + [0.0])
    hi = np.array([np.pi - polar_margin] * (n - 1) + [2 * np.pi])

    def detect(xs):
        return (xs[:, -1] < 0) | (xs[:, -1] >= 2 * np.pi)

    def mapping(xs):
        out = xs.copy()
        out[:, -1] = np.mod(out[:, -1], 2 * np.pi)
        return out, np.broadcast_to(np.eye(n), (xs.shape[0], n, n)).copy()

    chart = ChartMetric(n, Box(lo, hi), g, dg)
    return ManifoldModel("round-sphere", chart, [Identification(detect, mapping)],
                         None, {"polar_margin": polar_margin})


# ---------------------------------------------------------------------------
# genus-2 hyperbolic surface: regular octagon in the Poincare disk


class Mobius:
    """An SU(1,1) disk isometry z -> (a z + b) / (conj(b) z + conj(a))."""

    def __init__(self, a, b):
        self.a = complex(a)
        self.b = complex(b)

    @staticmethod
    def translation(length):
        return Mobius(np.cosh(length / 2.0), np.sinh(length / 2.0))

    @staticmethod
    def rotation(angle):
        return Mobius(np.exp(1j * angle / 2.0), 0.0)

    def compose(self, other):
        a = self.a * other.a + self.b * np.conj(other.b)
        b = self.a * other.b + self.b * np.conj(other.a)
        return Mobius(a, b)

    def inverse(self):
        return Mobius(np.conj(self.a), -self.b)

    def apply_complex(self, z):
        return (self.a * z + self.b) / (np.conj(self.b) * z + np.conj(self.a))

    def apply(self, xs):
        z = xs[:, 0] + 1j * xs[:, 1]
        w = self.apply_complex(z)
        # holomorphic derivative dw/dz = 1 / (conj(b) z + conj(a))^2
        dw = 1.0 / (np.conj(self.b) * z + np.conj(self.a)) ** 2
        out = np.stack([w.real, w.imag], axis=1)
        J = np.empty((xs.shape[0], 2, 2))
        J[:, 0, 0] = dw.real
        J[:, 0, 1] = -dw.imag
        J[:, 1, 0] = dw.imag
        J[:, 1, 1] = dw.real
        return out, J


def _side_circle(v1, v2):
    """Euclidean center/radius of the geodesic through two disk points.

    Solves 2 v . c = 1 + |v|^2 for both endpoints (circle orthogonal to the
    unit circle).
    """
    A = 2.0 * np.array([v1, v2])
    rhs = np.array([1.0 + v1 @ v1, 1.0 + v2 @ v2])
    c = np.linalg.solve(A, rhs)
    r = np.sqrt(c @ c - 1.0)
    return c, r


def _interior_angle(rho):
    """Interior angle of the regular disk octagon with vertex radius rho."""
    V = [rho * np.array([np.cos(k * np.pi / 4), np.sin(k * np.pi / 4)]) for k in range(3)]
    c0, _ = _side_circle(V[0], V[1])
    c1, _ = _side_circle(V[1], V[2])
    # tangents at V1 toward V0 and V2 (conformal model: Euclidean angles)
    def tangent_toward(c, p, target):
        t = np.array([-(p - c)[1], (p - c)[0]])
        return t if t @ (target - p) > 0 else -t
    u0 = tangent_toward(c0, V[1], V[0])
    u1 = tangent_toward(c1, V[1], V[2])
    return np.arccos(np.clip(u0 @ u1 / np.linalg.norm(u0) / np.linalg.norm(u1), -1, 1))


class Octagon:
    """Regular hyperbolic octagon (angle sum 2 pi) with opposite-side pairing."""

    def __init__(self):
        self.rho = brentq(lambda r: _interior_angle(r) - np.pi / 4, 0.55, 0.98,
                          xtol=1e-15, rtol=8.9e-16)
        self.vertices = np.array([
            self.rho * np.array([np.cos(k * np.pi / 4), np.sin(k * np.pi / 4)])
            for k in range(8)])
        self.centers = np.empty((8, 2))
        self.radii = np.empty(8)
        for k in range(8):
            c, r = _side_circle(self.vertices[k], self.vertices[(k + 1) % 8])
            self.centers[k] = c
            self.radii[k] = r
        # apothem (hyperbolic distance origin -> side midpoint)
        m = np.linalg.norm(self.centers[0]) - self.radii[0]
        self.apothem = 2.0 * np.arctanh(m)
        # pairing k maps side k+4 onto side k: translation along the common
        # perpendicular through both midpoints
        self.pairings = []
        for k in range(8):
            phi = (k + 0.5) * np.pi / 4
            gk = Mobius.rotation(phi).compose(
                Mobius.translation(2.0 * self.apothem)).compose(Mobius.rotation(-phi))
            self.pairings.append(gk)
        self._check_pairings()

    def _check_pairings(self):
        for k in range(8):
            got1 = self.pairings[k].apply_complex(_c(self.vertices[(k + 4) % 8]))
            got2 = self.pairings[k].apply_complex(_c(self.vertices[(k + 5) % 8]))
            want1 = _c(self.vertices[(k + 1) % 8])
            want2 = _c(self.vertices[k % 8])
            if abs(got1 - want1) > 1e-10 or abs(got2 - want2) > 1e-10:
                raise ArgumentError("octagon side pairing failed to close")

    def contains(self, xs):
        inside = np.sum(xs * xs, axis=1) < 1.0
        for k in range(8):
            d2 = np.sum((xs - self.centers[k]) ** 2, axis=1)
            inside &= d2 >= self.radii[k] ** 2 - 1e-14
        return inside

    def side_violations(self, xs):
        """(B, 8) array of r_k^2 - |x - c_k|^2 (positive = beyond side k)."""
        d2 = ((xs[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        return self.radii[None, :] ** 2 - d2


def _c(p):
    return complex(p[0], p[1])


def genus2_hyperbolic():
    """Genus-2 hyperbolic surface: Bolza-type octagon quotient of the disk.

    Metric g = 4 / (1 - |x|^2)^2 I (curvature -1).  Crossing a side applies
    the inverse pairing translation of the opposite side.
    """
    octa = Octagon()

    def g(xs):
        s = np.sum(xs * xs, axis=1)
        lam2 = (2.0 / (1.0 - s)) ** 2
        out = np.zeros((xs.shape[0], 2, 2))
        out[:, 0, 0] = lam2
        out[:, 1, 1] = lam2
        return out

    def dg(xs):
        s = np.sum(xs * xs, axis=1)
        lam2 = (2.0 / (1.0 - s)) ** 2
        # d lam^2 / d x_k = lam^2 * 4 x_k / (1 - s)
        fac = lam2 * 4.0 / (1.0 - s)
        out = np.zeros((xs.shape[0], 2, 2, 2))
        for k in range(2):
            out[:, 0, 0, k] = fac * xs[:, k]
            out[:, 1, 1, k] = fac * xs[:, k]
        return out

    def detect(xs):
        return ~octa.contains(xs)

    def mapping(xs):
        viol = octa.side_violations(xs)
        worst = np.argmax(viol, axis=1)
        out = np.empty_like(xs)
        J = np.empty((xs.shape[0], 2, 2))
        for k in range(8):
            mask = worst == k
            if not np.any(mask):
                continue
            # beyond side k -> the point lies in the neighbor copy g_k(O);
            # re-enter with g_k^{-1} = g_{k+4}
            out[mask], J[mask] = octa.pairings[(k + 4) % 8].apply(xs[mask])
        return out, J

    chart = ChartMetric(2, Disk(1.0), g, dg)
    return ManifoldModel("genus2-hyperbolic", chart, [Identification(detect, mapping)],
                         None, {"octagon": octa})


# ---------------------------------------------------------------------------
# Kaehler torus T^4 = C^2 / (Z^2 + i Z^2) with a potential-perturbed metric


_DEFAULT_POTENTIAL = (
    ((1, 0, 0, 0), 0.030, 0.00),
    ((0, 1, 1, 0), 0.020, 0.70),
    ((0, 0, 1, 1), 0.025, 1.30),
)


def kaehler_torus(potential=_DEFAULT_POTENTIAL):
    """Curved Kaehler metric on the unit 4-torus from a trig potential.

    Coordinates (x1, y1, x2, y2) with z_j = x_j + i y_j and the constant
    standard complex structure J.  The hermitian form is
    h_jk = delta_jk + d^2 phi / dz_j dzbar_k for the real potential
    phi(x) = sum A cos(2 pi m . x + theta); the associated real metric is
    Kaehler, so the Levi-Civita connection preserves J.
    """
    modes = [(np.asarray(m, dtype=float), float(A), float(th)) for m, A, th in potential]
    n = 4
    xy = [(0, 1), (2, 3)]  # real-coordinate indices of (x_j, y_j)

    def _d2_d3(xs):
        B = xs.shape[0]
        D2 = np.zeros((B, n, n))
        D3 = np.zeros((B, n, n, n))
        for m, A, th in modes:
            arg = 2 * np.pi * (xs @ m) + th
            c = np.cos(arg)
            s = np.sin(arg)
            mm = np.einsum("a,b->ab", m, m)
            D2 += -A * (2 * np.pi) ** 2 * c[:, None, None] * mm[None]
            mmm = np.einsum("a,b,c->abc", m, m, m)
            D3 += A * (2 * np.pi) ** 3 * s[:, None, None, None] * mmm[None]
        return D2, D3

    def _hermitian(D2):
        B = D2.shape[0]
        H = np.zeros((B, 2, 2), dtype=complex)
        for j, (xj, yj) in enumerate(xy):
            for k, (xk, yk) in enumerate(xy):
                H[:, j, k] = 0.25 * ((D2[:, xj, xk] + D2[:, yj, yk])
                                     + 1j * (D2[:, xj, yk] - D2[:, yj, xk]))
        return H

    def _metric_from(H):
        B = H.shape[0]
        G = np.zeros((B, n, n))
        for j, (xj, yj) in enumerate(xy):
            for k, (xk, yk) in enumerate(xy):
                re = H[:, j, k].real + (1.0 if j == k else 0.0)
                im = H[:, j, k].imag
                G[:, xj, xk] += re
                G[:, yj, yk] += re
                G[:, xj, yk] += im
                G[:, yj, xk] += -im
        return G

    def g(xs):
        D2, _ = _d2_d3(xs)
        return _metric_from(_hermitian(D2))

    def dg(xs):
        _, D3 = _d2_d3(xs)
        B = xs.shape[0]
        out = np.zeros((B, n, n, n))
        for c in range(n):
            Hc = np.zeros((B, 2, 2), dtype=complex)
            for j, (xj, yj) in enumerate(xy):
                for k, (xk, yk) in enumerate(xy):
                    Hc[:, j, k] = 0.25 * ((D3[:, xj, xk, c] + D3[:, yj, yk, c])
                                          + 1j * (D3[:, xj, yk, c] - D3[:, yj, xk, c]))
            # identity part has zero derivative; reuse the block assembly
            Gc = np.zeros((B, n, n))
            for j, (xj, yj) in enumerate(xy):
                for k, (xk, yk) in enumerate(xy):
                    Gc[:, xj, xk] += Hc[:, j, k].real
                    Gc[:, yj, yk] += Hc[:, j, k].real
                    Gc[:, xj, yk] += Hc[:, j, k].imag
                    Gc[:, yj, xk] += -Hc[:, j, k].imag
            out[:, :, :, c] = Gc
        return out

    Jmat = np.zeros((n, n))
    for (xj, yj) in xy:
        Jmat[yj, xj] = 1.0
        Jmat[xj, yj] = -1.0

    def J(xs):
        return np.broadcast_to(Jmat, (np.atleast_2d(xs).shape[0], n, n)).copy()

    periods = np.ones(n)
    chart = ChartMetric(n, Box(np.zeros(n), periods), g, dg)
    model = ManifoldModel("kaehler-torus", chart, [_torus_wrap(periods)], J,
                          {"potential": potential, "periods": periods})
    # sanity: positive definite at a few points
    probe = np.linspace(0.05, 0.95, 7)
    pts = np.stack(np.meshgrid(probe[:3], probe[:3], [0.3], [0.7]), axis=-1).reshape(-1, 4)
    w = np.linalg.eigvalsh(model.metric(pts))
    if w.min() <= 0:
        raise ArgumentError("Kaehler potential too large: metric not positive")
    return model


# ---------------------------------------------------------------------------


def make_model(tag, **params):
    """Model registry used by the experiment harness."""
    if tag == "flat-torus":
        return flat_torus(params.get("n", 2), params.get("periods", 1.0))
    if tag == "round-sphere":
        return round_sphere(params.get("n", 2))
    if tag == "genus2-hyperbolic":
        return genus2_hyperbolic()
    if tag == "kaehler-torus":
        pot = params.get("potential")
        return kaehler_torus(tuple(map(tuple, pot))) if pot else kaehler_torus()
    raise CapabilityError(f"unknown model tag {tag!r}")
