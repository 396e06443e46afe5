"""Matrix-valued symbol fields on the unit cotangent bundle and their
transport flow.

The transport cocycle W_t(z) solves dW/ds = i sub(h_s z) W along the geodesic
flow.  Writing the hermitian connection as nabla = d + i A, the sub matrix of
each model is A contracted with the unit velocity:

* ``levi-civita-spinor``: sub = -(i/4) w_ab(v) gamma_a gamma_b in the moving
  Cholesky orthonormal gauge;
* ``levi-civita-forms``: sub = -i dGamma(w(v)) with dGamma the derivation
  lift of so(n) to Lambda^p (p-form components in the same gauge);
* ``torus-bundle``: sub(x, xi) = |xi|^{-1} g^{ik} A_i(x) xi_k, the hermitian
  subprincipal symbol of the square root of a bundle Laplacian;
* ``flat``: sub = 0.

The evolved observable is (beta_t a)(z) = W_t(z) a(h_t z) W_t(z)^{-1}; the
direction and sign are fixed by requiring the generator d/dt at t=0 to equal
H a + i [sub, a].  With these conventions W-conjugation is the parallel
pullback, so gamma(xi), P(xi) and the +/- projections are fixed points of
beta_t; the whole chain is validated end-to-end against exact Heisenberg
evolution in :mod:`framelab.quantization`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm, logm

from .errors import ArgumentError, CapabilityError
from .geometry import CotangentPoint, integrate_flow, sample_liouville
from .clifford import CliffordRep, build_clifford
from .exterior import ExteriorFiber, _ext_basis_op, _int_basis_op, lambda_power
from ._rand import stream

__all__ = [
    "SymbolField",
    "ConnectionSpec",
    "levi_civita_spinor",
    "levi_civita_forms",
    "torus_bundle_connection",
    "flat_connection",
    "transport_matrix",
    "transport_batch",
    "beta_evolve",
    "state_integrate",
    "cesaro_and_decay",
    "frame_components",
    "spinor_symbol",
    "scalar_symbol",
    "constant_symbol",
]


@dataclass
class SymbolField:
    """A matrix-valued function on the unit cotangent bundle.

    `evaluator` is batched: (xs (B,n), xis (B,n)) -> (B,r,r) complex.  For
    fiber-bundle kinds the convention is that matrix entries refer to the
    moving orthonormal gauge of the base model.
    """

    evaluator: Callable
    rank: int
    label: str = ""

    def __call__(self, xs, xis):
        return np.asarray(self.evaluator(np.atleast_2d(xs), np.atleast_2d(xis)),
                          dtype=complex)


@dataclass
class ConnectionSpec:
    """A transport law: hermitian sub matrix plus identification fiber lift."""

    kind: str
    model: object
    rank: int
    sub: Callable                     # (xs, xis) -> (B,r,r) hermitian
    fiber_lift: Optional[Callable] = None   # (B,n,n) gauge rotations -> (B,r,r)
    fiber: object = None              # CliffordRep / ExteriorFiber / None


def frame_components(model, xs, xis):
    """Orthonormal-gauge components of covectors: theta_a = xi_i F^i_a."""
    _, F = model.frame(np.atleast_2d(xs))
    return np.einsum("bi,bia->ba", np.atleast_2d(xis), F)


# ---------------------------------------------------------------------------
# connection constructors


def levi_civita_spinor(model, rep: Optional[CliffordRep] = None):
    """Spinor transport along geodesics with the lifted Levi-Civita connection."""
    rep = rep or build_clifford(model.dim)
    if rep.n != model.dim:
        raise ArgumentError("Clifford dimension must match the base model")
    gg = np.einsum("aij,bjk->abik", rep.gammas, rep.gammas)

    def sub(xs, xis):
        # with nabla = d + i A the spin connection has A(v) = -(i/4) w_ab(v)
        # gamma_a gamma_b; this sign makes gamma(xi) (hence P+/-) invariant
        # under the transported-observable flow
        gi = model.inverse_metric(xs)
        v = np.einsum("bij,bj->bi", gi, xis)
        w = model.frame_connection(xs, v)
        return -0.25j * np.einsum("bcd,cdik->bik", w, gg)

    def lift(R):
        return _rowwise_lift(R, lambda r: _spin_lift_matrix(rep, r), rep.rank)

    return ConnectionSpec("levi-civita-spinor", model, rep.rank, sub, lift, rep)


def _spin_lift_matrix(rep, R):
    A = np.real(logm(np.asarray(R, dtype=float)))
    gen = 0.25 * np.einsum("ab,aij,bjk->ik", A, rep.gammas, rep.gammas)
    return expm(gen)


def _rowwise_lift(R, single, rank):
    B = R.shape[0]
    out = np.empty((B, rank, rank), dtype=complex)
    eye = np.eye(R.shape[1])
    for b in range(B):
        if np.abs(R[b] - eye).max() < 1e-14:
            out[b] = np.eye(rank)
        else:
            out[b] = single(R[b])
    return out


def levi_civita_forms(model, fiber: ExteriorFiber):
    """p-form transport along geodesics in the moving orthonormal gauge."""
    if fiber.n != model.dim:
        raise ArgumentError("fiber dimension must match the base model")
    n = fiber.n
    # dGamma basis: T[i,j] = ext(e_i) int(e_j) on Lambda^p
    T = np.zeros((n, n, fiber.dim, fiber.dim))
    if fiber.p > 0:
        lower = ExteriorFiber(n, fiber.p - 1)
        for i in range(1, n + 1):
            up, _ = _ext_basis_op(lower, i)
            for j in range(1, n + 1):
                dn, _ = _int_basis_op(fiber, j)
                T[i - 1, j - 1] = up @ dn

    def sub(xs, xis):
        # A(v) = -i dGamma(w(v)): the lift of the frame connection with the
        # same nabla = d + i A convention as the spinor kind
        gi = model.inverse_metric(xs)
        v = np.einsum("bij,bj->bi", gi, xis)
        w = model.frame_connection(xs, v)
        return -1j * np.einsum("bij,ijuv->buv", w, T)

    def lift(R):
        return _rowwise_lift(R, lambda r: lambda_power(fiber, r), fiber.dim)

    return ConnectionSpec("levi-civita-forms", model, fiber.dim, sub, lift, fiber)


def torus_bundle_connection(tbm):
    """Transport for a flat-torus bundle Laplacian; see framelab.quantization."""

    def sub(xs, xis):
        norm = np.linalg.norm(xis, axis=1, keepdims=True)
        xihat = xis / norm
        A = tbm.connection_eval(xs)  # (B, n, r, r)
        return np.einsum("bj,bjuv->buv", xihat, A)

    return ConnectionSpec("torus-bundle", tbm.base_model(), tbm.r, sub, None, None)


def flat_connection(model, rank):
    """Zero connection: transport is trivial, beta_t is pure composition."""

    def sub(xs, xis):
        return np.zeros((xs.shape[0], rank, rank), dtype=complex)

    return ConnectionSpec("flat", model, rank, sub, None, None)


# ---------------------------------------------------------------------------
# transport and the observable flow


def transport_batch(conn: ConnectionSpec, xs, xis, t, h):
    """Integrate the coupled (point, cocycle) system; returns (xs, xis, W)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    B = xs.shape[0]
    w0 = np.broadcast_to(np.eye(conn.rank, dtype=complex), (B, conn.rank, conn.rank)).copy()
    if t == 0:
        return xs.copy(), xis.copy(), w0
    out_x, out_c, W, _ = integrate_flow(conn.model, xs, xis[:, None, :], t, h,
                                        sub_fn=conn.sub, w0=w0,
                                        fiber_lift=conn.fiber_lift)
    return out_x, out_c[:, 0], W


def transport_matrix(conn: ConnectionSpec, start: CotangentPoint, t, h=1e-3):
    """Transport cocycle W_t along the geodesic from a single start point."""
    start = start.normalize_unit(conn.model)
    xs, xis, W = transport_batch(conn, start.x[None], start.xi[None], t, h)
    return CotangentPoint(xs[0], xis[0]), W[0]


def beta_evolve(conn: ConnectionSpec, a: SymbolField, t, h=1e-3):
    """The transported observable beta_t a = W_t . (a o h_t) . W_t^{-1}."""
    if a.rank != conn.rank:
        raise ArgumentError("symbol rank does not match connection rank")

    def evaluator(xs, xis):
        ex, exi, W = transport_batch(conn, xs, xis, t, h)
        vals = a(ex, exi)
        Winv = np.conj(np.transpose(W, (0, 2, 1)))  # W unitary
        return np.einsum("bij,bjk,bkl->bil", W, vals, Winv)

    return SymbolField(evaluator, a.rank, label=f"beta_{t:g}({a.label})")


# ---------------------------------------------------------------------------
# fiber states of symbol fields


def _fiber_state_batch(conn, kind, xs, xis, vals):
    """Batched invariant fiber-state values of vals (B,r,r) at (xs, xis)."""
    r = conn.rank
    kind = kind.replace("+", "_plus").replace("-", "_minus")
    if conn.kind == "levi-civita-spinor":
        rep = conn.fiber
        comps = frame_components(conn.model, xs, xis)
        if kind in ("omega", "omega_tr"):
            return np.einsum("bii->b", vals) / r
        if kind in ("omega_plus", "omega_minus"):
            sF = np.einsum("ba,aij->bij", comps, rep.gammas)
            sgn = 1.0 if kind == "omega_plus" else -1.0
            P = 0.5 * (np.eye(r) + sgn * sF)
            return 2.0 / r * np.einsum("bij,bjk,bki->b", P, vals, P)
        if kind in ("omega_1", "omega_2"):
            if rep.chirality is None:
                raise CapabilityError("omega_1/omega_2 need even fiber dimension")
            sgn = 1.0 if kind == "omega_1" else -1.0
            M = np.eye(r) + sgn * rep.chirality
            return np.einsum("ij,bji->b", M, vals) / r
        raise CapabilityError(f"state {kind} incompatible with spinor transport")
    if conn.kind == "levi-civita-forms":
        fiber = conn.fiber
        comps = frame_components(conn.model, xs, xis)
        return _forms_state_batch(fiber, comps, vals, kind)
    # torus-bundle / flat: tracial states only
    if kind in ("omega", "omega_tr"):
        return np.einsum("bii->b", vals) / r
    raise CapabilityError(f"state {kind} incompatible with {conn.kind} transport")


_STACK_CACHE = {}


def _ext_stack(fiber):
    key = ("ext", fiber.n, fiber.p)
    if key not in _STACK_CACHE:
        _STACK_CACHE[key] = np.stack(
            [_ext_basis_op(fiber, i)[0] for i in range(1, fiber.n + 1)])
    return _STACK_CACHE[key]


def _int_stack(fiber):
    key = ("int", fiber.n, fiber.p)
    if key not in _STACK_CACHE:
        _STACK_CACHE[key] = np.stack(
            [_int_basis_op(fiber, i)[0] for i in range(1, fiber.n + 1)])
    return _STACK_CACHE[key]


def _forms_state_batch(fiber, comps, vals, kind):
    n, p, d = fiber.n, fiber.p, fiber.dim
    up = np.einsum("bi,iuv->buv", comps, _ext_stack(fiber))
    dn = np.einsum("bi,iuv->buv", comps, _int_stack(ExteriorFiber(n, p + 1)))
    P = np.einsum("buv,bvw->buw", dn, up)
    if kind == "omega_tr":
        return np.einsum("bii->b", vals) / d
    if kind == "omega_t":
        return (n / (n - p)) * np.einsum("bij,bji->b", P, vals) / d
    if kind == "omega_l":
        eye = np.eye(d)
        return (n / p) * np.einsum("bij,bji->b", eye - P, vals) / d
    if kind in ("omega_plus", "omega_minus"):
        if fiber.n % 2 == 0 or 2 * p != n - 1:
            raise CapabilityError("omega_+/- need 2p = n-1")
        from math import factorial
        from .exterior import hodge_star
        star = hodge_star(fiber)
        dnstar = np.einsum("bi,iuv->buv", comps, _int_stack(ExteriorFiber(n, n - p)))
        Q = (1j ** p) * np.einsum("buv,vw->buw", dnstar, star)
        sgn = 1.0 if kind == "omega_plus" else -1.0
        pref = factorial(p) ** 2 / factorial(2 * p)
        M = np.einsum("buv,bvw->buw", np.eye(d) + sgn * Q, P)
        return pref * np.einsum("bij,bji->b", M, vals)
    raise CapabilityError(f"unknown forms state {kind}")


def state_integrate(model, conn: ConnectionSpec, kind, a: SymbolField,
                    samples=4000, seed=0):
    """Monte-Carlo Liouville integral of the named state of a symbol field.

    Returns (value, standard_error).
    """
    xs, xis = sample_liouville(model, samples, seed)
    vals = a(xs, xis)
    sv = np.real(_fiber_state_batch(conn, kind, xs, xis, vals))
    return float(sv.mean()), float(sv.std(ddof=1) / np.sqrt(len(sv)))


# ---------------------------------------------------------------------------
# Cesaro averages and the ergodic decay diagnostic


def cesaro_and_decay(model, conn: ConnectionSpec, kind, symbols, T_grid,
                     trajectories=64, seed=0, h=0.02, recenter=True):
    """Estimate omega(|a_T|^2) on a grid of averaging times.

    a_T is accumulated pointwise as (1/T) int_0^T beta_s(a) ds by trapezoidal
    quadrature along each sampled trajectory; the state integral is a
    Monte-Carlo average over Liouville start points.  Symbols with a state
    value beyond 3 standard errors from zero are re-centered first.

    Returns a list (one per symbol) of lists of rows (T, estimate, stderr).
    """
    T_grid = sorted(float(T) for T in T_grid)
    Tmax = T_grid[-1]
    xs, xis = sample_liouville(model, trajectories, seed)
    B = xs.shape[0]
    r = conn.rank

    symbols = list(symbols)
    offsets = []
    for a in symbols:
        val, err = state_integrate(model, conn, kind, a, samples=4000, seed=seed + 3)
        offsets.append(val if (recenter and abs(val) > 3 * err) else 0.0)

    start_comps = (xs.copy(), xis.copy())
    accs = [np.zeros((B, r, r), dtype=complex) for _ in symbols]
    prevs = [None for _ in symbols]
    snapshots = [[] for _ in symbols]
    grid_left = list(T_grid)
    state = {"t": 0.0}

    def hook(step, tnow, xs_, covs_, W):
        cur_x, cur_xi = xs_, covs_[:, 0]
        Winv = None
        for i, a in enumerate(symbols):
            vals = a(cur_x, cur_xi) - offsets[i] * np.eye(r)
            if W is not None:
                if Winv is None:
                    Winv = np.conj(np.transpose(W, (0, 2, 1)))
                vals = np.einsum("bij,bjk,bkl->bil", W, vals, Winv)
            if prevs[i] is None:
                prevs[i] = vals
            else:
                accs[i] += 0.5 * (tnow - state["t"]) * (prevs[i] + vals)
                prevs[i] = vals
        if symbols:
            state["t"] = tnow
        while grid_left and tnow >= grid_left[0] - 1e-9:
            T = grid_left.pop(0)
            for i in range(len(symbols)):
                aT = accs[i] / max(tnow, 1e-300)
                m = np.einsum("bji,bjk->bik", aT.conj(), aT)  # a_T^dagger a_T
                sv = np.real(_fiber_state_batch(conn, kind, *start_comps, m))
                snapshots[i].append((T, float(sv.mean()),
                                     float(sv.std(ddof=1) / np.sqrt(len(sv)))))

    w0 = np.broadcast_to(np.eye(r, dtype=complex), (B, r, r)).copy()
    integrate_flow(model, xs, xis[:, None, :], Tmax, h,
                   sub_fn=conn.sub, w0=w0, fiber_lift=conn.fiber_lift, hook=hook)
    return snapshots


# ---------------------------------------------------------------------------
# symbol field constructors


def scalar_symbol(fn, rank, label=""):
    """f(x, xi) times the identity matrix."""

    def evaluator(xs, xis):
        vals = np.asarray(fn(xs, xis), dtype=complex)
        return vals[:, None, None] * np.eye(rank)

    return SymbolField(evaluator, rank, label)


def constant_symbol(M, label=""):
    M = np.asarray(M, dtype=complex)

    def evaluator(xs, xis):
        return np.broadcast_to(M, (xs.shape[0],) + M.shape).copy()

    return SymbolField(evaluator, M.shape[0], label)


def spinor_symbol(model, rep: CliffordRep, fn=None, label="gamma(xi)"):
    """gamma(xi) in the moving gauge, optionally weighted by f(x, xi)."""

    def evaluator(xs, xis):
        comps = frame_components(model, xs, xis)
        out = np.einsum("ba,aij->bij", comps, rep.gammas)
        if fn is not None:
            out = np.asarray(fn(xs, xis))[:, None, None] * out
        return out

    return SymbolField(evaluator, rep.rank, label)
