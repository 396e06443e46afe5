"""Exact finite-truncation quantum mechanics on the flat torus with a bundle
connection.

The model is the Galerkin truncation of P = nabla^* nabla + V + c to the
Fourier box |k|_inf <= K, assembled exactly in the plane-wave basis
{e^{i k.x} (x) e_a}: the first-order coupling is the symmetric convolution
(k_j + k'_j) A_j^(k'-k) (exactly hermitian at finite truncation), the zeroth
order is the coefficient convolution of sum_j A_j^2 + V.  Everything
downstream (square root, half-wave propagator, Heisenberg evolution, Weyl
means, variances) uses the dense hermitian eigendecomposition: exactness of
the finite model matters more than scale here.

Observables are Kohn-Nirenberg-style quantizations of degree-0 trigonometric
matrix symbols: Op(b) e^{i k.x} v = sum_m e^{i (k+m).x} C_m(k/|k|) v, with the
k = 0 column set to zero.  Coherent-state wave packets extract symbols back
out with error O(1/w) + O(w/kbar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .errors import ArgumentError, ModelError, TruncationError
from .models import flat_torus
from .transport import SymbolField, torus_bundle_connection, transport_batch

__all__ = [
    "TorusBundleModel",
    "TruncatedOperator",
    "SpectralData",
    "TrigSymbol",
    "trig_symbol",
    "assemble_P",
    "sqrt_and_propagator",
    "quantize",
    "heisenberg",
    "wave_packet",
    "extract_symbol",
    "egorov_compare",
    "weyl_mean",
    "weyl_counting_exponent",
    "qe_variance",
]


def _coeff_dict(raw, r):
    """Normalize {mode: matrix} with tuple keys and (r, r) complex arrays."""
    out = {}
    for m, c in (raw or {}).items():
        key = tuple(int(v) for v in m)
        out[key] = np.asarray(c, dtype=complex).reshape(r, r)
    return out


@dataclass
class TorusBundleModel:
    """Hermitian connection + potential data on T^n = (R/2piZ)^n, rank r."""

    n: int
    r: int
    A: list                      # n dicts {mode tuple: (r,r) coefficient}
    V: dict = field(default_factory=dict)
    shift: float = 0.0
    K: int = 8

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ArgumentError("base dimension must be 2 or 3")
        self.A = [_coeff_dict(d, self.r) for d in self.A]
        if len(self.A) != self.n:
            raise ArgumentError("need one connection component per dimension")
        self.V = _coeff_dict(self.V, self.r)
        for d in self.A + [self.V]:
            for m, c in d.items():
                cm = d.get(tuple(-v for v in m))
                if cm is None or np.abs(cm - c.conj().T).max() > 1e-13:
                    raise ArgumentError(
                        "coefficient at -m must be the adjoint of the one at m")
        mmax = self.max_mode()
        if mmax > self.K:
            raise TruncationError(
                f"K={self.K} cannot represent coefficient modes up to {mmax}")

    def max_mode(self):
        mm = 0
        for d in self.A + [self.V]:
            for m in d:
                mm = max(mm, max(abs(v) for v in m) if m else 0)
        return mm

    def modes(self):
        """Lattice modes |k|_inf <= K in lexicographic order, (M, n) ints."""
        rng = np.arange(-self.K, self.K + 1)
        grids = np.meshgrid(*([rng] * self.n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def connection_eval(self, xs):
        """A_j(x) for each j: (B, n, r, r) hermitian."""
        xs = np.atleast_2d(xs)
        B = xs.shape[0]
        out = np.zeros((B, self.n, self.r, self.r), dtype=complex)
        for j, d in enumerate(self.A):
            for m, c in d.items():
                phase = np.exp(1j * (xs @ np.asarray(m, dtype=float)))
                out[:, j] += phase[:, None, None] * c
        return out

    def potential_eval(self, xs):
        xs = np.atleast_2d(xs)
        out = np.zeros((xs.shape[0], self.r, self.r), dtype=complex)
        for m, c in self.V.items():
            phase = np.exp(1j * (xs @ np.asarray(m, dtype=float)))
            out += phase[:, None, None] * c
        return out

    def base_model(self):
        return flat_torus(self.n, 2 * np.pi)

    def connection(self):
        """The transport law of sub(P^{1/2}) for this model."""
        return torus_bundle_connection(self)


@dataclass
class TruncatedOperator:
    """Dense hermitian operator on the truncated plane-wave basis."""

    matrix: np.ndarray
    model: TorusBundleModel
    K: int

    @property
    def size(self):
        return self.matrix.shape[0]

    def hermiticity_residual(self):
        return float(np.abs(self.matrix - self.matrix.conj().T).max())


def _conv_product(d1, d2, r):
    out = {}
    for m1, c1 in d1.items():
        for m2, c2 in d2.items():
            key = tuple(a + b for a, b in zip(m1, m2))
            out[key] = out.get(key, 0) + c1 @ c2
    return out


def assemble_P(model: TorusBundleModel):
    """Galerkin matrix of -sum_j (d_j + i A_j)^2 + V + shift."""
    K, r, n = model.K, model.r, model.n
    modes = model.modes()
    M = len(modes)
    N = M * r
    strides = np.array([(2 * K + 1) ** (n - 1 - j) for j in range(n)])

    def index_of(ks):
        return (ks + K) @ strides

    P = np.zeros((N, N), dtype=complex)
    P4 = P.reshape(M, r, M, r)
    k2 = (modes ** 2).sum(axis=1).astype(float)
    diag = np.arange(M)
    for a in range(r):
        P4[diag, a, diag, a] = k2 + model.shift
    # first order: (k_j + k'_j) A_j^(m) at k' = k + m
    for j, d in enumerate(model.A):
        for m, c in d.items():
            mv = np.asarray(m, dtype=int)
            kp = modes + mv
            ok = np.all(np.abs(kp) <= K, axis=1)
            rows = index_of(kp[ok])
            cols = index_of(modes[ok])
            weight = (modes[ok, j] + kp[ok, j]).astype(float)
            P4[rows, :, cols, :] += weight[:, None, None] * c
    # zeroth order: convolution coefficients of sum_j A_j^2 + V
    zero = dict(model.V)
    for d in model.A:
        prod = _conv_product(d, d, r)
        for m, c in prod.items():
            zero[m] = zero.get(m, 0) + c
    for m, c in zero.items():
        mv = np.asarray(m, dtype=int)
        if np.all(mv == 0):
            P4[diag, :, diag, :] += np.broadcast_to(c, (M, r, r))
            continue
        kp = modes + mv
        ok = np.all(np.abs(kp) <= K, axis=1)
        rows = index_of(kp[ok])
        cols = index_of(modes[ok])
        P4[rows, :, cols, :] += np.broadcast_to(c, (int(ok.sum()), r, r))
    op = TruncatedOperator(P, model, K)
    if op.hermiticity_residual() > 1e-12 * max(1.0, k2.max()):
        raise ModelError("assembled operator lost hermiticity")
    return op


class SpectralData:
    """Eigendecomposition of a truncated operator, with spectral functions."""

    def __init__(self, op: TruncatedOperator, driver=None):
        n = op.size
        diag = np.diagonal(op.matrix)
        if np.abs(op.matrix - np.diag(diag)).max() == 0.0:
            # exactly diagonal (free models): order the plane waves directly
            order = np.argsort(diag.real, kind="stable")
            self.evals = diag.real[order].copy()
            self.evecs = np.zeros((n, n), dtype=complex)
            self.evecs[order, np.arange(n)] = 1.0
        else:
            if driver is None:
                driver = "evr" if n > 3000 else "evd"
            self.evals, self.evecs = sla.eigh(op.matrix, driver=driver)
        self.model = op.model
        self.K = op.K
        if self.evals.min() <= 0:
            raise ModelError(
                f"operator not positive (min eigenvalue {self.evals.min():.3g}); "
                "increase the shift")
        self.sqrt_evals = np.sqrt(self.evals)

    def apply_propagator(self, vecs, t):
        """exp(i t P^{1/2}) applied to column vectors."""
        c = self.evecs.conj().T @ vecs
        c *= np.exp(1j * t * self.sqrt_evals)[:, None]
        return self.evecs @ c

    def sqrt_matrix(self):
        return (self.evecs * self.sqrt_evals) @ self.evecs.conj().T

    def propagator_matrix(self, t):
        return (self.evecs * np.exp(1j * t * self.sqrt_evals)) @ self.evecs.conj().T

    def safe_count(self):
        """Number of eigenvalues below the truncation-safe threshold (K/2)^2."""
        return int(np.searchsorted(self.evals,
                                   (self.K / 2.0) ** 2 + self.model.shift))


def sqrt_and_propagator(op: TruncatedOperator, t, spectral=None):
    """Dense P^{1/2} and U(t) = exp(i t P^{1/2}) via eigendecomposition."""
    sd = spectral or SpectralData(op)
    half = TruncatedOperator(sd.sqrt_matrix(), op.model, op.K)
    U = TruncatedOperator(sd.propagator_matrix(t), op.model, op.K)
    return half, U, sd


# ---------------------------------------------------------------------------
# symbols and quantization


class TrigSymbol(SymbolField):
    """Degree-0 symbol: trig polynomial in x, arbitrary smooth unit-xi factor.

    modes: {m: C} where C is an (r, r) matrix or a callable
    (B, n) unit directions -> (B, r, r).
    """

    def __init__(self, modes, rank, label=""):
        self.modes = {tuple(int(v) for v in m): c for m, c in modes.items()}
        self.rank = rank
        self.label = label

        def evaluator(xs, xis):
            xs = np.atleast_2d(xs)
            xihat = np.atleast_2d(xis)
            xihat = xihat / np.linalg.norm(xihat, axis=1, keepdims=True)
            out = np.zeros((xs.shape[0], rank, rank), dtype=complex)
            for m, c in self.modes.items():
                phase = np.exp(1j * (xs @ np.asarray(m, dtype=float)))
                out += phase[:, None, None] * self.coeff(m, xihat)
            return out

        self.evaluator = evaluator

    def coeff(self, m, xihat):
        c = self.modes[tuple(m)]
        if callable(c):
            return np.asarray(c(xihat), dtype=complex)
        return np.broadcast_to(np.asarray(c, dtype=complex),
                               (xihat.shape[0], self.rank, self.rank))

    def max_mode(self):
        return max((max(abs(v) for v in m) if m else 0) for m in self.modes) \
            if self.modes else 0

    def is_hermitian(self, probe=16, seed=0):
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((probe, len(next(iter(self.modes))) if self.modes else 2))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        for m in self.modes:
            cm = self.coeff(m, u)
            cneg = self.coeff(tuple(-v for v in m), u) if tuple(-v for v in m) in self.modes else None
            if cneg is None:
                return False
            if np.abs(np.conj(np.transpose(cneg, (0, 2, 1))) - cm).max() > 1e-10:
                return False
        return True


def trig_symbol(modes, rank, label=""):
    return TrigSymbol(modes, rank, label)


def quantize(model: TorusBundleModel, b: TrigSymbol):
    """Kohn-Nirenberg quantization on the truncated basis.

    Op(b) e^{i k.x} v = truncation of b(x, k/|k|) e^{i k.x} v for k != 0; the
    k = 0 column is zero (the symbol is undefined at xi = 0).
    """
    if b.max_mode() > model.K:
        raise TruncationError("symbol x-modes exceed the truncation radius")
    K, r, n = model.K, model.r, model.n
    modes = model.modes()
    M = len(modes)
    strides = np.array([(2 * K + 1) ** (n - 1 - j) for j in range(n)])
    B = np.zeros((M * r, M * r), dtype=complex)
    B4 = B.reshape(M, r, M, r)
    norms = np.linalg.norm(modes, axis=1)
    nonzero = norms > 0
    for m, _ in b.modes.items():
        mv = np.asarray(m, dtype=int)
        kp = modes + mv
        ok = np.all(np.abs(kp) <= K, axis=1) & nonzero
        cols = modes[ok]
        xihat = cols / norms[ok][:, None]
        vals = b.coeff(m, xihat)
        rows = (kp[ok] + K) @ strides
        colsi = (cols + K) @ strides
        B4[rows, :, colsi, :] += vals
    return TruncatedOperator(B, model, K)


def heisenberg(Bop: TruncatedOperator, U: TruncatedOperator):
    """Exact Heisenberg conjugation B_t = U B U^dagger."""
    M = U.matrix @ Bop.matrix @ U.matrix.conj().T
    return TruncatedOperator(M, Bop.model, Bop.K)


# ---------------------------------------------------------------------------
# wave packets and symbol extraction


def wave_packet(model: TorusBundleModel, x0, xihat, kbar, width):
    """Normalized Gaussian packet coefficients centered at kbar*xihat, phase x0.

    Returns (coeffs (M,), boundary_mass) where boundary_mass is the relative
    packet mass within `width` of the truncation boundary.
    """
    modes = model.modes()
    center = kbar * np.asarray(xihat, dtype=float)
    d2 = ((modes - center) ** 2).sum(axis=1)
    amp = np.exp(-d2 / (2.0 * width ** 2))
    phase = np.exp(-1j * (modes @ np.asarray(x0, dtype=float)))
    u = amp * phase
    nrm2 = float((amp ** 2).sum())
    near = np.any(np.abs(modes) > model.K - width, axis=1)
    boundary_mass = float((amp[near] ** 2).sum() / nrm2)
    return u / math.sqrt(nrm2), boundary_mass


def packet_width(model: TorusBundleModel, x0, xihat, kbar, cap=None):
    """Largest width <= ceil(sqrt(kbar)) passing the boundary-mass guard."""
    cap = cap if cap is not None else max(2, math.ceil(math.sqrt(kbar)))
    for w in range(cap, 1, -1):
        _, bmass = wave_packet(model, x0, xihat, kbar, w)
        if bmass <= 1e-6:
            return w
    raise TruncationError(
        f"no admissible packet width at kbar={kbar} for K={model.K}: "
        "packet mass near the truncation boundary exceeds 1e-6")


def extract_symbol(Bop, model: TorusBundleModel, points, kbar, width=None,
                   apply_left=None):
    """Coherent-state matrix elements approximating the symbol at each point.

    For each (x0, xihat) builds the Gaussian packet u and returns the r x r
    matrix M_ab = <u (x) e_a, B (u (x) e_b)>; `apply_left` optionally
    transforms the packet columns first (used for Heisenberg evolution via the
    factorized propagator, avoiding dense conjugations).  When `width` is not
    given it defaults per point to the largest value <= ceil(sqrt(kbar)) whose
    packet keeps boundary mass below 1e-6.
    """
    if width is not None and width < 2:
        raise ArgumentError("packet width must be >= 2")
    r = model.r
    mat = Bop.matrix if isinstance(Bop, TruncatedOperator) else Bop
    out = []
    for x0, xihat in points:
        w = width if width is not None else packet_width(model, x0, xihat, kbar)
        u, bmass = wave_packet(model, x0, xihat, kbar, w)
        if bmass > 1e-6:
            raise TruncationError(
                f"packet at kbar={kbar} touches the truncation boundary "
                f"(mass {bmass:.2e})")
        pack = (u[:, None, None] * np.eye(r)[None]).reshape(-1, r)
        cols = apply_left(pack) if apply_left is not None else pack
        out.append(cols.conj().T @ (mat @ cols))
    return out


def egorov_compare(model: TorusBundleModel, b: TrigSymbol, t, shells,
                   points=None, spectral=None, h=1e-3, width=None):
    """Compare Heisenberg-evolved extracted symbols with the transport flow.

    Returns rows (shell, max_rel_err, mean_rel_err); the reference is
    (beta_t b)(x0, xihat) = W_t b(x0 + t xihat, xihat) W_t^{-1} computed with
    the subprincipal-symbol connection of the model.
    """
    if points is None:
        points = _default_points(model.n)
    Pop = assemble_P(model)
    sd = spectral or SpectralData(Pop)
    Bop = quantize(model, b)
    conn = model.connection()
    rows = []
    for kbar in shells:
        extracted = extract_symbol(
            Bop, model, points, kbar, width,
            apply_left=(lambda cols: sd.apply_propagator(cols, -t)) if t != 0 else None)
        rels = []
        for (x0, xihat), Mext in zip(points, extracted):
            ex_, exi_, W = transport_batch(conn, np.asarray(x0, float)[None],
                                           np.asarray(xihat, float)[None], t, h)
            vals = b(ex_, exi_)[0]
            ref = W[0] @ vals @ W[0].conj().T
            rels.append(np.linalg.norm(Mext - ref) / max(np.linalg.norm(ref), 1e-300))
        rows.append((kbar, float(np.max(rels)), float(np.mean(rels))))
    return rows


def _default_points(n):
    if n == 2:
        dirs = [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8), (1 / math.sqrt(2), 1 / math.sqrt(2))]
        xs = [(0.4, 1.1), (2.0, 3.7), (5.1, 0.6)]
    else:
        dirs = [(1.0, 0.0, 0.0), (0.0, 0.6, 0.8),
                (1 / math.sqrt(3),) * 3]
        xs = [(0.4, 1.1, 2.2), (5.1, 0.6, 3.0)]
    return [(np.array(x), np.array(d)) for x in xs for d in dirs]


# ---------------------------------------------------------------------------
# Weyl means and quantum-variance diagnostics


def symbol_trace_state(b: TrigSymbol, n, grid=8192, seed=0):
    """omega_tr(b): average of Tr b / r over T^n x S^{n-1}.

    The torus average keeps only the zero x-mode; the sphere average uses an
    exact-for-trig circle rule for n = 2 and quasi-uniform sampling for n = 3.
    """
    if tuple([0] * n) not in b.modes:
        return 0.0
    if n == 2:
        th = np.linspace(0, 2 * np.pi, grid, endpoint=False)
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((grid, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    C = b.coeff(tuple([0] * n), u)
    return float(np.real(np.trace(C, axis1=1, axis2=2).mean() / b.rank))


def diagonal_elements(sd: SpectralData, Bop: TruncatedOperator, N):
    """<phi_j, B phi_j> for the N lowest admissible eigenvectors.

    Eigenvectors carrying most of their mass on the k = 0 fiber block are
    skipped: that mode is excluded from quantization (the symbol is undefined
    at xi = 0), so it contributes nothing but a spurious zero.
    """
    nmax = sd.safe_count()
    if N > nmax:
        raise TruncationError(
            f"N={N} exceeds the truncation-safe eigenvalue count {nmax}")
    model = sd.model
    modes = model.modes()
    zero_row = int(np.where((modes == 0).all(axis=1))[0][0])
    rows = slice(zero_row * model.r, (zero_row + 1) * model.r)
    take = min(nmax, N + 2 * model.r)
    V = sd.evecs[:, :take]
    mass0 = (np.abs(V[rows, :]) ** 2).sum(axis=0)
    keep = np.where(mass0 <= 0.5)[0][:N]
    V = V[:, keep]
    return np.real(np.einsum("ia,ia->a", V.conj(), Bop.matrix @ V))


def weyl_mean(model: TorusBundleModel, b: TrigSymbol, N, spectral=None):
    """Cesaro mean of diagonal matrix elements vs the tracial state.

    Returns (mean, target, deviation).
    """
    sd = spectral or SpectralData(assemble_P(model))
    Bop = quantize(model, b)
    diag = diagonal_elements(sd, Bop, N)
    mean = float(diag.mean())
    target = symbol_trace_state(b, model.n)
    return mean, target, abs(mean - target)


def weyl_counting_exponent(sd: SpectralData, lam_low=None, lam_high=None):
    """Fitted growth exponent of the counting function N(lambda)."""
    K = sd.K
    lam_low = lam_low if lam_low is not None else K ** 2 / 16.0
    lam_high = lam_high if lam_high is not None else K ** 2 / 4.0
    lams = np.geomspace(lam_low, lam_high, 24)
    counts = np.searchsorted(sd.evals - sd.model.shift, lams)
    good = counts > 0
    slope, _ = np.polyfit(np.log(lams[good]), np.log(counts[good]), 1)
    return float(slope)


def qe_variance(model: TorusBundleModel, b: TrigSymbol, Ns, spectral=None):
    """Cesaro sums (1/N) sum_{j<=N} |<phi_j, Op(b) phi_j> - omega_tr(b)|.

    On the flat torus this is a negative control: for direction-dependent
    symbols it is expected not to tend to zero.
    """
    sd = spectral or SpectralData(assemble_P(model))
    Bop = quantize(model, b)
    Ns = sorted(int(N) for N in Ns)
    diag = diagonal_elements(sd, Bop, Ns[-1])
    target = symbol_trace_state(b, model.n)
    dev = np.abs(diag - target)
    return [(N, float(dev[:N].mean())) for N in Ns]
