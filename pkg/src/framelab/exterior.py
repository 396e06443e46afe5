"""Exterior-algebra fiber: Lambda^p C^n with interior/exterior multiplication,
Hodge star, tangential/longitudinal projections, the middle-degree chirality
splitting, SO(n-1) stabilizer generators, fiber states, and Haar-averaged
balanced polynomials in frame letters.

Basis convention: sorted p-subsets of {1..n} in lexicographic order, with
signs from transposition counts, so matrices are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ArgumentError, CapabilityError, DegreeError
from .clifford import orthonormal_complement, _haar_completion
from ._rand import stream

__all__ = [
    "ExteriorFiber",
    "ext_mult",
    "int_mult",
    "hodge_star",
    "projection_P",
    "projections_pm_forms",
    "so_stabilizer_generators",
    "haar_average_T_forms",
    "fiber_states_forms",
    "lambda_power",
]


@dataclass
class ExteriorFiber:
    """The fiber Lambda^p C^n in the sorted-subset basis."""

    n: int
    p: int
    basis: list = field(init=False)
    index: dict = field(init=False)

    def __post_init__(self):
        if not (0 <= self.p <= self.n):
            raise DegreeError(f"degree p={self.p} out of range for n={self.n}")
        self.basis = list(combinations(range(1, self.n + 1), self.p))
        self.index = {s: i for i, s in enumerate(self.basis)}

    @property
    def dim(self):
        return len(self.basis)


def _ext_basis_op(fiber: ExteriorFiber, i):
    """Matrix of e_i wedge : Lambda^p -> Lambda^{p+1}."""
    target = ExteriorFiber(fiber.n, fiber.p + 1)
    out = np.zeros((target.dim, fiber.dim))
    for col, S in enumerate(fiber.basis):
        if i in S:
            continue
        pos = sum(1 for j in S if j < i)
        T = tuple(sorted(S + (i,)))
        out[target.index[T], col] = (-1.0) ** pos
    return out, target


def _int_basis_op(fiber: ExteriorFiber, i):
    """Matrix of interior product i(e_i) : Lambda^p -> Lambda^{p-1}."""
    target = ExteriorFiber(fiber.n, fiber.p - 1)
    out = np.zeros((target.dim, fiber.dim))
    for col, S in enumerate(fiber.basis):
        if i not in S:
            continue
        pos = S.index(i)
        T = tuple(j for j in S if j != i)
        out[target.index[T], col] = (-1.0) ** pos
    return out, target


def ext_mult(fiber: ExteriorFiber, xi):
    """Exterior multiplication xi wedge : Lambda^p -> Lambda^{p+1}."""
    if fiber.p >= fiber.n:
        raise DegreeError("cannot raise degree beyond n")
    xi = np.asarray(xi, dtype=float)
    out = None
    for i in range(1, fiber.n + 1):
        op, _ = _ext_basis_op(fiber, i)
        out = xi[i - 1] * op if out is None else out + xi[i - 1] * op
    return out


def int_mult(fiber: ExteriorFiber, xi):
    """Interior multiplication i(xi) : Lambda^p -> Lambda^{p-1} (adjoint of ext)."""
    if fiber.p <= 0:
        raise DegreeError("cannot lower degree below 0")
    xi = np.asarray(xi, dtype=float)
    out = None
    for i in range(1, fiber.n + 1):
        op, _ = _int_basis_op(fiber, i)
        out = xi[i - 1] * op if out is None else out + xi[i - 1] * op
    return out


def hodge_star(fiber: ExteriorFiber):
    """Hodge star Lambda^p -> Lambda^{n-p} for the standard orientation."""
    target = ExteriorFiber(fiber.n, fiber.n - fiber.p)
    out = np.zeros((target.dim, fiber.dim))
    for col, S in enumerate(fiber.basis):
        comp = tuple(j for j in range(1, fiber.n + 1) if j not in S)
        perm = list(S) + list(comp)
        out[target.index[comp], col] = _perm_sign(perm)
    return out


def _perm_sign(perm):
    sign = 1.0
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j] - 1
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    return sign


def lambda_power(fiber: ExteriorFiber, R):
    """Induced action of a matrix R on Lambda^p (compound matrix of minors)."""
    R = np.asarray(R)
    out = np.empty((fiber.dim, fiber.dim), dtype=R.dtype)
    rows = [np.array(S) - 1 for S in fiber.basis]
    for a, Sa in enumerate(rows):
        for b, Sb in enumerate(rows):
            out[a, b] = np.linalg.det(R[np.ix_(Sa, Sb)])
    return out


def _check_unit(xi):
    xi = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-8:
        raise ArgumentError("covector must be unit length")
    return xi


def projection_P(fiber: ExteriorFiber, xi):
    """Orthogonal projection P = i(xi) (xi wedge .) onto Lambda^p(xi-perp)."""
    xi = _check_unit(xi)
    up = ext_mult(fiber, xi)
    down = int_mult(ExteriorFiber(fiber.n, fiber.p + 1), xi)
    return down @ up


def chirality_Q(fiber: ExteriorFiber, xi):
    """The involution i^p i(xi) * on Lambda^p (squares to P's identity on ran P)."""
    xi = _check_unit(xi)
    star = hodge_star(fiber)
    down = int_mult(ExteriorFiber(fiber.n, fiber.n - fiber.p), xi)
    return (1j ** fiber.p) * (down @ star)


def projections_pm_forms(fiber: ExteriorFiber, xi):
    """The two middle-degree projections (1 +/- i^p i(xi) *) P / 2 for 2p = n-1."""
    if fiber.n % 2 == 0 or 2 * fiber.p != fiber.n - 1:
        raise CapabilityError("P+/- require odd n with p = (n-1)/2")
    P = projection_P(fiber, xi)
    Q = chirality_Q(fiber, xi)
    eye = np.eye(fiber.dim)
    Pp = 0.5 * (eye + Q) @ P
    Pm = 0.5 * (eye - Q) @ P
    return Pp, Pm


def so_stabilizer_generators(fiber: ExteriorFiber, xi, rng=None):
    """so(n-1) generators of rotations of xi-perp acting on Lambda^p.

    Each generator is the derivation lift sum_ij A_ij ext(e_i) int(e_j) of the
    antisymmetric matrix A = w_a w_b^T - w_b w_a^T for an ONB {w} of xi-perp.
    """
    xi = _check_unit(xi)
    perp = orthonormal_complement(xi, rng)
    gens = []
    for a in range(len(perp)):
        for b in range(a + 1, len(perp)):
            gens.append(_derivation_lift(fiber, perp[a], perp[b]))
    return gens


def _derivation_lift(fiber, u, w):
    """Lift of A = u w^T - w u^T to Lambda^p: ext(u) int(w) - ext(w) int(u)."""
    if fiber.p == 0:
        return np.zeros((1, 1))
    lower = ExteriorFiber(fiber.n, fiber.p - 1)
    up_u = ext_mult(lower, u)
    up_w = ext_mult(lower, w)
    dn_u = int_mult(fiber, u)
    dn_w = int_mult(fiber, w)
    return up_u @ dn_w - up_w @ dn_u


def haar_average_T_forms(fiber: ExteriorFiber, xi, poly, letters, samples=2000,
                         seed=0):
    """Average a balanced polynomial in ext/int frame letters over completions.

    `poly` is a list of (coefficient, word) with word a tuple of
    ('X', i) / ('Y', i) pairs meaning exterior / interior multiplication by
    the i-th frame covector (letter 1 is xi itself); each word must contain
    equally many X and Y letters, so it preserves the degree p.  `letters` is
    the number of frame letters available (the frame flow size k_p).
    """
    xi = _check_unit(xi)
    if letters > fiber.n:
        raise ArgumentError("more letters than dimensions")
    for _, word in poly:
        nx = sum(1 for kind, _ in word if kind == "X")
        ny = len(word) - nx
        if nx != ny:
            raise ArgumentError("polynomial must balance X and Y letters")
        if any(not (1 <= i <= letters) for _, i in word):
            raise ArgumentError(f"letters must index 1..{letters}")
    if samples < 100:
        raise ArgumentError("need at least 100 samples")
    deterministic = all(i == 1 for _, word in poly for _, i in word)
    rng = stream(seed, 11)
    rounds = 1 if deterministic else samples
    out = np.zeros((fiber.dim, fiber.dim), dtype=complex)
    for _ in range(rounds):
        if deterministic:
            frame = xi[None]
        else:
            frame = np.vstack([xi[None], _haar_completion(xi, rng)[: letters - 1]])
        out = out + _eval_balanced(fiber, frame, poly)
    return out / rounds


def _eval_balanced(fiber, frame, poly):
    out = np.zeros((fiber.dim, fiber.dim), dtype=complex)
    for coef, word in poly:
        cur = np.eye(fiber.dim, dtype=complex)
        deg = fiber.p
        for kind, i in reversed(word):  # rightmost letter acts first
            f = ExteriorFiber(fiber.n, deg)
            if kind == "X":
                cur = ext_mult(f, frame[i - 1]) @ cur
                deg += 1
            else:
                cur = int_mult(f, frame[i - 1]) @ cur
                deg -= 1
            if not (0 <= deg <= fiber.n):
                raise DegreeError("word leaves the exterior algebra")
        if deg != fiber.p:
            raise ArgumentError("unbalanced word changes degree")
        out = out + coef * cur
    return out


def fiber_states_forms(fiber: ExteriorFiber, xi, a):
    """Values of the invariant fiber states on a form endomorphism.

    Returns omega_tr, omega_t, omega_l and, when 2p = n-1, omega_plus /
    omega_minus with the (p!)^2/(2p)! normalization.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (fiber.dim, fiber.dim):
        raise ArgumentError("endomorphism size mismatch")
    n, p = fiber.n, fiber.p
    P = projection_P(fiber, xi)
    tr = np.trace(a) / fiber.dim
    out = {
        "omega_tr": tr,
        "omega_t": (n / (n - p)) * np.trace(P @ a) / fiber.dim,
        "omega_l": (n / p) * np.trace((np.eye(fiber.dim) - P) @ a) / fiber.dim,
    }
    if fiber.n % 2 == 1 and 2 * p == n - 1:
        from math import factorial
        Q = chirality_Q(fiber, xi)
        pref = factorial(p) ** 2 / factorial(2 * p)
        eye = np.eye(fiber.dim)
        out["omega_plus"] = pref * np.trace((eye + Q) @ P @ a)
        out["omega_minus"] = pref * np.trace((eye - Q) @ P @ a)
    return out


def fiber_state_forms(fiber: ExteriorFiber, xi, a, kind):
    vals = fiber_states_forms(fiber, xi, a)
    key = kind.replace("+", "_plus").replace("-", "_minus")
    if key not in vals:
        raise CapabilityError(f"state {kind} undefined for (n,p)=({fiber.n},{fiber.p})")
    return vals[key]
