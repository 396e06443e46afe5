"""Finite-dimensional Clifford/spinor fiber algebra.

Gamma matrices are built by the standard Jordan-Wigner tensor doubling on
(C^2)^{otimes m}; all downstream checks are basis independent, so any
unitarily equivalent choice would do.  The chirality involution for even n is
the volume element with the phase that makes it square to the identity and
anticommute with every gamma.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm, logm

from .errors import ArgumentError, CapabilityError
from ._rand import stream

__all__ = [
    "CliffordRep",
    "build_clifford",
    "symbol_F",
    "projections_pm",
    "spin_stabilizer_generators",
    "haar_average_T",
    "fiber_states",
    "spin_lift",
    "orthonormal_complement",
]

_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass
class CliffordRep:
    """n hermitian gamma matrices with gamma_i gamma_j + gamma_j gamma_i = 2 delta_ij."""

    n: int
    gammas: np.ndarray            # (n, rank, rank)
    chirality: Optional[np.ndarray] = None  # present iff n even

    @property
    def rank(self):
        return self.gammas.shape[1]

    def gamma(self, xi):
        """Clifford multiplication by a covector: sum_i xi_i gamma_i."""
        xi = np.asarray(xi)
        return np.tensordot(xi, self.gammas, axes=(-1, 0))


def build_clifford(n):
    """Irreducible Clifford module for R^n: rank 2^floor(n/2).

    Jordan-Wigner: gamma_{2k-1} = s3^{k-1} x s1 x 1...,
    gamma_{2k} = s3^{k-1} x s2 x 1..., odd tail gamma_{2m+1} = s3^m.
    """
    if n < 2:
        raise ArgumentError("Clifford construction needs n >= 2")
    m = n // 2
    rank = 2 ** m
    gammas = np.empty((n, rank, rank), dtype=complex)

    def kron_chain(mats):
        out = np.array([[1.0 + 0j]])
        for a in mats:
            out = np.kron(out, a)
        return out

    I2 = np.eye(2, dtype=complex)
    for k in range(1, m + 1):
        pre = [_S3] * (k - 1)
        post = [I2] * (m - k)
        gammas[2 * k - 2] = kron_chain(pre + [_S1] + post)
        gammas[2 * k - 1] = kron_chain(pre + [_S2] + post)
    if n % 2 == 1:
        gammas[n - 1] = kron_chain([_S3] * m)
    chirality = None
    if n % 2 == 0:
        # volume element with phase i^{n(n+1)/2}; equals s3^{x m} here
        vol = np.eye(rank, dtype=complex)
        for i in range(n):
            vol = vol @ gammas[i]
        chirality = (1j ** (n * (n + 1) // 2)) * vol
        chirality = chirality.real.astype(complex) if np.abs(chirality.imag).max() < 1e-14 else chirality
    return CliffordRep(n, gammas, chirality)


def _check_unit(xi):
    xi = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-8:
        raise ArgumentError("covector must be unit length")
    return xi


def symbol_F(rep: CliffordRep, xi):
    """Principal symbol of the sign of a Dirac-type operator: gamma(xi)."""
    return rep.gamma(_check_unit(xi))


def projections_pm(rep: CliffordRep, xi):
    """Orthogonal projections (1 +/- gamma(xi))/2 onto the +/-1 eigenspaces."""
    sF = symbol_F(rep, xi)
    eye = np.eye(rep.rank)
    return 0.5 * (eye + sF), 0.5 * (eye - sF)


def orthonormal_complement(xi, rng=None):
    """An orthonormal basis of xi-perp (rows); randomized when rng given."""
    xi = np.asarray(xi, dtype=float)
    n = len(xi)
    if rng is None:
        basis = np.eye(n)
    else:
        basis = rng.standard_normal((n, n))
    vecs = [xi / np.linalg.norm(xi)]
    for cand in basis:
        w = cand - sum((cand @ v) * v for v in vecs)
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            vecs.append(w / nw)
        if len(vecs) == n:
            break
    return np.array(vecs[1:])


def spin_stabilizer_generators(rep: CliffordRep, xi, rng=None):
    """spin(n-1) generators (1/2) gamma(e_a) gamma(e_b) for an ONB of xi-perp."""
    xi = _check_unit(xi)
    perp = orthonormal_complement(xi, rng)
    gens = []
    for a in range(len(perp)):
        for b in range(a + 1, len(perp)):
            gens.append(0.5 * rep.gamma(perp[a]) @ rep.gamma(perp[b]))
    return gens


def spin_lift(rep: CliffordRep, R):
    """Unitary U with U gamma(xi) U^{-1} = gamma(R xi) for R in SO(n).

    Built as exp((1/4) sum_ab A_ab gamma_a gamma_b) with A = log R; the
    overall sign of the lift is immaterial for all Ad-level uses here.
    """
    A = np.real(logm(np.asarray(R, dtype=float)))
    gen = 0.25 * np.einsum("ab,aij,bjk->ik", A, rep.gammas, rep.gammas)
    return expm(gen)


# ---------------------------------------------------------------------------
# noncommutative polynomials in frame letters


def _eval_word(rep, frame, word):
    out = np.eye(rep.rank, dtype=complex)
    for letter in word:
        out = out @ rep.gamma(frame[letter - 1])
    return out


def haar_average_T(rep: CliffordRep, xi, poly, samples=2000, seed=0, exact=False):
    """Average p(gamma(v_1), ..., gamma(v_n)) over Haar frame completions of xi.

    `poly` is a list of (coefficient, word) pairs, a word being a tuple of
    letters in 1..n; letter 1 is xi itself.  Monte-Carlo mode orthonormalizes
    Gaussian completions (O(n-1)-Haar); exact mode handles degree <= 2 by the
    parity/isotropy rules E[gamma(v_a)] = 0 and
    E[gamma(v_a) gamma(v_b)] = delta_ab Id for a, b >= 2.
    """
    xi = _check_unit(xi)
    n = rep.n
    for _, word in poly:
        if any(not (1 <= l <= n) for l in word):
            raise ArgumentError("polynomial letters must index 1..n")
    if exact:
        eye = np.eye(rep.rank, dtype=complex)
        out = np.zeros((rep.rank, rep.rank), dtype=complex)
        for coef, word in poly:
            if len(word) > 2:
                raise ArgumentError("exact mode handles polynomial degree <= 2")
            if len(word) == 0:
                out = out + coef * eye
            elif len(word) == 1:
                if word[0] == 1:
                    out = out + coef * rep.gamma(xi)
                # E[gamma(v_a)] = 0 for a >= 2
            else:
                a, b = word
                if a == 1 and b == 1:
                    out = out + coef * eye
                elif a >= 2 and b >= 2 and a == b:
                    out = out + coef * eye
                # mixed or distinct letters average to zero
        return out
    if samples < 100:
        raise ArgumentError("need at least 100 samples")
    rng = stream(seed, 7)
    out = np.zeros((rep.rank, rep.rank), dtype=complex)
    for _ in range(samples):
        frame = np.vstack([xi[None], _haar_completion(xi, rng)])
        for coef, word in poly:
            out = out + coef * _eval_word(rep, frame, word)
    return out / samples


def _haar_completion(xi, rng):
    n = len(xi)
    vecs = [xi]
    out = []
    while len(out) < n - 1:
        cand = rng.standard_normal(n)
        w = cand - sum((cand @ v) * v for v in vecs)
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            w = w / nw
            vecs.append(w)
            out.append(w)
    return np.array(out)


def fiber_states(rep: CliffordRep, xi, a):
    """Values of the invariant fiber states on an endomorphism a.

    Returns a dict with omega_plus, omega_minus, omega (tracial) and, for even
    n, omega_1 = omega((1+Gamma) a) and omega_2 = omega((1-Gamma) a).
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (rep.rank, rep.rank):
        raise ArgumentError("endomorphism size mismatch")
    Pp, Pm = projections_pm(rep, xi)
    rk = rep.rank
    out = {
        "omega_plus": 2.0 / rk * np.trace(Pp @ a @ Pp),
        "omega_minus": 2.0 / rk * np.trace(Pm @ a @ Pm),
        "omega": np.trace(a) / rk,
    }
    if rep.chirality is not None:
        G = rep.chirality
        out["omega_1"] = np.trace((np.eye(rk) + G) @ a) / rk
        out["omega_2"] = np.trace((np.eye(rk) - G) @ a) / rk
    elif rep.n % 2 == 1:
        out["omega_1"] = None
        out["omega_2"] = None
    return out


def fiber_state(rep: CliffordRep, xi, a, kind):
    """Single named fiber state; raises CapabilityError when undefined."""
    vals = fiber_states(rep, xi, a)
    key = kind.replace("+", "_plus").replace("-", "_minus")
    if key not in vals or vals[key] is None:
        raise CapabilityError(f"state {kind} undefined for n={rep.n}")
    return vals[key]
