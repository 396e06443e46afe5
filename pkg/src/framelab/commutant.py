"""Numerical commutants of matrix collections.

The commutant of generators {G} is the null space of the stacked commutator
map M -> [G, M].  We work with its Gram operator sum_G ad_G^dagger ad_G, whose
eigenvalues are the squared singular values of the stacked map, so sizes up to
End(C^70) stay tractable; the reported spectral gap is the ratio between the
smallest kept and largest dropped singular value.

When a restriction projection Q is supplied, Q must itself commute with every
generator (true for all uses here: the invariant projections P, P+/-).  Then
[G, Q M Q] = Q [G, M] Q and the restricted commutant equals the commutant of
the generators compressed to ran Q, which is how it is computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

__all__ = ["CommutantResult", "commutant", "match_labels"]


@dataclass
class CommutantResult:
    dimension: int
    basis: np.ndarray        # (dim, N, N) orthonormal invariant matrices
    singular_values: np.ndarray
    gap: float               # smallest kept / largest dropped singular value

    def contains(self, M, tol=1e-8):
        """Whether M lies in the span of the computed basis."""
        M = np.asarray(M, dtype=complex)
        v = M.reshape(-1)
        proj = np.zeros_like(v)
        for B in self.basis:
            b = B.reshape(-1)
            proj = proj + (b.conj() @ v) * b
        return np.linalg.norm(proj - v) <= tol * max(np.linalg.norm(v), 1e-300)


def _orthobasis(Q, tol=1e-10):
    """Orthonormal basis (columns) of the range of a hermitian projection."""
    w, V = np.linalg.eigh(Q)
    return V[:, w > 0.5]


def commutant(generators, restriction=None, threshold=1e-8):
    """Joint commutant {M : [G, M] = 0 for all G}, optionally within Q End Q.

    Returns a CommutantResult with an orthonormal basis (Frobenius inner
    product).  `threshold` is relative to the largest singular value of the
    stacked commutator map.
    """
    gens = [np.asarray(G, dtype=complex) for G in generators]
    if not gens:
        raise ArgumentError("need at least one generator")
    N = gens[0].shape[0]
    if any(G.shape != (N, N) for G in gens):
        raise ArgumentError("generators must share one square size")

    embed = None
    if restriction is not None:
        Q = np.asarray(restriction, dtype=complex)
        for G in gens:
            if np.abs(G @ Q - Q @ G).max() > 1e-8:
                raise ArgumentError("restriction must commute with generators")
        V = _orthobasis(Q)
        gens = [V.conj().T @ G @ V for G in gens]
        embed = V
        N = V.shape[1]

    all_real = all(np.abs(G.imag).max() < 1e-14 for G in gens)
    if all_real:
        gens = [G.real.copy() for G in gens]
    gram = np.zeros((N * N, N * N), dtype=float if all_real else complex)
    eyeN = np.eye(N)
    for G in gens:
        ad = np.kron(G, eyeN) - np.kron(eyeN, G.T)  # vec([G, M]) = ad vec(M)
        gram += ad.conj().T @ ad
    w, V = np.linalg.eigh(gram)
    w = np.clip(w, 0.0, None)
    sing = np.sqrt(w)
    smax = sing.max() if sing.size else 0.0
    # the Gram formulation floors resolvable singular values at sqrt(eps);
    # dimensions in all supported cases are separated by >= 6 orders
    cut = max(threshold, 8.0 * np.sqrt(np.finfo(float).eps))
    keep = sing <= cut * smax
    dim = int(keep.sum())
    dropped = sing[keep]
    kept = sing[~keep]
    gap = float(kept.min() / max(dropped.max(), np.finfo(float).tiny)) if dim and kept.size else np.inf
    basis = V[:, keep].T.reshape(dim, N, N).astype(complex)
    if embed is not None:
        basis = np.einsum("ia,dab,jb->dij", embed.astype(complex), basis, embed.conj().astype(complex))
    return CommutantResult(dim, basis, sing, gap)


def match_labels(result: CommutantResult, candidates):
    """Label the invariant span by known matrices it contains.

    `candidates` maps label -> matrix; returns the labels whose matrix lies in
    the computed span.
    """
    return [name for name, M in candidates.items() if result.contains(M)]
