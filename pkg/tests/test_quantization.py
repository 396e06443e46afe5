"""Finite torus-bundle quantum model: assembly, spectra, quantization,
packet extraction, Egorov comparison, Weyl means, variance."""

import numpy as np
import pytest

from framelab import quantization as qz
from framelab.errors import ArgumentError, ModelError, TruncationError

S1 = np.array([[0, 1], [1, 0]], dtype=complex)
S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
S3 = np.array([[1, 0], [0, -1]], dtype=complex)


def free_model(K=8, shift=0.25, r=1, n=2):
    return qz.TorusBundleModel(n, r, [{} for _ in range(n)], {}, shift=shift, K=K)


def pauli_model(K=8, shift=1.0):
    A1 = {(0, 1): 0.2 * S1, (0, -1): 0.2 * S1, (1, 1): 0.1 * S3, (-1, -1): 0.1 * S3}
    A2 = {(1, 0): 0.15 * S2, (-1, 0): 0.15 * S2, (0, 2): 0.1 * S1, (0, -2): 0.1 * S1}
    return qz.TorusBundleModel(2, 2, [A1, A2], {}, shift=shift, K=K)


# ---------------------------------------------------------------------------
# assembly


def test_free_operator_is_diagonal():
    m = free_model()
    P = qz.assemble_P(m)
    modes = m.modes()
    assert np.abs(P.matrix - np.diag((modes ** 2).sum(1) + 0.25)).max() == 0.0


def test_constant_connection_completes_the_square():
    a = (0.3, -0.2)
    m = qz.TorusBundleModel(2, 1, [{(0, 0): [[a[0]]]}, {(0, 0): [[a[1]]]}], {},
                            shift=1.0, K=6)
    ev = np.linalg.eigvalsh(qz.assemble_P(m).matrix)
    modes = m.modes()
    expect = np.sort(((modes + np.array(a)) ** 2).sum(1) + 1.0)
    assert np.abs(ev - expect).max() <= 1e-12


def test_assembly_hermitian():
    assert qz.assemble_P(pauli_model()).hermiticity_residual() <= 1e-12


def test_coefficient_hermiticity_enforced():
    with pytest.raises(ArgumentError):
        qz.TorusBundleModel(2, 1, [{(0, 1): [[1.0]]}, {}], {}, K=4)


def test_truncation_refusal_for_small_K():
    with pytest.raises(TruncationError):
        qz.TorusBundleModel(2, 1, [{(0, 5): [[1.0]], (0, -5): [[1.0]]}, {}], {}, K=4)


def test_positivity_guard():
    m = qz.TorusBundleModel(2, 1, [{}, {}], {}, shift=0.0, K=4)  # zero mode -> 0
    with pytest.raises(ModelError):
        qz.SpectralData(qz.assemble_P(m))


# ---------------------------------------------------------------------------
# square root and propagator


def test_sqrt_and_propagator_contracts():
    m = pauli_model(K=6)
    Pop = qz.assemble_P(m)
    half, U, sd = qz.sqrt_and_propagator(Pop, 0.8)
    N = Pop.size
    assert np.abs(half.matrix @ half.matrix - Pop.matrix).max() <= 1e-9
    assert np.abs(U.matrix @ U.matrix.conj().T - np.eye(N)).max() <= 1e-11
    Um = sd.propagator_matrix(-0.8)
    assert np.abs(U.matrix @ Um - np.eye(N)).max() <= 1e-11
    assert np.abs(U.matrix @ Pop.matrix @ U.matrix.conj().T - Pop.matrix).max() <= 1e-10


def test_free_sqrt_diagonal():
    m = free_model(K=6, shift=0.25)
    half, _, _ = qz.sqrt_and_propagator(qz.assemble_P(m), 1.0)
    modes = m.modes()
    assert np.abs(np.diag(half.matrix) - np.sqrt((modes ** 2).sum(1) + 0.25)).max() <= 1e-12


# ---------------------------------------------------------------------------
# quantization


def test_quantize_identity_and_zero_column():
    m = free_model(K=4)
    B = qz.quantize(m, qz.trig_symbol({(0, 0): np.eye(1)}, 1))
    modes = m.modes()
    diag = np.real(np.diag(B.matrix))
    zero_idx = int(np.where((modes == 0).all(axis=1))[0][0])
    expect = np.ones(len(modes))
    expect[zero_idx] = 0.0
    assert np.abs(np.diag(B.matrix) - expect).max() == 0.0
    assert np.abs(B.matrix - np.diag(diag)).max() == 0.0


def test_quantize_multiplication_operator_is_convolution():
    m = free_model(K=4)
    b = qz.trig_symbol({(1, 0): [[0.5]], (-1, 0): [[0.5]]}, 1)
    B = qz.quantize(m, b).matrix
    modes = m.modes()
    for ki in range(len(modes)):
        for kj in range(len(modes)):
            d = modes[ki] - modes[kj]
            expect = 0.5 if (abs(d[0]) == 1 and d[1] == 0) else 0.0
            if (modes[kj] == 0).all():
                expect = 0.0
            assert abs(B[ki, kj] - expect) <= 1e-14


def test_quantize_rejects_oversized_modes():
    m = free_model(K=2)
    with pytest.raises(TruncationError):
        qz.quantize(m, qz.trig_symbol({(3, 0): [[1.0]], (-3, 0): [[1.0]]}, 1))


def test_adjoint_remainder_shrinks_with_K():
    def cfun(u):
        return (u[:, 0] ** 2)[:, None, None] * np.ones((1, 1, 1))

    norms = {}
    for K in (8, 16):
        m = free_model(K=K)
        b = qz.TrigSymbol({(1, 0): cfun, (-1, 0): cfun}, 1)
        B = qz.quantize(m, b).matrix
        R = B.conj().T - B  # hermitian symbol: remainder = Op(b)^* - Op(b)
        modes = m.modes()
        shell = (np.abs(modes).max(axis=1) >= K // 2) & (np.abs(modes).max(axis=1) <= K // 2 + 2)
        norms[K] = np.abs(R[np.ix_(shell, shell)]).max()
    assert norms[16] <= 0.6 * norms[8]


def test_heisenberg_free_phases():
    m = free_model(K=4, shift=0.25)
    Pop = qz.assemble_P(m)
    sd = qz.SpectralData(Pop)
    b = qz.trig_symbol({(1, 0): [[0.5]], (-1, 0): [[0.5]]}, 1)
    B = qz.quantize(m, b)
    t = 0.7
    Bt = qz.heisenberg(B, qz.TruncatedOperator(sd.propagator_matrix(t), m, 4))
    modes = m.modes()
    lam = (modes ** 2).sum(1) + 0.25
    phase = np.exp(1j * t * (np.sqrt(lam)[:, None] - np.sqrt(lam)[None, :]))
    assert np.abs(Bt.matrix - phase * B.matrix).max() <= 1e-12


def test_heisenberg_preserves_spectrum():
    m = pauli_model(K=6)
    sd = qz.SpectralData(qz.assemble_P(m))
    b = qz.trig_symbol({(0, 0): S1 + 0.3 * S3}, 2)
    B = qz.quantize(m, b)
    U = qz.TruncatedOperator(sd.propagator_matrix(1.1), m, 6)
    Bt = qz.heisenberg(B, U)
    w0 = np.linalg.eigvalsh(B.matrix)
    w1 = np.linalg.eigvalsh(Bt.matrix)
    assert np.abs(w0 - w1).max() <= 1e-10


def test_gauge_covariance_of_spectrum():
    # A -> A + grad(chi) with chi = 0.6 sin(x1) leaves the spectrum invariant
    base = {(0, 1): 0.2 * np.eye(1), (0, -1): 0.2 * np.eye(1)}
    m0 = qz.TorusBundleModel(2, 1, [dict(base), {}], {}, shift=1.0, K=8)
    grad = {(1, 0): 0.3 * np.eye(1), (-1, 0): 0.3 * np.eye(1)}  # d/dx1 of 0.6 sin x1
    A1 = dict(base)
    for k, v in grad.items():
        A1[k] = A1.get(k, 0) + v
    m1 = qz.TorusBundleModel(2, 1, [A1, {}], {}, shift=1.0, K=8)
    w0 = np.sort(np.linalg.eigvalsh(qz.assemble_P(m0).matrix))
    w1 = np.sort(np.linalg.eigvalsh(qz.assemble_P(m1).matrix))
    # conjugation by e^{-i chi} only fails to preserve the truncated subspace
    # near the boundary shell; the safe interior matches to roundoff
    interior = ((m0.modes() ** 2).sum(1) < (8 / 2) ** 2).sum()
    assert np.abs(w0[:interior] - w1[:interior]).max() <= 1e-10


# ---------------------------------------------------------------------------
# wave packets and extraction


def test_extract_identity_close_to_one():
    m = free_model(K=20)
    B = qz.quantize(m, qz.trig_symbol({(0, 0): np.eye(1)}, 1))
    pts = [(np.array([0.3, 0.8]), np.array([1.0, 0.0]))]
    got = qz.extract_symbol(B, m, pts, kbar=9, width=2)[0]
    assert abs(got[0, 0] - 1.0) <= 1e-6


def test_extract_cosine_matches_gaussian_damped_value():
    m = free_model(K=24)
    b = qz.trig_symbol({(1, 0): [[0.5]], (-1, 0): [[0.5]]}, 1)
    B = qz.quantize(m, b)
    x0 = np.array([0.3, 0.8])
    for w in (2, 3):
        got = qz.extract_symbol(B, m, [(x0, np.array([0.0, 1.0]))], 8, width=w)[0]
        # Gaussian-sum oracle: the packet damps the mode by exp(-|mu|^2/4w^2)
        expect = np.cos(0.3) * np.exp(-1.0 / (4 * w ** 2))
        assert abs(got[0, 0].real - expect) <= 1e-4
        assert abs(got[0, 0] - np.cos(0.3)) <= 1.0 / w  # O(1/w) contract


def test_packet_boundary_guard():
    m = free_model(K=16)
    with pytest.raises(TruncationError):
        qz.wave_packet_guard_check = qz.extract_symbol(
            qz.quantize(m, qz.trig_symbol({(0, 0): np.eye(1)}, 1)), m,
            [(np.zeros(2), np.array([1.0, 0.0]))], kbar=14, width=4)


def test_egorov_zero_connection_scalar():
    m = free_model(K=16)
    b = qz.trig_symbol({(1, 0): [[0.5]], (-1, 0): [[0.5]]}, 1, "cos x1")
    rows = qz.egorov_compare(m, b, t=1.0, shells=[4, 6])
    assert rows[-1][1] <= 0.15          # scalar composition within packet error
    assert rows[1][2] <= rows[0][2]     # mean error decreases with the shell


def test_egorov_t0_extraction_error_only():
    m = pauli_model(K=16)
    b = qz.trig_symbol({(0, 0): S1 + 0.4 * S3}, 2)
    rows = qz.egorov_compare(m, b, t=0.0, shells=[6])
    # constant symbol: only the excluded k=0 column contributes at t=0
    assert rows[0][1] <= 1e-4


@pytest.mark.slow
def test_egorov_matrix_connection_converges():
    b = qz.trig_symbol({(0, 0): S1 + 0.4 * S3}, 2)
    rows = qz.egorov_compare(pauli_model(K=16), b, t=1.0, shells=[4, 6])
    assert rows[1][1] <= rows[0][1] * 1.05
    assert rows[1][1] <= 0.12


@pytest.mark.slow
def test_commutator_symbol_law():
    """Extracted d/dt of Heisenberg evolution matches H b + i [sub, b]
    within shell error, shrinking as the shell grows."""
    m = pauli_model(K=24)
    b = qz.trig_symbol({(1, 0): 0.5 * S3, (-1, 0): 0.5 * S3}, 2)
    sd = qz.SpectralData(qz.assemble_P(m))
    B = qz.quantize(m, b)
    x0 = np.array([0.7, 1.9])
    xihat = np.array([0.6, 0.8])
    pts = [(x0, xihat)]
    conn = m.connection()
    eps = 1e-4
    Hb = (b((x0 + eps * xihat)[None], xihat[None])[0]
          - b((x0 - eps * xihat)[None], xihat[None])[0]) / (2 * eps)
    sub = conn.sub(x0[None], xihat[None])[0]
    b0 = b(x0[None], xihat[None])[0]
    rhs = Hb + 1j * (sub @ b0 - b0 @ sub)
    rels = []
    dt = 1e-3
    for kbar in (6, 10):
        Mp = qz.extract_symbol(B, m, pts, kbar,
                               apply_left=lambda c: sd.apply_propagator(c, -dt))[0]
        Mm = qz.extract_symbol(B, m, pts, kbar,
                               apply_left=lambda c: sd.apply_propagator(c, dt))[0]
        lhs = (Mp - Mm) / (2 * dt)
        rels.append(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    assert rels[1] <= 0.15
    assert rels[1] <= rels[0]


# ---------------------------------------------------------------------------
# Weyl means and variance


def test_weyl_mean_identity_exact():
    m = free_model(K=12)
    sd = qz.SpectralData(qz.assemble_P(m))
    b = qz.trig_symbol({(0, 0): np.eye(1)}, 1)
    mean, target, dev = qz.weyl_mean(m, b, sd.safe_count(), spectral=sd)
    assert target == 1.0
    assert abs(mean - 1.0) <= 1e-13


def test_weyl_mean_multiplication_exact_zero():
    m = free_model(K=12)
    sd = qz.SpectralData(qz.assemble_P(m))
    b = qz.trig_symbol({(1, 0): [[0.5]], (-1, 0): [[0.5]]}, 1)
    mean, target, dev = qz.weyl_mean(m, b, sd.safe_count(), spectral=sd)
    assert abs(mean) <= 1e-13 and target == 0.0


def test_weyl_counting_exponent():
    m = free_model(K=24)
    sd = qz.SpectralData(qz.assemble_P(m))
    slope = qz.weyl_counting_exponent(sd)
    assert abs(slope - 1.0) <= 0.05


def test_weyl_refuses_unsafe_N():
    m = free_model(K=8)
    sd = qz.SpectralData(qz.assemble_P(m))
    b = qz.trig_symbol({(0, 0): np.eye(1)}, 1)
    with pytest.raises(TruncationError):
        qz.weyl_mean(m, b, sd.safe_count() + 50, spectral=sd)


def test_variance_identity_zero_and_direction_persists():
    m = free_model(K=16)
    sd = qz.SpectralData(qz.assemble_P(m))
    bI = qz.trig_symbol({(0, 0): np.eye(1)}, 1)
    rows = qz.qe_variance(m, bI, [50, sd.safe_count()], spectral=sd)
    assert rows[-1][1] <= 1e-13
    bcos = qz.trig_symbol({(1, 0): [[0.5]], (-1, 0): [[0.5]]}, 1)
    rows = qz.qe_variance(m, bcos, [sd.safe_count()], spectral=sd)
    assert rows[0][1] <= 1e-13  # diagonal elements vanish by orthogonality

    def h4(u):
        return (u[:, 0] ** 4 + u[:, 1] ** 4)[:, None, None] * np.ones((1, 1, 1))

    bxi = qz.trig_symbol({(0, 0): h4}, 1)
    rows = qz.qe_variance(m, bxi, [100, sd.safe_count()], spectral=sd)
    assert rows[-1][1] >= 0.5 * rows[0][1]


def test_symbol_hermiticity_probe():
    b = qz.trig_symbol({(1, 0): 0.5 * S1, (-1, 0): 0.5 * S1}, 2)
    assert b.is_hermitian()
    b2 = qz.trig_symbol({(1, 0): 0.5 * S1}, 2)
    assert not b2.is_hermitian()
