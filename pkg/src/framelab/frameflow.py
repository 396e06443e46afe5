"""k-frame flow, Birkhoff averages, Kaehler first integrals, ergodicity reports.

The k-frame flow advances the base covector with the geodesic flow and
parallel-transports the remaining k-1 covectors along the base geodesic,
re-orthonormalizing each step against integrator drift (the base covector is
kept exact).  The base trajectory is produced by the identical integrator
calls as :func:`framelab.geometry.geodesic_flow`, so the flow is an honest
extension of the geodesic flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, CapabilityError
from .geometry import (CotangentPoint, integrate_flow, sample_frames,
                       sample_liouville)
from ._rand import stream

__all__ = [
    "KFrameState",
    "FrameObservable",
    "frame_flow",
    "birkhoff_average",
    "kahler_integrals",
    "ergodicity_report",
    "ErgodicityReport",
    "random_frame_states",
]


@dataclass
class KFrameState:
    """A point of the k-frame bundle: base unit covector plus k-1 covectors."""

    base: CotangentPoint
    rest: np.ndarray  # (k-1, n)

    def __post_init__(self):
        self.rest = np.atleast_2d(np.asarray(self.rest, dtype=float))

    @property
    def k(self):
        return 1 + self.rest.shape[0]

    def cov_stack(self):
        return np.vstack([self.base.xi[None], self.rest])

    def gram_residual(self, model):
        covs = self.cov_stack()
        gi = model.inverse_metric(self.base.x[None])[0]
        gram = covs @ gi @ covs.T
        return np.abs(gram - np.eye(self.k)).max()


@dataclass
class FrameObservable:
    """A bounded function on the frame bundle.

    `evaluate` is batched: (model, xs (B,n), covs (B,k,n)) -> (B,) values.
    """

    evaluate: Callable
    label: str = ""

    def of_state(self, model, state: KFrameState):
        return complex(self.evaluate(model, state.base.x[None], state.cov_stack()[None])[0])


def frame_flow(model, state: KFrameState, t, h, record=False):
    """Advance a k-frame state for time t; optionally return the trajectory."""
    if state.gram_residual(model) > 1e-8:
        raise ArgumentError("initial frame is not orthonormal")
    base = state.base.normalize_unit(model)  # same entry path as geodesic_flow
    covs0 = np.vstack([base.xi[None], state.rest])
    xs, covs, _, traj = integrate_flow(
        model, base.x[None], covs0[None], t, h,
        orthonormalize=True, record=record)
    out = KFrameState(CotangentPoint(xs[0], covs[0, 0]), covs[0, 1:])
    return (out, traj) if record else out


def birkhoff_average(model, obs: FrameObservable, state: KFrameState, T, h):
    """(1/T) integral of obs along the frame flow (trapezoidal rule)."""
    if T <= 0:
        raise ArgumentError("averaging time must be positive")
    acc = _TrapezoidAccumulator(lambda xs, covs: obs.evaluate(model, xs, covs))
    integrate_flow(model, state.base.x[None], state.cov_stack()[None], T, h,
                   orthonormalize=True, hook=acc)
    return complex(acc.value()[0])


class _TrapezoidAccumulator:
    """Streaming trapezoid rule over flow samples; also snapshots checkpoints."""

    def __init__(self, fn, checkpoints=None):
        self.fn = fn
        self.prev = None
        self.acc = None
        self.t = 0.0
        self.checkpoints = list(checkpoints) if checkpoints is not None else None
        self.snapshots = []

    def __call__(self, step, tnow, xs, covs, W):
        cur = np.asarray(self.fn(xs, covs))
        if self.prev is None:
            self.acc = np.zeros_like(cur)
        else:
            self.acc = self.acc + 0.5 * abs(tnow - self.t) * (self.prev + cur)
        self.prev = cur
        self.t = tnow
        if self.checkpoints is not None:
            while self.checkpoints and abs(tnow) >= self.checkpoints[0] - 1e-12:
                T = self.checkpoints.pop(0)
                self.snapshots.append((T, self.acc / max(abs(tnow), 1e-300)))

    def value(self):
        return self.acc / abs(self.t)


def kahler_integrals(model, state: KFrameState):
    """Matrix of pairings <v_i, J v_j> for the full frame (v_1 = base).

    These are conserved along the frame flow on a Kaehler model because the
    Levi-Civita connection preserves both g and J.
    """
    if model.J is None:
        raise CapabilityError(f"model {model.tag} has no complex structure")
    x = state.base.x
    covs = state.cov_stack()
    J = model.J(x[None])[0]
    gi = model.inverse_metric(x[None])[0]
    return covs @ J @ gi @ covs.T


def random_frame_states(model, k, count, seed, oriented=True):
    """Liouville base points completed to Haar-random orthonormal k-frames."""
    xs, xis = sample_liouville(model, count, seed)
    rng = stream(seed, 1)
    covs = sample_frames(model, xs, xis, k, rng, oriented=oriented)
    return xs, covs


@dataclass
class ErgodicityReport:
    labels: list
    checkpoints: np.ndarray
    time_averages: np.ndarray      # (n_obs, B, C)
    space_averages: np.ndarray     # (n_obs,)
    space_stderr: np.ndarray       # (n_obs,)
    sup_norms: np.ndarray          # (n_obs,)
    deviations: np.ndarray = field(init=False)       # (n_obs, B, C)
    mean_deviation: np.ndarray = field(init=False)   # (n_obs, C), sup-normalized

    def __post_init__(self):
        dev = np.abs(self.time_averages - self.space_averages[:, None, None])
        self.deviations = dev
        self.mean_deviation = dev.mean(axis=1) / self.sup_norms[:, None]

    def rows(self):
        """CSV rows: (observable, trajectory, T, time_avg, space_avg, deviation)."""
        out = []
        for i, lab in enumerate(self.labels):
            for b in range(self.time_averages.shape[1]):
                for c, T in enumerate(self.checkpoints):
                    out.append((lab, b, float(T),
                                float(np.real(self.time_averages[i, b, c])),
                                float(np.real(self.space_averages[i])),
                                float(self.deviations[i, b, c])))
        return out


def ergodicity_report(model, k, ensemble, T, observables, seed, h=5e-3,
                      checkpoints=None, space_samples=20000):
    """Compare time and space averages of frame observables over an ensemble.

    Space averages use Liouville sampling of the base and Haar-uniform frame
    completion of the fiber; deviations are normalized by an empirical
    sup-norm.  Checkpoint times let non-decaying (non-ergodic) deviations be
    detected.
    """
    if ensemble < 1:
        raise ArgumentError("ensemble size must be >= 1")
    if checkpoints is None:
        checkpoints = [T / 8, T / 4, T / 2, T]
    checkpoints = sorted(float(c) for c in checkpoints)
    xs, covs = random_frame_states(model, k, ensemble, seed)

    accs = [_TrapezoidAccumulator(
        (lambda o: (lambda xs_, covs_: np.real(o.evaluate(model, xs_, covs_))))(obs),
        checkpoints=checkpoints) for obs in observables]

    def hook(step, tnow, xs_, covs_, W):
        for a in accs:
            a(step, tnow, xs_, covs_, W)

    integrate_flow(model, xs, covs, T, h, orthonormalize=True, hook=hook)

    sxs, scovs = random_frame_states(model, k, space_samples, seed + 1)
    tavg = np.empty((len(observables), ensemble, len(checkpoints)))
    savg = np.empty(len(observables))
    serr = np.empty(len(observables))
    sup = np.empty(len(observables))
    for i, obs in enumerate(observables):
        snaps = accs[i].snapshots
        for c in range(len(checkpoints)):
            tavg[i, :, c] = np.real(snaps[c][1])
        vals = np.real(obs.evaluate(model, sxs, scovs))
        savg[i] = vals.mean()
        serr[i] = vals.std(ddof=1) / np.sqrt(len(vals))
        sup[i] = max(np.abs(vals).max(), 1e-300)
    return ErgodicityReport([o.label for o in observables], np.array(checkpoints),
                            tavg, savg, serr, sup)
