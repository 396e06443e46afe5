"""Deterministic RNG streams.

A single global seed is expanded into independent per-task streams keyed by
small integer tuples, so parallel experiments stay reproducible regardless of
scheduling order.
"""

import numpy as np


def stream(seed, *key):
    """Return a Generator for task `key` derived from the global `seed`."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))
