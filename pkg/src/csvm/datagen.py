"""Seeded generators for the three synthetic scenarios.

Each generator draws labels, then the two signal coordinates, then
``p - 2`` noise coordinates from ``N(0, 1/p)`` that carry no class
information. Streams come from numpy's PCG64 seeded through a
``SeedSequence`` so that independent streams (repeats, splits, workers) can
be derived from a single integer seed.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .core import Dataset
from .errors import InvalidArgumentError

PRNG_ID = f"numpy.random.PCG64+SeedSequence/numpy-{np.__version__}"

SCENARIOS = ("example1", "example2", "example3")

MEAN_NEG = np.array([-2.0, 1.0])
MEAN_POS = np.array([1.0, 0.0])
VAR_NEG = np.array([2.0, 0.5])
VAR_POS = np.array([0.5, 2.0])

RADIUS_NEG = (0.0, 1.2)
RADIUS_POS = (0.8, 2.0)


def make_rng(seed, *stream):
    """Generator for ``seed`` and an optional stream path such as ``(repeat, split)``."""
    if isinstance(seed, np.random.Generator):
        if stream:
            raise InvalidArgumentError("stream keys require an integer seed")
        return seed
    seed = int(seed)
    if seed < 0:
        raise InvalidArgumentError("seed must be nonnegative")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in stream))
    return np.random.Generator(np.random.PCG64(ss))


def logistic_margin(x1, x2):
    """``g(x) = -3.6 x1^2 + 7.2 x2^2 - 0.8`` used by the second scenario."""
    return -3.6 * x1**2 + 7.2 * x2**2 - 0.8


def _check(n, p):
    if int(n) != n or n < 0:
        raise InvalidArgumentError(f"n must be a nonnegative integer, got {n}")
    if int(p) != p or p < 2:
        raise InvalidArgumentError(f"p must be an integer >= 2, got {p}")
    return int(n), int(p)


def _balanced_labels(rng, n):
    return np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)


def signal_example1(rng, n):
    y = _balanced_labels(rng, n)
    pos = y == 1
    mean = np.where(pos[:, None], MEAN_POS, MEAN_NEG)
    sd = np.sqrt(np.where(pos[:, None], VAR_POS, VAR_NEG))
    return mean + sd * rng.standard_normal((n, 2)), y


def signal_example2(rng, n):
    x = rng.uniform(-1.0, 1.0, size=(n, 2))
    eta = expit(logistic_margin(x[:, 0], x[:, 1]))
    y = np.where(rng.random(n) < eta, 1, -1).astype(np.int8)
    return x, y


def signal_example3(rng, n):
    y = _balanced_labels(rng, n)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    lo = np.where(y == 1, RADIUS_POS[0], RADIUS_NEG[0])
    hi = np.where(y == 1, RADIUS_POS[1], RADIUS_NEG[1])
    r = lo + (hi - lo) * rng.random(n)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)]), y


_SIGNAL = {"example1": signal_example1, "example2": signal_example2, "example3": signal_example3}


def generate(scenario, n, p, seed, *stream):
    """Draw ``n`` observations of ``scenario`` with ``p`` total dimensions."""
    if scenario not in _SIGNAL:
        raise InvalidArgumentError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    n, p = _check(n, p)
    rng = make_rng(seed, *stream)
    x, y = _SIGNAL[scenario](rng, n)
    noise = rng.standard_normal((n, p - 2)) / np.sqrt(p)
    return Dataset(np.hstack([x, noise]), y)


def gen_example1(n, p=10, seed=0, *stream):
    """Two anisotropic Gaussians with equal priors, plus noise."""
    return generate("example1", n, p, seed, *stream)


def gen_example2(n, p=100, seed=0, *stream):
    """Uniform square with a logistic class probability in ``g(x)``, plus noise."""
    return generate("example2", n, p, seed, *stream)


def gen_example3(n, p=500, seed=0, *stream):
    """Overlapping uniform-radius discs/annuli with equal priors, plus noise."""
    return generate("example3", n, p, seed, *stream)
