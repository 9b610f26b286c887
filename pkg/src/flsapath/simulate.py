"""Synthetic piecewise constant signals and images.

Background 0 with patches of value 1 and 2 covering roughly 20% each, plus
Gaussian noise. Patches (segments in 1-D, axis-aligned rectangles in 2-D) are
painted one at a time; a patch is kept only if it does not push its class
above the band, until both classes lie within ``TARGET +- BAND``.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

TARGET = 0.20
BAND = 0.05
NOISE_SD = 0.2
MAX_ATTEMPTS = 10_000


def _side_range(n):
    lo = max(1, n // 20)
    hi = max(lo, n // 4)
    return lo, hi


def _in_band(frac):
    return all(abs(f - TARGET) <= BAND for f in frac)


def _paint(shape, rng):
    """Noiseless 0/1/2 array of ``shape`` (1 or 2 dimensions)."""
    clean = np.zeros(shape)
    size = clean.size
    for _ in range(MAX_ATTEMPTS):
        frac = [np.count_nonzero(clean == v) / size for v in (1, 2)]
        if _in_band(frac):
            break
        # paint the class that is furthest below target
        value = 1 if frac[0] <= frac[1] else 2
        region = []
        for n in shape:
            lo, hi = _side_range(n)
            side = int(rng.integers(lo, hi + 1))
            start = int(rng.integers(0, n - side + 1))
            region.append(slice(start, start + side))
        trial = clean.copy()
        trial[tuple(region)] = value
        if np.count_nonzero(trial == value) / size <= TARGET + BAND:
            clean = trial
    return clean


def simulate_1d(n: int, seed=None, return_clean: bool = False):
    """Noisy 0/1/2 step signal of length ``n``.

    With ``return_clean=True`` returns ``(noisy, clean)``.
    """
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    clean = _paint((n,), rng)
    noisy = clean + rng.normal(0.0, NOISE_SD, size=clean.shape)
    return (noisy, clean) if return_clean else noisy


def simulate_2d(n: int, seed=None, return_clean: bool = False):
    """Noisy ``n x n`` image of rectangles with values 0, 1 and 2.

    Rectangle sides are uniform integers in ``[max(1, n//20), max(1, n//4)]``
    and positions are uniform. With ``return_clean=True`` returns
    ``(noisy, clean)``.
    """
    if n < 1:
        raise InvalidArgument(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    clean = _paint((n, n), rng)
    noisy = clean + rng.normal(0.0, NOISE_SD, size=clean.shape)
    return (noisy, clean) if return_clean else noisy
