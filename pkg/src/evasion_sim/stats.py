"""Numeric support: seeded random streams, normal CDF, histograms and the
reference lifecycle automaton used by the tracker property tests."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

# Sub-stream ids inside one trial. Keeping them separate means the
# detection uniforms line up frame-for-frame across profiles (CRN) no
# matter how many other draws a trial makes.
STREAM_INIT = 0
STREAM_DETECT = 1
STREAM_NOISE = 2

_BLOCK = 512


class RngStream:
    """Deterministic uniform stream keyed by ``(seed, stream)``.

    Backed by the Philox counter-based generator, so the sequence depends
    only on the key and not on platform or thread. Normals are produced
    with Box-Muller from exactly two uniforms, which keeps the number of
    draws per call fixed.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.stream = int(stream)
        key = (self.seed & 0xFFFFFFFFFFFFFFFF) | ((self.stream & 0xFFFFFFFFFFFFFFFF) << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))
        self._buf: list[float] = []
        self._pos = 0
        self.drawn = 0

    def _refill(self) -> None:
        self._buf = self._gen.random(_BLOCK).tolist()
        self._pos = 0

    def uniform(self) -> float:
        """Next draw in [0, 1)."""
        if self._pos >= len(self._buf):
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        self.drawn += 1
        return u

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        z = math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)
        return mean + std * z

    def choice(self, probabilities: Sequence[float]) -> int:
        """Index drawn from a discrete distribution by inversion."""
        u = self.uniform()
        acc = 0.0
        for i, p in enumerate(probabilities):
            acc += p
            if u < acc:
                return i
        return len(probabilities) - 1


def normal_cdf(x: float) -> float:
    """Standard normal CDF, via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def histogram(samples: Iterable[float], edges: Sequence[float]) -> np.ndarray:
    """Counts per bin; the last bin is closed so every sample inside
    ``[edges[0], edges[-1]]`` is counted exactly once."""
    counts, _ = np.histogram(np.asarray(list(samples), dtype=float), bins=np.asarray(edges, dtype=float))
    return counts


def l1_distance(p: Sequence[float], q: Sequence[float]) -> float:
    """L1 distance between two non-negative vectors after normalising each to sum 1."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.sum() <= 0 or q.sum() <= 0:
        raise ValueError("cannot normalise an all-zero vector")
    return float(np.abs(p / p.sum() - q / q.sum()).sum())


# (status, event) -> status, before counter thresholds are applied
_EMPTY, _TENTATIVE, _CONFIRMED = "empty", "tentative", "confirmed"


def lifecycle_oracle(events: Sequence[bool], hits_to_confirm: int, misses_to_delete: int) -> list[str]:
    """Reference status sequence for a hit (True) / miss (False) sequence.

    Works from run lengths rather than incremental counters: a track is
    confirmed once the current hit run since its birth reaches H, and
    destroyed once a miss run reaches R.
    """
    if hits_to_confirm < 1 or misses_to_delete < 1:
        raise ValueError("H and R must be >= 1")
    out = []
    status = _EMPTY
    run_start = None  # index where the current run began
    run_kind = None
    for t, hit in enumerate(events):
        if run_kind is not hit:
            run_kind, run_start = hit, t
        run_len = t - run_start + 1
        if status == _EMPTY:
            if hit:
                # birth: only this hit counts toward the run
                run_start = t
                status = _CONFIRMED if hits_to_confirm == 1 else _TENTATIVE
        elif hit:
            if status == _TENTATIVE and run_len >= hits_to_confirm:
                status = _CONFIRMED
        elif run_len >= misses_to_delete:
            status = _EMPTY
        out.append(status)
    return out
