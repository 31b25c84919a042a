"""Unique-ergodicity probes, tempered Folner checks and Weyl-sum sanity tests."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .averaging import DEFAULT_SCHEDULE, LinearAction, birkhoff_average, folner_box_average
from .errors import ConfigError
from .systems import Observable, System, TorusSystem, TrigPoly

DEFAULT_PROBE_THRESHOLD = 5e-2


@dataclass(frozen=True)
class SpreadReport:
    schedule: list[int]
    values: list[list[complex]]  # values[i][j]: point i, schedule entry j
    threshold: float

    @property
    def top_values(self) -> list[complex]:
        return [row[-1] for row in self.values]

    def _worst_pair(self) -> tuple[int, int, float]:
        vals = self.top_values
        best = (0, 0, 0.0)
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                gap = abs(vals[i] - vals[j])
                if gap > best[2]:
                    best = (i, j, gap)
        return best

    @property
    def spread(self) -> float:
        return self._worst_pair()[2]

    @property
    def verdict(self) -> str:
        return "inconsistent" if self.spread > self.threshold else "consistent-with-unique"

    @property
    def witness(self) -> tuple[int, int] | None:
        """Indices of the two probe points farthest apart, when the verdict is inconsistent."""
        if self.verdict != "inconsistent":
            return None
        i, j, _ = self._worst_pair()
        return i, j


def unique_ergodicity_probe(
    action,
    f: Observable,
    points: Sequence,
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    threshold: float = DEFAULT_PROBE_THRESHOLD,
    threads: int = 1,
) -> SpreadReport:
    """Folner averages of f from several base points.

    Unique ergodicity forces every point to the same limit, so a large gap
    at the top of the schedule disproves it (up to numerics); a small gap is
    only evidence.  ``action`` is a LinearAction, a System (meaning the Z
    action of T), or a list of commuting callables.
    """
    if len(points) < 2:
        raise ConfigError("a probe needs at least two points")
    if isinstance(action, System):
        action = LinearAction(action, (1,))
    schedule = [int(n) for n in schedule]
    values = [[folner_box_average(action, f, p, N, threads=threads) for N in schedule] for p in points]
    return SpreadReport(schedule, values, threshold)


class TemperedCheck(NamedTuple):
    C_observed: Fraction
    holds: bool


def tempered_union_size(d: int, n: int) -> int:
    """|union_{k <= n} F_k^{-1} F_n| for boxes F_k = [0, k)^d, counted from the sets themselves.

    The union equals the support of (sum_k 1_{-F_k}) * 1_{F_n}; the
    convolution is done by FFT and the integer counts are rounded.
    """
    if d < 1 or n < 1:
        raise ConfigError("need d >= 1 and n >= 1")
    # index i of an axis stands for the integer i - (n - 1)
    neg = np.zeros((n,) * d)
    for k in range(1, n + 1):
        neg[(slice(n - k, n),) * d] += 1.0
    box = np.ones((n,) * d)
    shape = (2 * n - 1,) * d
    axes = tuple(range(d))
    counts = np.fft.irfftn(np.fft.rfftn(neg, shape, axes) * np.fft.rfftn(box, shape, axes), shape, axes)
    rounded = np.rint(counts)
    if np.abs(counts - rounded).max() > 0.25:
        raise ArithmeticError("FFT convolution too inaccurate to count the union")
    return int((rounded > 0).sum())


def tempered_check_boxes(d: int, n_max: int, enumerate_sets: bool = False) -> TemperedCheck:
    """Tempered constant of the boxes [0, N)^d up to n_max.

    The union over k <= n of F_k^{-1} F_n is [-(n-1), n-1]^d, of size
    (2n-1)^d; the observed constant is the largest ratio to |F_n| = n^d.
    With ``enumerate_sets`` the sizes are counted from the sets and must agree.
    """
    if d < 1 or n_max < 1:
        raise ConfigError("need d >= 1 and n_max >= 1")
    worst = Fraction(0)
    for n in range(1, n_max + 1):
        size = (2 * n - 1) ** d
        if enumerate_sets:
            counted = tempered_union_size(d, n)
            if counted != size:
                raise ArithmeticError(f"enumerated union {counted} != (2n-1)^d = {size} at n={n}")
        worst = max(worst, Fraction(size, n**d))
    return TemperedCheck(worst, worst <= 2**d)


def equidistribution_test(sys: System, k, x, N: int) -> float:
    """|(1/N) sum_{n<N} e(k . T^n x)|, a Weyl sum along the orbit."""
    if not isinstance(sys, TorusSystem):
        raise ConfigError("equidistribution tests run on torus systems")
    k = (int(k),) if np.isscalar(k) else tuple(int(v) for v in k)
    if not any(k):
        raise ConfigError("k = 0 is rejected: the average is trivially 1")
    return abs(birkhoff_average(sys, TrigPoly.character(k), x, N))
