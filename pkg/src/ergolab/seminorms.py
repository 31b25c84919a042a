"""Host-Kra seminorms and the van der Corput inequality.

Two routes to the same quantity.  The empirical route runs the recursion
||f||_{k+1}^(2^(k+1)) = lim_h avg ||f . T^h conj(f)||_k^(2^k) with finite N
and H along one orbit.  The exact route, for rotations, carries the same
recursion symbolically: each shift h_i becomes an extra formal frequency,
and averaging over h_i keeps only the terms whose h_i-frequency vanishes.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, ConfigError, NotApplicable
from .reduction import tree_sum
from .systems import Observable, Rotation, System, TrigPoly, orbit_values

DEFAULT_COST_CAP = 1 << 31
DEFAULT_SUPPORT_CAP = 1 << 22
NEGATIVE_TOLERANCE = 1e-6
_BLOCK = 1 << 20


@dataclass(frozen=True)
class SeminormResult:
    k: int
    value: float
    method: str
    raw: float
    params: dict = field(default_factory=dict)
    clamped: float = 0.0
    numerical_failure: bool = False


def _default_point(sys: System):
    rng = np.random.default_rng(20240101)
    return sys.random_point(rng)


def _level(v: np.ndarray, k: int, N: int, H: int) -> float:
    """Finite surrogate of ||g||_k^(2^k) from the orbit values v of g."""
    if k == 1:
        return abs(complex(tree_sum(v[:N])) / N) ** 2
    L = len(v) - H
    if k == 2:
        # |(1/N) sum_n v[n] conj(v[n+h])|^2 for all h at once, in row blocks
        acc = np.empty(H)
        rows = max(1, _BLOCK // N)
        win = np.lib.stride_tricks.sliding_window_view(v, N)
        for h0 in range(0, H, rows):
            hs = slice(h0, min(h0 + rows, H))
            prod = v[None, :N] * np.conj(win[hs])
            acc[hs] = np.abs(tree_sum(prod) / N) ** 2
        return float(tree_sum(acc)) / H
    acc = np.empty(H)
    for h in range(H):
        acc[h] = _level(v[:L] * np.conj(v[h : h + L]), k - 1, N, H)
    return float(tree_sum(acc)) / H


def hk_seminorm_empirical(
    sys: System,
    f: Observable,
    k: int,
    N: int,
    H: int,
    x=None,
    cost_cap: int = DEFAULT_COST_CAP,
) -> SeminormResult:
    """Finite-N, finite-H surrogate of ||f||_k along the orbit of ``x``.

    The base level replaces the integral by a length-N Birkhoff average; each
    further level averages over shifts h in [0, H).  Cost is N * H^(k-1).
    """
    if not 1 <= k <= 3:
        raise ConfigError("the empirical recursion supports 1 <= k <= 3")
    if N < 1 or H < 1:
        raise ConfigError("N and H must be >= 1")
    cost = N * H ** (k - 1)
    if cost > cost_cap:
        raise CapExceeded(f"empirical seminorm cost N*H^(k-1) = {cost} exceeds cap {cost_cap}")
    if x is None:
        x = _default_point(sys)
    v = orbit_values(sys, f, x, 0, N + (k - 1) * H)
    raw = _level(v, k, N, H)
    clamped = 0.0
    if raw < 0:
        clamped = -raw
        raw = 0.0
    return SeminormResult(
        k,
        raw ** (1.0 / 2**k),
        "empirical",
        raw,
        {"N": N, "H": H},
        clamped,
        clamped > NEGATIVE_TOLERANCE,
    )


def _require_irrational_rotation(sys: System | None) -> None:
    if sys is None:
        return
    if not (isinstance(sys, Rotation) and sys.irrational):
        raise NotApplicable("the exact seminorm needs an irrational rotation")


def hk_power_rotation(f: TrigPoly, k: int, support_cap: int = DEFAULT_SUPPORT_CAP) -> float:
    """||f||_k^(2^k) for an irrational rotation, by the symbolic recursion.

    The state maps (x-frequency, h-frequencies) to coefficients of
    F(x, h_1..h_j) = F_{j-1}(x, h) conj(F_{j-1}(x + h_j alpha, h)); the final
    level is averaged over x and every h_i.
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    if k > 4:
        raise ConfigError("the exact recursion supports k <= 4")
    state: dict[tuple, complex] = {(q, ()): c for q, c in f.coeffs.items() if c != 0}
    if not state:
        return 0.0
    zero = (0,) * f.dim
    for level in range(1, k):
        last = level == k - 1
        if len(state) ** 2 > support_cap and not last:
            raise CapExceeded(f"symbolic support {len(state)}^2 exceeds cap {support_cap}")
        new: dict[tuple, complex] = {}
        if last:
            # only x-frequency 0 survives the final integral, so pair q with q
            by_q: dict[tuple, list] = {}
            for (q, b), c in state.items():
                by_q.setdefault(q, []).append((b, c))
            if sum(len(v) ** 2 for v in by_q.values()) > support_cap:
                raise CapExceeded("symbolic support exceeds cap")
            for q, terms in by_q.items():
                negq = tuple(-v for v in q)
                for b1, c1 in terms:
                    for b2, c2 in terms:
                        key = (zero, tuple(_sub(u, w) for u, w in zip(b1, b2)) + (negq,))
                        new[key] = new.get(key, 0) + c1 * np.conj(c2)
        else:
            items = list(state.items())
            for (q1, b1), c1 in items:
                for (q2, b2), c2 in items:
                    key = (_sub(q1, q2), tuple(_sub(u, w) for u, w in zip(b1, b2)) + (tuple(-v for v in q2),))
                    new[key] = new.get(key, 0) + c1 * np.conj(c2)
        state = new
    if k == 1:
        return abs(state.get((zero, ()), 0)) ** 2
    return float(sum(abs(c) ** 2 for (q, _), c in state.items() if q == zero))


def _sub(u: tuple, w: tuple) -> tuple:
    return tuple(a - b for a, b in zip(u, w))


def hk_seminorm_rotation_exact(f: TrigPoly, k: int, sys: System | None = None) -> SeminormResult:
    """||f||_k for an irrational rotation, treating alpha as formally irrational."""
    _require_irrational_rotation(sys)
    if not isinstance(f, TrigPoly):
        raise ConfigError("the exact seminorm needs a trigonometric polynomial")
    raw = hk_power_rotation(f, k)
    return SeminormResult(k, raw ** (1.0 / 2**k), "exact-rotation", raw)


@dataclass(frozen=True)
class HilbertSequence:
    """Vectors x_1, x_2, ... of a finite-dimensional complex space, stored as rows."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.complex128)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ConfigError("a Hilbert sequence is a 1-D or 2-D array")
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], length: int) -> "HilbertSequence":
        """Build from a vectorized map n -> x_n evaluated at n = 1..length."""
        return cls(fn(np.arange(1, length + 1)))

    @classmethod
    def from_orbit(cls, sys: System, fs, x, length: int) -> "HilbertSequence":
        """x_n = (f_1(T^n x), ..., f_r(T^n x)) for n = 1..length."""
        if not isinstance(fs, (list, tuple)):
            fs = [fs]
        return cls(np.stack([orbit_values(sys, f, x, 1, length) for f in fs], axis=1))

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def sup_norm(self) -> float:
        return float(np.sqrt((np.abs(self.vectors) ** 2).sum(axis=1)).max())


@dataclass(frozen=True)
class VdcCheck:
    lhs: float
    rhs: float
    holds: bool
    slack: float


def vdc_bound_check(seq: HilbertSequence, N: int, H: int, tolerance: float = 1e-6) -> VdcCheck:
    """Finite surrogate of the van der Corput inequality.

    lhs = ||(1/N) sum_{n<=N} x_n||^2 and
    rhs = (1/H) sum_{h<=H} |(1/N) sum_{n<=N} <x_n, x_{n+h}>|.
    The statement is asymptotic; ``holds=False`` at small N, H is a warning
    sign, not a contradiction.
    """
    if N < 1 or H < 1:
        raise ConfigError("N and H must be >= 1")
    v = seq.vectors
    if len(v) < N + H:
        raise ConfigError(f"sequence has {len(v)} terms, need N + H = {N + H}")
    mean = tree_sum(v[:N].T) / N
    lhs = float(np.real(np.vdot(mean, mean)))
    acc = np.empty(H)
    rows = max(1, _BLOCK // (N * v.shape[1]))
    head = v[:N]
    for h0 in range(0, H, rows):
        hs = np.arange(h0, min(h0 + rows, H)) + 1
        # <x_n, x_{n+h}> = sum_i x_n[i] conj(x_{n+h}[i])
        shifted = v[hs[:, None] + np.arange(N)[None, :]]
        inner = (head[None, :, :] * np.conj(shifted)).sum(axis=2)
        acc[hs - 1] = np.abs(tree_sum(inner) / N)
    rhs = float(tree_sum(acc)) / H
    return VdcCheck(lhs, rhs, lhs <= rhs + tolerance, rhs - lhs)
