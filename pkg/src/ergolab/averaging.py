"""Birkhoff, Folner-box, cube and arithmetic-progression averages.

Every average here is a sum over a box [0, N)^D of products of observables
evaluated at T^(linear form in n) x.  The observables are tabulated once
along the orbit (closed-form iterates) and the grid is reduced with the
fixed-shape tree in ``reduction``.
"""
from __future__ import annotations

import math
import time
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .cubes import CubeIndex, dot_matrix
from .errors import CapExceeded, CommutationError, ConfigError, NumericalFailure
from .reduction import DEFAULT_GRID_CAP, check_cap, linear_grid_sum, tree_sum
from .systems import Observable, System, TrigPoly, evaluate, orbit_values

DEFAULT_SCHEDULE = tuple(2**k for k in range(6, 13))
DEFAULT_WINDOW = 3
DEFAULT_TOLERANCE = 1e-2
# longest orbit table one average may allocate (complex128, 1 GiB)
DEFAULT_TABLE_CAP = 1 << 26
GENERIC_ACTION_CAP = 1 << 20


@dataclass(frozen=True)
class FolnerBox:
    d: int
    N: int

    @property
    def size(self) -> int:
        return self.N**self.d

    @property
    def tempered_constant(self) -> int:
        return 2**self.d

    def indices(self):
        return product(range(self.N), repeat=self.d)


@dataclass(frozen=True)
class LinearAction:
    """The Z^d action gamma -> T^(coeffs . gamma) of a single system."""

    sys: System
    coeffs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if not self.coeffs:
            raise ConfigError("an action needs at least one generator")

    @property
    def d(self) -> int:
        return len(self.coeffs)


def _is_one(obs: Observable) -> bool:
    return isinstance(obs, TrigPoly) and obs.is_constant() and obs.mean == 1


def grid_average(
    sys: System,
    slots: Sequence[tuple[Observable, Sequence[int]]],
    x,
    N: int,
    D: int,
    threads: int = 1,
    cap: int = DEFAULT_GRID_CAP,
    table_cap: int = DEFAULT_TABLE_CAP,
) -> complex:
    """(1/N^D) sum over n in [0, N)^D of prod_s f_s(T^(form_s . n) x).

    Slots whose observable is the constant 1 are dropped (multiplying by an
    exact 1.0 would not change any bit).
    """
    check_cap(N, D, cap)
    tables, forms, lows = [], [], []
    cache: dict[tuple[int, int, int], np.ndarray] = {}
    for obs, form in slots:
        form = np.asarray(form, dtype=np.int64)
        if form.shape != (D,):
            raise ConfigError(f"linear form {form.tolist()} does not have {D} coefficients")
        if _is_one(obs):
            continue
        lo = int(np.minimum(form, 0).sum()) * (N - 1)
        hi = int(np.maximum(form, 0).sum()) * (N - 1)
        if hi - lo + 1 > table_cap:
            raise CapExceeded(f"orbit table of {hi - lo + 1} values exceeds cap {table_cap}")
        key = (id(obs), lo, hi)
        if key not in cache:
            cache[key] = orbit_values(sys, obs, x, lo, hi - lo + 1)
        tables.append(cache[key])
        forms.append(form)
        lows.append(lo)
    forms_arr = np.array(forms, dtype=np.int64).reshape(len(forms), D)
    total = linear_grid_sum(tables, forms_arr, N, lows, threads=threads, cap=cap)
    return total / N**D


def birkhoff_average(sys: System, f: Observable, x, N: int, threads: int = 1) -> complex:
    """(1/N) sum_{n<N} f(T^n x)."""
    return grid_average(sys, [(f, (1,))], x, N, 1, threads=threads)


def _spot_check_commuting(maps, x, pairs: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    d = len(maps)
    if d < 2:
        return
    for _ in range(pairs):
        i, j = rng.choice(d, size=2, replace=False)
        p = maps[int(rng.integers(d))](x, int(rng.integers(0, 5)))
        if maps[i](maps[j](p, 1), 1) != maps[j](maps[i](p, 1), 1):
            raise CommutationError(f"generators {i} and {j} do not commute at {p!r}")


def folner_box_average(
    action: LinearAction | Sequence[Callable],
    f: Observable,
    x,
    N: int,
    threads: int = 1,
    check_pairs: int = 8,
    seed: int = 0,
) -> complex:
    """(1/N^d) sum over gamma in [0, N)^d of f(T_gamma x).

    ``action`` is either a ``LinearAction`` (fast, tabulated) or a list of d
    callables ``g(point, k) -> g^k(point)``, which are spot-checked for
    commutation on random pairs and evaluated term by term.
    """
    if isinstance(action, LinearAction):
        return grid_average(action.sys, [(f, action.coeffs)], x, N, action.d, threads=threads)
    maps = list(action)
    d = len(maps)
    if d < 1:
        raise ConfigError("an action needs at least one generator")
    check_cap(N, d, GENERIC_ACTION_CAP)
    _spot_check_commuting(maps, x, check_pairs, seed)
    vals = np.empty(N**d, dtype=np.complex128)
    for flat, gamma in enumerate(product(range(N), repeat=d)):
        p = x
        for g, k in zip(reversed(maps), reversed(gamma)):
            p = g(p, k)
        vals[flat] = evaluate(f, p)
    return complex(tree_sum(tree_sum(vals.reshape(-1, N)))) / N**d


def _face_slots(faces: Mapping, d: int, include_empty: bool) -> dict[int, Observable]:
    out: dict[int, Observable] = {}
    for key, obs in faces.items():
        idx = CubeIndex.parse(key, d)
        if idx.bits == 0 and not include_empty:
            raise ConfigError("the empty face carries no observable in the face-group average")
        out[idx.bits] = obs
    return out


def _infer_d(faces: Mapping, d: int | None) -> int:
    if d is not None:
        if d < 1:
            raise ConfigError("d must be >= 1")
        return d
    dims = set()
    for key in faces:
        if isinstance(key, CubeIndex):
            dims.add(key.d)
        elif isinstance(key, (str, tuple, list)):
            dims.add(len(key))
        else:
            raise ConfigError("pass d explicitly when faces are keyed by integer bits")
    if len(dims) != 1:
        raise ConfigError("cannot infer the cube dimension from the face keys")
    return dims.pop()


def cube_face_average(
    sys: System, faces: Mapping, x, N: int, d: int | None = None, threads: int = 1, cap: int = DEFAULT_GRID_CAP
) -> complex:
    """(1/N^d) sum over n in [0, N)^d of prod_{eps != 0} f_eps(T^(n . eps) x).

    Faces without an observable count as the constant 1.
    """
    d = _infer_d(faces, d)
    obs = _face_slots(faces, d, include_empty=False)
    eps = dot_matrix(d)
    slots = [(obs[b], eps[b]) for b in range(1, 1 << d) if b in obs]
    return grid_average(sys, slots, x, N, d, threads=threads, cap=cap)


def cube_full_average(
    sys: System, faces: Mapping, x, N: int, d: int | None = None, threads: int = 1, cap: int = DEFAULT_GRID_CAP
) -> complex:
    """(1/N^(d+1)) sum over (n, n_1..n_d) of prod_eps f_eps(T^(n + n . eps) x), including eps = 0."""
    d = _infer_d(faces, d)
    obs = _face_slots(faces, d, include_empty=True)
    eps = dot_matrix(d)
    slots = [(obs[b], np.concatenate([[1], eps[b]])) for b in range(1 << d) if b in obs]
    return grid_average(sys, slots, x, N, d + 1, threads=threads, cap=cap)


def ap_average(sys: System, fs: Sequence[Observable], x, N: int, threads: int = 1, cap: int = DEFAULT_GRID_CAP) -> complex:
    """(1/N^2) sum over n, m in [0, N) of prod_j f_j(T^(n + (j-1) m) x)."""
    if len(fs) < 1:
        raise ConfigError("need at least one observable")
    slots = [(f, (1, j)) for j, f in enumerate(fs)]
    return grid_average(sys, slots, x, N, 2, threads=threads, cap=cap)


@dataclass
class AverageReport:
    kind: str
    schedule: list[int]
    values: list[complex]
    window: int = DEFAULT_WINDOW
    predicted_limit: complex | None = None
    formula: str | None = None
    elapsed: list[float] = field(default_factory=list)
    failed: bool = False
    message: str = ""

    def spread_at(self, i: int) -> float:
        """Largest pairwise gap among the ``window`` values ending at position i."""
        tail = self.values[max(0, i - self.window + 1) : i + 1]
        return max((abs(a - b) for a in tail for b in tail), default=0.0)

    @property
    def tail_spread(self) -> float:
        return self.spread_at(len(self.values) - 1) if self.values else float("nan")

    @property
    def final(self) -> complex:
        return self.values[-1]

    def abs_errors(self) -> list[float | None]:
        if self.predicted_limit is None:
            return [None] * len(self.values)
        return [abs(v - self.predicted_limit) for v in self.values]

    @property
    def abs_error(self) -> float | None:
        return self.abs_errors()[-1] if self.values else None


def convergence_trace(
    average: Callable[[int], complex],
    schedule: Sequence[int] = DEFAULT_SCHEDULE,
    predicted: complex | None = None,
    formula: str | None = None,
    window: int = DEFAULT_WINDOW,
    kind: str = "",
) -> AverageReport:
    """Evaluate ``average(N)`` along an increasing schedule."""
    schedule = [int(n) for n in schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigError("schedule must be a non-empty increasing list")
    report = AverageReport(kind, schedule, [], window, predicted, formula)
    for N in schedule:
        t0 = time.perf_counter()
        v = complex(average(N))
        report.elapsed.append(time.perf_counter() - t0)
        report.values.append(v)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            report.failed = True
            report.message = f"non-finite value at N={N}"
            break
    return report


def require_finite(report: AverageReport) -> AverageReport:
    if report.failed:
        raise NumericalFailure(report.message)
    return report


def product_difference_bound(a: Sequence[complex], b: Sequence[complex]):
    """Telescoping split of prod(a) - prod(b).

    Term i is a_1...a_(i-1) (a_i - b_i) b_(i+1)...b_k.  Returns the list of
    terms and the bound sum |a_i - b_i|, valid when all |a_i|, |b_i| <= 1.
    """
    a = [complex(v) for v in a]
    b = [complex(v) for v in b]
    if len(a) != len(b) or not a:
        raise ConfigError("need two non-empty sequences of equal length")
    k = len(a)
    prefix = [1 + 0j]
    for v in a:
        prefix.append(prefix[-1] * v)
    suffix = [1 + 0j] * (k + 1)
    for i in range(k - 1, -1, -1):
        suffix[i] = suffix[i + 1] * b[i]
    terms = [prefix[i] * (a[i] - b[i]) * suffix[i + 1] for i in range(k)]
    return terms, sum(abs(x - y) for x, y in zip(a, b))
