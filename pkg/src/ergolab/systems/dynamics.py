"""Explicit systems with closed-form n-th iterates.

Every torus system works on raw 64-bit fractions.  ``iterate`` uses exact
Python integers; ``orbit_raw`` builds vectorized orbit tables with uint64
wraparound, which is the same arithmetic modulo 2^64.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from numbers import Integral

import numpy as np

from ..errors import ConfigError, KroneckerNotExplicit, NotApplicable
from .observables import CylinderFunc, Observable, TrigPoly
from .points import MASK, CirclePoint, SymbolicPoint, TorusPoint
from .substitution import Substitution

STRICTLY_ERGODIC = "strictly-ergodic"
NOT_UNIQUELY_ERGODIC = "ergodic-not-uniquely-ergodic"
NOT_ERGODIC = "not-ergodic"
UNVERIFIED = "unverified"

DEFAULT_BIRKHOFF_SAMPLES = 1 << 20


class ApproximateIntegralWarning(UserWarning):
    """An invariant integral was estimated by a long Birkhoff average."""


def _as_uint64(ns) -> np.ndarray:
    return np.asarray(ns, dtype=np.int64).view(np.uint64)


def _steps(start: int, count: int) -> np.ndarray:
    return np.arange(start, start + count, dtype=np.int64)


class System:
    """Common interface.  Subclasses set the metadata tags in ``__post_init__``."""

    ergodicity: str = UNVERIFIED
    weakly_mixing: bool = False
    kronecker_explicit: bool = False
    irrational: bool = False
    dim: int = 0

    @property
    def tags(self) -> dict:
        return {
            "ergodicity": self.ergodicity,
            "weakly_mixing": self.weakly_mixing,
            "kronecker_explicit": self.kronecker_explicit,
            "irrational": self.irrational,
        }

    @property
    def strictly_ergodic(self) -> bool:
        return self.ergodicity == STRICTLY_ERGODIC

    def iterate(self, x, n: int):
        raise NotImplementedError

    def orbit_raw(self, x, start: int, count: int) -> np.ndarray:
        raise NotImplementedError


class TorusSystem(System):
    """Systems on R^r / Z^r; points are ``TorusPoint`` (or ``CirclePoint`` when r = 1)."""

    def point(self, *turns) -> TorusPoint:
        if len(turns) != self.dim:
            raise ConfigError(f"{type(self).__name__} needs {self.dim} coordinates, got {len(turns)}")
        return TorusPoint.from_turns(*turns)

    def random_point(self, rng: np.random.Generator) -> TorusPoint:
        return TorusPoint.from_raw(int(v) for v in rng.integers(0, 1 << 64, size=self.dim, dtype=np.uint64))

    def _raw(self, x) -> tuple[int, ...]:
        if isinstance(x, CirclePoint):
            raw = (x.frac,)
        elif isinstance(x, TorusPoint):
            raw = x.raw
        else:
            raise ConfigError(f"{type(self).__name__} acts on torus points, got {type(x).__name__}")
        if len(raw) != self.dim:
            raise ConfigError(f"point of dimension {len(raw)} for a {self.dim}-dimensional system")
        return raw

    @staticmethod
    def _wrap(raw, like):
        if isinstance(like, CirclePoint):
            return CirclePoint(raw[0])
        return TorusPoint.from_raw(raw)

    def iterate(self, x, n: int):
        if not isinstance(n, Integral):
            raise ConfigError("iterates are indexed by integers")
        return self._wrap(self._iterate_raw(self._raw(x), int(n)), x)

    def _iterate_raw(self, raw: tuple[int, ...], n: int) -> tuple[int, ...]:
        raise NotImplementedError

    def orbit_raw(self, x, start: int, count: int) -> np.ndarray:
        """Fixed-point coordinates of T^n x for n in [start, start + count), shape (count, dim)."""
        return self._orbit_raw(np.array(self._raw(x), dtype=np.uint64), start, count)

    def iterate_many(self, raw: np.ndarray, n: int) -> np.ndarray:
        """T^n applied to many points at once; ``raw`` is a uint64 array of shape (M, dim)."""
        raw = np.asarray(raw)
        if raw.dtype != np.uint64 or raw.ndim != 2 or raw.shape[1] != self.dim:
            raise ConfigError(f"expected a uint64 array of shape (M, {self.dim})")
        with np.errstate(over="ignore"):
            return self._iterate_many(raw, int(n))


def _alpha_tuple(alpha) -> tuple[CirclePoint, ...]:
    if isinstance(alpha, (str, CirclePoint)) or not hasattr(alpha, "__iter__"):
        alpha = (alpha,)
    return tuple(a if isinstance(a, CirclePoint) else CirclePoint.from_turns(a) for a in alpha)


@dataclass(frozen=True)
class Rotation(TorusSystem):
    """x -> x + alpha on the r-torus.

    ``irrational=None`` auto-detects: a coordinate whose fraction ends in at
    least 32 zero bits is treated as a deliberate rational.  Strict ergodicity
    additionally needs 1, alpha_1, ..., alpha_r rationally independent, which
    is assumed for quantized irrationals and cannot be checked.
    """

    alpha: tuple[CirclePoint, ...] = ("golden",)
    irrational: bool | None = None

    def __post_init__(self):
        alpha = _alpha_tuple(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        irr = self.irrational
        if irr is None:
            irr = not any(a.is_dyadic_like() for a in alpha)
        object.__setattr__(self, "irrational", bool(irr))
        object.__setattr__(self, "dim", len(alpha))
        object.__setattr__(self, "ergodicity", STRICTLY_ERGODIC if irr else NOT_ERGODIC)
        object.__setattr__(self, "weakly_mixing", False)
        object.__setattr__(self, "kronecker_explicit", True)

    def _iterate_raw(self, raw, n):
        return tuple((x + n * a.frac) & MASK for x, a in zip(raw, self.alpha))

    def _orbit_raw(self, raw, start, count):
        a = np.array([c.frac for c in self.alpha], dtype=np.uint64)
        ns = _as_uint64(_steps(start, count))
        return raw[None, :] + ns[:, None] * a[None, :]

    def _iterate_many(self, raw, n):
        a = np.array([(n * c.frac) & MASK for c in self.alpha], dtype=np.uint64)
        return raw + a[None, :]


@dataclass(frozen=True)
class SkewProduct(TorusSystem):
    """(x, y) -> (x + alpha, y + 2x + alpha), whose n-th iterate is (x + n alpha, y + 2nx + n^2 alpha)."""

    alpha: CirclePoint = "golden"
    irrational: bool | None = None

    def __post_init__(self):
        (alpha,) = _alpha_tuple(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        irr = self.irrational
        if irr is None:
            irr = not alpha.is_dyadic_like()
        object.__setattr__(self, "irrational", bool(irr))
        object.__setattr__(self, "dim", 2)
        object.__setattr__(self, "ergodicity", STRICTLY_ERGODIC if irr else NOT_ERGODIC)
        object.__setattr__(self, "weakly_mixing", False)
        object.__setattr__(self, "kronecker_explicit", True)

    def _iterate_raw(self, raw, n):
        x, y = raw
        a = self.alpha.frac
        return ((x + n * a) & MASK, (y + 2 * n * x + n * n * a) & MASK)

    def _orbit_raw(self, raw, start, count):
        a = np.uint64(self.alpha.frac)
        ns = _as_uint64(_steps(start, count))
        out = np.empty((count, 2), dtype=np.uint64)
        out[:, 0] = raw[0] + ns * a
        out[:, 1] = raw[1] + np.uint64(2) * ns * raw[0] + ns * ns * a
        return out

    def _iterate_many(self, raw, n):
        a = self.alpha.frac
        out = np.empty_like(raw)
        out[:, 0] = raw[:, 0] + np.uint64((n * a) & MASK)
        out[:, 1] = raw[:, 1] + np.uint64((2 * n) & MASK) * raw[:, 0] + np.uint64((n * n * a) & MASK)
        return out


def _matmul_mod(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(2)) & MASK for j in range(2)) for i in range(2)
    )


def _matpow_mod(m, n: int):
    result = ((1, 0), (0, 1))
    base = tuple(tuple(v & MASK for v in row) for row in m)
    while n:
        if n & 1:
            result = _matmul_mod(result, base)
        base = _matmul_mod(base, base)
        n >>= 1
    return result


def _uint64_matmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Batched 2x2 products modulo 2^64; p has shape (..., 2, 2), q shape (2, 2)."""
    out = np.empty(np.broadcast_shapes(p.shape, q.shape), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for i in range(2):
            for j in range(2):
                out[..., i, j] = p[..., i, 0] * q[..., 0, j] + p[..., i, 1] * q[..., 1, j]
    return out


@dataclass(frozen=True)
class ToralAutomorphism(TorusSystem):
    """x -> A x mod 1 for an integer 2x2 matrix with |det A| = 1.

    Points are dyadic rationals with denominator 2^64, so A^n x mod 1 only
    needs A^n mod 2^64; no intermediate ever overflows.
    """

    matrix: tuple[tuple[int, int], tuple[int, int]] = ((2, 1), (1, 1))

    def __post_init__(self):
        m = tuple(tuple(int(v) for v in row) for row in self.matrix)
        if len(m) != 2 or any(len(r) != 2 for r in m):
            raise ConfigError("toral automorphisms here are 2x2")
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        if abs(det) != 1:
            raise ConfigError(f"|det| must be 1, got det = {det}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", 2)
        tr = m[0][0] + m[1][1]
        # for 2x2 unimodular matrices: no root-of-unity eigenvalue <=> hyperbolic
        hyperbolic = abs(tr) > 2 if det == 1 else tr != 0
        object.__setattr__(self, "weakly_mixing", hyperbolic)
        object.__setattr__(self, "ergodicity", NOT_UNIQUELY_ERGODIC if hyperbolic else NOT_ERGODIC)
        object.__setattr__(self, "kronecker_explicit", False)
        object.__setattr__(self, "irrational", False)
        inv = ((det * m[1][1], -det * m[0][1]), (-det * m[1][0], det * m[0][0]))
        object.__setattr__(self, "_inverse", inv)

    def power(self, n: int):
        """A^n modulo 2^64 as nested tuples of non-negative ints."""
        if n >= 0:
            return _matpow_mod(self.matrix, n)
        return _matpow_mod(self._inverse, -n)

    def _iterate_raw(self, raw, n):
        p = self.power(n)
        return tuple((p[i][0] * raw[0] + p[i][1] * raw[1]) & MASK for i in range(2))

    def _power_table(self, count: int) -> np.ndarray:
        table = np.empty((count, 2, 2), dtype=np.uint64)
        table[0] = np.eye(2, dtype=np.uint64)
        filled = 1
        step = np.array(self.power(1), dtype=np.uint64)
        while filled < count:
            take = min(filled, count - filled)
            table[filled : filled + take] = _uint64_matmul(table[:take], step)
            filled += take
            step = _uint64_matmul(step, step)
        return table

    def _orbit_raw(self, raw, start, count):
        v0 = np.array(self._iterate_raw(tuple(int(r) for r in raw), start), dtype=np.uint64)
        p = self._power_table(count)
        return np.stack([p[:, i, 0] * v0[0] + p[:, i, 1] * v0[1] for i in range(2)], axis=1)

    def _iterate_many(self, raw, n):
        p = np.array(self.power(n), dtype=np.uint64)
        return np.stack([p[i, 0] * raw[:, 0] + p[i, 1] * raw[:, 1] for i in range(2)], axis=1)


@dataclass(frozen=True)
class Product(TorusSystem):
    """T x S on the product of two torus systems; coordinates are concatenated."""

    left: TorusSystem
    right: TorusSystem

    def __post_init__(self):
        for s in (self.left, self.right):
            if not isinstance(s, TorusSystem):
                raise ConfigError("products are only supported between torus systems")
        object.__setattr__(self, "dim", self.left.dim + self.right.dim)
        wm = self.left.weakly_mixing and self.right.weakly_mixing
        object.__setattr__(self, "weakly_mixing", wm)
        # ergodicity of a product of two rotations depends on rational independence
        object.__setattr__(self, "ergodicity", NOT_UNIQUELY_ERGODIC if wm else UNVERIFIED)
        object.__setattr__(self, "kronecker_explicit", False)
        object.__setattr__(self, "irrational", False)

    def _iterate_raw(self, raw, n):
        k = self.left.dim
        return self.left._iterate_raw(raw[:k], n) + self.right._iterate_raw(raw[k:], n)

    def _orbit_raw(self, raw, start, count):
        k = self.left.dim
        return np.concatenate(
            [self.left._orbit_raw(raw[:k], start, count), self.right._orbit_raw(raw[k:], start, count)],
            axis=1,
        )

    def _iterate_many(self, raw, n):
        k = self.left.dim
        return np.concatenate(
            [self.left._iterate_many(raw[:, :k], n), self.right._iterate_many(raw[:, k:], n)], axis=1
        )


@dataclass(frozen=True)
class SubstitutionSubshift(System):
    """The shift on the orbit closure of a substitution fixed point."""

    substitution: Substitution

    def __post_init__(self):
        if isinstance(self.substitution, str):
            object.__setattr__(self, "substitution", Substitution.named(self.substitution))
        m = self.substitution.incidence_matrix()
        primitive = bool((np.linalg.matrix_power(m, m.shape[0] ** 2) > 0).all())
        object.__setattr__(self, "ergodicity", STRICTLY_ERGODIC if primitive else UNVERIFIED)
        object.__setattr__(self, "weakly_mixing", False)
        object.__setattr__(self, "kronecker_explicit", False)

    def point(self, offset: int = 0) -> SymbolicPoint:
        return SymbolicPoint(self.substitution, offset)

    def random_point(self, rng: np.random.Generator, span: int = 1 << 16) -> SymbolicPoint:
        return self.point(int(rng.integers(0, span)))

    def _check(self, x) -> SymbolicPoint:
        if not isinstance(x, SymbolicPoint) or x.substitution is not self.substitution:
            raise ConfigError("point does not belong to this subshift")
        return x

    def iterate(self, x, n: int) -> SymbolicPoint:
        x = self._check(x)
        offset = x.offset + int(n)
        if offset < 0:
            raise ConfigError("cannot shift a one-sided point before index 0")
        self.substitution.expand(offset + 1)
        return SymbolicPoint(self.substitution, offset)

    def orbit_raw(self, x, start: int, count: int) -> np.ndarray:
        """Offsets of the shifted points; letters are read lazily by the observable."""
        x = self._check(x)
        offsets = x.offset + _steps(start, count)
        if count and offsets[0] < 0:
            raise ConfigError("cannot shift a one-sided point before index 0")
        return offsets


SystemDescriptor = Rotation | SkewProduct | ToralAutomorphism | SubstitutionSubshift | Product


def iterate(sys: System, x, n: int):
    """T^n x by closed form."""
    return sys.iterate(x, n)


def orbit_values(sys: System, obs: Observable, x, start: int, count: int) -> np.ndarray:
    """f(T^n x) for n in [start, start + count): the orbit cache used by every average."""
    if isinstance(sys, SubstitutionSubshift):
        if not isinstance(obs, CylinderFunc):
            raise ConfigError("subshifts take cylinder-function observables")
        return obs.evaluate_offsets(sys.substitution, sys.orbit_raw(x, start, count))
    if not isinstance(obs, TrigPoly):
        raise ConfigError("torus systems take trigonometric-polynomial observables")
    if obs.dim != sys.dim:
        raise ConfigError(f"{obs.dim}-dimensional observable on a {sys.dim}-dimensional system")
    if obs.is_constant():
        return np.full(count, obs.mean, dtype=np.complex128)
    return obs.evaluate_raw(sys.orbit_raw(x, start, count))


def integrate_invariant(sys: System, obs: Observable, samples: int = DEFAULT_BIRKHOFF_SAMPLES) -> complex:
    """Integral of ``obs`` against the invariant (or Haar reference) measure.

    Trigonometric polynomials integrate to their constant term against Haar
    measure, which every torus system here preserves.  Single-letter cylinder
    functions use the Perron letter frequencies; longer windows fall back to a
    Birkhoff average over ``samples`` letters and emit
    ``ApproximateIntegralWarning``.
    """
    if isinstance(sys, TorusSystem):
        if not isinstance(obs, TrigPoly):
            raise ConfigError("torus systems take trigonometric-polynomial observables")
        if obs.dim != sys.dim:
            raise ConfigError(f"{obs.dim}-dimensional observable on a {sys.dim}-dimensional system")
        return complex(obs.mean)
    if isinstance(sys, SubstitutionSubshift):
        if not isinstance(obs, CylinderFunc):
            raise ConfigError("subshifts take cylinder-function observables")
        if not sys.strictly_ergodic:
            raise NotApplicable(f"{sys.substitution.name} is not primitive; no unique invariant measure")
        if obs.length == 1:
            freqs = sys.substitution.letter_frequencies()
            return complex(sum(v * freqs[w] for w, v in obs.table.items()))
        vals = orbit_values(sys, obs, sys.point(max(0, -obs.start)), 0, samples)
        est = complex(np.mean(vals))
        warnings.warn(
            ApproximateIntegralWarning(
                f"window length {obs.length}: Birkhoff estimate over N={samples}, "
                f"heuristic error ~ {obs.sup_norm_bound * obs.length / samples ** 0.5:.2e}"
            ),
            stacklevel=2,
        )
        return est
    raise NotApplicable(f"no reference measure for {type(sys).__name__}")


def kronecker_coordinate(sys: System, x):
    """Explicit factor map onto the Kronecker factor (rotation: identity; skew product: first coordinate)."""
    if isinstance(sys, Rotation):
        sys._raw(x)
        return x
    if isinstance(sys, SkewProduct):
        sys._raw(x)
        return x[0]
    raise KroneckerNotExplicit(f"Kronecker factor not explicit in this build for {type(sys).__name__}")


def kronecker_rotation(sys: System) -> Rotation:
    """The rotation on the Kronecker factor intertwined by ``kronecker_coordinate``."""
    if isinstance(sys, Rotation):
        return sys
    if isinstance(sys, SkewProduct):
        return Rotation((sys.alpha,), irrational=sys.irrational)
    raise KroneckerNotExplicit(f"Kronecker factor not explicit in this build for {type(sys).__name__}")


