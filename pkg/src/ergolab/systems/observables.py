"""Observables: trigonometric polynomials on tori and cylinder functions on subshifts."""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from numbers import Integral

import numpy as np

from ..errors import ConfigError
from .points import SCALE, CirclePoint, SymbolicPoint, TorusPoint

TWO_PI = 2.0 * np.pi


def _freq(k, dim: int | None = None) -> tuple[int, ...]:
    if isinstance(k, Integral):
        k = (int(k),)
    k = tuple(int(v) for v in k)
    if dim is not None and len(k) != dim:
        raise ConfigError(f"frequency {k} has dimension {len(k)}, expected {dim}")
    return k


def phases_to_values(phase: np.ndarray) -> np.ndarray:
    """e(t) for fixed-point phases t (uint64 fractions of a turn)."""
    # the signed view keeps |t| <= 1/2 and loses at most 2^-53 of a turn
    t = phase.view(np.int64).astype(np.float64) * (TWO_PI / SCALE)
    return np.cos(t) + 1j * np.sin(t)


@dataclass(frozen=True)
class TrigPoly:
    """A finite sum of characters, ``x -> sum_k c(k) e(k . x)``.

    Keys are integer frequency tuples; plain ints are accepted for
    one-dimensional tori.
    """

    coeffs: Mapping[tuple[int, ...], complex]

    def __post_init__(self):
        items = {}
        dims = set()
        for k, c in dict(self.coeffs).items():
            k = _freq(k)
            dims.add(len(k))
            items[k] = items.get(k, 0) + complex(c)
        if not items:
            raise ConfigError("a trigonometric polynomial needs at least one term (use constant(0))")
        if len(dims) != 1:
            raise ConfigError(f"mixed frequency dimensions {sorted(dims)}")
        object.__setattr__(self, "coeffs", dict(sorted(items.items())))

    @classmethod
    def constant(cls, c: complex = 1.0, dim: int = 1) -> "TrigPoly":
        return cls({(0,) * dim: c})

    @classmethod
    def character(cls, k, c: complex = 1.0) -> "TrigPoly":
        return cls({_freq(k): c})

    @property
    def dim(self) -> int:
        return len(next(iter(self.coeffs)))

    @property
    def support(self) -> list[tuple[int, ...]]:
        return [k for k, c in self.coeffs.items() if c != 0]

    def coeff(self, k) -> complex:
        return self.coeffs.get(_freq(k, self.dim), 0j)

    @property
    def mean(self) -> complex:
        return self.coeff((0,) * self.dim)

    @property
    def sup_norm_bound(self) -> float:
        return float(sum(abs(c) for c in self.coeffs.values()))

    def is_constant(self) -> bool:
        return all(c == 0 for k, c in self.coeffs.items() if any(k))

    def conj(self) -> "TrigPoly":
        """Complex conjugate function: coefficient at k becomes conj(c(-k))."""
        return TrigPoly({tuple(-v for v in k): np.conj(c) for k, c in self.coeffs.items()})

    def scale(self, lam: complex) -> "TrigPoly":
        return TrigPoly({k: lam * c for k, c in self.coeffs.items()})

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, 0) + c
        return TrigPoly(out)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            out: dict = {}
            for k1, c1 in self.coeffs.items():
                for k2, c2 in other.coeffs.items():
                    k = tuple(a + b for a, b in zip(k1, k2, strict=True))
                    out[k] = out.get(k, 0) + c1 * c2
            return TrigPoly(out)
        return self.scale(complex(other))

    __rmul__ = __mul__

    def phases_raw(self, raw: np.ndarray) -> np.ndarray:
        """Fixed-point phases k . x for every frequency (rows) and point (columns)."""
        raw = np.asarray(raw, dtype=np.uint64)
        if raw.ndim == 1:
            raw = raw[:, None]
        if raw.shape[1] != self.dim:
            raise ConfigError(f"points of dimension {raw.shape[1]} for a {self.dim}-dimensional observable")
        ks = np.array(list(self.coeffs), dtype=np.int64).view(np.uint64)
        # uint64 products wrap, which is exactly reduction mod 1
        return (ks[:, None, :] * raw[None, :, :]).sum(axis=2, dtype=np.uint64)

    def evaluate_raw(self, raw: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an (M, dim) array of fixed-point coordinates."""
        phases = self.phases_raw(raw)
        cs = np.array(list(self.coeffs.values()), dtype=np.complex128)
        out = np.zeros(phases.shape[1], dtype=np.complex128)
        for c, ph in zip(cs, phases):
            if c == 0:
                continue
            if not ph.any():
                out += c
            else:
                out += c * phases_to_values(ph)
        return out

    def __call__(self, x) -> complex:
        return evaluate(self, x)


@dataclass(frozen=True)
class CylinderFunc:
    """A function of the ``length`` letters starting ``start`` places after the point.

    ``table`` maps words to values; unlisted words evaluate to 0.
    """

    table: Mapping[str, complex]
    start: int = 0

    def __post_init__(self):
        table = {str(w): complex(v) for w, v in dict(self.table).items()}
        lengths = {len(w) for w in table}
        if len(lengths) != 1 or 0 in lengths:
            raise ConfigError("cylinder table words must be non-empty and of equal length")
        object.__setattr__(self, "table", table)

    @classmethod
    def indicator(cls, word: str, start: int = 0) -> "CylinderFunc":
        return cls({word: 1.0}, start)

    @property
    def length(self) -> int:
        return len(next(iter(self.table)))

    @property
    def sup_norm_bound(self) -> float:
        return max(abs(v) for v in self.table.values())

    def is_constant(self) -> bool:
        return False

    def evaluate_offsets(self, substitution, offsets: np.ndarray) -> np.ndarray:
        offsets = np.asarray(offsets, dtype=np.int64)
        if offsets.size == 0:
            return np.zeros(0, dtype=np.complex128)
        if self.start < 0 and offsets.min() + self.start < 0:
            raise ConfigError("cylinder window reaches before the start of a one-sided sequence")
        stop = int(offsets.max()) + self.start + self.length
        letters = substitution.letters(stop).astype(np.int64)
        size = substitution.size
        if size**self.length > 1 << 24:
            raise ConfigError("cylinder window too long for a lookup table")
        lookup = np.zeros(size**self.length, dtype=np.complex128)
        for w, v in self.table.items():
            lookup[substitution.encode(w)] += v
        code = np.zeros(offsets.shape, dtype=np.int64)
        for i in range(self.length):
            code = code * size + letters[offsets + self.start + i]
        return lookup[code]

    def __call__(self, x) -> complex:
        return evaluate(self, x)


Observable = TrigPoly | CylinderFunc


def evaluate(obs: Observable, x) -> complex:
    """Value of an observable at a single point."""
    if isinstance(obs, TrigPoly):
        if isinstance(x, CirclePoint):
            raw = np.array([[x.frac]], dtype=np.uint64)
        elif isinstance(x, TorusPoint):
            raw = np.array([x.raw], dtype=np.uint64)
        else:
            raise ConfigError("trigonometric polynomials are evaluated at torus points")
        return complex(obs.evaluate_raw(raw)[0])
    if isinstance(obs, CylinderFunc):
        if not isinstance(x, SymbolicPoint):
            raise ConfigError("cylinder functions are evaluated at subshift points")
        return complex(obs.evaluate_offsets(x.substitution, np.array([x.offset]))[0])
    raise ConfigError(f"not an observable: {obs!r}")
