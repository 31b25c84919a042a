"""Exact phase-space points.

Circle coordinates are unsigned 64-bit fixed-point fractions of a full turn,
so addition and integer multiplication are exact modulo one.  Quantization
happens once, when a point is built from a real number.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from numbers import Integral, Real
from typing import TYPE_CHECKING

from ..errors import ConfigError

if TYPE_CHECKING:
    from .substitution import Substitution

BITS = 64
SCALE = 1 << BITS
MASK = SCALE - 1

# floor(2^64 * frac(theta)) for a few quadratic irrationals
NAMED_TURNS = {
    "golden": (isqrt(5 << 128) - SCALE) // 2,
    "sqrt2": isqrt(2 << 128) - SCALE,
    "sqrt3": isqrt(3 << 128) - SCALE,
}


def quantize(value) -> int:
    """Map a real number of turns to its 64-bit fixed-point fraction.

    Accepts ints, floats, ``Fraction`` and the names in ``NAMED_TURNS``.
    Rationals with a power-of-two denominator up to 2^64 are exact.
    """
    if isinstance(value, CirclePoint):
        return value.frac
    if isinstance(value, str):
        key = value.strip().lower()
        if key in NAMED_TURNS:
            return NAMED_TURNS[key]
        try:
            value = Fraction(key)
        except ValueError:
            raise ConfigError(f"cannot parse {value!r} as a circle coordinate") from None
    if isinstance(value, Integral):
        return 0
    if isinstance(value, (Fraction, Real)):
        frac = Fraction(value)
        return round(frac * SCALE) % SCALE
    raise ConfigError(f"cannot quantize {value!r}")


@dataclass(frozen=True, order=True)
class CirclePoint:
    """A point of R/Z stored as ``frac / 2^64``."""

    frac: int

    def __post_init__(self):
        if not 0 <= self.frac < SCALE:
            object.__setattr__(self, "frac", self.frac % SCALE)

    @classmethod
    def from_turns(cls, value) -> "CirclePoint":
        return cls(quantize(value))

    @property
    def turns(self) -> float:
        return self.frac / SCALE

    def __add__(self, other: "CirclePoint") -> "CirclePoint":
        return CirclePoint((self.frac + other.frac) & MASK)

    def __sub__(self, other: "CirclePoint") -> "CirclePoint":
        return CirclePoint((self.frac - other.frac) & MASK)

    def __neg__(self) -> "CirclePoint":
        return CirclePoint(-self.frac & MASK)

    def __mul__(self, n: int) -> "CirclePoint":
        if not isinstance(n, Integral):
            return NotImplemented
        return CirclePoint((self.frac * int(n)) & MASK)

    __rmul__ = __mul__

    def is_dyadic_like(self, min_zero_bits: int = 32) -> bool:
        """True when the denominator of the fraction is at most 2^(64 - min_zero_bits).

        Quantized irrationals essentially never end in 32 zero bits, so this
        separates deliberately rational inputs from quantized irrational ones.
        """
        if self.frac == 0:
            return True
        low = self.frac & -self.frac
        return low.bit_length() - 1 >= min_zero_bits

    def __repr__(self) -> str:
        return f"CirclePoint({self.turns!r})"


@dataclass(frozen=True, order=True)
class TorusPoint:
    """A point of the r-torus, one ``CirclePoint`` per coordinate."""

    coords: tuple[CirclePoint, ...]

    def __post_init__(self):
        coords = tuple(c if isinstance(c, CirclePoint) else CirclePoint.from_turns(c) for c in self.coords)
        if not coords:
            raise ConfigError("a torus point needs at least one coordinate")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_turns(cls, *values) -> "TorusPoint":
        return cls(tuple(CirclePoint.from_turns(v) for v in values))

    @classmethod
    def from_raw(cls, raw) -> "TorusPoint":
        return cls(tuple(CirclePoint(int(r)) for r in raw))

    @property
    def raw(self) -> tuple[int, ...]:
        return tuple(c.frac for c in self.coords)

    @property
    def turns(self) -> tuple[float, ...]:
        return tuple(c.turns for c in self.coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> CirclePoint:
        return self.coords[i]

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        return TorusPoint(tuple(a + b for a, b in zip(self.coords, other.coords, strict=True)))

    def __repr__(self) -> str:
        return f"TorusPoint{self.turns!r}"


@dataclass(frozen=True)
class SymbolicPoint:
    """A point of a substitution subshift: the one-sided fixed point shifted by ``offset``."""

    substitution: "Substitution"
    offset: int = 0

    def __post_init__(self):
        if self.offset < 0:
            raise ConfigError("subshift points are one-sided; offset must be >= 0")

    @property
    def rule(self) -> str:
        return self.substitution.name

    @property
    def horizon(self) -> int:
        return self.substitution.horizon

    def __hash__(self) -> int:
        return hash((self.substitution.name, self.offset))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolicPoint):
            return NotImplemented
        return self.substitution is other.substitution and self.offset == other.offset

    def __repr__(self) -> str:
        return f"SymbolicPoint({self.rule!r}, offset={self.offset})"
