"""Cube combinatorics: indices, cube points, face and parallelepiped group words.

A cube index epsilon in {0,1}^d is stored as an integer whose bit i-1 is
epsilon_i, so for d = 2 the entries are listed as x_00, x_10, x_01, x_11.
Every element of the parallelepiped group is T^(n0 + n . epsilon) on entry
epsilon; the group is abelian, so words are just exponent vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Any, Sequence

import numpy as np

from .errors import CapExceeded, ConfigError
from .systems import SubstitutionSubshift, System

DEFAULT_SAMPLE_CAP = 1 << 16
DEFAULT_LANGUAGE_CAP = 1 << 24


@dataclass(frozen=True, order=True)
class CubeIndex:
    d: int
    bits: int

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("cube dimension d must be >= 1")
        if not 0 <= self.bits < 1 << self.d:
            raise ConfigError(f"bits {self.bits} out of range for d={self.d}")

    @classmethod
    def from_eps(cls, eps: Sequence[int]) -> "CubeIndex":
        bits = 0
        for i, e in enumerate(eps):
            if e not in (0, 1):
                raise ConfigError(f"epsilon entries must be 0/1, got {eps}")
            bits |= int(e) << i
        return cls(len(eps), bits)

    @classmethod
    def parse(cls, key: Any, d: int) -> "CubeIndex":
        """Accept an int (bits), a 0/1 tuple, a string like '10' (epsilon_1 first) or a CubeIndex."""
        if isinstance(key, CubeIndex):
            idx = key
        elif isinstance(key, str):
            idx = cls.from_eps([int(c) for c in key])
        elif isinstance(key, (tuple, list)):
            idx = cls.from_eps(key)
        else:
            idx = cls(d, int(key))
        if idx.d != d:
            raise ConfigError(f"cube index {key!r} has dimension {idx.d}, expected {d}")
        return idx

    @property
    def eps(self) -> tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(self.d))

    @property
    def weight(self) -> int:
        return bin(self.bits).count("1")

    def dot(self, n: Sequence[int]) -> int:
        return sum(int(ni) for i, ni in enumerate(n) if (self.bits >> i) & 1)

    def __str__(self) -> str:
        return "".join(map(str, self.eps))


def all_indices(d: int) -> list[CubeIndex]:
    return [CubeIndex(d, b) for b in range(1 << d)]


def dot_matrix(d: int) -> np.ndarray:
    """Row b is epsilon for bits b, so ``dot_matrix(d) @ n`` lists n . epsilon in cube order."""
    return np.array([[(b >> i) & 1 for i in range(d)] for b in range(1 << d)], dtype=np.int64)


@dataclass(frozen=True)
class CubePoint:
    d: int
    entries: tuple

    def __post_init__(self):
        entries = tuple(self.entries)
        if len(entries) != 1 << self.d:
            raise ConfigError(f"a {self.d}-cube point needs {1 << self.d} entries, got {len(entries)}")
        object.__setattr__(self, "entries", entries)

    def __getitem__(self, key):
        return self.entries[CubeIndex.parse(key, self.d).bits]

    def __iter__(self):
        return iter(self.entries)

    def split(self) -> tuple["CubePoint", "CubePoint"]:
        """(x', x'') with x'_eta = x_(eta 0) and x''_eta = x_(eta 1)."""
        if self.d == 1:
            raise ConfigError("a 1-cube splits into single points, not cubes")
        half = 1 << (self.d - 1)
        return CubePoint(self.d - 1, self.entries[:half]), CubePoint(self.d - 1, self.entries[half:])

    @staticmethod
    def join(lower: "CubePoint", upper: "CubePoint") -> "CubePoint":
        if lower.d != upper.d:
            raise ConfigError("can only join cubes of equal dimension")
        return CubePoint(lower.d + 1, lower.entries + upper.entries)


@dataclass(frozen=True)
class FaceWord:
    """Element of the face group: S_eps = T^(n . eps)."""

    n: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))

    def __add__(self, other: "FaceWord") -> "FaceWord":
        return FaceWord(tuple(a + b for a, b in zip(self.n, other.n, strict=True)))

    def as_parallelepiped(self) -> "ParallelepipedWord":
        return ParallelepipedWord(0, self.n)


@dataclass(frozen=True)
class ParallelepipedWord:
    """Element of the parallelepiped group: S_eps = T^(n0 + n . eps)."""

    n0: int
    n: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "n0", int(self.n0))
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))

    @property
    def d(self) -> int:
        return len(self.n)

    def exponent(self, idx: CubeIndex) -> int:
        return self.n0 + idx.dot(self.n)

    def __add__(self, other: "ParallelepipedWord") -> "ParallelepipedWord":
        return ParallelepipedWord(self.n0 + other.n0, tuple(a + b for a, b in zip(self.n, other.n, strict=True)))

    def __neg__(self) -> "ParallelepipedWord":
        return ParallelepipedWord(-self.n0, tuple(-v for v in self.n))

    def is_face(self) -> bool:
        return self.n0 == 0


@dataclass(frozen=True)
class APWord:
    """tau_d^n sigma'_d^m, sending (x, ..., x) to (T^(n + (j-1) m) x)_{j=1..d}."""

    n: int
    m: int
    d: int

    def exponents(self) -> list[int]:
        return [self.n + j * self.m for j in range(self.d)]


def diagonal(x, d: int) -> CubePoint:
    if d < 1:
        raise ConfigError("cube dimension d must be >= 1")
    return CubePoint(d, (x,) * (1 << d))


def apply_face(j: int, sys: System, c: CubePoint) -> CubePoint:
    """The face transformation T_j^[d]: apply T on the entries with eps_j = 1."""
    if not 1 <= j <= c.d:
        raise ConfigError(f"face direction j={j} out of range 1..{c.d}")
    mask = 1 << (j - 1)
    return CubePoint(c.d, tuple(sys.iterate(e, 1) if b & mask else e for b, e in enumerate(c.entries)))


def apply_diagonal(sys: System, c: CubePoint, n: int = 1) -> CubePoint:
    return CubePoint(c.d, tuple(sys.iterate(e, n) for e in c.entries))


def apply_parallelepiped_word(w: ParallelepipedWord | FaceWord, sys: System, c: CubePoint) -> CubePoint:
    if isinstance(w, FaceWord):
        w = w.as_parallelepiped()
    if w.d != c.d:
        raise ConfigError(f"word of dimension {w.d} applied to a {c.d}-cube")
    return CubePoint(c.d, tuple(sys.iterate(e, w.exponent(idx)) for idx, e in zip(all_indices(c.d), c.entries)))


def ap_tuple(sys: System, x, w: APWord) -> tuple:
    return tuple(sys.iterate(x, k) for k in w.exponents())


def _box(d: int, N: int, mode: str, count: int | None, seed: int | None, cap: int) -> list[tuple[int, ...]]:
    total = N**d
    if mode == "exhaustive":
        if total > cap:
            raise CapExceeded(f"{N}^{d} = {total} parallelepipeds exceeds cap {cap}")
        return list(product(range(N), repeat=d))
    if mode == "random":
        if count is None or count < 1:
            raise ConfigError("random sampling needs a positive count")
        if count > cap:
            raise CapExceeded(f"{count} samples exceeds cap {cap}")
        rng = np.random.default_rng(seed)
        if total <= 1 << 62 and count <= total:
            flat = rng.choice(total, size=count, replace=False) if total <= 1 << 24 else rng.integers(0, total, count)
            return [tuple(int(v) for v in np.unravel_index(int(f), (N,) * d)) for f in flat]
        return [tuple(int(v) for v in rng.integers(0, N, d)) for _ in range(count)]
    raise ConfigError(f"unknown sampling mode {mode!r}")


def sample_parallelepipeds(
    sys: System,
    x,
    d: int,
    N: int,
    mode: str = "exhaustive",
    count: int | None = None,
    seed: int | None = None,
    cap: int = DEFAULT_SAMPLE_CAP,
) -> set[CubePoint]:
    """Points (T^(n . eps) x)_eps for n in the box [0, N)^d, or a random subset of them."""
    if d < 1 or N < 1:
        raise ConfigError("need d >= 1 and N >= 1")
    cache: dict[int, Any] = {}

    def orbit(k: int):
        if k not in cache:
            cache[k] = sys.iterate(x, k)
        return cache[k]

    idx = all_indices(d)
    return {CubePoint(d, tuple(orbit(i.dot(n)) for i in idx)) for n in _box(d, N, mode, count, seed, cap)}


def cube_pattern_language(
    sys: SubstitutionSubshift, d: int, L: int, N: int, cap: int = DEFAULT_LANGUAGE_CAP
) -> set[tuple[str, ...]]:
    """All 2^d-tuples of length-L words read at positions offset + n . eps.

    Offsets range over [0, N) and n over [0, N)^d; tuples are listed in cube order.
    """
    if not isinstance(sys, SubstitutionSubshift):
        raise ConfigError("pattern languages are defined for substitution subshifts")
    if d < 1 or L < 1 or N < 1:
        raise ConfigError("need d >= 1, L >= 1 and N >= 1")
    if L << d > cap or N ** (d + 1) * (1 << d) > cap:
        raise CapExceeded(f"pattern language with d={d}, L={L}, N={N} exceeds cap {cap}")
    sub = sys.substitution
    letters = sub.letters((d + 1) * (N - 1) + L).astype(np.int64)
    grid = np.stack(np.meshgrid(*([np.arange(N)] * (d + 1)), indexing="ij"), axis=-1).reshape(-1, d + 1)
    pos = grid[:, :1] + grid[:, 1:] @ dot_matrix(d).T
    codes = np.zeros(pos.shape, dtype=np.int64)
    for i in range(L):
        codes = codes * sub.size + letters[pos + i]
    out = set()
    for row in np.unique(codes, axis=0):
        out.add(tuple(_decode(int(c), L, sub) for c in row))
    return out


def _decode(code: int, L: int, sub) -> str:
    chars = []
    for _ in range(L):
        code, r = divmod(code, sub.size)
        chars.append(sub.alphabet[r])
    return "".join(reversed(chars))
