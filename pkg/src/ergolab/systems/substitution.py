"""Substitution rules and their one-sided fixed points, expanded on demand."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, HorizonExhausted, NotApplicable

DEFAULT_HORIZON_CAP = 1 << 24

RULES = {
    "thue-morse": {"0": "01", "1": "10"},
    "fibonacci": {"0": "01", "1": "0"},
    "period-doubling": {"0": "01", "1": "00"},
}


@dataclass(eq=False)
class Substitution:
    """A substitution on single-character letters with a fixed point starting at ``seed``.

    The expanded prefix only ever grows, and letters already expanded never
    change, so concurrent readers see a consistent sequence.
    """

    name: str
    rules: dict[str, str]
    seed: str | None = None
    horizon_cap: int = DEFAULT_HORIZON_CAP
    _prefix: np.ndarray = field(init=False, repr=False)
    _lock: threading.Lock = field(init=False, repr=False, default_factory=threading.Lock)

    def __post_init__(self):
        self.alphabet = sorted(self.rules)
        if any(len(a) != 1 for a in self.alphabet):
            raise ConfigError("letters must be single characters")
        for img in self.rules.values():
            if not img or any(c not in self.rules for c in img):
                raise ConfigError(f"image {img!r} uses letters outside the alphabet")
        if self.seed is None:
            self.seed = self.alphabet[0]
        img = self.rules[self.seed]
        if img[0] != self.seed or len(img) < 2:
            raise ConfigError(f"rule {self.name!r} has no one-sided fixed point starting at {self.seed!r}")
        self._code = {a: i for i, a in enumerate(self.alphabet)}
        lens = np.array([len(self.rules[a]) for a in self.alphabet])
        self._lens = lens
        self._images = np.zeros((len(self.alphabet), lens.max()), dtype=np.uint8)
        for a, i in self._code.items():
            self._images[i, : lens[i]] = [self._code[c] for c in self.rules[a]]
        self._prefix = np.array([self._code[self.seed]], dtype=np.uint8)

    @classmethod
    def named(cls, name: str, horizon_cap: int = DEFAULT_HORIZON_CAP) -> "Substitution":
        try:
            rules = RULES[name]
        except KeyError:
            raise ConfigError(f"unknown substitution {name!r}; known: {sorted(RULES)}") from None
        return cls(name, dict(rules), horizon_cap=horizon_cap)

    @property
    def horizon(self) -> int:
        return len(self._prefix)

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def _apply(self, word: np.ndarray) -> np.ndarray:
        lens = self._lens[word]
        starts = np.cumsum(lens) - lens
        out = np.empty(int(lens.sum()), dtype=np.uint8)
        for i in range(self._images.shape[1]):
            sel = lens > i
            out[starts[sel] + i] = self._images[word[sel], i]
        return out

    def expand(self, length: int) -> None:
        """Make sure at least ``length`` letters of the fixed point are available."""
        if length <= len(self._prefix):
            return
        if length > self.horizon_cap:
            raise HorizonExhausted(
                f"{self.name}: {length} letters requested, horizon cap is {self.horizon_cap}"
            )
        with self._lock:
            prefix = self._prefix
            while len(prefix) < length:
                prefix = self._apply(prefix)
            self._prefix = prefix[: max(length, min(len(prefix), self.horizon_cap))]

    def letters(self, stop: int) -> np.ndarray:
        """Letter codes of the fixed point at indices ``[0, stop)`` (read-only view)."""
        self.expand(stop)
        view = self._prefix[:stop]
        view.flags.writeable = False
        return view

    def word(self, start: int, length: int) -> str:
        codes = self.letters(start + length)[start:]
        return "".join(self.alphabet[c] for c in codes)

    def encode(self, word: str) -> int:
        """Integer code of a word, base ``size`` with the first letter most significant."""
        code = 0
        for c in word:
            if c not in self._code:
                raise ConfigError(f"letter {c!r} not in alphabet {self.alphabet}")
            code = code * self.size + self._code[c]
        return code

    def incidence_matrix(self) -> np.ndarray:
        """M[i, j] = number of occurrences of letter i in the image of letter j."""
        m = np.zeros((self.size, self.size), dtype=np.int64)
        for a, j in self._code.items():
            for c in self.rules[a]:
                m[self._code[c], j] += 1
        return m

    def letter_frequencies(self) -> dict[str, float]:
        """Letter frequencies from the normalized Perron eigenvector."""
        m = self.incidence_matrix()
        power = np.linalg.matrix_power(m, self.size * self.size)
        if not (power > 0).all():
            raise NotApplicable(f"{self.name} is not primitive; letter frequencies are not unique")
        vals, vecs = np.linalg.eig(m.astype(float))
        v = np.real(vecs[:, np.argmax(np.real(vals))])
        v = v / v.sum()
        return {a: float(v[i]) for a, i in self._code.items()}
