"""Closed-form limits of the averages where the limit measures are explicit.

Weakly mixing systems: every limit measure is a product, so only means
enter.  Irrational rotations: expanding each observable in characters, an
average of products of characters tends to 1 if the phase multiplying each
summation variable vanishes and to 0 otherwise; the limit is the sum over
frequency tuples that satisfy one integer linear constraint per variable.
"""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .averaging import ap_average, birkhoff_average, convergence_trace, cube_face_average, cube_full_average
from .cubes import CubeIndex, dot_matrix
from .errors import CapExceeded, ConfigError, NotApplicable
from .systems import CirclePoint, Rotation, System, TorusPoint, TrigPoly, evaluate, integrate_invariant

DEFAULT_TUPLE_CAP = 1 << 22

FORMULAS = {
    "wm-product": frozenset({"weakly-mixing"}),
    "rotation-ap": frozenset({"rotation", "irrational"}),
    "rotation-cube-face": frozenset({"rotation", "irrational"}),
    "rotation-cube-full": frozenset({"rotation", "irrational"}),
    "rotation-birkhoff": frozenset({"rotation", "irrational"}),
    "kronecker-slice": frozenset(),
    "empirical-longrun": frozenset({"empirical"}),
}


@dataclass(frozen=True)
class FrequencyConstraint:
    """Integer linear forms in a tuple (k_1, ..., k_S) of frequency vectors.

    Form w admits the tuple when sum_s w[s] k_s = 0 (as a vector).
    """

    forms: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(tuple(int(v) for v in w) for w in self.forms))
        if len({len(w) for w in self.forms}) > 1:
            raise ConfigError("all forms must have the same number of slots")

    def admits(self, ks: Sequence[tuple[int, ...]]) -> bool:
        for w in self.forms:
            total = [0] * len(ks[0])
            for ws, k in zip(w, ks):
                for i, v in enumerate(k):
                    total[i] += ws * v
            if any(total):
                return False
        return True

    def solve(self, supports: Sequence[Sequence[tuple[int, ...]]], cap: int = DEFAULT_TUPLE_CAP):
        """All tuples in the product of ``supports`` satisfying every form (exhaustive)."""
        if self.forms and len(self.forms[0]) != len(supports):
            raise ConfigError(f"{len(supports)} slots for forms over {len(self.forms[0])}")
        supports = [[(int(k),) if np.ndim(k) == 0 else tuple(int(v) for v in k) for k in s] for s in supports]
        size = int(np.prod([len(s) for s in supports], dtype=object))
        if size > cap:
            raise CapExceeded(f"{size} candidate frequency tuples exceeds cap {cap}")
        if size == 0:
            return []
        W = np.array(self.forms, dtype=np.int64).reshape(len(self.forms), len(supports))
        grids = np.meshgrid(*[np.arange(len(s)) for s in supports], indexing="ij")
        choice = np.stack([g.ravel() for g in grids], axis=1)
        K = np.stack([np.array(s, dtype=np.int64)[choice[:, i]] for i, s in enumerate(supports)], axis=1)
        ok = np.ones(len(choice), dtype=bool)
        for w in W:
            ok &= ~np.einsum("s,tsd->td", w, K).any(axis=1)
        return [tuple(tuple(int(v) for v in K[t, s]) for s in range(len(supports))) for t in np.nonzero(ok)[0]]


@dataclass(frozen=True)
class LimitValue:
    value: complex | TrigPoly
    formula: str
    assumptions: frozenset = frozenset()
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assumptions", frozenset(self.assumptions))
        if self.formula not in FORMULAS:
            raise ConfigError(f"unknown formula {self.formula!r}")
        missing = FORMULAS[self.formula] - self.assumptions
        if missing:
            raise NotApplicable(f"formula {self.formula} needs assumptions {sorted(missing)}")

    @property
    def depends_on_x(self) -> bool:
        return isinstance(self.value, TrigPoly) and not self.value.is_constant()

    def at(self, x=None) -> complex:
        if isinstance(self.value, TrigPoly):
            if self.value.is_constant():
                return complex(self.value.mean)
            if x is None:
                raise ConfigError("this limit depends on the base point")
            return evaluate(self.value, x)
        return complex(self.value)


def _rotation_assumptions(sys: System) -> frozenset:
    if not isinstance(sys, Rotation):
        raise NotApplicable("closed-form rotation limits need a Rotation system")
    if not sys.irrational:
        raise NotApplicable("rotation limit formulas refuse rational (dyadic) rotation numbers")
    return frozenset({"rotation", "irrational"})


def _as_trig(f, dim: int) -> TrigPoly:
    if not isinstance(f, TrigPoly):
        raise ConfigError("rotation limits need trigonometric polynomials")
    if f.dim != dim:
        raise ConfigError(f"{f.dim}-dimensional observable on a {dim}-dimensional rotation")
    return f


def _constrained_sum(polys: Sequence[TrigPoly], forms, phase_weights=None):
    """Sum over admitted tuples of prod c_s(k_s), grouped by the phase sum_s phase_weights[s] k_s."""
    supports = [p.support or [(0,) * p.dim] for p in polys]
    tuples = FrequencyConstraint(forms).solve(supports)
    dim = polys[0].dim
    out: dict[tuple[int, ...], complex] = {}
    for ks in tuples:
        c = 1 + 0j
        for p, k in zip(polys, ks):
            c *= p.coeff(k)
        if phase_weights is None:
            key = (0,) * dim
        else:
            key = tuple(sum(w * k[i] for w, k in zip(phase_weights, ks)) for i in range(dim))
        out[key] = out.get(key, 0) + c
    if not out:
        out[(0,) * dim] = 0j
    return TrigPoly(out), len(tuples)


def _slot_map(faces: Mapping, d: int, include_empty: bool, dim: int) -> list[TrigPoly]:
    polys = [TrigPoly.constant(1.0, dim) for _ in range(1 << d)]
    for key, f in faces.items():
        idx = CubeIndex.parse(key, d)
        if idx.bits == 0 and not include_empty:
            raise ConfigError("the empty face carries no observable in the face-group average")
        polys[idx.bits] = _as_trig(f, dim)
    return polys


def wm_product_limit(sys: System, fs, kind: str = "ap") -> LimitValue:
    """Product of the means over the supplied slots (valid for weakly mixing systems)."""
    if not sys.weakly_mixing:
        raise NotApplicable("the product formula needs a weakly mixing system")
    if kind not in ("ap", "cube-face", "cube-full", "birkhoff"):
        raise ConfigError(f"unknown average kind {kind!r}")
    obs = list(fs.values()) if isinstance(fs, Mapping) else list(fs)
    value = 1 + 0j
    for f in obs:
        value *= integrate_invariant(sys, f)
    return LimitValue(value, "wm-product", {"weakly-mixing"}, {"kind": kind})


def rotation_ap_limit(sys: System, fs: Sequence[TrigPoly]) -> LimitValue:
    """Limit of the arithmetic-progression average: tuples with sum k_j = 0 and sum (j-1) k_j = 0."""
    tags = _rotation_assumptions(sys)
    polys = [_as_trig(f, sys.dim) for f in fs]
    d = len(polys)
    forms = [tuple([1] * d), tuple(range(d))]
    poly, count = _constrained_sum(polys, forms)
    return LimitValue(complex(poly.mean), "rotation-ap", tags, {"admitted_tuples": count})


def rotation_cube_face_limit(sys: System, faces: Mapping, d: int) -> LimitValue:
    """x-dependent limit of the face-group average.

    For each direction i the frequencies on faces with eps_i = 1 must sum
    to zero; each admitted tuple contributes prod c_eps(k_eps) e((sum k_eps) . x).
    """
    tags = _rotation_assumptions(sys)
    polys = _slot_map(faces, d, False, sys.dim)[1:]
    eps = dot_matrix(d)[1:]
    forms = [tuple(int(v) for v in eps[:, i]) for i in range(d)]
    poly, count = _constrained_sum(polys, forms, phase_weights=[1] * len(polys))
    return LimitValue(poly, "rotation-cube-face", tags, {"admitted_tuples": count, "d": d})


def rotation_cube_full_limit(sys: System, faces: Mapping, d: int) -> LimitValue:
    """Limit of the average with the extra diagonal variable: also sum_eps k_eps = 0."""
    tags = _rotation_assumptions(sys)
    polys = _slot_map(faces, d, True, sys.dim)
    eps = dot_matrix(d)
    forms = [tuple([1] * (1 << d))] + [tuple(int(v) for v in eps[:, i]) for i in range(d)]
    poly, count = _constrained_sum(polys, forms)
    return LimitValue(complex(poly.mean), "rotation-cube-full", tags, {"admitted_tuples": count, "d": d})


def rotation_birkhoff_limit(sys: System, f: TrigPoly) -> LimitValue:
    tags = _rotation_assumptions(sys)
    return LimitValue(complex(_as_trig(f, sys.dim).mean), "rotation-birkhoff", tags)


def kronecker_slice_integral(f: TrigPoly, g: TrigPoly, s, map: str = "shift") -> complex:
    """Slice integrals over the Kronecker factor of a rotation.

    shift:  int f(z) g(z + s) dz   = sum_k c_f(-k) c_g(k) e(k s)
    double: int f(z) g(s + 2 z) dz = sum_k c_f(-2k) c_g(k) e(k s)
    """
    if map not in ("shift", "double"):
        raise ConfigError(f"unknown slice map {map!r}")
    if f.dim != g.dim:
        raise ConfigError("f and g live on tori of different dimension")
    if isinstance(s, CirclePoint):
        s = TorusPoint((s,))
    elif not isinstance(s, TorusPoint):
        s = TorusPoint.from_turns(*(s if isinstance(s, (tuple, list)) else (s,)))
    mult = 1 if map == "shift" else 2
    total = 0j
    for k, cg in g.coeffs.items():
        cf = f.coeff(tuple(-mult * v for v in k))
        if cf != 0 and cg != 0:
            total += cf * cg * evaluate(TrigPoly.character(k), s)
    return total


_AVERAGES = {
    "ap": lambda sys, fs, x, N, d, threads: ap_average(sys, fs, x, N, threads=threads),
    "cube-face": lambda sys, fs, x, N, d, threads: cube_face_average(sys, fs, x, N, d=d, threads=threads),
    "cube-full": lambda sys, fs, x, N, d, threads: cube_full_average(sys, fs, x, N, d=d, threads=threads),
    "birkhoff": lambda sys, fs, x, N, d, threads: birkhoff_average(sys, fs[0], x, N, threads=threads),
}


def oracle_limit_longrun(
    sys: System, kind: str, fs, x, N_big: int, d: int | None = None, schedule_len: int = 3, threads: int = 1
) -> LimitValue:
    """Empirical stand-in for a limit: the average at N_big plus the spread of a short schedule below it."""
    if kind not in _AVERAGES:
        raise ConfigError(f"unknown average kind {kind!r}")
    if N_big < 1:
        raise ConfigError("N_big must be >= 1")
    schedule = sorted({max(1, N_big >> i) for i in range(schedule_len)})
    fn = _AVERAGES[kind]
    report = convergence_trace(lambda N: fn(sys, fs, x, N, d, threads), schedule, kind=kind)
    return LimitValue(
        report.final,
        "empirical-longrun",
        {"empirical"},
        {"N": N_big, "schedule": schedule, "tail_spread": report.tail_spread},
    )


def predicted_limit(sys: System, kind: str, fs, d: int | None = None, x=None) -> LimitValue | None:
    """The closed-form limit for this system and average, or None if none is implemented."""
    try:
        if sys.weakly_mixing:
            return wm_product_limit(sys, fs, kind)
        if isinstance(sys, Rotation) and sys.irrational:
            if kind == "ap":
                return rotation_ap_limit(sys, fs)
            if kind == "cube-face":
                return rotation_cube_face_limit(sys, fs, d)
            if kind == "cube-full":
                return rotation_cube_full_limit(sys, fs, d)
            if kind == "birkhoff":
                return rotation_birkhoff_limit(sys, fs[0])
    except NotApplicable:
        return None
    return None

