"""Explicit dynamical systems, points and observables."""
from .dynamics import (
    NOT_ERGODIC,
    NOT_UNIQUELY_ERGODIC,
    STRICTLY_ERGODIC,
    UNVERIFIED,
    ApproximateIntegralWarning,
    Product,
    Rotation,
    SkewProduct,
    SubstitutionSubshift,
    System,
    SystemDescriptor,
    ToralAutomorphism,
    TorusSystem,
    integrate_invariant,
    iterate,
    kronecker_coordinate,
    kronecker_rotation,
    orbit_values,
)
from .observables import CylinderFunc, Observable, TrigPoly, evaluate
from .points import NAMED_TURNS, SCALE, CirclePoint, SymbolicPoint, TorusPoint, quantize
from .substitution import RULES, Substitution

__all__ = [
    "NAMED_TURNS", "NOT_ERGODIC", "NOT_UNIQUELY_ERGODIC", "RULES", "SCALE", "STRICTLY_ERGODIC",
    "UNVERIFIED", "ApproximateIntegralWarning", "CirclePoint", "CylinderFunc", "Observable",
    "Product", "Rotation", "SkewProduct", "Substitution", "SubstitutionSubshift", "SymbolicPoint",
    "System", "SystemDescriptor", "ToralAutomorphism", "TorusPoint", "TorusSystem", "TrigPoly",
    "evaluate", "integrate_invariant", "iterate", "kronecker_coordinate", "kronecker_rotation",
    "orbit_values", "quantize",
]
