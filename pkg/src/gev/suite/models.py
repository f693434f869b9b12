"""Lagrangian densities, transformation rules and constraint sets."""
from __future__ import annotations

from enum import Enum
from functools import lru_cache

from ..symbolic.canon import canonicalize
from ..symbolic.parser import builtin_context, parse
from ..symbolic.reduce import Constraint, ConstraintSet
from ..variational import TransformationRule


class ModelId(str, Enum):
    ABELIAN_CLASSICAL = "ABELIAN_CLASSICAL"
    ABELIAN_QUANTUM = "ABELIAN_QUANTUM"
    YM_CLASSICAL = "YM_CLASSICAL"
    YM_QUANTUM = "YM_QUANTUM"


_DENSITIES = {
    ModelId.ABELIAN_CLASSICAL: "-1/4*F[mu,nu]*F[^mu,^nu] + e*A[mu]*j[^mu]",
    ModelId.ABELIAN_QUANTUM: "-1/4*F[mu,nu]*F[^mu,^nu] + B*d[^mu]A[mu] + 1/2*a*B*B + e*A[mu]*j[^mu]",
    ModelId.YM_CLASSICAL: "-1/4*F[mu,nu;a]*F[^mu,^nu;a] + g*A[mu;a]*j[^mu;a]",
    ModelId.YM_QUANTUM: ("-1/4*F[mu,nu;a]*F[^mu,^nu;a] - d[^mu]B[a]*A[mu;a] + 1/2*alpha*B[a]*B[a]"
                         " - i*d[^mu]cbar[a]*D[mu;a,b]c[b] + g*j[nu;a]*A[^nu;a]"),
}

FP_TERM = "-i*d[^mu]cbar[a]*D[mu;a,b]c[b]"


def P(text: str, ctx=None):
    """Parse and fully expand."""
    return parse(text, ctx, expand=True)


@lru_cache(maxsize=None)
def build_model(model) -> "Expression":
    return canonicalize(P(_DENSITIES[ModelId(model)]))


def density_source(model) -> str:
    return _DENSITIES[ModelId(model)]


# ---------------------------------------------------------------------------
# transformations

_BRS_CORE = {
    "A[mu;a]": "D[mu;a,b]c[b]",
    "B[a]": "0",
    "c[a]": "-1/2*g*f[a,b,d]*c[b]*c[d]",
    "cbar[a]": "i*B[a]",
}

_GLOBAL = {
    "A[mu;a]": "f[a,b,d]*theta[b]*A[mu;d]",
    "B[a]": "f[a,b,d]*theta[b]*B[d]",
    "c[a]": "f[a,b,d]*theta[b]*c[d]",
    "cbar[a]": "f[a,b,d]*theta[b]*cbar[d]",
    "j[mu;a]": "f[a,b,d]*theta[b]*j[mu;d]",
}

# how the external source responds; the densities do not fix it
SOURCE_RULES = {
    "brs": "j[mu;a] -> 0 (source inert under BRS)",
    "brs-rotating-source": "j[mu;a] -> g*f[a,b,d]*j[mu;b]*c[d] (adjoint rotation)",
    "global-gauge": "j[mu;a] -> f[a,b,d]*theta[b]*j[mu;d] (adjoint rotation)",
}

TRANSFORMATIONS = ("gauge-abelian", "gauge-nonabelian", "brs", "brs-rotating-source",
                   "global-gauge", "ghost-scale", "ghost-charge")


@lru_cache(maxsize=None)
def build_transformation(name: str) -> TransformationRule:
    ctx = builtin_context()
    if name == "gauge-abelian":
        return TransformationRule.from_strings(name, "even", {"A[mu]": "d[mu]omega", "j[mu]": "0"},
                                               ctx, ignore=("omega",))
    if name == "gauge-nonabelian":
        return TransformationRule.from_strings(name, "even", {"A[mu;a]": "D[mu;a,b]omega[b]",
                                                              "j[mu;a]": "0"},
                                               ctx, ignore=("omega",))
    if name == "brs":
        rules = dict(_BRS_CORE, **{"j[mu;a]": "0"})
        return TransformationRule.from_strings(name, "odd", _expanded(rules), ctx)
    if name == "brs-rotating-source":
        rules = dict(_BRS_CORE, **{"j[mu;a]": "g*f[a,b,d]*j[mu;b]*c[d]"})
        return TransformationRule.from_strings(name, "odd", _expanded(rules), ctx)
    if name == "global-gauge":
        return TransformationRule.from_strings(name, "even", _GLOBAL, ctx,
                                               parameter="theta", ignore=("theta",))
    if name == "ghost-scale":
        return TransformationRule.from_strings(name, "even", {"c[a]": "c[a]", "cbar[a]": "-cbar[a]"}, ctx)
    if name == "ghost-charge":
        # same images as ghost-scale, but the variation changes sign each time it
        # passes an odd factor
        return TransformationRule.from_strings(name, "odd", {"c[a]": "c[a]", "cbar[a]": "-cbar[a]"}, ctx)
    raise KeyError(f"unknown transformation {name!r}")


def _expanded(rules):
    return {k: P(v) for k, v in rules.items()}


# ---------------------------------------------------------------------------
# constraints

@lru_cache(maxsize=None)
def abelian_constraints() -> ConstraintSet:
    return ConstraintSet((Constraint("d.j", P("d[mu]j[^mu]")),), closure_order=1)


@lru_cache(maxsize=None)
def nonabelian_constraints() -> ConstraintSet:
    return ConstraintSet((Constraint("D.j", P("D[mu;a,b]j[^mu;b]")),), closure_order=1)
