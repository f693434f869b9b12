"""Euler-Lagrange operator, infinitesimal transformations and Noether currents.

Odd fields are differentiated from the LEFT: the varied factor is first
moved to the front of the product, picking up one sign per odd factor it
crosses.  With this convention, for any variation ``delta``

    delta L = sum_phi  delta(phi) * EL_phi(L)  +  d_lam ( sum_phi delta(phi) * P_phi^lam )

with ``P_phi^lam`` the left derivative with respect to ``d_lam phi``.  The
Noether current keeps the variation to the left of the momentum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .symbolic.canon import canonicalize
from .symbolic.core import (ADJOINT, LORENTZ, Expression, Factor, Index, check_monomial,
                            fresh_name, index_counts, kron, metric, multiply,
                            rename_dummies, total_derivative)
from .symbolic.parser import instantiate, parse, format_expression
from .symbolic.reduce import (NO_CONSTRAINTS, Certificate, ConstraintSet, _collect_multipliers,
                              constraint_candidates, is_zero, reduce_jacobi_many, solve_linear)

log = logging.getLogger(__name__)


class NotASymmetry(ValueError):
    """The variation of the density is not a total derivative."""


@dataclass(frozen=True)
class FieldSpec:
    """A field with lower Lorentz indices followed by adjoint indices."""
    symbol: str
    indices: tuple
    odd: bool = False

    @classmethod
    def parse(cls, text: str, ctx=None) -> "FieldSpec":
        e = parse(text, ctx)
        (key, c), = e.terms.items()
        fs = key[2]
        if len(fs) != 1 or fs[0].derivs or any(ix.up for ix in fs[0].slots):
            raise ValueError(f"{text!r} is not a bare field with lower indices")
        return cls(fs[0].symbol, fs[0].slots, fs[0].odd)

    @property
    def arity(self):
        nl = sum(ix.kind == LORENTZ for ix in self.indices)
        return nl, len(self.indices) - nl

    def __str__(self):
        lor = [ix.name for ix in self.indices if ix.kind == LORENTZ]
        adj = [ix.name for ix in self.indices if ix.kind == ADJOINT]
        if not self.indices:
            return self.symbol
        if lor and adj:
            return f"{self.symbol}[{','.join(lor)};{','.join(adj)}]"
        return f"{self.symbol}[{','.join(lor or adj)}]"


def _arity(fac: Factor):
    nl = sum(ix.kind == LORENTZ for ix in fac.slots)
    return nl, len(fac.slots) - nl


def field_inventory(expr: Expression):
    """Dynamical symbols (non-constant, non-tensor) with their arities, sorted."""
    seen = {}
    for (_, _, fs) in expr.terms:
        for f in fs:
            if f.const or f.is_tensor:
                continue
            key = (f.symbol,) + _arity(f)
            seen.setdefault(key, f.odd)
    out = []
    for (sym, nl, na), odd in sorted(seen.items()):
        ix = tuple(Index(LORENTZ, fresh_name("~l")) for _ in range(nl)) + \
             tuple(Index(ADJOINT, fresh_name("~a")) for _ in range(na))
        out.append(FieldSpec(sym, ix, odd))
    return out


# ---------------------------------------------------------------------------
# jet-space partial derivatives

def jet_partial(expr: Expression, symbol: str, arity, n_derivs: int, targets) -> Expression:
    """Left derivative with respect to the jet coordinate ``d^n symbol``.

    ``targets`` gives the result's new index names: first the derivative
    indices, then the field's own slots.  Lorentz targets come out upper.
    """
    if len(targets) != n_derivs + sum(arity):
        raise ValueError("need one target index per derivative and field slot")
    tnames = {t.name for t in targets}
    terms: dict = {}
    for (ip, cp, fs), c in expr.terms.items():
        fs = rename_dummies(fs, tnames)
        cnt = index_counts(fs)
        n_odd = 0
        for pos, fac in enumerate(fs):
            if fac.symbol == symbol and len(fac.derivs) == n_derivs and _arity(fac) == arity:
                sign = -1 if (fac.odd and n_odd % 2) else 1
                rest = list(fs[:pos] + fs[pos + 1:])
                extra = []
                for ix, t in zip(tuple(fac.derivs) + tuple(fac.slots), targets):
                    if not ix.explicit and cnt[(ix.kind, ix.name)] == 2:
                        rest = _rename_partner(rest, ix, t.name)
                    elif ix.kind == LORENTZ:
                        extra.append(metric(Index(LORENTZ, t.name, True), ix.raised(False)))
                    else:
                        extra.append(kron(Index(ADJOINT, t.name), ix))
                key = (ip, cp, tuple(extra) + tuple(rest))
                check_monomial(key[2])
                terms[key] = terms.get(key, 0) + c * sign
            if fac.odd:
                n_odd += 1
    return Expression(terms)


def _rename_partner(rest, ix: Index, new: str):
    out = []
    done = False
    for f in rest:
        if not done and any(j.name == ix.name and j.kind == ix.kind for j in f.indices()):
            f = f.relabel({(ix.kind, ix.name): new})
            done = True
        out.append(f)
    return out


def _max_order(L: Expression, symbol: str, arity) -> int:
    return max((len(f.derivs) for (_, _, fs) in L.terms for f in fs
                if f.symbol == symbol and _arity(f) == arity), default=-1)


def euler_lagrange(L: Expression, phi: FieldSpec) -> Expression:
    """sum_k (-d)^k dL/d(d^k phi) with left derivatives for odd fields."""
    top = _max_order(L, phi.symbol, phi.arity)
    if top < 0:
        log.warning("euler_lagrange: field %s does not occur in the density", phi)
        return Expression.zero()
    out = Expression.zero()
    for k in range(top + 1):
        mus = tuple(Index(LORENTZ, fresh_name("~m"), True) for _ in range(k))
        term = jet_partial(L, phi.symbol, phi.arity, k, mus + phi.indices)
        for mu in mus:
            term = total_derivative(term, mu.raised(False))
        out = out + (-term if k % 2 else term)
    return out


def momentum(L: Expression, phi: FieldSpec, lam: Index) -> Expression:
    return jet_partial(L, phi.symbol, phi.arity, 1, (lam,) + phi.indices)


# ---------------------------------------------------------------------------
# transformations

@dataclass
class TransformationRule:
    """Map field symbol -> variation; ``parity`` sets the graded Leibniz sign.

    ``images`` maps ``(symbol, n_lorentz, n_adjoint)`` to ``(params, Expression)``.
    ``parameter`` names an explicit parameter symbol (like ``theta``) to be
    stripped from Noether currents; ``ignore`` lists symbols that are
    parameters rather than fields.
    """
    name: str
    parity: str
    images: dict
    parameter: str | None = None
    ignore: tuple = ()
    notes: list = field(default_factory=list)

    @classmethod
    def from_strings(cls, name, parity, rules: dict, ctx=None, **kw):
        images = {}
        for lhs, rhs in rules.items():
            spec = FieldSpec.parse(lhs, ctx)
            img = parse(rhs, ctx) if isinstance(rhs, str) else rhs
            images[(spec.symbol,) + spec.arity] = (spec.indices, img)
        return cls(name, parity, images, **kw)

    def image(self, fac: Factor):
        key = (fac.symbol,) + _arity(fac)
        if key not in self.images:
            return None
        params, img = self.images[key]
        if img.is_empty():
            return img
        return instantiate(img, params, list(fac.slots))


def apply_transformation(expr: Expression, t: TransformationRule, flagged: set | None = None) -> Expression:
    """First-order variation by the graded Leibniz rule.

    For ``parity == "odd"`` a sign is picked up for every odd factor the
    variation crosses; derivative atoms vary as derivatives of the image.
    """
    out: dict = {}
    for (ip, cp, fs), c in expr.terms.items():
        n_odd = 0
        for pos, fac in enumerate(fs):
            if fac.const or fac.is_tensor or fac.symbol in t.ignore:
                n_odd += fac.odd
                continue
            img = t.image(fac)
            if img is None:
                if flagged is not None:
                    flagged.add(fac.symbol)
                log.debug("%s: no rule for %s, treated as invariant", t.name, fac.symbol)
                n_odd += fac.odd
                continue
            if not img.is_empty():
                for mu in fac.derivs:
                    img = total_derivative(img, mu)
                sign = -1 if (t.parity == "odd" and n_odd % 2) else 1
                left = Expression({(ip, cp, fs[:pos]): c * sign}, check=False)
                right = Expression({(0, (), fs[pos + 1:]): 1}, check=False)
                piece = multiply(multiply(left, img), right)
                for k, v in piece.terms.items():
                    out[k] = out.get(k, 0) + v
            n_odd += fac.odd
    return Expression(out)


# ---------------------------------------------------------------------------
# total derivatives

def _divergence_candidates(expr: Expression, lam: Index):
    """Currents K^lam whose divergence reproduces some monomial of ``expr``."""
    cands = {}
    for (ip, cp, fs), c in canonicalize(expr).terms.items():
        cnt = index_counts(fs)
        for pos, fac in enumerate(fs):
            for k, ix in enumerate(fac.derivs):
                if ix.explicit or cnt[(ix.kind, ix.name)] != 2:
                    continue
                rest = list(fs)
                rest[pos] = fac._replace(derivs=fac.derivs[:k] + fac.derivs[k + 1:])
                partner_done = False
                for fi, other in enumerate(rest):
                    if fi == pos:
                        continue
                    if any(j.name == ix.name for j in other.indices()):
                        rest[fi] = other.relabel({(ix.kind, ix.name): lam.name})
                        partner_done = True
                        break
                if not partner_done:
                    continue
                K = canonicalize(Expression({(ip, cp, tuple(rest)): 1}))
                if not K.is_empty():
                    cands[frozenset(K.terms.items())] = K
    return list(cands.values())


def divergence_decomposition(expr: Expression, constraints: ConstraintSet = NO_CONSTRAINTS):
    """Find K and multipliers with expr = d_lam K^lam + sum M*C.

    Returns ``(K, certificate)`` with K carrying a free upper index named
    ``"lam"`` or ``(None, certificate)`` when no decomposition is found.
    """
    lam = Index(LORENTZ, "lam", True)
    target = canonicalize(expr)
    if target.is_empty():
        return Expression.zero(), Certificate("exact-zero")
    Ks = _divergence_candidates(target, lam)
    divs = [canonicalize(total_derivative(K, lam.raised(False))) for K in Ks]
    cands = constraint_candidates([target] + divs, constraints) if constraints else []
    stats = {}
    (T, *rest), basis = reduce_jacobi_many([target] + divs + [t for (_, _, t) in cands], stats)
    dv, cv = rest[:len(divs)], rest[len(divs):]
    lam_all = solve_linear(T.terms, [d.terms for d in dv] + [c.terms for c in cv])
    if lam_all is None:
        return None, Certificate("nonzero-witness", witness=str(T).split(" + ")[0],
                                 jacobi_relations=basis.n_relations)
    K = Expression.zero()
    for Ki, l in zip(Ks, lam_all[:len(Ks)]):
        if l:
            K = K + Ki * l
    K = canonicalize(K)
    mults = _collect_multipliers(cands, lam_all[len(Ks):])
    kind = "constraint-reduced" if mults else "exact-zero"
    cert = Certificate(kind, used_constraints=sorted({n for n, _ in mults}), multipliers=mults,
                       jacobi_relations=basis.n_relations,
                       antisymmetry_rewrites=stats.get("antisymmetry", 0))
    return K, cert


def constraint_part(expr: Expression, K: Expression) -> Expression:
    lam = Index(LORENTZ, "lam", False)
    return expr - total_derivative(K, lam) if not K.is_empty() else expr


def is_total_derivative(expr: Expression, constraints: ConstraintSet = NO_CONSTRAINTS,
                        return_current: bool = False):
    """A density is a divergence iff all its Euler-Lagrange derivatives vanish.

    With constraints, multipliers M are searched such that every
    EL derivative of ``expr - sum M*C`` vanishes identically.
    """
    def done(ok, cert, K=None):
        return (ok, cert, K) if return_current else (ok, cert)

    status = {}
    all_zero = True
    for phi in field_inventory(expr):
        ok, cert = is_zero(euler_lagrange(expr, phi))
        status[f"{phi.symbol}/{phi.arity[0]},{phi.arity[1]}"] = cert.kind
        all_zero &= ok
    el_notes = [f"EL[{k}]: {v}" for k, v in sorted(status.items())]
    if all_zero:
        K = None
        if return_current:
            K, _ = divergence_decomposition(expr)
        return done(True, Certificate("el-vanishing", notes=el_notes), K)
    if not constraints:
        return done(False, Certificate("nonzero-witness", notes=el_notes))
    K, cert = divergence_decomposition(expr, constraints)
    if K is None:
        return done(False, cert)
    # independent confirmation: expr - d.K must vanish on the constraint surface
    ok, c2 = is_zero(constraint_part(expr, K), constraints)
    if not ok:
        return done(False, c2)
    cert.notes = el_notes + [f"K^lam = {format_expression(K)}"]
    return done(True, cert, K)


# ---------------------------------------------------------------------------
# Noether

def _strip_parameter(expr: Expression, t: TransformationRule, index_name: str) -> Expression:
    if t.parameter is None:
        return expr
    arity = None
    for (_, _, fs) in expr.terms:
        for f in fs:
            if f.symbol == t.parameter:
                arity = _arity(f)
                break
        if arity:
            break
    if arity is None:
        return Expression.zero()
    targets = tuple(Index(ADJOINT, index_name) for _ in range(arity[1]))
    return jet_partial(expr, t.parameter, arity, 0, targets)


def _varied_fields(L: Expression, t: TransformationRule):
    out = []
    for phi in field_inventory(L):
        if phi.symbol in t.ignore:
            continue
        if (phi.symbol,) + phi.arity in t.images:
            out.append(phi)
    return out


def _variation_of(phi: FieldSpec, t: TransformationRule) -> Expression:
    fac = Factor(phi.symbol, phi.odd, False, (), phi.indices)
    img = t.image(fac)
    return img if img is not None else Expression.zero()


@dataclass
class NoetherResult:
    current: Expression            # free upper Lorentz index "lam" (+ parameter index)
    improvement: Expression
    variation: Expression
    certificate: Certificate


def noether_current(L: Expression, t: TransformationRule,
                    constraints: ConstraintSet = NO_CONSTRAINTS,
                    parameter_index: str = "a") -> NoetherResult:
    """J^lam = sum delta(phi) dL/d(d_lam phi) - K^lam, where delta L = d_lam K^lam."""
    for phi in _varied_fields(L, t):
        if _max_order(L, phi.symbol, phi.arity) > 1:
            raise ValueError(f"density is not first order in {phi}")
    lam = Index(LORENTZ, "lam", True)
    dL = apply_transformation(L, t)
    K, cert = divergence_decomposition(dL, constraints)
    if K is None:
        raise NotASymmetry(f"variation under {t.name} is not a total derivative: {cert.witness}")
    J = Expression.zero()
    for phi in _varied_fields(L, t):
        dphi = _variation_of(phi, t)
        if dphi.is_empty():
            continue
        J = J + multiply(dphi, momentum(L, phi, lam))
    J = J - K
    J = canonicalize(_strip_parameter(canonicalize(J), t, parameter_index))
    Ks = canonicalize(_strip_parameter(K, t, parameter_index))
    return NoetherResult(J, Ks, dL, cert)


def noether_identity_check(L: Expression, t: TransformationRule,
                           constraints: ConstraintSet = NO_CONSTRAINTS,
                           parameter_index: str = "a"):
    """Off-shell identity d_lam J^lam + sum delta(phi) EL_phi = 0 (mod constraints)."""
    res = noether_current(L, t, constraints, parameter_index)
    lam = Index(LORENTZ, "lam", False)
    lhs = total_derivative(res.current, lam)
    for phi in _varied_fields(L, t):
        dphi = _variation_of(phi, t)
        if dphi.is_empty():
            continue
        lhs = lhs + _strip_parameter(multiply(dphi, euler_lagrange(L, phi)), t, parameter_index)
    ok, cert = is_zero(lhs, constraints)
    return ok, cert, res
