"""Zero testing modulo the Jacobi identity and declared constraints.

Jacobi reduction works on canonical monomials.  Every pair of structure
constants sharing a dummy index generates the three-term relation

    f[w,x,d] f[d,y,z] + f[x,y,d] f[d,w,z] + f[y,w,d] f[d,x,z] = 0

(times the rest of the monomial).  The relations reachable from the input
monomials span a finite subspace W; the normal form is the remainder of the
input after reduction by the row-echelon basis of W with the largest
monomials as pivots.  That remainder is unique, so the reduction is
idempotent and independent of processing order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .canon import canonical_factors, canonicalize, monomial_order
from .core import (ADJOINT, LORENTZ, Expression, Factor, Index, dummy_names,
                   free_signature, index_counts, multiply, rename_free, total_derivative)
from .parser import format_expression, format_monomial

log = logging.getLogger(__name__)

MAX_CLOSURE = 50000


# ---------------------------------------------------------------------------
# certificates and constraints

@dataclass
class Certificate:
    kind: str                      # exact-zero | el-vanishing | constraint-reduced | nonzero-witness
    used_constraints: list = field(default_factory=list)
    multipliers: list = field(default_factory=list)   # [(constraint name, multiplier expression)]
    jacobi_relations: int = 0
    antisymmetry_rewrites: int = 0
    witness: str | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "used_constraints": list(self.used_constraints),
            "multipliers": [{"constraint": n, "multiplier": m} for n, m in self.multipliers],
            "reduction_trace": {"jacobi_relations": self.jacobi_relations,
                                "antisymmetry_rewrites": self.antisymmetry_rewrites},
            "witness": self.witness,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class Constraint:
    """An expression required to vanish, solved for one designated jet coordinate.

    ``designated`` names the field symbol whose first derivative appears
    linearly (for ``d.j`` and ``D.j`` this is ``j``); the jet oracle solves
    for the component ``d_0 j_0`` and its derivatives.
    """
    name: str
    expr: Expression
    designated: str = "j"


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple = ()
    closure_order: int = 1        # number of extra total derivatives included

    def __bool__(self):
        return bool(self.constraints)

    def names(self):
        return [c.name for c in self.constraints]


NO_CONSTRAINTS = ConstraintSet()


# ---------------------------------------------------------------------------
# Jacobi closure

def _rotate(slots, d):
    """Cyclic rotation (sign +1) of three slots putting dummy ``d`` last."""
    k = [s.name for s in slots].index(d)
    s = list(slots)
    return tuple(s[k + 1:] + s[:k + 1])


def jacobi_relations_for(key):
    """All Jacobi relations generated by f-pairs of one canonical monomial."""
    ip, cp, fs = key
    fpos = [k for k, f in enumerate(fs) if f.symbol == "f"]
    out = []
    for ai in range(len(fpos)):
        for bi in range(ai + 1, len(fpos)):
            i, j = fpos[ai], fpos[bi]
            shared = ({s.name for s in fs[i].slots if not s.explicit}
                      & {s.name for s in fs[j].slots if not s.explicit})
            for d in sorted(shared):
                w, x, dd = _rotate(fs[i].slots, d)
                r = _rotate(fs[j].slots, d)
                dd2, y, z = (r[2],) + r[:2]
                rest = [f for k, f in enumerate(fs) if k not in (i, j)]
                rel = {}
                for a, b in (((w, x, dd), (dd, y, z)), ((x, y, dd), (dd, w, z)), ((y, w, dd), (dd, x, z))):
                    new = tuple(rest) + (Factor("f", False, True, (), a), Factor("f", False, True, (), b))
                    nf, sign, mult = canonical_factors(new)
                    if not mult:
                        continue
                    k2 = (ip, cp, nf)
                    rel[k2] = rel.get(k2, 0) + sign * mult
                rel = {k: v for k, v in rel.items() if v}
                if rel:
                    out.append(rel)
    return out


def jacobi_closure(keys):
    """Relations reachable from ``keys`` (closure under generating new monomials)."""
    seen = set(keys)
    queue = list(keys)
    rels = []
    while queue:
        key = queue.pop()
        for rel in jacobi_relations_for(key):
            rels.append(rel)
            for k in rel:
                if k not in seen:
                    seen.add(k)
                    queue.append(k)
        if len(seen) > MAX_CLOSURE:
            log.warning("Jacobi closure exceeded %d monomials; truncating", MAX_CLOSURE)
            break
    return rels, seen


def _to_qq(c):
    c = Fraction(c)
    return QQ(c.numerator, c.denominator)


def _from_qq(v):
    return Fraction(int(QQ.numer(v)), int(QQ.denom(v)))


class JacobiBasis:
    """Row-echelon basis of the Jacobi relations spanned over a monomial set."""

    def __init__(self, keys):
        rels, seen = jacobi_closure(keys)
        self.n_relations = len(rels)
        self.rows = []           # (pivot key, {key: Fraction})
        if not rels:
            return
        cols = sorted(seen, key=monomial_order, reverse=True)
        index = {k: n for n, k in enumerate(cols)}
        data = {}
        for r, rel in enumerate(rels):
            data[r] = {index[k]: _to_qq(v) for k, v in rel.items()}
        M = DomainMatrix(data, (len(rels), len(cols)), QQ)
        R, pivots = M.rref()
        sdm = R.to_sparse().rep
        for r, pc in enumerate(pivots):
            row = sdm.get(r, {})
            self.rows.append((cols[pc], {cols[c]: _from_qq(v) for c, v in row.items()}))
        self.pivot_keys = {p for p, _ in self.rows}

    def reduce(self, terms: dict) -> dict:
        v = dict(terms)
        for pk, row in self.rows:
            a = v.get(pk)
            if a:
                for k, c in row.items():
                    v[k] = v.get(k, 0) - a * c
        return {k: c for k, c in v.items() if c}


def reduce_jacobi_many(exprs, stats=None):
    """Joint Jacobi normal forms (common relation basis) of canonical expressions."""
    exprs = [canonicalize(e, stats) for e in exprs]
    keys = set()
    for e in exprs:
        keys.update(e.terms)
    basis = JacobiBasis(keys)
    if stats is not None:
        stats["jacobi"] = stats.get("jacobi", 0) + basis.n_relations
    out = []
    for e in exprs:
        if not basis.rows:
            out.append(e)
            continue
        red = basis.reduce(e.terms)
        r = Expression({k: red[k] for k in sorted(red, key=monomial_order)}, check=False)
        r._free = e._free if r.terms else frozenset()
        out.append(r)
    return out, basis


def reduce_jacobi(expr: Expression) -> Expression:
    """Normal form modulo antisymmetry and the Jacobi identity."""
    return reduce_jacobi_many([expr])[0][0]


# ---------------------------------------------------------------------------
# constraint multipliers

def _quotients(key, constraint: Constraint, closure_order: int):
    """Multipliers M with M*d^k(C) containing the monomial ``key``."""
    ip, cp, fs = key
    cfree = constraint.expr.free
    c_adj = [ix for ix in cfree if ix.kind == ADJOINT]
    out = []
    for pos, fac in enumerate(fs):
        if fac.symbol != constraint.designated or not fac.derivs:
            continue
        extra = len(fac.derivs) - 1
        if extra > closure_order:
            continue
        own = {ix.name for ix in fac.indices() if not ix.explicit}
        rest = [f for k, f in enumerate(fs) if k != pos]
        rest = [f for f in rest
                if not (f.symbol == "g" and all(s.name in own for s in f.slots))]
        cnt = index_counts(rest)
        dangling = [ix for f in rest for ix in f.indices()
                    if not ix.explicit and ix.name in own and cnt[(ix.kind, ix.name)] == 1]
        # own indices that are free in the whole monomial stay free in d^k(C)
        total = index_counts(fs)
        loose = [ix for ix in fac.indices()
                 if not ix.explicit and total[(ix.kind, ix.name)] == 1]
        dl = [ix for ix in dangling if ix.kind == LORENTZ]
        da = [ix for ix in dangling if ix.kind == ADJOINT] + [ix for ix in loose if ix.kind == ADJOINT]
        fl = [ix for ix in loose if ix.kind == LORENTZ]
        if len(dl) + len(fl) != extra or len(da) != len(c_adj):
            continue
        M = Expression({(ip, cp, tuple(rest)): 1}, check=False)
        C = constraint.expr
        if c_adj:
            C = rename_free(C, {c_adj[0].name: da[0]})
        for ix in dl:
            C = total_derivative(C, ix.raised(not ix.up))
        for ix in fl:
            C = total_derivative(C, ix)
        out.append((M, multiply(M, C)))
    return out


def constraint_candidates(exprs, constraints: ConstraintSet):
    """Candidate terms M*d^k(C), deduplicated by canonical form."""
    seen = {}
    for e in exprs:
        for key in e.terms:
            for con in constraints.constraints:
                for M, term in _quotients(key, con, constraints.closure_order):
                    t = canonicalize(term)
                    if t.is_empty():
                        continue
                    sig = frozenset(t.terms.items())
                    if sig not in seen:
                        seen[sig] = (con.name, canonicalize(M), t)
    return list(seen.values())


def solve_linear(target: dict, candidates: list):
    """Rational lambda with target = sum lambda_i candidates[i], or None.

    ``target`` and candidates are ``{key: Fraction}`` vectors.
    """
    cols = set(target)
    for c in candidates:
        cols.update(c)
    cols = sorted(cols, key=monomial_order)
    index = {k: n for n, k in enumerate(cols)}
    n = len(candidates)
    data = {}
    for r in cols:
        data[index[r]] = {}
    for i, cand in enumerate(candidates):
        for k, v in cand.items():
            data[index[k]][i] = _to_qq(v)
    for k, v in target.items():
        data[index[k]][n] = _to_qq(v)
    data = {r: row for r, row in data.items() if row}
    M = DomainMatrix(data, (len(cols), n + 1), QQ)
    R, pivots = M.rref()
    if n in pivots:
        return None
    sdm = R.to_sparse().rep
    lam = [Fraction(0)] * n
    for r, pc in enumerate(pivots):
        lam[pc] = _from_qq(sdm.get(r, {}).get(n, QQ(0)))
    return lam


# ---------------------------------------------------------------------------
# zero test

def _witness(expr: Expression) -> str:
    key, c = next(iter(expr.terms.items()))
    return format_monomial(key, c)


def is_zero(expr: Expression, constraints: ConstraintSet = NO_CONSTRAINTS):
    """Decide ``expr == 0`` up to antisymmetry, Jacobi and (optionally) constraints."""
    stats = {}
    R = canonicalize(expr, stats)
    if R.is_empty():
        return True, Certificate("exact-zero", antisymmetry_rewrites=stats.get("antisymmetry", 0))
    if constraints:
        cands = constraint_candidates([R], constraints)
    else:
        cands = []
    (NF, *cand_nf), basis = reduce_jacobi_many([R] + [t for (_, _, t) in cands], stats)
    if NF.is_empty():
        return True, Certificate("exact-zero", jacobi_relations=basis.n_relations,
                                 antisymmetry_rewrites=stats.get("antisymmetry", 0))
    if cands:
        lam = solve_linear(NF.terms, [c.terms for c in cand_nf])
        if lam is not None:
            mults = _collect_multipliers(cands, lam)
            return True, Certificate("constraint-reduced",
                                     used_constraints=sorted({n for n, _ in mults}),
                                     multipliers=mults,
                                     jacobi_relations=basis.n_relations,
                                     antisymmetry_rewrites=stats.get("antisymmetry", 0))
    return False, Certificate("nonzero-witness", witness=_witness(NF),
                              jacobi_relations=basis.n_relations,
                              antisymmetry_rewrites=stats.get("antisymmetry", 0))


def _collect_multipliers(cands, lam):
    acc = {}
    order = []
    for (name, M, _), l in zip(cands, lam):
        if not l:
            continue
        if name not in acc:
            acc[name] = Expression.zero()
            order.append(name)
        try:
            acc[name] = acc[name] + M * l
        except Exception:
            # multipliers for different derivative orders carry different indices
            key = f"{name}'"
            acc.setdefault(key, Expression.zero())
            acc[key] = acc[key] + M * l
            if key not in order:
                order.append(key)
    return [(n, format_expression(canonicalize(acc[n]))) for n in order]
