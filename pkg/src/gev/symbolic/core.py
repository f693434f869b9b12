"""Graded indexed expressions.

An :class:`Expression` is a finite sum of monomials.  Each monomial is an
exact rational coefficient times an optional imaginary unit, a product of
formal couplings and an *ordered* tuple of :class:`Factor` objects.  The
order of factors matters only through the grading: swapping two adjacent
odd factors negates the coefficient.

Internally every Lorentz index carried by a field atom or by a partial
derivative is *lower*.  An upper index is represented by contracting with
an explicit inverse metric ``g[^mu,^k]``.  Metric tensors are the only
factors with upper slots, which keeps contraction bookkeeping local.
"""
from __future__ import annotations

import itertools
from collections import Counter
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple

LORENTZ = "L"
ADJOINT = "A"

# symbols with a fixed role; everything else is a user/field symbol
TENSORS = ("f", "g", "delta")
_RANK = {"f": 0, "g": 1, "delta": 2, "B": 10, "A": 11, "j": 12, "cbar": 30, "c": 31}

_fresh = itertools.count(1)


class IndexError_(ValueError):
    """Inconsistent index structure (arity, repetition, free signature)."""


class Index(NamedTuple):
    kind: str
    name: str
    up: bool = False

    @property
    def explicit(self) -> bool:
        return self.name.isdigit()

    def raised(self, up: bool) -> "Index":
        return Index(self.kind, self.name, up)

    def renamed(self, name: str) -> "Index":
        return Index(self.kind, name, self.up)


def L(name, up=False) -> Index:
    return Index(LORENTZ, str(name), up)


def Adj(name) -> Index:
    return Index(ADJOINT, str(name), False)


class Factor(NamedTuple):
    symbol: str
    odd: bool
    const: bool
    derivs: tuple
    slots: tuple

    @property
    def is_tensor(self) -> bool:
        return self.symbol in TENSORS

    def indices(self) -> Iterator[Index]:
        yield from self.derivs
        yield from self.slots

    def rank(self):
        r = _RANK.get(self.symbol)
        if r is None:
            r = 40 if self.odd else 20
        return r

    def sort_key(self):
        return (self.rank(), self.symbol, len(self.derivs), self.derivs, self.slots)

    def relabel(self, mapping: dict) -> "Factor":
        if not mapping:
            return self
        sub = lambda ix: ix.renamed(mapping[(ix.kind, ix.name)]) if (ix.kind, ix.name) in mapping else ix
        return self._replace(derivs=tuple(sub(i) for i in self.derivs),
                             slots=tuple(sub(i) for i in self.slots))


def fresh_name(prefix: str = "%") -> str:
    return f"{prefix}{next(_fresh)}"


def index_counts(factors: Iterable[Factor]) -> Counter:
    cnt = Counter()
    for fac in factors:
        for ix in fac.indices():
            if not ix.explicit:
                cnt[(ix.kind, ix.name)] += 1
    return cnt


def free_signature(factors) -> frozenset:
    cnt = index_counts(factors)
    out = set()
    for fac in factors:
        for ix in fac.indices():
            if not ix.explicit and cnt[(ix.kind, ix.name)] == 1:
                out.add(ix)
    return frozenset(out)


def dummy_names(factors) -> set:
    return {k for k, n in index_counts(factors).items() if n == 2}


def check_monomial(factors) -> None:
    cnt = index_counts(factors)
    bad = [k for k, n in cnt.items() if n > 2]
    if bad:
        raise IndexError_(f"index {bad[0][1]!r} appears more than twice")
    pos = {}
    for fac in factors:
        for ix in fac.indices():
            if ix.kind == LORENTZ and not ix.explicit and cnt[(ix.kind, ix.name)] == 2:
                pos.setdefault(ix.name, []).append(ix.up)
    for name, ups in pos.items():
        if ups[0] == ups[1]:
            where = "upper" if ups[0] else "lower"
            raise IndexError_(f"dummy index {name!r} appears twice as {where}")


def _norm_couplings(items) -> tuple:
    acc: dict = {}
    for sym, p in items:
        acc[sym] = acc.get(sym, Fraction(0)) + Fraction(p)
    return tuple(sorted((s, p) for s, p in acc.items() if p != 0))


class Expression:
    """Immutable sum of graded monomials.

    ``terms`` maps ``(ipow, couplings, factors)`` to a nonzero ``Fraction``.
    """

    __slots__ = ("terms", "_free")

    def __init__(self, terms=None, check: bool = True):
        clean = {}
        for key, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[key] = clean.get(key, 0) + c
        self.terms = {k: v for k, v in clean.items() if v}
        self._free = None
        if check:
            self.free  # validates signature

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls) -> "Expression":
        return cls({}, check=False)

    @classmethod
    def scalar(cls, coeff=1, ipow: int = 0, couplings=()) -> "Expression":
        sign = -1 if ipow % 4 >= 2 else 1
        return cls({(ipow % 2, _norm_couplings(couplings), ()): Fraction(coeff) * sign}, check=False)

    @classmethod
    def from_factors(cls, factors, coeff=1) -> "Expression":
        factors = tuple(factors)
        check_monomial(factors)
        return cls({(0, (), factors): Fraction(coeff)})

    # introspection ------------------------------------------------------
    @property
    def free(self) -> frozenset:
        if self._free is None:
            sig = None
            for (_, _, factors) in self.terms:
                s = free_signature(factors)
                if sig is None:
                    sig = s
                elif s != sig:
                    raise IndexError_(
                        "free-index signature mismatch: "
                        f"{_sig_str(sig)} vs {_sig_str(s)}")
            self._free = sig if sig is not None else frozenset()
        return self._free

    def is_empty(self) -> bool:
        return not self.terms

    def monomials(self):
        return self.terms.items()

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    # arithmetic ---------------------------------------------------------
    def __add__(self, other: "Expression") -> "Expression":
        if not isinstance(other, Expression):
            other = Expression.scalar(other)
        if other.is_empty():
            return self
        if self.is_empty():
            return other
        if self.free != other.free:
            raise IndexError_("free-index signature mismatch: "
                              f"{_sig_str(self.free)} vs {_sig_str(other.free)}")
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        out = Expression(terms, check=False)
        out._free = self.free if out.terms else frozenset()
        return out

    def __neg__(self):
        out = Expression({k: -v for k, v in self.terms.items()}, check=False)
        out._free = self._free
        return out

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Expression):
            return multiply(self, other)
        c = Fraction(other)
        out = Expression({k: v * c for k, v in self.terms.items()}, check=False)
        out._free = self._free if out.terms else frozenset()
        return out

    __rmul__ = __mul__

    def __eq__(self, other):
        # structural equality; use canon.equal for mathematical equality
        return isinstance(other, Expression) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        from .parser import format_expression
        return f"Expression({format_expression(self)!r})"

    def __str__(self):
        from .parser import format_expression
        return format_expression(self)


def _sig_str(sig) -> str:
    parts = []
    for ix in sorted(sig):
        parts.append(("^" if ix.up else "") + ix.name + ("" if ix.kind == LORENTZ else "(adj)"))
    return "{" + ", ".join(parts) + "}"


# ---------------------------------------------------------------------------
# monomial-level helpers

def rename_dummies(factors, avoid: set) -> tuple:
    """Rename dummies of ``factors`` whose names lie in ``avoid``."""
    mapping = {}
    for key in dummy_names(factors):
        if key[1] in avoid:
            mapping[key] = fresh_name()
    if not mapping:
        return tuple(factors)
    return tuple(f.relabel(mapping) for f in factors)


def all_names(factors) -> set:
    return {ix.name for f in factors for ix in f.indices() if not ix.explicit}


def mul_monomials(k1, c1, k2, c2):
    """Product of two monomials, contracting repeated free indices."""
    ip1, cp1, f1 = k1
    ip2, cp2, f2 = k2
    names1 = all_names(f1)
    free2 = {ix.name for ix in free_signature(f2)}
    f2 = rename_dummies(f2, names1)
    f1 = rename_dummies(f1, free2 | {n for (_, n) in dummy_names(f2)})
    factors = f1 + f2
    check_monomial(factors)
    coeff = c1 * c2
    ip = ip1 + ip2
    if ip >= 2:
        ip -= 2
        coeff = -coeff
    return (ip, _norm_couplings(cp1 + cp2), factors), coeff


def multiply(lhs: Expression, rhs: Expression) -> Expression:
    """Distributive product with the factor order ``lhs`` then ``rhs``.

    Free indices shared by both sides become contracted dummies; clashing
    dummies are renamed.  No reordering happens here.
    """
    terms: dict = {}
    for k1, c1 in lhs.terms.items():
        for k2, c2 in rhs.terms.items():
            key, c = mul_monomials(k1, c1, k2, c2)
            terms[key] = terms.get(key, 0) + c
    return Expression(terms)


def product(*exprs: Expression) -> Expression:
    out = exprs[0]
    for e in exprs[1:]:
        out = multiply(out, e)
    return out


# ---------------------------------------------------------------------------
# elementary constructors

def metric(i: Index, j: Index) -> Factor:
    return Factor("g", False, True, (), (i, j))


def kron(a: Index, b: Index) -> Factor:
    return Factor("delta", False, True, (), (a, b))


def fconst(a: Index, b: Index, c: Index) -> Factor:
    return Factor("f", False, True, (), (a, b, c))


def make_atom(symbol: str, lorentz=(), adjoint=(), derivs=(), odd=False, const=False) -> Expression:
    """Field atom with possibly upper indices; uppers become metric factors."""
    pre = []
    low_l = []
    for ix in lorentz:
        if ix.up and not ix.explicit:
            k = fresh_name()
            pre.append(metric(ix, L(k, True)))
            low_l.append(L(k))
        else:
            low_l.append(ix)
    low_d = []
    for ix in derivs:
        if ix.up and not ix.explicit:
            k = fresh_name()
            pre.append(metric(ix, L(k, True)))
            low_d.append(L(k))
        else:
            low_d.append(ix)
    atom = Factor(symbol, odd, const, tuple(sorted(low_d)), tuple(low_l) + tuple(adjoint))
    return Expression.from_factors(tuple(pre) + (atom,))


def grassmann_degree(expr: Expression):
    """Number of odd factors, or ``None`` for an inhomogeneous expression."""
    degs = {sum(f.odd for f in fs) for (_, _, fs) in expr.terms}
    if len(degs) == 1:
        return degs.pop()
    return 0 if not degs else None


MIXED = "mixed"


def ghost_number(expr: Expression):
    """(#c - #cbar) if it is the same for every monomial, else ``"mixed"``."""
    vals = set()
    for (_, _, fs) in expr.terms:
        vals.add(sum(f.symbol == "c" for f in fs) - sum(f.symbol == "cbar" for f in fs))
    if len(vals) == 1:
        return vals.pop()
    return 0 if not vals else MIXED


# ---------------------------------------------------------------------------
# derivatives

def _d_monomial(key, coeff, mu: Index):
    ip, cp, factors = key
    out = []
    for pos, fac in enumerate(factors):
        if fac.const or fac.is_tensor:
            continue
        new = fac._replace(derivs=tuple(sorted(fac.derivs + (mu,))))
        out.append(((ip, cp, factors[:pos] + (new,) + factors[pos + 1:]), coeff))
    return out


def total_derivative(expr: Expression, mu: Index) -> Expression:
    """Leibniz rule for the (even) partial derivative ``d[mu]``."""
    if mu.up and not mu.explicit:
        k = L(fresh_name())
        g = Expression.from_factors((metric(mu, k.raised(True)),))
        return multiply(g, total_derivative(expr, k))
    terms: dict = {}
    for key, c in expr.terms.items():
        ip, cp, factors = key
        if any(ix.name == mu.name for f in factors for ix in f.indices()) and not mu.explicit:
            # mu already used here: it must be a free upper index to contract with
            names = dummy_names(factors)
            if (LORENTZ, mu.name) in names:
                factors = rename_dummies(factors, {mu.name})
                key = (ip, cp, factors)
        for k2, c2 in _d_monomial(key, c, mu):
            check_monomial(k2[2])
            terms[k2] = terms.get(k2, 0) + c2
    return Expression(terms)


def rename_free(expr: Expression, mapping: dict) -> Expression:
    """Rename free indices ``{old_name: Index}``; position changes use metrics.

    The target Index carries the requested position.  Lowering/raising is
    done by contracting with ``g``; canonicalization removes the leftovers.
    """
    if not mapping:
        return expr
    out = Expression.zero()
    targets = {ix.name for ix in mapping.values()}
    for key, c in expr.terms.items():
        ip, cp, factors = key
        factors = rename_dummies(factors, targets)
        free = {ix.name: ix for ix in free_signature(factors)}
        ren = {}
        extra = []
        for old, new in mapping.items():
            cur = free.get(old)
            if cur is None:
                raise IndexError_(f"{old!r} is not a free index")
            if cur.kind == LORENTZ and cur.up != new.up and not new.explicit:
                k = fresh_name()
                ren[(cur.kind, old)] = k
                extra.append(metric(new, L(k, not cur.up)))
            else:
                ren[(cur.kind, old)] = new.name
        factors = tuple(extra) + tuple(f.relabel(ren) for f in factors)
        check_monomial(factors)
        out = out + Expression({(ip, cp, factors): c})
    return out
