"""Normal form for graded indexed monomials.

The normal form of a monomial is obtained by

1. contracting metrics and Kronecker deltas,
2. relabeling dummies canonically, and
3. sorting symmetric/antisymmetric slots and the factor list (with signs).

Dummy relabeling uses color refinement of the index graph to split the
dummies into isomorphism-invariant classes.  Remaining ties are broken by
individualizing one member of a class at a time and refining again; the
lexicographically smallest monomial over all leaves of that search wins.
A monomial which maps to itself with the opposite sign is zero.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from fractions import Fraction

from .core import (ADJOINT, LORENTZ, Expression, Factor, Index, index_counts,
                   metric, _norm_couplings)

log = logging.getLogger(__name__)

MAX_CANDIDATES = 20000


# ---------------------------------------------------------------------------
# contraction of metrics and deltas

def _metric_value(p: Index, q: Index) -> int:
    a, b = int(p.name), int(q.name)
    if p.up != q.up:
        return int(a == b)
    if a != b:
        return 0
    return 1 if a == 0 else -1


def _occurrences(fs):
    occ = defaultdict(list)
    for fi, fac in enumerate(fs):
        for where, group in (("d", fac.derivs), ("s", fac.slots)):
            for si, ix in enumerate(group):
                if not ix.explicit:
                    occ[(ix.kind, ix.name)].append((fi, where, si))
    return occ


def _set_index(fs, loc, new: Index):
    fi, where, si = loc
    fac = fs[fi]
    if where == "d":
        ds = list(fac.derivs)
        ds[si] = new
        fs[fi] = fac._replace(derivs=tuple(ds))
    else:
        ss = list(fac.slots)
        ss[si] = new
        fs[fi] = fac._replace(slots=tuple(ss))


def _get_index(fs, loc) -> Index:
    fi, where, si = loc
    return (fs[fi].derivs if where == "d" else fs[fi].slots)[si]


def contract(factors):
    """Eliminate contractible metrics/deltas.  Returns (factors, multiplier)."""
    fs = list(factors)
    mult = 1
    changed = True
    while changed and mult:
        changed = False
        occ = _occurrences(fs)
        for fi, fac in enumerate(fs):
            if fac.symbol not in ("g", "delta"):
                continue
            p, q = fac.slots
            if p.explicit and q.explicit:
                mult *= _metric_value(p, q) if fac.symbol == "g" else int(p.name == q.name)
                del fs[fi]
                changed = True
                break
            if p.name == q.name:
                if fac.symbol == "g":
                    mult *= 4
                    del fs[fi]
                    changed = True
                    break
                continue  # adjoint trace stays as a factor
            if fac.symbol == "g":
                for s, other in ((p, q), (q, p)):
                    locs = occ.get((s.kind, s.name), [])
                    if s.explicit or len(locs) != 2:
                        continue
                    partner = next(l for l in locs if not (l[0] == fi and l[1] == "s" and _get_index(fs, l) == s))
                    fj = partner[0]
                    if fj != fi and fs[fj].symbol == "g":
                        po = fs[fj].slots[1 - partner[2]]
                        new = metric(other, po)
                        for k in sorted((fi, fj), reverse=True):
                            del fs[k]
                        fs.append(new)
                        changed = True
                        break
                if changed:
                    break
                if p.up == q.up:
                    continue
            for s, other in ((p, q), (q, p)):
                locs = occ.get((s.kind, s.name), [])
                if s.explicit or len(locs) != 2:
                    continue
                partner = next(l for l in locs if l[0] != fi)
                old = _get_index(fs, partner)
                _set_index(fs, partner, old.renamed(other.name))
                del fs[fi]
                changed = True
                break
            if changed:
                break
    return tuple(fs), mult


# ---------------------------------------------------------------------------
# canonical relabeling

def _slot_class(fac: Factor, where: str, si: int):
    if where == "d":
        return ("d", 0)
    if fac.symbol in ("g", "delta", "f"):
        return ("s", 0)
    return ("p", si)


def _color_dummies(fs, dummies, seed=None):
    seed = seed or {}

    def ident(ix):
        return ("D", "") if (ix.kind, ix.name) in dummies else ("F", ix.name)

    fcol = []
    for fac in fs:
        desc = []
        for where, group in (("d", fac.derivs), ("s", fac.slots)):
            for si, ix in enumerate(group):
                desc.append((_slot_class(fac, where, si), ix.kind, ix.up, ident(ix)))
        fcol.append((fac.rank(), fac.symbol, fac.odd, len(fac.derivs), tuple(sorted(desc))))
    fcol = _compress(fcol)
    occ = _occurrences(fs)
    n_classes = -1
    dcol = {}
    for _ in range(len(fs) + 2):
        raw = {}
        for d in dummies:
            raw[d] = (seed.get(d, ()), d[0]) + tuple(sorted((fcol[fi], _slot_class(fs[fi], w, si), _get_index(fs, (fi, w, si)).up)
                                            for (fi, w, si) in occ[d]))
        keys = sorted(set(raw.values()))
        ids = {k: n for n, k in enumerate(keys)}
        dcol = {d: ids[v] for d, v in raw.items()}
        new = []
        for fi, fac in enumerate(fs):
            desc = []
            for where, group in (("d", fac.derivs), ("s", fac.slots)):
                for si, ix in enumerate(group):
                    key = (ix.kind, ix.name)
                    tag = ("D", dcol[key]) if key in dcol else ("F", ix.name)
                    desc.append((_slot_class(fac, where, si), ix.up, tag))
            new.append((fcol[fi], tuple(sorted(desc, key=repr))))
        fcol = _compress(new)
        count = len(set(fcol)) + len(set(dcol.values()))
        if count == n_classes:
            break
        n_classes = count
    return dcol


def _compress(cols):
    keys = sorted(set(cols), key=repr)
    ids = {k: n for n, k in enumerate(keys)}
    return [ids[c] for c in cols]


def _perm_sign(seq):
    """Sort ``seq``; return (sorted list, parity) or (None, 0) if it repeats."""
    items = list(seq)
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(items, items[1:]):
        if a == b:
            return None, 0
    return items, sign


def _normalize(fs, stats=None):
    """Sort slots/factors for fixed index names; returns (factors, sign) or None."""
    sign = 1
    out = []
    for fac in fs:
        if fac.derivs:
            fac = fac._replace(derivs=tuple(sorted(fac.derivs)))
        if fac.symbol in ("g", "delta"):
            fac = fac._replace(slots=tuple(sorted(fac.slots)))
        elif fac.symbol == "f":
            srt, s = _perm_sign(fac.slots)
            if srt is None:
                return None
            if s < 0 and stats is not None:
                stats["antisymmetry"] = stats.get("antisymmetry", 0) + 1
            sign *= s
            fac = fac._replace(slots=tuple(srt))
        out.append(fac)
    keys = [f.sort_key() for f in out]
    order = sorted(range(len(out)), key=lambda k: keys[k])
    odd_positions = [k for k in order if out[k].odd]
    # parity of the permutation restricted to odd factors
    inv = 0
    for x in range(len(odd_positions)):
        for y in range(x + 1, len(odd_positions)):
            if odd_positions[x] > odd_positions[y]:
                inv += 1
    if inv % 2:
        sign = -sign
    res = tuple(out[k] for k in order)
    for a, b in zip(res, res[1:]):
        if a.odd and b.odd and a == b:
            return None
    return res, sign


def canonical_factors(factors, stats=None):
    """Canonical (factors, sign, multiplier); multiplier 0 means the monomial vanishes."""
    fs, mult = contract(factors)
    if not mult:
        return (), 1, 0
    cnt = index_counts(fs)
    dummies = sorted(k for k, n in cnt.items() if n == 2)
    if not dummies:
        r = _normalize(fs, stats)
        if r is None:
            return (), 1, 0
        return r[0], r[1], mult
    dset = set(dummies)
    leaves = []
    stack = [{}]
    while stack:
        seed = stack.pop()
        dcol = _color_dummies(fs, dset, seed)
        groups = defaultdict(list)
        for d in dummies:
            groups[dcol[d]].append(d)
        cell = next((groups[k] for k in sorted(groups) if len(groups[k]) > 1), None)
        if cell is None:
            leaves.append(sorted(dummies, key=dcol.get))
            if len(leaves) >= MAX_CANDIDATES:
                log.warning("canonicalization: more than %d relabeling leaves, truncating",
                            MAX_CANDIDATES)
                break
            continue
        for d in reversed(cell):
            stack.append({x: (dcol[x], int(x != d)) for x in dummies})
    best = None
    best_sign = 0
    zero = False
    for order in leaves:
        mapping = {d: f"#{n}" for n, d in enumerate(order, 1)}
        relabeled = [f.relabel(mapping) for f in fs]
        r = _normalize(relabeled, stats)
        if r is None:
            return (), 1, 0
        key, s = r
        if best is None or key < best:
            best, best_sign = key, s
            zero = False
        elif key == best and s != best_sign:
            zero = True
    if zero:
        return (), 1, 0
    return best, best_sign, mult


def canonicalize(expr: Expression, stats=None) -> Expression:
    """Unique normal form; like monomials merged, zero coefficients dropped."""
    terms: dict = {}
    for (ip, cp, fs), c in expr.terms.items():
        nf, sign, mult = canonical_factors(fs, stats)
        if not mult:
            continue
        key = (ip, cp, nf)
        terms[key] = terms.get(key, 0) + c * sign * mult
    out = Expression(_sorted_terms(terms), check=False)
    out._free = expr._free if out.terms else frozenset()
    return out


def monomial_order(key):
    ip, cp, fs = key
    return (len(fs), tuple(f.sort_key() for f in fs), cp, ip)


def _sorted_terms(terms):
    return {k: terms[k] for k in sorted(terms, key=monomial_order) if terms[k]}


def hermitian_conjugate(expr: Expression) -> Expression:
    """Reverse every product, send i -> -i; all fields and couplings are hermitian."""
    terms = {}
    for (ip, cp, fs), c in expr.terms.items():
        key = (ip, cp, tuple(reversed(fs)))
        terms[key] = terms.get(key, 0) + (-c if ip else c)
    return canonicalize(Expression(terms, check=False))


def canon_equal(a: Expression, b: Expression) -> bool:
    return canonicalize(a - b).is_empty()
