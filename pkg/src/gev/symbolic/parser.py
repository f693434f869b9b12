"""Input language for indexed expressions.

Grammar (one statement per line)::

    stmt   := decl | defn | expr
    decl   := ("field" | "param") NAME "[" sig "]" ("odd" | "even")
    defn   := NAME "[" sig "]" ["_"] ":=" expr
    expr   := ["+"|"-"] term (("+"|"-") term)*
    term   := factor ("*" factor)*
    factor := RATIONAL | "i" | COUPLING ["^" power] | atom
            | "d[" IDX "]" factor | OPERATOR "[" idx "]" factor | "(" expr ")"
    atom   := NAME ["[" lorentz-indices [";" adjoint-indices] "]"]

Upper Lorentz indices carry a caret (``^mu``).  ``param`` declares a
spacetime-constant symbol (a global transformation parameter).  A
definition whose body mentions the placeholder ``_`` is an *operator*
(such as the covariant derivative ``D``) and is expanded while parsing;
other definitions are kept as macro atoms until
:func:`substitute_definitions`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (ADJOINT, LORENTZ, TENSORS, Expression, Factor, Index, IndexError_,
                   fresh_name, make_atom, multiply, rename_dummies, rename_free,
                   total_derivative, check_monomial, free_signature)

COUPLINGS = ("g", "e", "a", "alpha")
PLACEHOLDER = "_"


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int | None = None, text: str = ""):
        self.pos = pos
        if pos is not None:
            caret = "\n  " + text + "\n  " + " " * pos + "^" if text else ""
            msg = f"{msg} at position {pos}{caret}"
        super().__init__(msg)


@dataclass(frozen=True)
class Signature:
    n_lorentz: int
    n_adjoint: int
    odd: bool = False
    const: bool = False


@dataclass
class Definition:
    name: str
    params: tuple          # Index objects in the order (lorentz..., adjoint...)
    body: Expression
    operator: bool = False

    @property
    def arity(self):
        nl = sum(p.kind == LORENTZ for p in self.params)
        return nl, len(self.params) - nl


class DefinitionTable:
    """Named macros keyed by (name, n_lorentz, n_adjoint); acyclic by construction."""

    def __init__(self):
        self._defs: dict = {}

    def add(self, d: Definition) -> None:
        key = (d.name,) + d.arity
        trial = dict(self._defs)
        trial[key] = d
        _check_acyclic(trial)
        self._defs = trial

    def get(self, name, nl, na):
        return self._defs.get((name, nl, na))

    def arities(self, name):
        return [k[1:] for k in self._defs if k[0] == name]

    def names(self):
        return {k[0] for k in self._defs}

    def __iter__(self):
        return iter(self._defs.values())

    def copy(self):
        t = DefinitionTable()
        t._defs = dict(self._defs)
        return t


def _macro_refs(expr: Expression, table: dict):
    refs = set()
    for (_, _, fs) in expr.terms:
        for f in fs:
            nl = sum(ix.kind == LORENTZ for ix in f.slots)
            key = (f.symbol, nl, len(f.slots) - nl)
            if key in table:
                refs.add(key)
    return refs


class CyclicDefinitionError(ValueError):
    pass


def _check_acyclic(table: dict) -> None:
    graph = {k: _macro_refs(d.body, table) for k, d in table.items()}
    state: dict = {}

    def visit(k, stack):
        if state.get(k) == 1:
            raise CyclicDefinitionError("cyclic definition: " + " -> ".join(s[0] for s in stack + [k]))
        if state.get(k) == 2:
            return
        state[k] = 1
        for r in graph[k]:
            visit(r, stack + [k])
        state[k] = 2

    for k in graph:
        visit(k, [])


@dataclass
class Context:
    """Symbol table: declared fields/params and the definition table."""
    symbols: dict = field(default_factory=dict)   # name -> list[Signature]
    definitions: DefinitionTable = field(default_factory=DefinitionTable)

    def declare(self, name: str, n_lorentz: int, n_adjoint: int, odd=False, const=False):
        sigs = [s for s in self.symbols.get(name, [])
                if (s.n_lorentz, s.n_adjoint) != (n_lorentz, n_adjoint)]
        sigs.append(Signature(n_lorentz, n_adjoint, odd, const))
        self.symbols[name] = sigs

    def copy(self) -> "Context":
        return Context({k: list(v) for k, v in self.symbols.items()}, self.definitions.copy())

    def signatures(self, name):
        out = [(s.n_lorentz, s.n_adjoint) for s in self.symbols.get(name, [])]
        out += self.definitions.arities(name)
        if name == "f":
            out.append((0, 3))
        elif name == "g":
            out.append((2, 0))
        elif name == "delta":
            out.append((0, 2))
        return out

    def lookup(self, name, nl, na) -> Signature | None:
        for s in self.symbols.get(name, []):
            if (s.n_lorentz, s.n_adjoint) == (nl, na):
                return s
        return None

    def execute(self, text: str):
        """Run one statement; returns the Expression for expression statements."""
        return _Parser(text, self).statement()

    def run(self, program: str):
        out = None
        for line in program.splitlines():
            line = line.split("#!", 1)[0].strip()
            if line:
                out = self.execute(line)
        return out


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<assign>:=)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<name>[A-Za-z_%\#][A-Za-z0-9_%\#']*)
  | (?P<op>[\[\]();,^*+\-])
""", re.VERBOSE)


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, ctx: Context):
        self.text = text
        self.ctx = ctx
        self.toks = _tokenize(text)
        self.i = 0
        self.params = None   # free-index names allowed while parsing a definition body

    # token helpers
    def peek(self, k=0):
        return self.toks[self.i + k]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        t = self.next()
        if t[1] != value:
            raise ParseError(f"expected {value!r}, found {t[1] or 'end of input'!r}", t[2], self.text)
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok[2], self.text)

    # statements
    def statement(self):
        t = self.peek()
        if t[0] == "name" and t[1] in ("field", "param") and self.peek(1)[0] == "name":
            return self.declaration()
        # definition: NAME [ ... ] [_] :=
        if t[0] == "name" and self.peek(1)[1] == "[":
            j = self.i + 2
            depth = 1
            while depth and self.toks[j][0] != "eof":
                depth += {"[": 1, "]": -1}.get(self.toks[j][1], 0)
                j += 1
            after = self.toks[j]
            if after[0] == "assign" or (after[1] == PLACEHOLDER and self.toks[j + 1][0] == "assign"):
                return self.definition()
        e = self.expr()
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def _sig(self):
        self.expect("[")
        lor, adj = [], []
        cur = lor
        while self.peek()[1] != "]":
            t = self.next()
            if t[1] == ";":
                cur = adj
                continue
            if t[1] == ",":
                continue
            if t[0] != "name":
                raise self.error("expected index name", t)
            cur.append(t[1])
        self.expect("]")
        return lor, adj

    def declaration(self):
        kind = self.next()[1]
        name = self.next()
        if name[1] in TENSORS or name[1] in COUPLINGS or name[1] == "i":
            raise self.error(f"cannot redeclare reserved symbol {name[1]!r}", name)
        lor, adj = self._sig()
        stat = self.next()
        if stat[1] not in ("odd", "even"):
            raise self.error("expected 'odd' or 'even'", stat)
        self.ctx.declare(name[1], len(lor), len(adj), stat[1] == "odd", kind == "param")
        return None

    def definition(self):
        name = self.next()[1]
        lor, adj = self._sig()
        operator = False
        if self.peek()[1] == PLACEHOLDER:
            self.next()
            operator = True
        self.expect(":=")
        params = tuple(Index(LORENTZ, n) for n in lor) + tuple(Index(ADJOINT, n) for n in adj)
        if operator:
            self.ctx = self.ctx  # placeholder is resolved in atom()
        body = self.expr(allow_placeholder=operator)
        if self.peek()[0] != "eof":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        body_free = {ix.name for ix in body.free}
        want = {p.name for p in params}
        if body_free != want:
            raise ParseError(f"definition of {name}: body free indices {sorted(body_free)} "
                             f"do not match parameters {sorted(want)}")
        self.ctx.definitions.add(Definition(name, params, body, operator))
        return None

    # expressions
    def expr(self, allow_placeholder=False):
        self.allow_placeholder = allow_placeholder
        sign = 1
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1 if self.next()[1] == "-" else 1
        out = self.term() * sign
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            tok = self.next()
            t = self.term()
            try:
                out = out + t if tok[1] == "+" else out - t
            except IndexError_ as exc:
                raise ParseError(str(exc), tok[2], self.text) from None
        return out

    def term(self):
        out = self.factor()
        while self.peek()[1] == "*":
            tok = self.next()
            rhs = self.factor()
            try:
                out = multiply(out, rhs)
            except IndexError_ as exc:
                raise ParseError(str(exc), tok[2], self.text) from None
        return out

    def index(self, kind):
        up = False
        if self.peek()[1] == "^":
            self.next()
            up = True
        t = self.next()
        if t[0] not in ("name", "num") or "/" in t[1]:
            raise self.error("expected index", t)
        if kind == ADJOINT and up:
            raise self.error("adjoint indices have no position", t)
        ix = Index(kind, t[1], up)
        if ix.explicit:
            hi = 3 if kind == LORENTZ else 8
            lo = 0 if kind == LORENTZ else 1
            if not lo <= int(t[1]) <= hi:
                raise self.error(f"component {t[1]} out of range", t)
        return ix

    def bracket(self):
        """Raw bracket contents: (first list, second list or None)."""
        self.expect("[")
        first, second = [], None
        cur = first
        raw = []
        while self.peek()[1] != "]":
            if self.peek()[0] == "eof":
                raise self.error("unterminated '['")
            if self.peek()[1] == ";":
                self.next()
                second = []
                cur = second
                continue
            if self.peek()[1] == ",":
                self.next()
                continue
            up = False
            start = self.peek()
            if self.peek()[1] == "^":
                self.next()
                up = True
            t = self.next()
            if t[0] not in ("name", "num"):
                raise self.error("expected index", t)
            cur.append((t[1], up, start))
        self.expect("]")
        return first, second

    def _resolve(self, name, first, second, tok):
        sigs = self.ctx.signatures(name)
        if not sigs:
            raise self.error(f"undeclared symbol {name!r}", tok)
        if second is not None:
            want = (len(first), len(second))
            if want not in sigs:
                raise self.error(f"index arity mismatch for {name}: got {want}, declared {sorted(sigs)}", tok)
            return first, second
        n = len(first)
        cands = [s for s in sigs if s in ((n, 0), (0, n))]
        if len(cands) != 1:
            if not cands:
                raise self.error(f"index arity mismatch for {name}: {n} indices, declared {sorted(sigs)}", tok)
            raise self.error(f"ambiguous indices for {name}; use ';' to separate adjoint indices", tok)
        return (first, []) if cands[0] == (n, 0) else ([], first)

    def _make_indices(self, raw, kind):
        out = []
        for (nm, up, tok) in raw:
            if kind == ADJOINT and up:
                raise self.error("adjoint indices have no position", tok)
            ix = Index(kind, nm, up)
            if ix.explicit:
                lo, hi = (0, 3) if kind == LORENTZ else (1, 8)
                if not lo <= int(nm) <= hi:
                    raise self.error(f"component {nm} out of range", tok)
            out.append(ix)
        return out

    def factor(self):
        t = self.peek()
        if t[0] == "num":
            self.next()
            return Expression.scalar(Fraction(t[1]))
        if t[1] == "(":
            self.next()
            keep = getattr(self, "allow_placeholder", False)
            e = self.expr(keep)
            self.expect(")")
            return e
        if t[0] != "name":
            raise self.error(f"unexpected token {t[1] or 'end of input'!r}")
        name = t[1]
        if name == "i" and self.peek(1)[1] != "[":
            self.next()
            return Expression.scalar(1, ipow=1)
        if name in COUPLINGS and self.peek(1)[1] != "[":
            self.next()
            power = Fraction(1)
            if self.peek()[1] == "^":
                self.next()
                power = self._power()
            return Expression.scalar(1, couplings=((name, power),))
        if name == "d" and self.peek(1)[1] == "[":
            self.next()
            self.expect("[")
            mu = self.index(LORENTZ)
            self.expect("]")
            operand = self.factor()
            try:
                return total_derivative(operand, mu)
            except IndexError_ as exc:
                raise ParseError(str(exc), t[2], self.text) from None
        if name == PLACEHOLDER:
            if not getattr(self, "allow_placeholder", False):
                raise self.error("placeholder '_' outside an operator definition")
            self.next()
            return make_atom(PLACEHOLDER)
        self.next()
        if self.peek()[1] == "[":
            first, second = self.bracket()
        else:
            first, second = [], None
        lor_raw, adj_raw = self._resolve(name, first, second, t)
        lor = self._make_indices(lor_raw, LORENTZ)
        adj = self._make_indices(adj_raw, ADJOINT)
        nl, na = len(lor), len(adj)
        d = self.ctx.definitions.get(name, nl, na)
        try:
            if d is not None and d.operator:
                operand = self.factor()
                return apply_operator(d, lor + adj, operand)
            if name in TENSORS:
                return tensor_atom(name, lor, adj)
            if d is not None:
                return make_atom(name, lor, adj)
            sig = self.ctx.lookup(name, nl, na)
            return make_atom(name, lor, adj, odd=sig.odd, const=sig.const)
        except IndexError_ as exc:
            raise ParseError(str(exc), t[2], self.text) from None

    def _power(self):
        if self.peek()[1] == "(":
            self.next()
            neg = False
            if self.peek()[1] == "-":
                self.next()
                neg = True
            tok = self.next()
            self.expect(")")
            p = Fraction(tok[1])
            return -p if neg else p
        if self.peek()[1] == "-":
            self.next()
            return -Fraction(self.next()[1])
        tok = self.next()
        if tok[0] != "num":
            raise self.error("expected exponent", tok)
        return Fraction(tok[1])


def tensor_atom(name, lor, adj) -> Expression:
    if name == "g":
        return Expression.from_factors((Factor("g", False, True, (), tuple(lor)),))
    return Expression.from_factors((Factor(name, False, True, (), tuple(adj)),))


# ---------------------------------------------------------------------------
# macro expansion

def instantiate(body: Expression, params, actual) -> Expression:
    """Substitute actual indices for the free ``params`` of a template body."""
    if len(actual) != len(params):
        raise IndexError_(f"expected {len(params)} indices, got {len(actual)}")
    pnames = {p.name for p in params}
    avoid = {ix.name for ix in actual} | pnames
    terms = {}
    for (ip, cp, fs), c in body.terms.items():
        # fresh dummies so the body cannot capture names used at the call site
        fs = rename_dummies(fs, (_all_body_names(fs) - pnames) | avoid)
        terms[(ip, cp, fs)] = terms.get((ip, cp, fs), 0) + c
    body = Expression(terms)
    # two-step rename avoids collisions between parameter and actual names
    tmp = {p.name: p.renamed(fresh_name()) for p in params}
    body = rename_free(body, {k: _pos_like(body, k, v) for k, v in tmp.items()})
    final = {tmp[p.name].name: a for p, a in zip(params, actual)}
    return rename_free(body, final)


def _instantiate(d: Definition, actual) -> Expression:
    return instantiate(d.body, d.params, actual)


def _all_body_names(fs):
    return {ix.name for f in fs for ix in f.indices() if not ix.explicit}


def _pos_like(body, name, ix):
    for f in body.free:
        if f.name == name:
            return ix.raised(f.up)
    return ix


def substitute_atom(expr: Expression, symbol: str, replace) -> Expression:
    """Replace every atom ``symbol`` (with its derivatives) by ``replace(factor)``.

    ``replace`` returns an Expression whose free indices equal the factor's
    own slots; derivatives on the atom are applied to the replacement.
    Replacement happens in place, so no grading sign arises.
    """
    out = Expression.zero()
    for key, c in expr.terms.items():
        ip, cp, fs = key
        pos = next((k for k, f in enumerate(fs) if f.symbol == symbol), None)
        if pos is None:
            out = out + Expression({key: c})
            continue
        fac = fs[pos]
        rep = replace(fac)
        for mu in fac.derivs:
            rep = total_derivative(rep, mu)
        left = Expression({(ip, cp, fs[:pos]): c}, check=False)
        right = Expression({(0, (), fs[pos + 1:]): 1}, check=False)
        piece = multiply(multiply(left, rep), right)
        piece = substitute_atom(piece, symbol, replace)
        out = out + piece
    return out


def apply_operator(d: Definition, actual, operand: Expression) -> Expression:
    body = _instantiate(d, actual)
    return substitute_atom(body, PLACEHOLDER, lambda fac: operand)


def substitute_definitions(expr: Expression, defs: DefinitionTable) -> Expression:
    """Expand every macro atom until only primitive fields remain."""
    names = defs.names()
    changed = True
    while changed:
        changed = False
        for d in defs:
            if d.operator:
                continue
            nl, na = d.arity

            def matches(f, d=d, nl=nl, na=na):
                k = sum(ix.kind == LORENTZ for ix in f.slots)
                return f.symbol == d.name and k == nl and len(f.slots) - k == na

            if not any(matches(f) for (_, _, fs) in expr.terms for f in fs):
                continue
            tag = "\x00" + d.name
            # mark the matching arity so overloaded names do not collide
            marked = Expression({(ip, cp, tuple(f._replace(symbol=tag) if matches(f) else f for f in fs)): c
                                 for (ip, cp, fs), c in expr.terms.items()}, check=False)
            expr = substitute_atom(marked, tag, lambda fac, d=d: _instantiate(d, list(fac.slots)))
            changed = True
    del names
    return expr


# ---------------------------------------------------------------------------
# default context

_BUILTIN_PROGRAM = r"""
field A[mu;a] even
field A[mu] even
field B[;a] even
field B[] even
field j[mu;a] even
field j[mu] even
field c[;a] odd
field cbar[;a] odd
field omega[;a] even
field omega[] even
param theta[;a] even
F[mu,nu;a] := d[mu]A[nu;a] - d[nu]A[mu;a] + g*f[a,b,c]*A[mu;b]*A[nu;c]
F[mu,nu] := d[mu]A[nu] - d[nu]A[mu]
D[mu;a,b] _ := d[mu](delta[a,b]*_) + g*f[a,c,b]*A[mu;c]*_
"""


def default_context() -> Context:
    ctx = Context()
    ctx.run(_BUILTIN_PROGRAM)
    return ctx


_DEFAULT = None


def builtin_context() -> Context:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = default_context()
    return _DEFAULT


def parse(text: str, ctx: Context | None = None, expand: bool = False) -> Expression:
    """Parse one expression; declarations/definitions use :meth:`Context.execute`."""
    ctx = ctx or builtin_context()
    out = _Parser(text, ctx).statement()
    if out is None:
        raise ParseError("expected an expression, got a declaration or definition")
    if expand:
        out = substitute_definitions(out, ctx.definitions)
    return out


# ---------------------------------------------------------------------------
# formatting

def _fmt_index(ix: Index) -> str:
    return ("^" if ix.up else "") + ix.name


def _fmt_factor(f: Factor) -> str:
    ds = "".join(f"d[{_fmt_index(ix)}]" for ix in f.derivs)
    lor = [s for s in f.slots if s.kind == LORENTZ]
    adj = [s for s in f.slots if s.kind == ADJOINT]
    if not f.slots:
        inner = ""
    elif lor and adj:
        inner = "[" + ",".join(map(_fmt_index, lor)) + ";" + ",".join(map(_fmt_index, adj)) + "]"
    else:
        inner = "[" + ",".join(map(_fmt_index, lor or adj)) + "]"
    return ds + f.symbol + inner


def _fmt_coupling(sym, p: Fraction) -> str:
    if p == 1:
        return sym
    if p.denominator == 1 and p > 0:
        return f"{sym}^{p.numerator}"
    return f"{sym}^({p})"


def format_monomial(key, coeff: Fraction) -> str:
    ip, cp, fs = key
    parts = []
    mag = abs(coeff)
    if mag != 1 or (not ip and not cp and not fs):
        parts.append(str(mag))
    if ip:
        parts.append("i")
    parts += [_fmt_coupling(s, p) for s, p in cp]
    parts += [_fmt_factor(f) for f in fs]
    return ("-" if coeff < 0 else "") + "*".join(parts)


def format_expression(expr: Expression) -> str:
    if expr.is_empty():
        return "0"
    out = ""
    for key, c in expr.terms.items():
        s = format_monomial(key, c)
        if not out:
            out = s
        elif s.startswith("-"):
            out += " - " + s[1:]
        else:
            out += " + " + s
    return out
