from fractions import Fraction

import pytest
from hypothesis import given, settings

from gev.symbolic.canon import canon_equal, canonicalize, hermitian_conjugate
from gev.symbolic.core import (Expression, IndexError_, L, ghost_number, grassmann_degree,
                               total_derivative)
from gev.symbolic.parser import ParseError, builtin_context, format_expression, parse
from gev.symbolic.reduce import (NO_CONSTRAINTS, Constraint, ConstraintSet, is_zero,
                                 reduce_jacobi)
from strategies import expressions

P = lambda s: parse(s, expand=True)


def zero(text):
    return canonicalize(P(text)).is_empty()


# --- parsing -------------------------------------------------------------

@pytest.mark.parametrize("text", [
    "A[mu;a]*A[^mu;a]",
    "-1/2*g*f[a,b,c]*c[b]*c[c]",
    "i*d[^mu]cbar[a]*d[mu]c[a]",
    "B*B",
    "e*A[mu]*j[^mu]",
    "alpha^2*B[a]*B[a]",
])
def test_format_parse_roundtrip(text):
    e = parse(text)
    assert parse(format_expression(e)) == e


@pytest.mark.parametrize("bad", [
    "A[mu;a] + B[a]",        # free index mismatch
    "A[mu;a]*A[mu;a]*A[mu;b]",
    "A[mu;a",
    "alpha/2*B[a]*B[a]",
    "Q[mu]",
])
def test_parse_errors(bad):
    with pytest.raises((ParseError, IndexError_, ValueError)):
        parse(bad)


def test_free_signature_checked():
    with pytest.raises(IndexError_):
        parse("A[mu;a]") + parse("A[nu;a]")


def test_macro_expansion_of_field_strength():
    F = P("F[mu,nu;a]")
    ref = P("d[mu]A[nu;a] - d[nu]A[mu;a] + g*f[a,b,c]*A[mu;b]*A[nu;c]")
    assert canon_equal(F, ref)


def test_covariant_derivative_operator():
    lhs = P("D[mu;a,b]c[b]")
    assert canon_equal(lhs, P("d[mu]c[a] + g*f[a,d,b]*A[mu;d]*c[b]"))


def test_context_copy_is_isolated():
    ctx = builtin_context().copy()
    ctx.execute("field X[mu] even")
    parse("X[mu]*X[^mu]", ctx)
    with pytest.raises(Exception):
        parse("X[mu]*X[^mu]")


# --- grading ---------------------------------------------------------------

def test_odd_square_vanishes():
    assert zero("c[a]*c[a]")
    assert zero("cbar[a]*cbar[a]")
    assert not zero("B[a]*B[a]")


def test_odd_swap_sign():
    assert canon_equal(P("c[a]*cbar[b]"), P("-cbar[b]*c[a]"))
    assert canon_equal(P("c[a]*B[b]"), P("B[b]*c[a]"))


def test_antisymmetric_structure_constant():
    assert zero("f[a,a,b]*B[b]")
    assert zero("f[a,b,c]*B[a]*B[b]")
    assert not zero("f[a,b,c]*c[a]*c[b]")
    assert canon_equal(P("f[a,b,c]*c[a]*c[b]*B[c]"), P("f[b,a,c]*c[b]*c[a]*B[c]"))


def test_metric_contraction():
    assert canon_equal(P("g[mu,nu]*A[^mu;a]*A[^nu;a]"), P("A[mu;a]*A[^mu;a]"))
    assert canon_equal(P("g[mu,^mu]"), Expression.scalar(4))
    assert canon_equal(P("delta[a,b]*B[a]*B[b]"), P("B[a]*B[a]"))


def test_ghost_number_and_degree():
    assert ghost_number(P("c[a]")) == 1
    assert ghost_number(P("cbar[a]*c[a]")) == 0
    assert ghost_number(P("f[a,b,c]*c[b]*c[c]")) == 2
    assert grassmann_degree(P("cbar[a]*c[a]*B[b]")) == 2
    assert grassmann_degree(P("B[a]*B[a]")) == 0


def test_leibniz_rule():
    mu = L("mu")
    lhs = total_derivative(P("B[a]*c[a]"), mu)
    assert canon_equal(lhs, P("d[mu]B[a]*c[a] + B[a]*d[mu]c[a]"))


def test_hermitian_conjugate_of_ghost_kinetic():
    k = P("i*d[mu]cbar[a]*d[^mu]c[a]")
    assert canon_equal(hermitian_conjugate(k), k)
    assert not canon_equal(hermitian_conjugate(P("cbar[a]*c[a]")), P("cbar[a]*c[a]"))


# --- canonical form properties ---------------------------------------------

@settings(max_examples=60, deadline=None)
@given(expressions())
def test_canonicalize_idempotent(e):
    c = canonicalize(e)
    assert canonicalize(c) == c


@settings(max_examples=60, deadline=None)
@given(expressions())
def test_canonical_roundtrip_through_text(e):
    c = canonicalize(e)
    assert canonicalize(parse(format_expression(c))) == c


@settings(max_examples=40, deadline=None)
@given(expressions(), expressions())
def test_canonicalize_is_linear(a, b):
    assert canonicalize(a + b) == canonicalize(canonicalize(a) + canonicalize(b))


def test_square_of_symmetric_monomial_is_canonical():
    m = "f[a,b,c]*f[c,d,e]*A[mu;a]*A[^mu;d]*B[b]*B[e]"
    sq = P(f"{m}*{m.replace('a', 'p').replace('b', 'q').replace('c', 'r').replace('d', 's').replace('e', 't').replace('mu', 'nu')}")
    assert canonicalize(sq) == canonicalize(canonicalize(sq) + P("A[mu;a]*A[^mu;a]")) - canonicalize(P("A[mu;a]*A[^mu;a]"))
    assert canon_equal(sq, P(m) * P(m))


@settings(max_examples=40, deadline=None)
@given(expressions())
def test_difference_with_self_is_zero(e):
    assert canon_equal(e, e)
    assert is_zero(e - e)[0]


# --- reduction ---------------------------------------------------------------

def test_jacobi_identity_reduces_to_zero():
    j = P("f[a,b,e]*f[e,c,d]*B[a]*B[b]*c[c]*cbar[d]"
          " + f[b,c,e]*f[e,a,d]*B[a]*B[b]*c[c]*cbar[d]"
          " + f[c,a,e]*f[e,b,d]*B[a]*B[b]*c[c]*cbar[d]")
    assert reduce_jacobi(canonicalize(j)).is_empty()
    ok, cert = is_zero(j)
    assert ok and cert.kind == "exact-zero"


def test_triple_ghost_product_vanishes_by_jacobi():
    ok, cert = is_zero(P("f[a,b,e]*f[e,c,d]*c[a]*c[b]*c[c]"))
    assert ok


def test_nonzero_gives_witness():
    ok, cert = is_zero(P("B[a]*B[a]"))
    assert not ok and cert.kind == "nonzero-witness" and cert.witness


def test_constraint_reduction():
    cs = ConstraintSet((Constraint("d.j", P("d[mu]j[^mu]")),), closure_order=1)
    ok, cert = is_zero(P("e*d[mu]j[^mu]*B - 2*d[nu]d[mu]j[^mu]*A[^nu]"), cs)
    assert ok and cert.kind == "constraint-reduced"
    assert set(cert.used_constraints) == {"d.j", "d.j'"}
    assert not is_zero(P("e*d[mu]j[^mu]*B"), NO_CONSTRAINTS)[0]


def test_constraint_does_not_hide_real_terms():
    cs = ConstraintSet((Constraint("d.j", P("d[mu]j[^mu]")),), closure_order=1)
    ok, _ = is_zero(P("d[mu]j[^mu]*B + j[mu]*A[^mu]"), cs)
    assert not ok


def test_coefficients_are_exact_rationals():
    e = canonicalize(P("1/3*B[a]*B[a] + 1/6*B[a]*B[a]"))
    (_, c), = e.terms.items()
    assert c == Fraction(1, 2)
