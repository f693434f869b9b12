import pytest

from gev.suite.models import ModelId, build_model, build_transformation
from gev.symbolic.canon import canon_equal
from gev.symbolic.core import L
from gev.symbolic.parser import parse
from gev.symbolic.reduce import is_zero
from gev.variational import (FieldSpec, NotASymmetry, TransformationRule, apply_transformation,
                             euler_lagrange, is_total_derivative, momentum, noether_current,
                             noether_identity_check)

P = lambda s: parse(s, expand=True)


@pytest.mark.parametrize("lagrangian, field, expected", [
    ("1/2*d[mu]omega*d[^mu]omega", "omega", "-d[mu]d[^mu]omega"),
    ("1/2*d[mu]omega*d[^mu]omega - 1/2*e*omega*omega*omega", "omega",
     "-d[mu]d[^mu]omega - 3/2*e*omega*omega"),
    ("B*d[mu]A[^mu] + 1/2*a*B*B", "B", "d[mu]A[^mu] + a*B"),
    # the derivative with respect to A_nu carries an upper nu
    ("B*d[mu]A[^mu]", "A[nu]", "-d[^nu]B"),
    ("-1/4*F[mu,nu]*F[^mu,^nu]", "A[nu]", "d[mu]d[^mu]A[^nu] - d[^nu]d[mu]A[^mu]"),
    # second-order densities: -1/2 omega box omega ~ 1/2 (d omega)^2
    ("-1/2*omega*d[mu]d[^mu]omega", "omega", "-d[mu]d[^mu]omega"),
    ("1/2*d[mu]d[^mu]omega*d[nu]d[^nu]omega", "omega", "d[mu]d[^mu]d[nu]d[^nu]omega"),
])
def test_euler_lagrange_bosonic(lagrangian, field, expected):
    assert canon_equal(euler_lagrange(P(lagrangian), FieldSpec.parse(field)), P(expected))


def test_left_derivative_for_ghosts():
    L_gh = P("i*d[mu]cbar[a]*d[^mu]c[a]")
    assert canon_equal(euler_lagrange(L_gh, FieldSpec.parse("c[a]")), P("i*d[mu]d[^mu]cbar[a]"))
    assert canon_equal(euler_lagrange(L_gh, FieldSpec.parse("cbar[a]")), P("-i*d[mu]d[^mu]c[a]"))


def test_momentum_of_scalar():
    lam = L("lam", up=True)
    pi = momentum(P("1/2*d[mu]omega*d[^mu]omega"), FieldSpec.parse("omega"), lam)
    assert canon_equal(pi, P("d[^lam]omega"))


def test_field_spec_rejects_composites():
    with pytest.raises(ValueError):
        FieldSpec.parse("d[mu]B[a]")
    assert FieldSpec.parse("A[mu;a]").arity == (1, 1)
    assert FieldSpec.parse("c[a]").odd


def test_euler_lagrange_of_divergence_vanishes():
    L_div = P("d[mu](B[a]*A[^mu;a]) + d[mu](f[a,b,c]*cbar[a]*c[b]*A[^mu;c])")
    for f in ("A[mu;a]", "B[a]", "c[a]", "cbar[a]"):
        assert is_zero(euler_lagrange(L_div, FieldSpec.parse(f)))[0]


@pytest.mark.parametrize("text, expected", [
    ("d[mu](B[a]*A[^mu;a])", True),
    ("d[mu]B[a]*d[^mu]B[a] + B[a]*d[mu]d[^mu]B[a]", True),
    ("B[a]*B[a]", False),
    ("d[mu]B[a]*A[^mu;a]", False),
])
def test_total_derivative_detection(text, expected):
    ok, cert = is_total_derivative(P(text))
    assert ok is expected


def test_total_derivative_returns_current():
    ok, cert, K = is_total_derivative(P("d[mu]cbar[a]*d[^mu]c[a] + cbar[a]*d[mu]d[^mu]c[a]"),
                                      return_current=True)
    assert ok
    lam = L("lam")
    from gev.symbolic.core import total_derivative
    assert canon_equal(total_derivative(K, lam), P("d[mu]cbar[a]*d[^mu]c[a] + cbar[a]*d[mu]d[^mu]c[a]"))


@pytest.mark.parametrize("field", ["A[mu;a]", "B[a]", "c[a]", "cbar[a]"])
def test_brs_is_nilpotent(field):
    s = build_transformation("brs")
    assert is_zero(apply_transformation(apply_transformation(P(field), s), s))[0]


def test_odd_transformation_leibniz_sign():
    s = build_transformation("brs")
    got = apply_transformation(P("cbar[a]*c[a]"), s)
    assert canon_equal(got, P("i*B[a]*c[a] + 1/2*g*f[a,b,d]*cbar[a]*c[b]*c[d]"))


def test_even_transformation_leibniz():
    t = TransformationRule.from_strings("scale", "even", {"B[a]": "2*B[a]"})
    assert canon_equal(apply_transformation(P("B[a]*B[a]*c[b]"), t), P("4*B[a]*B[a]*c[b]"))


def test_brs_leaves_gauge_fixed_density_invariant_up_to_divergence():
    L_q = build_model(ModelId.YM_QUANTUM)
    src_free = L_q - P("g*j[nu;a]*A[^nu;a]")
    ok, cert = is_total_derivative(apply_transformation(src_free, build_transformation("brs")))
    assert ok


def test_ghost_scale_noether_identity():
    ok, cert, res = noether_identity_check(build_model(ModelId.YM_QUANTUM),
                                           build_transformation("ghost-scale"))
    assert ok
    assert canon_equal(res.current, P("i*cbar[a]*d[^lam]c[a] - i*d[^lam]cbar[a]*c[a]"
                                      " - i*g*f[a,b,d]*A[^lam;a]*cbar[b]*c[d]"))


def test_noether_needs_first_order_density():
    t = build_transformation("ghost-scale")
    with pytest.raises(ValueError):
        noether_current(P("i*cbar[a]*d[mu]d[^mu]c[a]"), t)


def test_non_symmetry_is_rejected():
    t = TransformationRule.from_strings("shift-B", "even", {"B[a]": "B[a]*B[a]*B[a]"})
    with pytest.raises(NotASymmetry):
        noether_current(build_model(ModelId.YM_QUANTUM), t)
