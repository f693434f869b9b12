"""Claim catalog and verification strategies."""
from __future__ import annotations

import json
import time
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from ..jet import GroupData, numeric_identity_check
from ..symbolic.canon import canonicalize, hermitian_conjugate
from ..symbolic.core import Adj, Expression, L, ghost_number, multiply, rename_free, total_derivative
from ..symbolic.parser import builtin_context, format_expression
from ..symbolic.reduce import NO_CONSTRAINTS, Certificate, Constraint, ConstraintSet, is_zero
from ..variational import (FieldSpec, _strip_parameter, _varied_fields, _variation_of,
                           apply_transformation, euler_lagrange, is_total_derivative,
                           noether_current, noether_identity_check)
from .models import (FP_TERM, P, SOURCE_RULES, ModelId, abelian_constraints, build_model,
                     build_transformation, nonabelian_constraints)

ABELIAN_CLAIMS = ("AB1", "AB2", "AB3")
CONDITIONAL = {"NA9": "brs", "NA10": "global-gauge"}


@lru_cache(maxsize=None)
def _catalog():
    text = resources.files("gev.suite").joinpath("catalog.json").read_text()
    return json.loads(text)


def list_claims():
    """Ids, anchors, strategies and descriptions, in catalog order."""
    return [dict(id=k, **v) for k, v in _catalog().items()]


@dataclass
class Check:
    label: str
    residual: Expression
    constraints: ConstraintSet
    ok: bool
    certificate: Certificate


@dataclass
class VerificationResult:
    claim_id: str
    anchor: str
    strategy: str
    status: str                           # verified | failed | conditional
    certificate: dict
    wall_time: float = 0.0
    numeric: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self, timings: bool = False) -> dict:
        d = {"id": self.claim_id, "equation_anchor": self.anchor, "strategy": self.strategy,
             "status": self.status, "certificate": self.certificate,
             "assumptions": list(self.assumptions), "notes": list(self.notes),
             "numeric": list(self.numeric)}
        if timings:
            d["wall_time"] = round(self.wall_time, 3)
        return d


def _check(label, residual, constraints=NO_CONSTRAINTS) -> Check:
    ok, cert = is_zero(residual, constraints)
    return Check(label, residual, constraints, ok, cert)


_KIND_RANK = {"exact-zero": 0, "el-vanishing": 1, "constraint-reduced": 2, "nonzero-witness": 3}


def combine(checks) -> dict:
    """Merge per-check certificates; the weakest kind wins."""
    kind = max((c.certificate.kind for c in checks), key=_KIND_RANK.get)
    used, mults, parts = [], [], []
    jac = anti = 0
    witness = None
    for c in checks:
        cert = c.certificate
        used += [u for u in cert.used_constraints if u not in used]
        mults += [{"check": c.label, "constraint": n, "multiplier": m} for n, m in cert.multipliers]
        jac += cert.jacobi_relations
        anti += cert.antisymmetry_rewrites
        if not c.ok and witness is None:
            witness = cert.witness
        parts.append({"check": c.label, "kind": cert.kind, "witness": cert.witness,
                      "notes": list(cert.notes)})
    return {"kind": kind, "used_constraints": used, "multipliers": mults,
            "reduction_trace": {"jacobi_relations": jac, "antisymmetry_rewrites": anti},
            "witness": witness, "parts": parts}


# ---------------------------------------------------------------------------
# helpers shared by several claims

def el(model, field_text):
    return euler_lagrange(build_model(model), FieldSpec.parse(field_text))


def verify_brs_exact(expr: Expression, witness: Expression, rule: str = "brs"):
    """expr == s(witness) modulo antisymmetry and Jacobi."""
    gw, ge = ghost_number(witness), ghost_number(expr)
    if isinstance(gw, int) and isinstance(ge, int) and gw != ge - 1:
        return False, Certificate("nonzero-witness", notes=[f"ghost numbers {ge} and {gw} do not match"])
    s = apply_transformation(witness, build_transformation(rule))
    return is_zero(expr - s)


def _brs_check(label, expr, witness):
    s = apply_transformation(witness, build_transformation("brs"))
    ok, cert = verify_brs_exact(expr, witness)
    return Check(label, expr - s, NO_CONSTRAINTS, ok, cert)


# ---------------------------------------------------------------------------
# claims

def _ab1():
    r = el(ModelId.ABELIAN_CLASSICAL, "A[nu]") - P("d[mu]F[^mu,^nu] + e*j[^nu]")
    return [_check("EL[A] - field equation", r)], [], []


def _ab2():
    m = ModelId.ABELIAN_QUANTUM
    r1 = el(m, "A[nu]") - P("d[mu]F[^mu,^nu] - d[^nu]B + e*j[^nu]")
    r2 = el(m, "B") - P("d[^mu]A[mu] + a*B")
    return [_check("EL[A] - first equation", r1), _check("EL[B] - second equation", r2)], [], []


def _ab3():
    r = P("d[nu](d[mu]F[^mu,^nu] - d[^nu]B + e*j[^nu]) + d[nu]d[^nu]B")
    return [_check("d.(first equation) + box B", r, abelian_constraints())], [], []


def _na1():
    t = build_transformation("gauge-nonabelian")
    r = apply_transformation(P("F[mu,nu;a]*F[^mu,^nu;a]"), t)
    return [_check("gauge variation of F.F", r)], [], []


def _na2():
    r = el(ModelId.YM_CLASSICAL, "A[nu;a]") - P("D[mu;a,b]F[^mu,^nu;b] + g*j[^nu;a]")
    return [_check("EL[A] - field equation", r)], [], []


def _na3():
    r1 = P("D[nu;c,a](D[mu;a,b]F[^mu,^nu;b])")
    e = el(ModelId.YM_CLASSICAL, "A[nu;a]")
    dE = _cov_div(e)
    return [_check("D.D.F", r1),
            _check("D.(EL[A]) vanishes on D.j = 0", dE, nonabelian_constraints())], [], []


def _cov_div(e):
    """D_nu^{ca} applied to an expression with free ^nu and adjoint a."""
    d = total_derivative(e, L("nu"))
    d = rename_free(d, {"a": Adj("c")})
    rot = multiply(P("g*f[c,q,a]*A[nu;q]"), e)
    return d + rot


def _na4():
    r1 = P("(D[mu;a,b]F[^mu,^nu;b] + g*j[^nu;a]) - (d[mu]F[^mu,^nu;a] + g*(j[^nu;a] + f[a,c,b]*A[mu;c]*F[^mu,^nu;b]))")
    r2 = P("d[nu]d[mu]F[^mu,^nu;a]")
    return [_check("covariant form - ordinary form", r1), _check("d d F", r2)], [], []


@lru_cache(maxsize=None)
def _x_context():
    ctx = builtin_context().copy()
    ctx.execute("field X[;a] even")
    return ctx


def _na5():
    ctx = _x_context()
    r = P("D[mu;a,b]D[nu;b,c]X[c] - D[nu;a,b]D[mu;b,c]X[c] + g*f[a,b,q]*F[mu,nu;q]*X[b]", ctx)
    return [_check("[D_mu, D_nu] X + g f F X", r)], [], []


def _na6():
    m = ModelId.YM_QUANTUM
    checks = [
        _check("EL[A] - first equation",
               el(m, "A[nu;a]") - P("D[mu;a,b]F[^mu,^nu;b] - d[^nu]B[a] + g*j[^nu;a]"
                                    " + i*g*f[a,b,c]*d[^nu]cbar[b]*c[c]")),
        _check("EL[B] - second equation", el(m, "B[a]") - P("d[mu]A[^mu;a] + alpha*B[a]")),
        _check("EL[c] - (-i) third equation", el(m, "c[a]") + P("i*D[mu;a,b]d[^mu]cbar[b]")),
        _check("EL[cbar] - (i) fourth equation", el(m, "cbar[a]") - P("i*d[mu]D[^mu;a,b]c[b]")),
    ]
    notes = ["EL[A] equals LHS - RHS of the first equation; EL[c] = -i D(d cbar); EL[cbar] = i d(D c)"]
    return checks, [], notes


def _na7():
    lfp = P(FP_TERM)
    return [_check("L_FP^dagger - L_FP", hermitian_conjugate(lfp) - lfp)], [], []


def _na8():
    t = build_transformation("brs")
    r = apply_transformation(P("F[mu,nu;a]"), t) - P("g*f[a,c,b]*F[mu,nu;c]*c[b]")
    return [_check("s(F) - g f F c", r)], [], []


def _na9():
    cs = nonabelian_constraints()
    dL = apply_transformation(build_model(ModelId.YM_QUANTUM), build_transformation("brs"))
    ok, cert, K = is_total_derivative(dL, cs, return_current=True)
    residual = dL - _div(K) if K is not None else dL
    checks = [Check("s(L) is a divergence modulo D.j", residual, cs, ok, cert)]
    notes = []
    alt = apply_transformation(build_model(ModelId.YM_QUANTUM), build_transformation("brs-rotating-source"))
    ok_alt, _ = is_total_derivative(alt, cs)
    notes.append(f"with source rule {SOURCE_RULES['brs-rotating-source']}: "
                 f"{'divergence' if ok_alt else 'not a divergence'} modulo D.j")
    ok_abel, _ = is_total_derivative(alt, ConstraintSet((_ordinary_div_j(),)))
    notes.append(f"with the rotating source rule and d.j = 0 instead: "
                 f"{'divergence' if ok_abel else 'not a divergence'}")
    if K is not None:
        notes.append(f"K^lam = {format_expression(K)}")
    return checks, [SOURCE_RULES["brs"]], notes


def _ordinary_div_j():
    return Constraint("d.j", P("d[mu]j[^mu;a]"))


def _div(K):
    return total_derivative(K, L("lam"))


GLOBAL_CURRENT = ("f[a,b,c]*A[^nu;b]*F[nu,lam;c] + j[lam;a] + f[a,b,c]*A[lam;b]*B[c]"
       " - i*f[a,b,c]*cbar[b]*D[lam;c,d]c[d] + i*f[a,b,c]*d[lam]cbar[b]*c[c]")


def _na10():
    m = build_model(ModelId.YM_QUANTUM)
    t = build_transformation("global-gauge")
    cs = nonabelian_constraints()
    inv = _check("global variation of L", apply_transformation(m, t))
    res = noether_current(m, t, cs, parameter_index="a")
    J = rename_free(res.current, {"lam": L("lam")})
    match = _check("Noether current + j - global current", J + P("j[lam;a]") - P(GLOBAL_CURRENT))
    ok, cert, _ = noether_identity_check(m, t, cs, parameter_index="a")
    ident_res = _identity_residual(m, t, res.current)
    ident = Check("d.J + sum delta(phi) EL[phi]", ident_res, cs, ok, cert)
    notes = ["the density has no kinetic term for the source, so the Noether current "
             "lacks j; the matter current is added before comparing",
             f"J^lam = {format_expression(res.current)}"]
    return [inv, match, ident], [SOURCE_RULES["global-gauge"]], notes


def _identity_residual(m, t, current):
    lhs = total_derivative(current, L("lam"))
    for phi in _varied_fields(m, t):
        dphi = _variation_of(phi, t)
        if not dphi.is_empty():
            lhs = lhs + _strip_parameter(multiply(dphi, euler_lagrange(m, phi)), t, "a")
    return lhs


def _na11():
    jcal = GLOBAL_CURRENT.replace("lam", "rho")
    rearranged = "d[mu]F[^mu,^nu;a] + g*f[a,c,b]*A[mu;c]*F[^mu,^nu;b] - (d[^nu]B[a] - g*j[^nu;a] - i*g*f[a,b,c]*d[^nu]cbar[b]*c[c])"
    jup = f"g[^nu,^rho]*({jcal})"
    rewritten = (f"d[mu]F[^mu,^nu;a] + g*{jup}"
            " - (D[^nu;a,c]B[c] - i*g*f[a,b,c]*cbar[b]*D[^nu;c,d]c[d])")
    line2 = ("j[rho;a] + f[a,c,b]*A[^sig;c]*F[sig,rho;b] + f[a,b,c]*A[rho;b]*B[c]"
             " - i*f[a,b,c]*cbar[b]*D[rho;c,d]c[d] + i*f[a,b,c]*d[rho]cbar[b]*c[c]")
    checks = [_check("rewritten equation - original rearranged", P(rewritten) - P(rearranged)),
              _check("global current, first line - second line", P(jcal) - P(line2))]
    notes = ["the current definition J = j + f A F is the reference used between the two lines"]
    return checks, [], notes


REWRITTEN_RHS = "D[^nu;a,c]B[c] - i*g*f[a,b,c]*cbar[b]*D[^nu;c,d]c[d]"


def _na12():
    c = _brs_check("rhs - s(-i D cbar)", P(REWRITTEN_RHS), P("-i*D[^nu;a,b]cbar[b]"))
    notes = ["between states annihilated by the BRS charge the expectation of a BRS variation vanishes"]
    return [c], [], notes


def _na13():
    c = _brs_check("f A B - i f cbar (D c) - s(i f cbar A)",
                   P("f[a,b,c]*A[mu;b]*B[c] - i*f[a,b,c]*cbar[b]*D[mu;c,d]c[d]"),
                   P("i*f[a,b,c]*cbar[b]*A[mu;c]"))
    return [c], [], ["the variation picks up a sign when it passes the odd cbar"]


def _na14():
    m = build_model(ModelId.YM_QUANTUM)
    t = build_transformation("ghost-scale")
    inv = _check("ghost-scale variation of L", apply_transformation(m, t))
    res = noether_current(m, t)
    match = _check("Noether current - ghost current",
                   res.current - P("i*cbar[a]*D[^lam;a,b]c[b] - i*d[^lam]cbar[a]*c[a]"))
    ok, cert, _ = noether_identity_check(m, t)
    ident = Check("d.J + sum delta(phi) EL[phi]", _identity_residual(m, t, res.current),
                  NO_CONSTRAINTS, ok, cert)
    return [inv, match, ident], [], []


def _na15():
    x = P("i*f[a,b,c]*d[mu]cbar[b]*c[c]")
    dx = apply_transformation(x, build_transformation("ghost-charge"))
    c = _check("X + 1/2 delta_gh X", x + dx * Fraction(1, 2))
    even = apply_transformation(x, build_transformation("ghost-scale"))
    notes = ["ghost-charge variation changes sign each time it passes a ghost",
             f"without that sign rule the variation is {format_expression(canonicalize(even)) or '0'}"]
    return [c], [], notes


def _na17():
    c1 = _brs_check("B - s(-i cbar)", P("B[a]"), P("-i*cbar[a]"))
    s = apply_transformation(P("-i*cbar[a]"), build_transformation("brs"))
    r = P("d[mu]A[^mu;a]") + P("alpha") * s - P("d[mu]A[^mu;a] + alpha*B[a]")
    return [c1, _check("gauge condition with B = -i s(cbar)", r)], [], []


def _na18():
    x = P("D[mu;a,b]d[^mu]cbar[b]")
    gn = ghost_number(x)
    dx = apply_transformation(x, build_transformation("ghost-scale"))
    c = _check("delta_gh X + X", dx + x)
    if gn != -1:
        c.ok = False
        c.certificate = Certificate("nonzero-witness", witness=f"ghost number {gn}")
    notes = [f"ghost number {gn}",
             "an operator of nonzero ghost number has vanishing expectation between ghost-number-zero states"]
    return [c], [], notes


def _na19():
    c = _brs_check("d(D c) - s(d.A)", P("d[mu]D[^mu;a,b]c[b]"), P("d[mu]A[^mu;a]"))
    return [c], [], []


_BUILDERS = {"AB1": _ab1, "AB2": _ab2, "AB3": _ab3, "NA1": _na1, "NA2": _na2, "NA3": _na3,
             "NA4": _na4, "NA5": _na5, "NA6": _na6, "NA7": _na7, "NA8": _na8, "NA9": _na9,
             "NA10": _na10, "NA11": _na11, "NA12": _na12, "NA13": _na13, "NA14": _na14,
             "NA15": _na15, "NA17": _na17, "NA18": _na18, "NA19": _na19}


class UnknownClaim(KeyError):
    pass


def claim_checks(claim_id: str):
    if claim_id not in _BUILDERS:
        raise UnknownClaim(claim_id)
    return _BUILDERS[claim_id]()


MODES = ("symbolic", "numeric", "both")


def verify_claim(claim_id: str, numeric: bool = False, groups=("su2", "su3"), trials: int = 100,
                 seed: int = 0, tol: float = 1e-10, mode: str | None = None) -> VerificationResult:
    """Run one catalog claim.

    ``mode`` overrides ``numeric``: "symbolic" and "both" take the status from
    the symbolic certificate (and "both" also requires the numeric cross-check
    to pass); "numeric" takes it from the jet-space evaluation alone.
    """
    mode = mode or ("both" if numeric else "symbolic")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    numeric = mode != "symbolic"
    if claim_id not in _BUILDERS:
        raise UnknownClaim(claim_id)
    meta = _catalog()[claim_id]
    t0 = time.perf_counter()
    checks, assumptions, notes = _BUILDERS[claim_id]()
    cert = combine(checks)
    ok = all(c.ok for c in checks) or mode == "numeric"
    status = "verified" if ok else "failed"
    if ok and claim_id in CONDITIONAL:
        status = "conditional"
    numeric_out = []
    if numeric:
        gl = ("su2",) if claim_id in ABELIAN_CLAIMS else tuple(groups)
        for g in gl:
            group = GroupData.by_name(g)
            worst = None
            for c in checks:
                rep = numeric_identity_check(c.residual, group, trials, seed, tol, c.constraints)
                if worst is None or rep.max_residual > worst.max_residual:
                    worst = rep
            if worst is not None:
                numeric_out.append(worst.to_dict())
                if not worst.passed and status != "failed":
                    status = "failed"
                    notes = notes + [f"numeric cross-check failed on {g}"]
    return VerificationResult(claim_id, meta["anchor"], meta["strategy"], status, cert,
                              time.perf_counter() - t0, numeric_out, assumptions, notes)


def verify_all(ids=None, **kw):
    ids = ids or list(_catalog())
    return [verify_claim(i, **kw) for i in ids]
