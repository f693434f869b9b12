"""BRS transformation: nilpotency, the variation of the quantum density,
and what changes when the external source rotates with the ghost."""
from gev.suite.models import ModelId, build_model, build_transformation, nonabelian_constraints
from gev.symbolic.canon import canonicalize
from gev.symbolic.parser import format_expression, parse
from gev.symbolic.reduce import is_zero
from gev.variational import apply_transformation, is_total_derivative

P = lambda s: parse(s, expand=True)
s = build_transformation("brs")

print("s acts on the fields as")
for f in ("A[mu;a]", "B[a]", "c[a]", "cbar[a]"):
    print(f"  s {f:<8} = {format_expression(canonicalize(apply_transformation(P(f), s)))}")

print("\nnilpotency, s s X = 0:")
for f in ("A[mu;a]", "c[a]", "cbar[a]"):
    ok, cert = is_zero(apply_transformation(apply_transformation(P(f), s), s))
    print(f"  {f:<8} {ok}  ({cert.kind}, {cert.jacobi_relations} Jacobi relations)")

L = build_model(ModelId.YM_QUANTUM)
cs = nonabelian_constraints()
for rule in ("brs", "brs-rotating-source"):
    dL = apply_transformation(L, build_transformation(rule))
    plain = is_total_derivative(dL)[0]
    ok, cert, K = is_total_derivative(dL, cs, return_current=True)
    print(f"\nrule {rule}: divergence without constraints: {plain}; modulo D.j: {ok}")
    if ok:
        print(f"  K = {format_expression(K)}")
        for m in cert.multipliers:
            print(f"  multiplier of {m[0]}: {m[1]}")
