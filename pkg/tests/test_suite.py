import json

import pytest

from gev.suite import UnknownClaim, list_claims, verify_claim
from gev.suite.claims import claim_checks
from gev.symbolic.canon import canonicalize
from gev.suite.models import (SOURCE_RULES, TRANSFORMATIONS, ModelId, build_model,
                              build_transformation, density_source)

IDS = [c["id"] for c in list_claims()]
CONDITIONAL = {"NA9", "NA10"}


def test_catalog_is_well_formed():
    assert len(IDS) == len(set(IDS)) == 21
    for c in list_claims():
        assert c["anchor"]
        assert c["description"]
        assert c["model"] is None or c["model"] in ModelId.__members__


@pytest.mark.parametrize("cid", IDS)
def test_claim_symbolic_status(cid):
    r = verify_claim(cid)
    expected = "conditional" if cid in CONDITIONAL else "verified"
    assert r.status == expected, r.certificate
    assert r.certificate["kind"] in ("exact-zero", "el-vanishing", "constraint-reduced")
    json.dumps(r.to_dict())


@pytest.mark.parametrize("cid", ["AB3", "NA3", "NA9"])
def test_constraint_reduced_claims_record_multipliers(cid):
    cert = verify_claim(cid).certificate
    assert cert["kind"] == "constraint-reduced"
    assert cert["used_constraints"] and cert["multipliers"]


def test_conditional_claims_carry_rule_notes():
    na9 = verify_claim("NA9")
    assert any("source" in a for a in na9.assumptions)
    assert na9.notes
    na10 = verify_claim("NA10")
    assert na10.assumptions


@pytest.mark.parametrize("cid", ["AB1", "NA5", "NA8", "NA12"])
def test_numeric_mode_agrees(cid):
    r = verify_claim(cid, mode="numeric", trials=10, groups=("su2",))
    assert r.status == "verified"
    assert r.numeric and all(n["passed"] for n in r.numeric)


def test_abelian_claims_use_a_single_group():
    r = verify_claim("AB2", mode="both", trials=5)
    assert [n["group"] for n in r.numeric] == ["su2"]


def test_unknown_claim():
    with pytest.raises(UnknownClaim):
        verify_claim("NA16")
    with pytest.raises(ValueError):
        verify_claim("AB1", mode="fast")


def test_timings_only_on_request():
    r = verify_claim("AB1")
    assert "wall_time" not in r.to_dict()
    assert "wall_time" in r.to_dict(timings=True)


def test_claim_checks_are_deterministic():
    # raw residuals use fresh dummy names; their canonical forms must agree
    a = [str(canonicalize(c.residual)) for c in claim_checks("NA6")[0]]
    b = [str(canonicalize(c.residual)) for c in claim_checks("NA6")[0]]
    assert a == b


@pytest.mark.parametrize("model", list(ModelId))
def test_models_are_scalars(model):
    L = build_model(model)
    assert not L.free and not L.is_empty()
    assert density_source(model)


@pytest.mark.parametrize("name", TRANSFORMATIONS)
def test_transformations_build(name):
    t = build_transformation(name)
    assert t.parity in ("odd", "even")


def test_source_rules_listed():
    assert "brs" in SOURCE_RULES
