"""Verify every catalog claim symbolically and on random jet points."""
import time

from gev.suite import list_claims, verify_claim

t0 = time.perf_counter()
for c in list_claims():
    r = verify_claim(c["id"], mode="both", trials=50)
    num = "  ".join(f"{n['group']}:{n['max_residual']:.1e}" for n in r.numeric)
    print(f"{r.claim_id:<5} {r.status:<12} {r.certificate['kind']:<19} {num}")
    for m in r.certificate["multipliers"]:
        print(f"      multiplier for {m['constraint']}: {m['multiplier']}")
print(f"done in {time.perf_counter() - t0:.1f} s")
