"""Claim catalog for the gauge-theory identities."""
from .claims import (MODES, UnknownClaim, VerificationResult, claim_checks, list_claims,
                     verify_all, verify_claim)

__all__ = ["MODES", "UnknownClaim", "VerificationResult", "claim_checks", "list_claims",
           "verify_all", "verify_claim"]
