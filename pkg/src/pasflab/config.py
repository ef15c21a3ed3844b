"""Default numerical tolerances shared across the package."""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Tolerances:
    #: exact-formula identities (single closed-form evaluation)
    abs_exact: float = 1e-12
    #: composed computations
    rel_composed: float = 1e-8
    #: two-sided identities built from nonlinear maps
    rel_identity: float = 1e-7
    #: Parseval identity
    rel_parseval: float = 1e-8
    #: lemma U - V = U^2 - V^2
    rel_lemma: float = 1e-10
    #: operator identity, added to 10 * parseval residual
    abs_operator: float = 1e-9
    #: hypothesis h(x) >= -hyp_slack counts as holding
    hyp_slack: float = 1e-10
    #: slack on the 3/4 bound
    bound_slack: float = 1e-6
    #: Parseval certification, max-entry |S - I|
    parseval: float = 1e-8
    #: frame operator must have condition estimate below this
    max_condition: float = 1e8
    #: imaginary leakage allowed in quantities compared as reals
    imag_leak: float = 1e-8

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOL = Tolerances()
