"""Numerical checks of the p-ASF frame identities and the 3/4 lower bound.

Every identity is evaluated twice: by literal summation over frame
elements, and by composing the operators ``S``, ``S_M``, ``S^-1`` and the
generalized adjoint. The two paths must agree.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, NamedTuple, Optional

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .frames import (
    PASF,
    IndexSet,
    analysis_matrix,
    canonical_dual,
    frame_operator,
    frame_to_dict,
    parseval_residual,
    partial_frame_operator,
    subsets,
)
from .operators import NotInvertibleError, generalized_adjoint_apply, inf_norm, invert
from .sip import make_rng


class NotParsevalError(ValueError):
    """Frame operator is not the identity to tolerance."""

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        super().__init__(f"not Parseval: max |S - I| = {residual:.3e} > {tol:g}")


class LemmaPreconditionError(ValueError):
    pass


@dataclass
class IdentityResult:
    lhs: Any
    rhs: Any
    residual: float
    scale: float
    tol: float
    passed: bool
    path_residual: float = 0.0


@dataclass
class BoundResult:
    q_value: float
    hypothesis_value: float
    norm_sq: float
    ratio: float
    hypothesis_holds: bool
    q_imag: float = 0.0
    hypothesis_imag: float = 0.0
    symmetric_residual: float = 0.0


class _Prep(NamedTuple):
    theta: np.ndarray  # (N, d) dual coordinates of omega
    gram: np.ndarray  # gram[n, k] = [tau_n, omega_k]
    S: np.ndarray
    S_inv: Optional[np.ndarray]
    dual: Optional[PASF]
    dual_theta: Optional[np.ndarray]
    parseval_residual: float


@lru_cache(maxsize=32)
def _prep(F: PASF) -> _Prep:
    theta = analysis_matrix(F)
    S = frame_operator(F)
    try:
        S_inv, _ = invert(S)
        dual = canonical_dual(F)
        dual_theta = analysis_matrix(dual)
    except NotInvertibleError:
        S_inv = dual = dual_theta = None
    return _Prep(theta, F.tau @ theta.T, S, S_inv, dual, dual_theta, parseval_residual(F))


def _require_parseval(F: PASF, tol: float) -> _Prep:
    pr = _prep(F)
    if pr.parseval_residual > tol:
        raise NotParsevalError(pr.parseval_residual, tol)
    return pr


def _result(lhs, rhs, tol, path_residual=0.0) -> IdentityResult:
    res = float(abs(lhs - rhs))
    scale = float(max(1.0, abs(lhs), abs(rhs)))
    ok = res <= tol * scale and path_residual <= tol * scale
    return IdentityResult(lhs, rhs, res, scale, tol, bool(ok), float(path_residual))


def lemma_uv_check(U, V, tol: float = DEFAULT_TOL.rel_lemma, pre_tol: float = 1e-10) -> IdentityResult:
    """Check ``U - V = U^2 - V^2`` for operators with ``U + V = I``.

    The residual is the max entry of the difference; the check passes when it
    is at most ``tol * (1 + ||U||^2)`` (max row-sum norm).
    """
    U, V = np.asarray(U), np.asarray(V)
    if U.shape != V.shape or U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("U and V must be square matrices of the same size")
    pre = float(np.abs(U + V - np.eye(U.shape[0])).max())
    if pre > pre_tol:
        raise LemmaPreconditionError(f"U+V != I (max entry deviation {pre:.3e})")
    lhs = U - V
    rhs = U @ U - V @ V
    res = float(np.abs(lhs - rhs).max())
    scale = 1.0 + inf_norm(U) ** 2
    return IdentityResult(lhs, rhs, res, scale, tol, res <= tol * scale)


def _partial(F: PASF, pr: _Prep, M: IndexSet) -> np.ndarray:
    idx = M.index
    if idx.size == 0:
        return np.zeros((F.dim, F.dim), dtype=F.space.dtype)
    return F.tau[idx].T @ pr.theta[idx]


def _general_side(F: PASF, pr: _Prep, M: IndexSet, X: np.ndarray):
    """Literal and operator-form side for a batch ``X`` of shape (k, d)."""
    sp = F.space
    idx = M.index
    JX = sp.duality_map(X)
    a = X @ pr.theta[idx].T  # [x, omega_n], (k, |M|)
    b = JX @ F.tau[idx].T  # [tau_n, x]
    first = np.sum(a * b, axis=1)
    S_M = _partial(F, pr, M)
    SMx = X @ S_M.T
    SMdx = generalized_adjoint_apply(S_M, X, sp)
    c = SMx @ pr.dual_theta.T  # [S_M x, w~_n], (k, N)
    e = sp.duality_map(SMdx) @ pr.dual.tau.T  # [t~_n, S_M^dagger x]
    literal = first - np.sum(c * e, axis=1)
    operator = sp.sip(SMx, X) - sp.sip(SMx @ pr.S_inv.T, SMdx)
    return literal, operator


def _general_batch(F: PASF, pr: _Prep, M: IndexSet, X: np.ndarray):
    lhs, lhs_op = _general_side(F, pr, M, X)
    rhs, rhs_op = _general_side(F, pr, M.complement(), X)
    res = np.abs(lhs - rhs)
    path = np.maximum(np.abs(lhs - lhs_op), np.abs(rhs - rhs_op))
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs, rhs, res, path, scale


def general_identity_sides(F: PASF, M: IndexSet, x, tol: float = DEFAULT_TOL.rel_identity) -> IdentityResult:
    """Both sides of the general p-ASF identity at ``x``.

    ``lhs = sum_{n in M} [x, w_n][t_n, x] - sum_n [S_M x, w~_n][t~_n, S_M^dagger x]``
    and ``rhs`` is the same with ``M`` replaced by its complement.
    """
    x = F.space.check(x)
    pr = _prep(F)
    if pr.S_inv is None:
        invert(pr.S)  # raises NotInvertibleError with the pivot
    lhs, rhs, _, path, _ = _general_batch(F, pr, M, x[None])
    return _result(lhs[0], rhs[0], tol, path[0])


def _parseval_side(F: PASF, pr: _Prep, M: IndexSet, X: np.ndarray, JX: np.ndarray):
    idx = M.index
    a = X @ pr.theta[idx].T
    b = JX @ F.tau[idx].T
    double = np.einsum("kn,nm,km->k", a, pr.gram[np.ix_(idx, idx)], b)
    return np.sum(a * b, axis=1) - double


def _parseval_batch(F: PASF, pr: _Prep, M: IndexSet, X: np.ndarray):
    sp = F.space
    JX = sp.duality_map(X)
    lhs = _parseval_side(F, pr, M, X, JX)
    rhs = _parseval_side(F, pr, M.complement(), X, JX)
    S_M = _partial(F, pr, M)
    SMx = X @ S_M.T
    lhs_op = sp.sip(SMx, X) - sp.sip(SMx, generalized_adjoint_apply(S_M, X, sp))
    res = np.abs(lhs - rhs)
    path = np.abs(lhs - lhs_op)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs, rhs, res, path, scale


def parseval_identity_sides(
    F: PASF,
    M: IndexSet,
    x,
    tol: float = DEFAULT_TOL.rel_parseval,
    path_tol: float = DEFAULT_TOL.rel_identity,
    parseval_tol: float = DEFAULT_TOL.parseval,
) -> IdentityResult:
    """Parseval p-ASF identity, by literal double summation.

    The left side is cross-checked against ``[S_M x, x] - [S_M x, S_M^dagger x]``;
    the check fails if that operator form drifts by more than ``path_tol * scale``.
    """
    x = F.space.check(x)
    pr = _require_parseval(F, parseval_tol)
    lhs, rhs, _, path, _ = _parseval_batch(F, pr, M, x[None])
    r = _result(lhs[0], rhs[0], tol)
    r.path_residual = float(path[0])
    r.passed = r.passed and r.path_residual <= path_tol * r.scale
    return r


def operator_identity_residual(F: PASF, M: IndexSet, parseval_tol: float = DEFAULT_TOL.parseval) -> float:
    """Max entry of ``S_M + S_Mc^2 - S_Mc - S_M^2``."""
    _require_parseval(F, parseval_tol)
    A = partial_frame_operator(F, M)
    B = partial_frame_operator(F, M.complement())
    r1 = np.abs(A + B @ B - B - A @ A).max()
    r2 = np.abs(A - A @ A - B + B @ B).max()
    return float(max(r1, r2))


def _bound_batch(F: PASF, pr: _Prep, M: IndexSet, X: np.ndarray):
    sp = F.space
    Mc = M.complement()
    a = X @ pr.theta.T
    b = sp.duality_map(X) @ F.tau.T
    ab = a * b

    def double(S):
        idx = S.index
        return np.einsum("kn,nm,km->k", a[:, idx], pr.gram[np.ix_(idx, idx)], b[:, idx])

    Q = ab[:, M.index].sum(axis=1) + double(Mc)
    Q_sym = ab[:, Mc.index].sum(axis=1) + double(M)
    T = _partial(F, pr, M) - 0.5 * np.eye(F.dim)
    h = sp.sip(X @ (T @ T).T, X)
    nsq = sp.norm(X) ** 2
    return Q, Q_sym, h, nsq


def _bound_result(Q, Q_sym, h, nsq, hyp_slack) -> BoundResult:
    Q, h = complex(Q), complex(h)
    return BoundResult(
        q_value=Q.real,
        hypothesis_value=h.real,
        norm_sq=float(nsq),
        ratio=Q.real / nsq,
        hypothesis_holds=bool(h.real >= -hyp_slack * nsq),
        q_imag=abs(Q.imag),
        hypothesis_imag=abs(h.imag),
        symmetric_residual=float(abs(Q - Q_sym)),
    )


def lower_bound_eval(
    F: PASF,
    M: IndexSet,
    x,
    hyp_slack: float = DEFAULT_TOL.hyp_slack,
    parseval_tol: float = DEFAULT_TOL.parseval,
) -> BoundResult:
    """The bound quantity ``Q(x)`` and the hypothesis value ``[(S_M - I/2)^2 x, x]``.

    ``Q(x) = sum_{n in M} [x, w_n][t_n, x] + sum_{n,k in M^c} [x, w_n][t_n, w_k][t_k, x]``.
    Real parts are compared; imaginary parts are reported. The hypothesis
    is taken to hold when ``h(x) >= -hyp_slack * ||x||^2``.
    """
    x = F.space.check(x)
    pr = _require_parseval(F, parseval_tol)
    if not np.any(x):
        raise ValueError("undefined ratio: x = 0")
    Q, Q_sym, h, nsq = _bound_batch(F, pr, M, x[None])
    return _bound_result(Q[0], Q_sym[0], h[0], nsq[0], hyp_slack)


def bound_quantity(F: PASF, M: IndexSet, X: np.ndarray) -> np.ndarray:
    """Operator-form ``Q`` for a batch of row vectors ``X``: ``[(S_M + S_Mc^2) x, x]``."""
    A = partial_frame_operator(F, M)
    B = partial_frame_operator(F, M.complement())
    K = A + B @ B
    return F.space.sip(X @ K.T, X)


def hypothesis_quantity(F: PASF, M: IndexSet, X: np.ndarray) -> np.ndarray:
    """``[(S_M - I/2)^2 x, x]`` for a batch of row vectors ``X``."""
    T = partial_frame_operator(F, M) - 0.5 * np.eye(F.dim)
    return F.space.sip(X @ (T @ T).T, X)


@dataclass
class HilbertReport:
    frame_identity_max: float
    parseval_identity_max: float
    min_ratio: float
    cases: int
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.frame_identity_max <= self.tol
            and self.parseval_identity_max <= self.tol
            and self.min_ratio >= 0.75 - DEFAULT_TOL.bound_slack
        )


def hilbert_suite(F: PASF, trials: int = 20, seed: int = 0, policy=None, tol: float = 1e-8) -> HilbertReport:
    """Hilbert-space frame identity, Parseval frame identity and 3/4 bound for ``{tau_n}``.

    Uses plain inner products only, independent of the semi-inner-product
    code. The Parseval checks run on the canonical tight frame
    ``S^-1/2 tau_n``. Residuals are reported relative to
    ``max(1, |lhs|, |rhs|)``.
    """
    if not F.space.is_hilbert:
        raise ValueError("p must be 2")
    T = F.tau  # rows tau_n
    S = T.T @ T.conj()  # S h = sum <h, t_n> t_n
    S_inv = np.linalg.inv(S)
    w, V = np.linalg.eigh(S)
    S_mhalf = (V * w**-0.5) @ V.conj().T
    P = T @ S_mhalf.T
    T_dual = T @ S_inv.T
    N = F.N
    if policy is None:
        policy = "exhaustive" if N <= 8 else 100

    def rel(l, r):
        return np.abs(l - r) / np.maximum(1.0, np.maximum(np.abs(l), np.abs(r)))

    fmax = pmax = 0.0
    rmin = np.inf
    cases = 0
    for M in subsets(N, policy, seed):
        Mc = M.complement()
        H = F.space.random(make_rng(seed, M.mask, 7), trials)
        C = H @ T.conj().T  # C[k, n] = <h_k, t_n>
        CP = H @ P.conj().T
        nsq = np.sum(np.abs(H) ** 2, axis=1)

        def frame_side(I):
            i = I.index
            SIh = C[:, i] @ T[i]  # rows S_I h
            return np.sum(np.abs(C[:, i]) ** 2, axis=1) - np.sum(np.abs(SIh @ T_dual.conj().T) ** 2, axis=1)

        def synth_sq(I):
            i = I.index
            return np.sum(np.abs(CP[:, i] @ P[i]) ** 2, axis=1)

        def pars_side(I):
            return np.sum(np.abs(CP[:, I.index]) ** 2, axis=1) - synth_sq(I)

        fmax = max(fmax, float(rel(frame_side(M), frame_side(Mc)).max()))
        pmax = max(pmax, float(rel(pars_side(M), pars_side(Mc)).max()))
        q = np.sum(np.abs(CP[:, M.index]) ** 2, axis=1) + synth_sq(Mc)
        rmin = min(rmin, float((q / nsq).min()))
        cases += trials
    return HilbertReport(float(fmax), float(pmax), float(rmin), cases, tol)


@dataclass
class SuiteResult:
    suite: str
    max_residual: float = 0.0
    cases_run: int = 0
    failures: list = field(default_factory=list)
    min_ratio: Optional[float] = None
    extra: dict = field(default_factory=dict)
    skipped: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"suite": self.suite, "max_residual": self.max_residual}
        if self.min_ratio is not None:
            d["min_ratio"] = self.min_ratio
        d["cases_run"] = self.cases_run
        d["failures"] = self.failures
        if self.extra:
            d.update(self.extra)
        if self.skipped:
            d["skipped"] = self.skipped
        return d

    @property
    def passed(self) -> bool:
        return not self.failures


MAX_FAILURES = 20


def _encode_vec(x):
    if np.iscomplexobj(x):
        return [[float(z.real), float(z.imag)] for z in x]
    return [float(v) for v in x]


def _subset_cases(F: PASF, M: IndexSet, samples: int, seed: int, tol: Tolerances, parseval: bool, cond: float) -> dict:
    """All suite evaluations for one subset; pure function of its inputs."""
    pr = _prep(F)
    out: dict = {"lemma": [], "general": [], "parseval": [], "operator": [], "bound": []}
    X = F.space.random(make_rng(seed, M.mask, 1), samples).astype(F.space.dtype)

    U = pr.S_inv @ _partial(F, pr, M)
    V = pr.S_inv @ _partial(F, pr, M.complement())
    try:
        r = lemma_uv_check(U, V, tol.rel_lemma, pre_tol=1e-10 * max(1.0, cond))
        out["lemma"].append((r.residual / r.scale, r.passed, None))
    except LemmaPreconditionError as exc:
        out["lemma"].append((np.inf, False, str(exc)))

    _, _, res, path, scale = _general_batch(F, pr, M, X)
    for i, x in enumerate(X):
        ok = res[i] <= tol.rel_identity * scale[i] and path[i] <= tol.rel_identity * scale[i]
        out["general"].append((max(res[i], path[i]) / scale[i], bool(ok), x))
    if parseval:
        _, _, res, path, scale = _parseval_batch(F, pr, M, X)
        for i, x in enumerate(X):
            ok = res[i] <= tol.rel_parseval * scale[i] and path[i] <= tol.rel_identity * scale[i]
            out["parseval"].append((max(res[i], path[i]) / scale[i], bool(ok), x))
        res = operator_identity_residual(F, M, tol.parseval)
        out["operator"].append((res, res <= tol.abs_operator + 10 * pr.parseval_residual, None))
        keep = np.any(X != 0, axis=1)
        Q, Q_sym, h, nsq = _bound_batch(F, pr, M, X[keep])
        for i, x in enumerate(X[keep]):
            out["bound"].append((x, _bound_result(Q[i], Q_sym[i], h[i], nsq[i], tol.hyp_slack)))
    return out


def run_suites(
    F: PASF,
    policy="exhaustive",
    samples: int = 20,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOL,
    workers: Optional[int] = None,
) -> list:
    """Run every identity suite over the subset policy; returns a list of :class:`SuiteResult`.

    Work is split by subset; results are reduced in ascending bitmask order
    so the output does not depend on ``workers``.
    """
    if workers is None:
        workers = int(os.environ.get("PASFLAB_THREADS", "1") or 1)
    pres = parseval_residual(F)
    parseval = pres <= tol.parseval
    pr = _prep(F)
    suites = {name: SuiteResult(name) for name in ("lemma", "general_identity", "parseval_identity", "operator_identity", "lower_bound")}
    if pr.S_inv is None:
        for s in suites.values():
            s.skipped = "frame operator not invertible"
            s.failures.append({"reason": "not invertible"})
        return list(suites.values())
    _, cond = invert(pr.S)
    Ms = subsets(F.N, policy, seed)

    def job(M):
        return _subset_cases(F, M, samples, seed, tol, parseval, cond)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(job, Ms))
    else:
        results = [job(M) for M in Ms]

    frame = None

    def fail(suite: SuiteResult, M, x, value, reason=None):
        nonlocal frame
        if len(suite.failures) >= MAX_FAILURES:
            return
        if frame is None:
            frame = frame_to_dict(F)
        entry = {"M": M.bits, "value": value}
        if x is not None:
            entry["x"] = _encode_vec(x)
        if reason:
            entry["reason"] = reason
        entry["frame"] = frame
        suite.failures.append(entry)

    mapping = {"lemma": "lemma", "general": "general_identity", "parseval": "parseval_identity", "operator": "operator_identity"}
    hyp_count = hyp_total = 0
    rmin = rmin_all = np.inf
    max_imag = max_sym = 0.0
    bound = suites["lower_bound"]
    for M, res in zip(Ms, results):
        for key, name in mapping.items():
            s = suites[name]
            for item in res[key]:
                value, ok = item[0], item[1]
                s.cases_run += 1
                s.max_residual = max(s.max_residual, float(value))
                if not ok:
                    x = item[2] if isinstance(item[2], np.ndarray) else None
                    reason = item[2] if isinstance(item[2], str) else None
                    fail(s, M, x, float(value), reason)
        for x, b in res["bound"]:
            bound.cases_run += 1
            hyp_total += 1
            rmin_all = min(rmin_all, b.ratio)
            max_imag = max(max_imag, b.q_imag / b.norm_sq, b.hypothesis_imag / b.norm_sq)
            max_sym = max(max_sym, b.symmetric_residual / max(1.0, abs(b.q_value)))
            bound.max_residual = max_sym
            if b.hypothesis_holds:
                hyp_count += 1
                rmin = min(rmin, b.ratio)
                if b.ratio < 0.75 - tol.bound_slack:
                    fail(bound, M, x, b.ratio, "ratio below 3/4 while hypothesis holds")

    if parseval:
        bound.min_ratio = float(rmin) if hyp_count else None
        bound.extra = {
            "min_ratio_all": float(rmin_all),
            "hypothesis_frequency": hyp_count / hyp_total if hyp_total else None,
            "hypothesis_holds": hyp_count,
            "max_imag_leak": max_imag,
        }
    else:
        for name in ("parseval_identity", "operator_identity", "lower_bound"):
            suites[name].skipped = f"not Parseval (max |S - I| = {pres!r})"
    return list(suites.values())
