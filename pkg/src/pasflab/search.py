"""Extremal search for the bound ratio ``Q(x) / ||x||^2`` on the unit sphere.

Descent uses central finite differences, a normalised gradient step with
backtracking (halving), and renormalisation onto the l^p unit sphere after
each step. Results are labelled as empirical minima; nothing here certifies
a global optimum.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .config import DEFAULT_TOL
from .frames import PASF, IndexSet, partial_frame_operator, parseval_residual, subsets
from .identities import NotParsevalError, lower_bound_eval
from .sip import lp_norm, make_rng

EXHAUSTIVE_MAX_N = 12
SAMPLED_SUBSETS = 256
CLAMP = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 16
    max_iters: int = 300
    step_init: float = 0.5
    seed: int = 0
    tol_step: float = 1e-10
    fd_step: float = 1e-5
    restricted: bool = False
    subsets: object = None  # None -> exhaustive for N <= 12, else 256 sampled
    workers: Optional[int] = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not self.step_init > 0 or not self.tol_step > 0:
            raise ValueError("step_init and tol_step must be positive")


@dataclass
class SearchOutcome:
    best_ratio: float
    best_x: np.ndarray
    best_M: IndexSet
    hypothesis_value_at_best: float
    trace: List[Tuple[int, float]] = field(default_factory=list)
    restricted: bool = False
    subsets_searched: int = 0
    label: str = "empirical minimum"


def numerical_gradient(fun: Callable[[np.ndarray], np.ndarray], v: np.ndarray, h: float) -> np.ndarray:
    """Central differences of a batched scalar function at ``v``."""
    m = v.size
    E = np.eye(m) * h
    vals = fun(np.concatenate([v + E, v - E]))
    return (vals[:m] - vals[m:]) / (2 * h)


class _Problem:
    """Ratio-type objective ``Re[K x, x] / ||x||^2`` over real parameters."""

    def __init__(self, F: PASF, K: np.ndarray, H: np.ndarray):
        self.space = F.space
        self.K = K
        self.H = H
        self.cplx = F.space.is_complex
        self.d = F.dim

    def to_x(self, V: np.ndarray) -> np.ndarray:
        if self.cplx:
            return V[..., : self.d] + 1j * V[..., self.d :]
        return V

    def to_v(self, X: np.ndarray) -> np.ndarray:
        if self.cplx:
            return np.concatenate([X.real, X.imag], axis=-1)
        return X

    def _form(self, A, V):
        X = self.to_x(V)
        nsq = lp_norm(X, self.space.p) ** 2
        val = self.space.sip(X @ A.T, X).real
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(nsq > 0, val / nsq, np.inf)

    def objective(self, V):
        return self._form(self.K, V)

    def hypothesis(self, V):
        return self._form(self.H, V)

    def normalize(self, v):
        n = lp_norm(self.to_x(v), self.space.p)
        return v / n if n > 0 else v


def _operators(F: PASF, M: IndexSet):
    A = partial_frame_operator(F, M)
    B = partial_frame_operator(F, M.complement())
    T = A - 0.5 * np.eye(F.dim)
    return A + B @ B, T @ T


def _descend(prob: _Problem, fun, v, cfg: SearchConfig, accept_ok=None):
    """Monotone descent from ``v``; returns (value, v, trace)."""
    v = prob.normalize(v)
    f = float(fun(v[None])[0])
    trace = [(0, f)]
    step = cfg.step_init
    n_halve = max(1, int(np.ceil(np.log2(cfg.step_init / cfg.tol_step))) + 1)
    for it in range(1, cfg.max_iters + 1):
        vc = np.where(np.abs(v) < CLAMP, 0.0, v)
        g = numerical_gradient(fun, vc, cfg.fd_step)
        gn = np.linalg.norm(g)
        if not np.isfinite(gn) or gn == 0.0:
            break
        ts = step * 0.5 ** np.arange(n_halve)
        ts = ts[ts >= cfg.tol_step]
        if ts.size == 0:
            break
        cands = v[None, :] - ts[:, None] * (g / gn)[None, :]
        norms = lp_norm(prob.to_x(cands), prob.space.p)
        cands = cands / np.where(norms > 0, norms, 1.0)[:, None]
        vals = fun(cands)
        ok = vals < f
        if accept_ok is not None:
            ok &= accept_ok(cands)
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            break
        j = hits[0]
        v, f = cands[j], float(vals[j])
        trace.append((it, f))
        step = min(cfg.step_init, 2 * ts[j])
    return f, v, trace


def _start(prob: _Problem, rng, cfg: SearchConfig, ok=None, tries: int = 20):
    for _ in range(tries):
        v = prob.to_v(prob.space.random(rng))
        v = prob.normalize(v)
        if ok is None or ok(v[None])[0]:
            return v
    return None


def _search_subset(F: PASF, M: IndexSet, cfg: SearchConfig, target: str):
    K, H = _operators(F, M)
    prob = _Problem(F, K, H)
    slack = DEFAULT_TOL.hyp_slack
    if target == "ratio":
        fun = prob.objective
        ok = (lambda V: prob.hypothesis(V) >= -slack) if cfg.restricted else None
    else:
        fun = prob.hypothesis
        ok = None
    best = (np.inf, None, [])
    for r in range(cfg.restarts):
        rng = make_rng(cfg.seed, M.mask, r)
        v0 = _start(prob, rng, cfg, ok)
        if v0 is None:
            continue
        f, v, trace = _descend(prob, fun, v0, cfg, ok)
        if f < best[0]:
            best = (f, v, trace)
    return best, prob


def _subset_list(F: PASF, cfg: SearchConfig):
    policy = cfg.subsets
    if policy is None:
        policy = "exhaustive" if F.N <= EXHAUSTIVE_MAX_N else SAMPLED_SUBSETS
    return subsets(F.N, policy, cfg.seed)


def _map(fn, items, workers):
    if workers is None:
        workers = int(os.environ.get("PASFLAB_THREADS", "1") or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _require_parseval(F: PASF):
    res = parseval_residual(F)
    if res > DEFAULT_TOL.parseval:
        raise NotParsevalError(res, DEFAULT_TOL.parseval)


def minimize_ratio(F: PASF, config: SearchConfig = SearchConfig()) -> SearchOutcome:
    """Smallest ``Q(x)/||x||^2`` found over subsets ``M`` and unit vectors ``x``.

    With ``config.restricted`` only iterates satisfying the hypothesis
    ``[(S_M - I/2)^2 x, x] >= 0`` are accepted. Ties keep the smallest
    bitmask, then the lowest restart index. The reported ratio is
    re-evaluated with :func:`lower_bound_eval`.
    """
    _require_parseval(F)
    Ms = _subset_list(F, config)
    results = _map(lambda M: _search_subset(F, M, config, "ratio"), Ms, config.workers)
    best_i, best = None, None
    for i, ((f, v, trace), prob) in enumerate(results):
        if v is not None and (best is None or f < best[0]):
            best_i, best = i, (f, v, trace, prob)
    if best is None:
        raise RuntimeError("no admissible starting point found in any subset")
    _, v, trace, prob = best
    M = Ms[best_i]
    x = prob.to_x(v)
    br = lower_bound_eval(F, M, x)
    return SearchOutcome(
        best_ratio=br.ratio,
        best_x=x,
        best_M=M,
        hypothesis_value_at_best=br.hypothesis_value / br.norm_sq,
        trace=trace,
        restricted=config.restricted,
        subsets_searched=len(Ms),
    )


def find_hypothesis_violation(F: PASF, config: SearchConfig = SearchConfig(), threshold: float = -1e-8):
    """First ``(M, x, h)`` with ``Re[(S_M - I/2)^2 x, x] < threshold`` on the unit sphere, or ``None``.

    For ``p = 2`` with ``omega = tau`` the form is a square of a self-adjoint
    operator, so only random samples are checked before returning ``None``.
    """
    _require_parseval(F)
    Ms = _subset_list(F, config)
    if F.space.is_hilbert and np.array_equal(F.omega, F.tau):
        for M in Ms:
            _, H = _operators(F, M)
            prob = _Problem(F, H, H)
            rng = make_rng(config.seed, M.mask, 0)
            V = prob.to_v(F.space.random(rng, config.restarts))
            hv = prob.hypothesis(V)
            if np.any(hv < threshold):
                i = int(np.argmin(hv))
                return M, prob.to_x(prob.normalize(V[i])), float(hv[i])
        return None
    results = _map(lambda M: _search_subset(F, M, config, "hypothesis"), Ms, config.workers)
    for M, ((f, v, _), prob) in zip(Ms, results):
        if v is not None and f < threshold:
            return M, prob.to_x(v), float(f)
    return None
