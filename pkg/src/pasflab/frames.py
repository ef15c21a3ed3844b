"""p-approximate Schauder frames on finite-dimensional l^p spaces.

A frame is stored as two ``(N, dim)`` arrays: ``omega`` holds the
representers of the functionals (``f_n(x) = [x, omega_n]``) and ``tau`` the
frame vectors. Indices are 0-based throughout.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .config import DEFAULT_TOL
from .operators import NotInvertibleError, generalized_adjoint_apply, invert, pnorm_estimate
from .sip import SipSpace, make_rng


class FrameFormatError(ValueError):
    """Frame file does not match the schema."""


@dataclass(frozen=True, eq=False)
class PASF:
    """A pair of N-element vector families ``(omega, tau)`` in ``space``."""

    space: SipSpace
    omega: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        omega = self.space.check(self.omega)
        tau = self.space.check(self.tau)
        if omega.ndim != 2 or tau.ndim != 2:
            raise ValueError("omega and tau must be (N, dim) arrays")
        if omega.shape != tau.shape:
            raise ValueError(f"omega has {omega.shape[0]} vectors, tau has {tau.shape[0]}")
        if omega.shape[0] < 1:
            raise ValueError("a frame needs at least one vector")
        omega, tau = omega.copy(), tau.copy()
        omega.flags.writeable = False
        tau.flags.writeable = False
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "tau", tau)

    @property
    def N(self) -> int:
        return self.omega.shape[0]

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def p(self) -> float:
        return self.space.p

    def with_tau(self, tau) -> "PASF":
        return PASF(self.space, self.omega, tau)

    def __repr__(self):
        return f"PASF(N={self.N}, dim={self.dim}, p={self.p:g}, field={self.space.field!r})"


@dataclass(frozen=True)
class IndexSet:
    """A subset ``M`` of ``{0, ..., N-1}``, members kept in ascending order."""

    members: tuple
    N: int

    def __post_init__(self):
        m = tuple(sorted(set(int(i) for i in self.members)))
        if m and (m[0] < 0 or m[-1] >= self.N):
            raise ValueError(f"indices must lie in [0, {self.N})")
        object.__setattr__(self, "members", m)

    @classmethod
    def from_mask(cls, mask: int, N: int) -> "IndexSet":
        return cls(tuple(i for i in range(N) if mask >> i & 1), N)

    @classmethod
    def from_bits(cls, bits: str) -> "IndexSet":
        """Parse a string of '0'/'1' where character ``i`` marks index ``i``."""
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return cls(tuple(i for i, b in enumerate(bits) if b == "1"), len(bits))

    @property
    def mask(self) -> int:
        return sum(1 << i for i in self.members)

    @property
    def bits(self) -> str:
        return "".join("1" if i in self.members else "0" for i in range(self.N))

    def complement(self) -> "IndexSet":
        s = set(self.members)
        return IndexSet(tuple(i for i in range(self.N) if i not in s), self.N)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, i):
        return i in self.members

    @property
    def index(self) -> np.ndarray:
        return np.asarray(self.members, dtype=int)


def all_subsets(N: int) -> Iterator[IndexSet]:
    """Every subset of {0..N-1}, ascending by bitmask."""
    if N > 24:
        raise ValueError("exhaustive enumeration is limited to N <= 24")
    for mask in range(1 << N):
        yield IndexSet.from_mask(mask, N)


def sample_subsets(N: int, k: int, seed: int = 0) -> list:
    """``k`` uniformly random subsets (with replacement), sorted by bitmask."""
    rng = make_rng(seed, 0x5EB5E7)
    bits = rng.integers(0, 2, size=(k, N))
    out = [IndexSet(tuple(np.flatnonzero(b)), N) for b in bits]
    return sorted(out, key=lambda s: s.mask)


def subsets(N: int, policy="exhaustive", seed: int = 0) -> list:
    """Subset policy: ``"exhaustive"`` or an integer sample size."""
    if policy == "exhaustive":
        return list(all_subsets(N))
    return sample_subsets(N, int(policy), seed)


def analysis_matrix(F: PASF) -> np.ndarray:
    """``(N, dim)`` matrix of theta_f; row n is the dual coordinates J(omega_n)."""
    return F.space.duality_map(F.omega)


def synthesis_matrix(F: PASF) -> np.ndarray:
    """``(dim, N)`` matrix of theta_tau; column n is tau_n."""
    return F.tau.T


def analysis_apply(F: PASF, x) -> np.ndarray:
    """Coefficients ``([x, omega_n])_n``."""
    x = F.space.check(x)
    return x @ analysis_matrix(F).T


def synthesis_apply(F: PASF, a) -> np.ndarray:
    """``sum_n a_n tau_n``."""
    a = np.asarray(a)
    if a.shape[-1] != F.N:
        raise ValueError(f"expected {F.N} coefficients, got {a.shape[-1]}")
    return a @ F.tau


def frame_operator(F: PASF) -> np.ndarray:
    """Matrix of ``S x = sum_n [x, omega_n] tau_n``."""
    return synthesis_matrix(F) @ analysis_matrix(F)


def partial_frame_operator(F: PASF, M: IndexSet) -> np.ndarray:
    """Matrix of ``S_M x = sum_{n in M} [x, omega_n] tau_n``."""
    if M.N != F.N:
        raise ValueError(f"index set is over {M.N} indices, frame has {F.N}")
    idx = M.index
    if idx.size == 0:
        return np.zeros((F.dim, F.dim), dtype=F.space.dtype)
    return F.tau[idx].T @ analysis_matrix(F)[idx]


def parseval_residual(F: PASF) -> float:
    """Max-entry ``|S - I|``."""
    S = frame_operator(F)
    return float(np.abs(S - np.eye(F.dim)).max())


@dataclass
class FrameReport:
    """Bounds and diagnostics for a frame.

    ``c_estimate`` and ``d_estimate`` are certified lower bounds on the best
    constants in ``||theta_f x||_p <= c ||x||`` and
    ``||theta_tau a|| <= d ||a||_p``. ``a_estimate``/``b_estimate`` are the
    extreme singular values of ``S``, only filled for ``p = 2``. When
    ``omega = tau`` they are the optimal frame bounds of ``{tau_n}``.
    """

    c_estimate: float
    d_estimate: float
    condition_S: float
    parseval_residual: float
    certified: bool
    a_estimate: Optional[float] = None
    b_estimate: Optional[float] = None
    c_witness: Optional[np.ndarray] = field(default=None, repr=False)
    d_witness: Optional[np.ndarray] = field(default=None, repr=False)
    converged: bool = True

    @property
    def is_parseval(self) -> bool:
        return self.parseval_residual <= DEFAULT_TOL.parseval


def _condition(F: PASF) -> float:
    try:
        _, cond = invert(frame_operator(F))
    except NotInvertibleError:
        return math.inf
    return cond


def is_certified(F: PASF, max_condition: float = DEFAULT_TOL.max_condition) -> bool:
    return _condition(F) <= max_condition


def certify(F: PASF, restarts: int = 8, seed: int = 0, max_condition: float = DEFAULT_TOL.max_condition) -> FrameReport:
    """Estimate the analysis/synthesis constants and check invertibility of ``S``.

    A singular ``S`` is reported (``certified=False``, infinite condition)
    rather than raised.
    """
    p = F.p
    c = pnorm_estimate(analysis_matrix(F), p, p, restarts=restarts, seed=seed)
    d = pnorm_estimate(synthesis_matrix(F), p, p, restarts=restarts, seed=seed)
    S = frame_operator(F)
    cond = _condition(F)
    a = b = None
    if F.space.is_hilbert:
        # singular values of S: its eigenvalues when omega = tau (S is then
        # positive), and still nonnegative when it is not
        sv = np.linalg.svd(S, compute_uv=False)
        a, b = float(sv[-1]), float(sv[0])
    return FrameReport(
        c_estimate=c.value,
        d_estimate=d.value,
        condition_S=cond,
        parseval_residual=float(np.abs(S - np.eye(F.dim)).max()),
        certified=bool(cond <= max_condition),
        a_estimate=a,
        b_estimate=b,
        c_witness=c.witness,
        d_witness=d.witness,
        converged=c.converged and d.converged,
    )


def certify_many(frames, restarts: int = 8, seed: int = 0, workers: Optional[int] = None) -> list:
    """:func:`certify` over a batch of frames, in input order.

    ``workers`` defaults to ``$PASFLAB_THREADS`` (1 if unset); results do not
    depend on it.
    """
    frames = list(frames)
    if workers is None:
        workers = int(os.environ.get("PASFLAB_THREADS", "1") or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda F: certify(F, restarts, seed), frames))
    return [certify(F, restarts, seed) for F in frames]


def canonical_dual(F: PASF) -> PASF:
    """``(omega~, tau~) = ((S^-1)^dagger omega_n, S^-1 tau_n)``; its frame operator is ``S^-1``."""
    S_inv, _ = invert(frame_operator(F))
    omega = generalized_adjoint_apply(S_inv, F.omega, F.space)
    tau = F.tau @ S_inv.T
    return PASF(F.space, omega, tau)


def parsevalize(F: PASF) -> PASF:
    """Replace ``tau_n`` by ``S^-1 tau_n`` so the frame operator becomes the identity."""
    S_inv, _ = invert(frame_operator(F))
    return F.with_tau(F.tau @ S_inv.T)


def _orthonormal_rows(space: SipSpace, N: int, rng) -> np.ndarray:
    X = space.random(rng, N)
    Q, _ = np.linalg.qr(X)
    return Q


def random_pasf(space: SipSpace, N: int, seed: int = 0, parseval: bool = False, max_retries: int = 20) -> PASF:
    """Random certified frame with i.i.d. uniform entries.

    Attempt ``k`` uses the stream ``seed + k``. For ``p = 2`` with
    ``parseval=True`` the frame is the rows of a matrix with orthonormal
    columns (``omega = tau``), which is Parseval to rounding.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    for k in range(max_retries + 1):
        rng = make_rng(seed + k)
        if parseval and space.is_hilbert:
            if N < space.dim:
                break
            Q = _orthonormal_rows(space, N, rng)
            return PASF(space, Q, Q)
        F = PASF(space, space.random(rng, N), space.random(rng, N))
        if not is_certified(F):
            continue
        if parseval:
            F = parsevalize(F)
        return F
    raise RuntimeError(f"generation failed: no certified frame after {max_retries} retries")


def basis_pasf(space: SipSpace, scale: float = 1.0) -> PASF:
    """``omega_n = e_n``, ``tau_n = scale * e_n``."""
    e = np.eye(space.dim)
    return PASF(space, e, scale * e)


def extremal_pasf(p: float = 2.0, field: str = "real") -> PASF:
    """One-dimensional frame ``omega = tau = (1/sqrt2, 1/sqrt2)``; attains the 3/4 bound."""
    v = np.full((2, 1), 1.0 / math.sqrt(2.0))
    return PASF(SipSpace(1, p, field), v, v)


def _encode(a: np.ndarray, cplx: bool) -> list:
    if cplx:
        return [[[float(z.real), float(z.imag)] for z in row] for row in a]
    return [[float(v) for v in row] for row in a]


def frame_to_dict(F: PASF) -> dict:
    cplx = F.space.is_complex
    return {
        "p": F.p,
        "dim": F.dim,
        "N": F.N,
        "field": F.space.field,
        "omega": _encode(F.omega, cplx),
        "tau": _encode(F.tau, cplx),
    }


def _decode(rows, N: int, dim: int, cplx: bool, name: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != N:
        raise FrameFormatError(f"{name} must be a list of N={N} vectors")
    out = np.zeros((N, dim), dtype=np.complex128 if cplx else np.float64)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise FrameFormatError(f"{name}[{i}] must have dim={dim} entries")
        for j, v in enumerate(row):
            if cplx:
                if isinstance(v, (int, float)) and not isinstance(v, bool):
                    out[i, j] = v
                elif isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
                    out[i, j] = complex(v[0], v[1])
                else:
                    raise FrameFormatError(f"{name}[{i}][{j}] is not a number or [re, im] pair")
            else:
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise FrameFormatError(f"{name}[{i}][{j}] is not a number")
                out[i, j] = v
    return out


def frame_from_dict(d: dict) -> PASF:
    if not isinstance(d, dict):
        raise FrameFormatError("frame file must hold a JSON object")
    missing = {"p", "dim", "N", "field", "omega", "tau"} - set(d)
    if missing:
        raise FrameFormatError(f"missing keys: {sorted(missing)}")
    try:
        N, dim = int(d["N"]), int(d["dim"])
        space = SipSpace(dim, float(d["p"]), d["field"])
    except (TypeError, ValueError) as exc:
        raise FrameFormatError(str(exc)) from exc
    cplx = space.is_complex
    omega = _decode(d["omega"], N, dim, cplx, "omega")
    tau = _decode(d["tau"], N, dim, cplx, "tau")
    try:
        return PASF(space, omega, tau)
    except ValueError as exc:
        raise FrameFormatError(str(exc)) from exc


def save_frame(F: PASF, path) -> None:
    Path(path).write_text(json.dumps(frame_to_dict(F), indent=1) + "\n")


def load_frame(path) -> PASF:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FrameFormatError(f"cannot read frame file {path}: {exc}") from exc
    return frame_from_dict(data)
