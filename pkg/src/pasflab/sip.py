"""Finite-dimensional l^p spaces with the Lumer-Giles semi-inner product.

For ``1 < p < inf`` the semi-inner product on K^d is

    [x, y] = sum_n x_n conj(y_n) |y_n|^(p-2) / ||y||_p^(p-2),   [x, 0] = 0.

It is linear in ``x`` but only conjugate-homogeneous in ``y``. All
functions here broadcast over leading axes; the last axis holds the
coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

P_MIN = 1.0 + 1e-6
P_MAX = 1e6


class ConditioningWarning(UserWarning):
    """Exponent is far enough from 2 that |y|^(p-2) loses accuracy."""


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by ``seed`` and extra stream keys."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])
    return np.random.Generator(np.random.Philox(ss))


def _sign(z: np.ndarray) -> np.ndarray:
    """z / |z| with sign(0) = 0."""
    a = np.abs(z)
    out = np.zeros_like(z)
    nz = a > 0
    out[nz] = z[nz] / a[nz]
    return out


def lp_norm(x: np.ndarray, p: float) -> np.ndarray:
    """Scaled l^p norm along the last axis (no overflow for large p)."""
    a = np.abs(x)
    m = a.max(axis=-1, keepdims=True) if a.shape[-1] else np.zeros(a.shape[:-1] + (1,))
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((a / safe) ** p, axis=-1) ** (1.0 / p)
    return np.where(m[..., 0] > 0, m[..., 0] * s, 0.0)


def _weighted(z: np.ndarray, r: float) -> np.ndarray:
    """sign(conj z) * (|z|/||z||_r)^(r-1) * ||z||_r, the l^r duality map.

    Written in normalized form so neither 0^(r-2) nor ||z||^(r-2) is ever
    formed; zero coordinates map to zero for every r > 1.
    """
    nrm = lp_norm(z, r)[..., None]
    safe = np.where(nrm > 0, nrm, 1.0)
    return np.conj(_sign(z)) * (np.abs(z) / safe) ** (r - 1.0) * nrm


@dataclass(frozen=True)
class SipSpace:
    """K^dim with the l^p semi-inner product.

    Parameters
    ----------
    dim : int
        Dimension, at least 1.
    p : float
        Exponent with ``1 + 1e-6 <= p <= 1e6``.
    field : {"real", "complex"}
        Scalar field.
    """

    dim: int
    p: float
    field: str = "real"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        p = float(self.p)
        if not math.isfinite(p) or p < P_MIN or p > P_MAX:
            raise ValueError(f"p must satisfy {P_MIN} <= p <= {P_MAX:g}, got {self.p!r}")
        if self.field not in ("real", "complex"):
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        if p < 1.1 or p > 16:
            warnings.warn(
                f"p={p:g} is badly conditioned; |y|^(p-2) loses accuracy",
                ConditioningWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", p)

    @property
    def q(self) -> float:
        """Conjugate exponent p / (p - 1)."""
        return self.p / (self.p - 1.0)

    @property
    def is_complex(self) -> bool:
        return self.field == "complex"

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    @property
    def is_hilbert(self) -> bool:
        return self.p == 2.0

    def check(self, x) -> np.ndarray:
        """Validate coordinates ``x`` (last axis = dim) and cast to the field dtype."""
        x = np.asarray(x)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise ValueError(f"expected last axis of length {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("vector entries must be finite")
        if np.iscomplexobj(x) and not self.is_complex:
            if np.any(x.imag != 0):
                raise ValueError("complex entries in a real space")
            x = x.real
        return np.asarray(x, dtype=self.dtype)

    def zeros(self, *lead: int) -> np.ndarray:
        return np.zeros(lead + (self.dim,), dtype=self.dtype)

    def random(self, rng: np.random.Generator, *lead: int) -> np.ndarray:
        """I.i.d. uniform [-1, 1] entries (real and imaginary parts)."""
        shape = lead + (self.dim,)
        x = rng.uniform(-1.0, 1.0, size=shape)
        if self.is_complex:
            x = x + 1j * rng.uniform(-1.0, 1.0, size=shape)
        return x

    def norm(self, x) -> np.ndarray:
        return lp_norm(self.check(x), self.p)

    def duality_map(self, y) -> np.ndarray:
        """Dual coordinates J(y) with ``[x, y] = sum_n x_n J(y)_n``.

        ``||J(y)||_q = ||y||_p`` and ``J(0) = 0``.
        """
        y = self.check(y)
        if self.is_hilbert:
            return np.conj(y)
        return _weighted(y, self.p)

    def riesz_representer(self, g) -> np.ndarray:
        """Unique ``y`` with ``[x, y] = sum_n x_n g_n``; inverse of :meth:`duality_map`.

        The closed form is ``y_n = conj(g_n) |g_n|^(q-2) ||g||_q^(2-q)``, i.e.
        the l^q duality map of ``g``.
        """
        g = np.asarray(g)
        if g.ndim == 0 or g.shape[-1] != self.dim:
            raise ValueError(f"expected last axis of length {self.dim}, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("dual vector entries must be finite")
        g = np.asarray(g, dtype=np.result_type(g.dtype, self.dtype))
        if self.is_hilbert:
            y = np.conj(g)
        else:
            y = _weighted(g, self.q)
        return self.check(y) if not self.is_complex else y.astype(np.complex128)

    def sip(self, x, y) -> np.ndarray:
        """The semi-inner product [x, y]."""
        x = self.check(x)
        return np.sum(x * self.duality_map(y), axis=-1)

    def pair(self, x, g) -> np.ndarray:
        """Dual pairing sum_n x_n g_n."""
        return np.sum(self.check(x) * np.asarray(g), axis=-1)


@dataclass
class AxiomReport:
    """Largest relative violation of each semi-inner-product axiom over the samples."""

    p: float
    field: str
    trials: int
    violations: dict
    second_slot_additivity: float
    counterexample: Optional[dict] = None

    def passed(self, tol: float = 1e-8) -> bool:
        return all(v <= tol for v in self.violations.values())


AXIOMS: Sequence[str] = (
    "positivity",
    "first_slot_homogeneity",
    "second_slot_conjugate_homogeneity",
    "first_slot_additivity",
    "cauchy_schwarz",
)


def verify_sip_axioms(space: SipSpace, trials: int = 1000, seed: int = 0) -> AxiomReport:
    """Sample random triples and scalars and measure violations of axioms (i)-(v).

    Additivity in the second slot is not an axiom; its violation is measured
    too and the worst triple is returned as ``counterexample`` so callers can
    confirm the semi-inner product is genuinely nonlinear for ``p != 2``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    x, y, z = (space.random(rng, trials) for _ in range(3))
    lam = rng.uniform(-2.0, 2.0, size=trials)
    if space.is_complex:
        lam = lam + 1j * rng.uniform(-2.0, 2.0, size=trials)
    lam_col = lam[:, None]

    nx, ny, nz = space.norm(x), space.norm(y), space.norm(z)
    xx, yy = space.sip(x, x), space.sip(y, y)
    xy = space.sip(x, y)

    pos = np.abs(xx - nx**2) / nx**2
    hom1 = np.abs(space.sip(lam_col * x, y) - lam * xy) / ((1 + np.abs(lam)) * nx * ny)
    hom2 = np.abs(space.sip(x, lam_col * y) - np.conj(lam) * xy) / ((1 + np.abs(lam)) * nx * ny)
    add1 = np.abs(space.sip(x + z, y) - xy - space.sip(z, y)) / ((nx + nz) * ny)
    cs = np.maximum(0.0, np.abs(xy) ** 2 - (xx * yy).real) / (xx * yy).real
    add2 = np.abs(space.sip(x, y + z) - xy - space.sip(x, z)) / (nx * (ny + nz))

    worst = int(np.argmax(add2))
    return AxiomReport(
        p=space.p,
        field=space.field,
        trials=trials,
        violations={
            "positivity": float(pos.max()),
            "first_slot_homogeneity": float(hom1.max()),
            "second_slot_conjugate_homogeneity": float(hom2.max()),
            "first_slot_additivity": float(add1.max()),
            "cauchy_schwarz": float(cs.max()),
        },
        second_slot_additivity=float(add2[worst]),
        counterexample={"x": x[worst], "y": y[worst], "z": z[worst]},
    )
