
import numpy as np
import pytest

from pasflab.sip import make_rng

ACCEPTANCE_LINES = []


def sip_oracle(x, y, p):
    """Semi-inner product straight from the defining sum, scalar by scalar."""
    ny = sum(abs(v) ** p for v in y) ** (1.0 / p)
    if ny == 0:
        return 0.0
    s = 0
    for a, b in zip(x, y):
        if b != 0:
            s += a * complex(b).conjugate() * abs(b) ** (p - 2)
    return s / ny ** (p - 2)


def general_identity_oracle(F, M, x):
    """Both sides of the general p-ASF identity by nested Python loops.

    Builds S, S_M, S^-1 and the canonical dual from scratch with numpy.linalg
    and evaluates every semi-inner product with :func:`sip_oracle`.
    """
    p = F.p
    om, ta = [list(v) for v in F.omega], [list(v) for v in F.tau]
    d, N = F.dim, F.N

    def op(indices):
        A = np.zeros((d, d), dtype=complex)
        for j in range(d):
            e = [0.0] * d
            e[j] = 1.0
            for n in indices:
                A[:, j] += sip_oracle(e, om[n], p) * np.asarray(ta[n])
        return A

    def adjoint(A, y):
        # solve [x, z] = [Ax, y] for z: J(z) = A^T J(y), invert J in closed form
        g = [sum(A[i, j] * _J(y, p)[i] for i in range(d)) for j in range(d)]
        q = p / (p - 1)
        ng = sum(abs(v) ** q for v in g) ** (1 / q)
        if ng == 0:
            return [0.0] * d
        return [complex(v).conjugate() * abs(v) ** (q - 2) * ng ** (2 - q) if v != 0 else 0.0 for v in g]

    S_inv = np.linalg.inv(op(range(N)))
    dual_om = [adjoint(S_inv, w) for w in om]
    dual_ta = [list(S_inv @ np.asarray(t)) for t in ta]

    def side(indices):
        first = sum(sip_oracle(x, om[n], p) * sip_oracle(ta[n], x, p) for n in indices)
        SM = op(indices)
        SMx = list(SM @ np.asarray(x))
        SMd = adjoint(SM, x)
        second = sum(sip_oracle(SMx, dual_om[n], p) * sip_oracle(dual_ta[n], SMd, p) for n in range(N))
        return first - second

    comp = [n for n in range(N) if n not in M.members]
    return side(list(M.members)), side(comp)


def _J(y, p):
    ny = sum(abs(v) ** p for v in y) ** (1.0 / p)
    if ny == 0:
        return [0.0] * len(y)
    return [complex(v).conjugate() * abs(v) ** (p - 2) / ny ** (p - 2) if v != 0 else 0.0 for v in y]


@pytest.fixture
def rng():
    return make_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
