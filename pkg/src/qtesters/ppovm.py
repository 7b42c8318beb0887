"""Process-operator formulation of testers.

A tester's statistics can be produced without touching the probe directly:
represent the channel ``u`` by its rank-one process operator

    E(u) = |u) (u|   with   |u) = (u (x) I) sum_i |i>|i>,

and represent the tester by operators T_k built from the probe density
operator and the measurement projectors.  Then p_k = Tr[T_k E].

Factor order convention (the one place it matters): both E and the T_k act
on (output space, probe-input space), so the identity element of the
normalization sum sits on the first slot:  sum_k T_k = I (x) [Tr_anc rho]^t.
For the probe |0> measured in the computational basis this yields the
closed form T_k = |k><k| (x) |0><0|, which is the recorded witness for the
convention; the cross-check against the direct rule |<chi_k|U|psi>|^2 is
the arbiter and is enforced by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qmath
from .qmath import DEFAULT_TOL
from .tester import Distribution, Tester


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    """Positive semidefinite process operator; rank one with trace d for
    unitary channels."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = qmath.as_matrix(self.matrix)
        n = self.dim * self.dim
        if m.shape != (n, n):
            raise ValueError(f"process operator must be {n}x{n} for d={self.dim}")
        if np.max(np.abs(m - m.conj().T)) > DEFAULT_TOL:
            raise ValueError("process operator is not Hermitian")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -DEFAULT_TOL:
            raise ValueError(f"process operator is not PSD (min eigenvalue {evals.min():.3e})")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class TesterElementSet:
    """PPOVM elements T_k for one tester, plus the probe density operator."""

    elements: tuple
    probe: np.ndarray
    complete: bool

    def __post_init__(self):
        els = tuple(qmath.as_matrix(e) for e in self.elements)
        for e in els:
            evals = np.linalg.eigvalsh(e)
            if evals.min() < -DEFAULT_TOL:
                raise ValueError(f"tester element not PSD (min eigenvalue {evals.min():.3e})")
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "probe", qmath.as_matrix(self.probe))

    def normalization(self) -> np.ndarray:
        return sum(self.elements)


def choi_operator(u: np.ndarray) -> ChoiOperator:
    """Rank-one process operator of a unitary channel (trace d)."""
    u = qmath.assert_unitary(u)
    w = u.reshape(-1)  # (u (x) I) sum_i |i>|i>, row-major layout
    return ChoiOperator(dim=u.shape[0], matrix=np.outer(w, w.conj()))


def tester_elements(t: Tester) -> TesterElementSet:
    """PPOVM elements T_k = Tr_anc[(P_k (x) I)(I (x) S rho^t S)].

    The ambient space is ordered (output, ancilla, probe-input); the probe
    density operator rho lives on (probe-input, ancilla), is partially
    transposed on its first factor and reordered by the factor swap S.
    Ancilla-free testers use a one-dimensional ancilla.
    """
    d = t.dim
    danc = d if t.is_bipartite else 1
    rho = np.outer(t.input, t.input.conj())
    rho_t = qmath.partial_transpose_first(rho, d)
    s = qmath.swap_factors(d, danc)
    srs = s @ rho_t @ s.conj().T  # now on (ancilla, probe-input)
    i_out = np.eye(d, dtype=complex)
    i_in = np.eye(d, dtype=complex)
    elements = []
    for chi in t.projectors:
        p_k = np.outer(chi, chi.conj())  # on (output, ancilla)
        big = np.kron(p_k, i_in) @ np.kron(i_out, srs)
        big = big.reshape(d, danc, d, d, danc, d)
        t_k = np.einsum("mbnpbq->mnpq", big).reshape(d * d, d * d)
        elements.append(t_k)
    proj_sum = sum(np.outer(c, c.conj()) for c in t.projectors)
    complete = bool(
        np.max(np.abs(proj_sum - np.eye(t.input.size))) <= DEFAULT_TOL
    )
    return TesterElementSet(elements=tuple(elements), probe=rho, complete=complete)


def probability_via_choi(ts: TesterElementSet, e: ChoiOperator) -> Distribution:
    """p_k = Tr[T_k E], clamped to [0, 1] after a reality check."""
    probs = []
    for t_k in ts.elements:
        if t_k.shape != e.matrix.shape:
            raise ValueError(
                f"element shape {t_k.shape} does not match the process operator {e.matrix.shape}"
            )
        val = np.trace(t_k @ e.matrix)
        if abs(val.imag) > DEFAULT_TOL:
            raise ValueError(f"Tr[T_k E] has imaginary part {val.imag:.3e}")
        probs.append(min(max(val.real, 0.0), 1.0))
    p = np.asarray(probs)
    return Distribution(p, leaky=bool(p.sum() < 1.0 - 1e-6))
