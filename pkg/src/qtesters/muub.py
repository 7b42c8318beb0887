"""Orthogonal unitary bases and mutual unbiasedness.

Two orthogonal unitary bases {P_i} and {Q_j} of a common D-dimensional
subspace of the d x d matrices are mutually unbiased when every cross
overlap |Tr(P_i^dag Q_j)|^2 equals one constant kappa, which is forced to
1 for D = d^2 and to d for D = d.  This module verifies that condition,
builds the named fixture bases, and runs executable checks of the two
structure results that connect tester statistics to such bases:

* trivial-bound check: tester sets that are jointly deterministic on a
  unitary family force that family to be pairwise orthogonal, and the
  testers to be outcome-equivalent on the family's span;
* maximal-bound check: two unitary families that are deterministic for one
  complete tester set while uniform for the other form a MUUB pair, with
  every embedded cross overlap inside [0, D].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import qmath
from .bounds import SearchConfig, su_generators, unitary_from_params
from .qmath import DEFAULT_TOL, PAULIS, SIGMA_X, SIGMA_Y, SIGMA_Z
from .tester import (
    ENTROPY_ZERO_TOL,
    Tester,
    TesterSet,
    are_equivalent,
    is_complete_set,
    is_eigenoperator,
    outcome_distribution,
    shannon_entropy,
)

KAPPA_TOL = 1e-6

BASIS_NAMES = ("pauli", "rotation", "hadamard-pair", "weyl", "pauli-unbiased")


def hs_overlap(u: np.ndarray, v: np.ndarray) -> float:
    """Squared Hilbert-Schmidt overlap |Tr(u^dag v)|^2."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError("operators have different shapes")
    return float(abs(np.trace(u.conj().T @ v)) ** 2)


def is_orthogonal_unitary_basis(elements, tol: float = DEFAULT_TOL) -> bool:
    """True iff all elements are unitary, pairwise Hilbert-Schmidt orthogonal,
    and their count is d or d^2."""
    if isinstance(elements, UnitaryBasis):
        elements = elements.elements
    els = [np.asarray(e, dtype=complex) for e in elements]
    if not els:
        return False
    d = els[0].shape[0]
    if len(els) not in (d, d * d):
        return False
    for e in els:
        if e.shape != (d, d) or not qmath.is_unitary(e, tol):
            return False
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            if abs(np.trace(els[i].conj().T @ els[j])) > tol:
                return False
    return True


@dataclass(frozen=True, eq=False)
class UnitaryBasis:
    """Pairwise HS-orthogonal unitaries spanning a D in {d, d^2} subspace."""

    dim: int
    elements: tuple

    def __post_init__(self):
        els = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        if not is_orthogonal_unitary_basis(els):
            raise ValueError("elements are not an orthogonal unitary basis of size d or d^2")
        if els[0].shape[0] != self.dim:
            raise ValueError("element dimension does not match dim")
        object.__setattr__(self, "elements", els)

    @property
    def D(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def to_json(self) -> dict:
        return {"dim": self.dim, "elements": [qmath.matrix_to_json(e) for e in self.elements]}


def basis_from_json(obj: dict) -> UnitaryBasis:
    return UnitaryBasis(
        dim=int(obj["dim"]),
        elements=tuple(qmath.matrix_from_json(e) for e in obj["elements"]),
    )


@dataclass(frozen=True, eq=False)
class MuubReport:
    overlaps: np.ndarray
    kappa: float | None   # None when the overlaps are not constant
    expected_kappa: float
    verdict: bool

    def to_json(self) -> dict:
        return {
            "overlaps": [[float(x) for x in row] for row in self.overlaps],
            "kappa": None if self.kappa is None else float(self.kappa),
            "expected_kappa": float(self.expected_kappa),
            "verdict": bool(self.verdict),
        }


def are_muub(a: UnitaryBasis, b: UnitaryBasis, tol: float = KAPPA_TOL) -> MuubReport:
    """Full cross-overlap matrix plus the constant-kappa verdict."""
    if a.dim != b.dim:
        raise ValueError("bases act on different dimensions")
    if a.D != b.D:
        raise ValueError("bases span subspaces of different sizes")
    d, dd = a.dim, a.D
    expected = 1.0 if dd == d * d else float(d)
    overlaps = np.array([[hs_overlap(p, q) for q in b] for p in a])
    mean = float(overlaps.mean())
    constant = bool(np.max(np.abs(overlaps - mean)) <= tol)
    verdict = constant and abs(mean - expected) <= tol
    return MuubReport(
        overlaps=overlaps,
        kappa=mean if constant else None,
        expected_kappa=expected,
        verdict=verdict,
    )


def _weyl_basis(d: int) -> tuple:
    """Clock-and-shift products X^a Z^b with omega = exp(2 pi i / d)."""
    omega = np.exp(2j * np.pi / d)
    shift = np.zeros((d, d), dtype=complex)
    for j in range(d):
        shift[(j + 1) % d, j] = 1.0
    clock = np.diag(omega ** np.arange(d))
    out = []
    for a in range(d):
        for b in range(d):
            out.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return tuple(out)


def balanced_qubit_rotation() -> np.ndarray:
    """The qubit unitary (I + i(sx+sy+sz))/2, whose overlap with every Pauli
    is exactly 1; it turns the Pauli basis into its unbiased partner."""
    return 0.5 * (np.eye(2, dtype=complex) + 1j * (SIGMA_X + SIGMA_Y + SIGMA_Z))


def build_named_basis(name: str, d: int) -> UnitaryBasis:
    """Named bases: "pauli" (d=2), "rotation" {I, i sy} (d=2), "hadamard-pair"
    {(I -+ i sy)/sqrt 2} (d=2), "weyl" (any d), "pauli-unbiased" (d=2)."""
    if name == "weyl":
        if d < 2:
            raise ValueError("weyl basis needs d >= 2")
        return UnitaryBasis(dim=d, elements=_weyl_basis(d))
    if d != 2:
        raise ValueError(f"basis {name!r} is only defined for d=2")
    i2 = np.eye(2, dtype=complex)
    if name == "pauli":
        return UnitaryBasis(dim=2, elements=tuple(PAULIS))
    if name == "rotation":
        return UnitaryBasis(dim=2, elements=(i2, 1j * SIGMA_Y))
    if name == "hadamard-pair":
        return UnitaryBasis(
            dim=2,
            elements=((i2 - 1j * SIGMA_Y) / np.sqrt(2), (i2 + 1j * SIGMA_Y) / np.sqrt(2)),
        )
    if name == "pauli-unbiased":
        v = balanced_qubit_rotation()
        return UnitaryBasis(dim=2, elements=tuple(p @ v for p in PAULIS))
    raise ValueError(f"unknown basis name: {name!r}")


def rotation_span_samples(n: int = 16) -> list:
    """Unitaries cos(theta) I + sin(theta) (i sy) covering the span of the
    "rotation" basis (modulo global phase)."""
    i2 = np.eye(2, dtype=complex)
    thetas = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return [np.cos(th) * i2 + np.sin(th) * (1j * SIGMA_Y) for th in thetas]


# ---------------------------------------------------------------------------
# Executable structure checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrivialBoundReport:
    hypothesis_pass: bool
    s1_pass: bool            # family pairwise HS-orthogonal
    s2_pass: bool            # testers equivalent on every span sample
    failures: tuple

    @property
    def verdict(self) -> bool:
        return self.hypothesis_pass and self.s1_pass and self.s2_pass

    def to_json(self) -> dict:
        return {
            "hypothesis_pass": self.hypothesis_pass,
            "s1_pass": self.s1_pass,
            "s2_pass": self.s2_pass,
            "verdict": self.verdict,
            "failures": list(self.failures),
        }


def verify_prop_trivial(s1: TesterSet, s2: TesterSet, us, span_samples,
                        tol: float = DEFAULT_TOL) -> TrivialBoundReport:
    """Check the trivial-bound structure result on concrete data.

    Hypothesis: both sets complete; every cross tester pair has zero
    entropy sum on every element of ``us``; no U_m^dag U_n (m != n) is an
    eigenoperator of any probe.  Conclusions checked: ``us`` pairwise
    HS-orthogonal (s1) and all tester pairs outcome-equivalent on each
    span sample (s2).  Failures are recorded, never raised.
    """
    failures = []
    us = [np.asarray(u, dtype=complex) for u in us]
    if not is_complete_set(s1, tol) or not is_complete_set(s2, tol):
        failures.append("tester sets are not complete")
    for u in us:
        for ta in s1:
            for tb in s2:
                h = shannon_entropy(outcome_distribution(ta, u)) + shannon_entropy(
                    outcome_distribution(tb, u)
                )
                if h > ENTROPY_ZERO_TOL:
                    failures.append(
                        f"entropy sum {h:.3e} bits nonzero for ({ta.label},{tb.label})"
                    )
    probes = [t.input for t in s1] + [t.input for t in s2]
    for m in range(len(us)):
        for n in range(len(us)):
            if m == n:
                continue
            w = us[m].conj().T @ us[n]
            for psi in probes:
                if is_eigenoperator(w, psi, tol):
                    failures.append(f"U_{m}^dag U_{n} is an eigenoperator of a probe")
    hypothesis = not failures
    s1_pass = True
    for m in range(len(us)):
        for n in range(m + 1, len(us)):
            if abs(np.trace(us[m].conj().T @ us[n])) > tol:
                s1_pass = False
                failures.append(f"family elements {m},{n} are not HS-orthogonal")
    s2_pass = True
    testers = list(s1) + list(s2)
    for w in span_samples:
        for i in range(len(testers)):
            for j in range(i + 1, len(testers)):
                if not are_equivalent(testers[i], testers[j], w, tol=1e-8):
                    s2_pass = False
                    failures.append(
                        f"testers {testers[i].label},{testers[j].label} not equivalent on a span sample"
                    )
    return TrivialBoundReport(
        hypothesis_pass=hypothesis,
        s1_pass=s1_pass,
        s2_pass=s2_pass,
        failures=tuple(failures),
    )


@dataclass(frozen=True, eq=False)
class MaximalBoundReport:
    hypothesis_pass: bool
    range_pass: bool          # every embedded cross overlap inside [0, D]
    muub: MuubReport
    failures: tuple

    @property
    def verdict(self) -> bool:
        return self.hypothesis_pass and self.range_pass and self.muub.verdict

    def to_json(self) -> dict:
        return {
            "hypothesis_pass": self.hypothesis_pass,
            "range_pass": self.range_pass,
            "muub": self.muub.to_json(),
            "verdict": self.verdict,
            "failures": list(self.failures),
        }


def embedded_cross_overlaps(a: UnitaryBasis, b: UnitaryBasis) -> np.ndarray:
    """|Tr(U_m^dag U'_n)|^2 with the unitaries embedded the way the testers
    apply them: as u (x) I_d when D = d^2, bare otherwise."""
    if a.D == a.dim ** 2:
        i_d = np.eye(a.dim, dtype=complex)
        ea = [np.kron(u, i_d) for u in a]
        eb = [np.kron(u, i_d) for u in b]
    else:
        ea, eb = list(a), list(b)
    return np.array([[hs_overlap(p, q) for q in eb] for p in ea])


def verify_prop_maximal(s1: TesterSet, s2: TesterSet, fam1: UnitaryBasis,
                        fam2: UnitaryBasis, tol: float = 1e-6) -> MaximalBoundReport:
    """Check the maximal-bound structure result on concrete data.

    Hypothesis: s1 deterministic on fam1 and uniform on fam2, and s2 the
    other way around, all within ``tol`` bits.  Conclusions checked: every
    embedded cross overlap lies in [0, D] (range check) and the two
    families verify as a MUUB pair.
    """
    failures = []
    if fam1.D != fam2.D or fam1.dim != fam2.dim:
        failures.append("families differ in dimension or size")
    dd = fam1.D
    log_d = np.log2(dd)
    if not is_complete_set(s1) or not is_complete_set(s2):
        failures.append("tester sets are not complete")

    def check(ts, fam, expect, who):
        for t in ts:
            for u in fam:
                h = shannon_entropy(outcome_distribution(t, u))
                target = 0.0 if expect == "deterministic" else log_d
                if abs(h - target) > tol:
                    failures.append(
                        f"{who}: tester {t.label} entropy {h:.6f} bits, expected {expect}"
                    )

    check(s1, fam1, "deterministic", "set1/family1")
    check(s1, fam2, "uniform", "set1/family2")
    check(s2, fam2, "deterministic", "set2/family2")
    check(s2, fam1, "uniform", "set2/family1")
    hypothesis = not failures
    cross = embedded_cross_overlaps(fam1, fam2)
    range_pass = bool(np.all(cross >= -DEFAULT_TOL) and np.all(cross <= dd + DEFAULT_TOL))
    if not range_pass:
        failures.append("an embedded cross overlap left [0, D]")
    report = are_muub(fam1, fam2)
    return MaximalBoundReport(
        hypothesis_pass=hypothesis,
        range_pass=range_pass,
        muub=report,
        failures=tuple(failures),
    )


def find_unbiased_partner(basis: UnitaryBasis, cfg: SearchConfig):
    """Search for a right-multiplier V making {P_j V} unbiased to {P_j}.

    Only meaningful for D = d^2 bases (where {P_j V} is automatically an
    orthogonal unitary basis of the full matrix space).  Minimizes the
    squared deviation of all cross overlaps from 1 with the same simplex
    descent used for bound estimation.  Returns (partner, residual); the
    caller judges whether the residual is small enough to accept.
    """
    d = basis.dim
    if basis.D != d * d:
        raise ValueError("partner search is implemented for full bases (D = d^2) only")
    gens = np.ascontiguousarray(su_generators(d))
    stack = np.stack([p.conj().T for p in basis])

    def deviation(theta):
        v = unitary_from_params(theta, gens)
        traces = np.einsum("kij,lji->kl", stack, np.stack([p @ v for p in basis]))
        return float(np.sum((np.abs(traces) ** 2 - 1.0) ** 2))

    gen = cfg.rng.generator()
    best = (np.inf, None)
    for _ in range(cfg.starts):
        theta0 = gen.uniform(-np.pi, np.pi, size=d * d - 1)
        res = minimize(
            deviation,
            theta0,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": cfg.max_iterations,
                     "maxfev": 4 * cfg.max_iterations},
        )
        if res.fun < best[0]:
            best = (float(res.fun), res.x)
    v = unitary_from_params(best[1], gens)
    partner = UnitaryBasis(dim=d, elements=tuple(p @ v for p in basis))
    return partner, best[0]
