"""Testers: pure probe states paired with projective measurements.

A tester probes an unknown unitary ``u`` acting on a d-dimensional system:
the probe is sent through ``u`` (or ``u (x) I`` for a bipartite probe with
an ancilla) and measured against an orthonormal projector family.  The
outcome statistics are all the information the tester produces.

Two storage layouts are used, following the two tester classes:

* ancilla-free: probe and projectors live in dimension d, the unitary is
  applied directly;
* bipartite: probe and projectors live in dimension d^2 with factor order
  (system, ancilla), and the unitary is embedded as ``u (x) I_d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .qmath import DEFAULT_TOL

ENTROPY_ZERO_TOL = 1e-9   # bits; threshold for "deterministic" outcome statistics
LEAK_TOL = 1e-6


class LeakyMeasurementError(ValueError):
    """Transformed probe escaped the projector span (probability lost)."""


class HypothesisViolation(ValueError):
    """A distinguishability query was made outside its deterministic regime."""


@dataclass(frozen=True, eq=False)
class Tester:
    """Probe state plus an ordered orthonormal projector family.

    ``dim`` is the dimension d of the tested unitary; the probe has size d
    (ancilla-free) or d^2 (bipartite).  The projector count is d or d^2;
    a bipartite tester with only d projectors spans a proper subspace and
    can leak probability.
    """

    input: np.ndarray
    projectors: tuple
    dim: int
    label: str = ""

    def __post_init__(self):
        d = self.dim
        psi = qmath.as_state(self.input)
        projs = tuple(qmath.as_state(p) for p in self.projectors)
        if psi.size not in (d, d * d):
            raise ValueError(f"probe size {psi.size} is neither d nor d^2 for d={d}")
        if any(p.size != psi.size for p in projs):
            raise ValueError("projector dimension differs from the probe dimension")
        if len(projs) not in (d, d * d) or len(projs) > psi.size:
            raise ValueError(f"projector count {len(projs)} must be d or d^2 and fit the space")
        gram = np.array([[np.vdot(a, b) for b in projs] for a in projs])
        if np.max(np.abs(gram - np.eye(len(projs)))) > DEFAULT_TOL:
            raise ValueError("projectors are not orthonormal")
        object.__setattr__(self, "input", psi)
        object.__setattr__(self, "projectors", projs)

    @property
    def is_bipartite(self) -> bool:
        return self.input.size == self.dim * self.dim

    @property
    def n_outcomes(self) -> int:
        return len(self.projectors)

    def projector_matrix(self) -> np.ndarray:
        """Rows are the conjugated projector states, so amps = M @ state."""
        return np.stack([p.conj() for p in self.projectors])

    def embedded(self, u: np.ndarray) -> np.ndarray:
        """The operator actually applied to the probe (u, or u (x) I_d)."""
        u = np.asarray(u, dtype=complex)
        if u.shape != (self.dim, self.dim):
            raise ValueError(f"unitary shape {u.shape} does not match d={self.dim}")
        return np.kron(u, np.eye(self.dim)) if self.is_bipartite else u

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "dim": self.dim,
            "input": qmath.state_to_json(self.input),
            "projectors": [qmath.state_to_json(p) for p in self.projectors],
        }


def tester_from_json(obj: dict) -> Tester:
    return Tester(
        input=qmath.state_from_json(obj["input"]),
        projectors=tuple(qmath.state_from_json(p) for p in obj["projectors"]),
        dim=int(obj["dim"]),
        label=str(obj.get("label", "")),
    )


@dataclass(frozen=True, eq=False)
class Distribution:
    """Outcome probabilities; ``leaky`` marks an intentionally sub-normalized case."""

    probabilities: np.ndarray
    leaky: bool = False

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float).copy()
        # numerical dust from |amp|^2 arithmetic
        p[(p < 0) & (p > -1e-12)] = 0.0
        if np.any(p < 0) or np.any(p > 1 + 1e-9):
            raise ValueError(f"probabilities out of range: {p}")
        total = float(p.sum())
        if not self.leaky and abs(total - 1.0) > DEFAULT_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def __len__(self) -> int:
        return self.probabilities.size


@dataclass(frozen=True, eq=False)
class TesterSet:
    """Testers sharing one measurement; completeness is checked separately."""

    testers: tuple
    dim: int

    def __post_init__(self):
        ts = tuple(self.testers)
        if not ts:
            raise ValueError("empty tester set")
        if any(t.dim != self.dim for t in ts):
            raise ValueError("testers have mixed dimensions")
        ref = ts[0].projectors
        for t in ts[1:]:
            if t.n_outcomes != len(ref) or any(
                np.max(np.abs(a - b)) > DEFAULT_TOL for a, b in zip(t.projectors, ref)
            ):
                raise ValueError("testers do not share one projector list")
        object.__setattr__(self, "testers", ts)

    def __iter__(self):
        return iter(self.testers)

    def __len__(self) -> int:
        return len(self.testers)

    @property
    def inputs(self) -> list:
        return [t.input for t in self.testers]


def outcome_distribution(t: Tester, u: np.ndarray) -> Distribution:
    """Probabilities p_k = |<chi_k| U |psi>|^2 for the tester's projectors."""
    s = t.embedded(u) @ t.input
    p = np.abs(t.projector_matrix() @ s) ** 2
    total = float(p.sum())
    if total < 1.0 - LEAK_TOL:
        raise LeakyMeasurementError(
            f"leaky measurement: outcome probabilities sum to {total:.9f}"
        )
    return Distribution(np.minimum(p, 1.0), leaky=False)


def shannon_entropy(p) -> float:
    """-sum p log2 p in bits, with 0*log(0) = 0."""
    if isinstance(p, Distribution):
        p = p.probabilities
    p = np.asarray(p, dtype=float)
    mask = p > 0
    return float(-(p[mask] * np.log2(p[mask])).sum())


def tester_entropy(t: Tester, u: np.ndarray) -> float:
    return shannon_entropy(outcome_distribution(t, u))


def is_complete_set(s, tol: float = DEFAULT_TOL) -> bool:
    """True iff inputs are orthonormal, resolve the identity, and the
    measurement is shared by every member."""
    testers = list(s.testers) if isinstance(s, TesterSet) else list(s)
    if not testers:
        raise ValueError("empty tester set")
    ref = testers[0]
    for t in testers[1:]:
        if t.input.size != ref.input.size or t.n_outcomes != ref.n_outcomes:
            return False
        if any(np.max(np.abs(a - b)) > tol for a, b in zip(t.projectors, ref.projectors)):
            return False
    inputs = np.stack([t.input for t in testers])
    gram = inputs.conj() @ inputs.T
    if np.max(np.abs(gram - np.eye(len(testers)))) > tol:
        return False
    resolution = inputs.T @ inputs.conj()
    return bool(np.max(np.abs(resolution - np.eye(ref.input.size))) <= tol)


def are_equivalent(t1: Tester, t2: Tester, u: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff the two outcome distributions agree as multisets within tol."""
    if t1.dim != t2.dim:
        raise ValueError("testers act on different dimensions")
    p1 = np.sort(outcome_distribution(t1, u).probabilities)
    p2 = np.sort(outcome_distribution(t2, u).probabilities)
    if p1.size != p2.size:
        return False
    return bool(np.max(np.abs(p1 - p2)) <= tol)


def equivalence_bijection(t1: Tester, t2: Tester, u: np.ndarray, tol: float = DEFAULT_TOL):
    """Explicit outcome matching for diagnostics.

    Returns a list ``m`` with ``p1[i] == p2[m[i]]`` within tol, or None when
    no bijection exists.  Greedy matching on sorted order is enough because
    equality-within-tol on reals is decided pairwise here.
    """
    p1 = outcome_distribution(t1, u).probabilities
    p2 = outcome_distribution(t2, u).probabilities
    if p1.size != p2.size:
        return None
    taken = [False] * p2.size
    mapping = []
    for a in p1:
        best = -1
        best_gap = tol
        for j, b in enumerate(p2):
            if not taken[j] and abs(a - b) <= best_gap:
                best, best_gap = j, abs(a - b)
        if best < 0:
            return None
        taken[best] = True
        mapping.append(best)
    return mapping


def is_eigenoperator(op: np.ndarray, state: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff op|psi> = lambda |psi> for some complex lambda, within tol."""
    op = qmath.as_matrix(op)
    psi = qmath.as_state(state)
    if op.shape != (psi.size, psi.size):
        raise ValueError("operator and state dimensions differ")
    v = op @ psi
    lam = np.vdot(psi, v)
    return bool(np.max(np.abs(v - lam * psi)) <= tol)


def _schmidt_rank(psi: np.ndarray, d: int, tol: float = DEFAULT_TOL) -> int:
    sv = np.linalg.svd(psi.reshape(d, -1), compute_uv=False)
    return int(np.sum(sv > np.sqrt(tol)))


def can_distinguish(t: Tester, u1: np.ndarray, u2: np.ndarray) -> bool:
    """For a tester that is deterministic on both unitaries, decide whether
    their outcomes differ.

    Raises HypothesisViolation when either entropy is nonzero, and rejects
    bipartite testers with entangled probes (operators of the form
    ``u (x) I`` only have separable eigenvectors, so the eigenoperator
    picture does not apply there).
    """
    if t.is_bipartite and _schmidt_rank(t.input, t.dim) > 1:
        raise ValueError("distinguishability requires a separable (ancilla-free) probe")
    d1 = outcome_distribution(t, u1)
    d2 = outcome_distribution(t, u2)
    h1 = shannon_entropy(d1)
    h2 = shannon_entropy(d2)
    if h1 > ENTROPY_ZERO_TOL or h2 > ENTROPY_ZERO_TOL:
        raise HypothesisViolation(
            f"hypothesis violated: entropies ({h1:.3e}, {h2:.3e}) bits are not both zero"
        )
    return int(np.argmax(d1.probabilities)) != int(np.argmax(d2.probabilities))


# ---------------------------------------------------------------------------
# Named testers and tester sets (qubit fixtures used throughout, plus the
# Bell-probe family for the D = d^2 case).
# ---------------------------------------------------------------------------

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
XPLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
XMINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)

Z_BASIS = (KET0, KET1)
X_BASIS = (XPLUS, XMINUS)

_NAMED_INPUTS = {"0": KET0, "1": KET1, "+": XPLUS, "-": XMINUS}
_NAMED_BASES = {"Z": Z_BASIS, "X": X_BASIS}

TESTER_NAMES = ("0Z", "1Z", "+X", "-X", "0X", "1X", "+Z", "-Z")


def bell_states() -> tuple:
    """The four Bell states ordered as (sigma_k (x) I) applied to sum|ii>/sqrt(2)."""
    phi = qmath.max_entangled_state(2) / np.sqrt(2)
    return tuple(np.kron(p, np.eye(2)) @ phi for p in qmath.PAULIS)


def named_tester(name: str) -> Tester:
    """Qubit testers "0Z", "1Z", "+X", "-X", "0X", "1X", "+Z", "-Z" and "bell:k"."""
    if name.startswith("bell:"):
        k = int(name.split(":", 1)[1])
        bells = bell_states()
        if not 0 <= k < 4:
            raise ValueError("bell tester index must be 0..3")
        return Tester(input=bells[k], projectors=bells, dim=2, label=name)
    if len(name) == 2 and name[0] in _NAMED_INPUTS and name[1] in _NAMED_BASES:
        return Tester(
            input=_NAMED_INPUTS[name[0]],
            projectors=_NAMED_BASES[name[1]],
            dim=2,
            label=name,
        )
    raise ValueError(f"unknown tester name: {name!r}")


def bell_tester_set(measurement_rotation: np.ndarray | None = None) -> TesterSet:
    """Complete set of Bell-probe testers; the shared Bell measurement can be
    rotated by ``(V (x) I)`` for a given qubit unitary V."""
    bells = bell_states()
    if measurement_rotation is None:
        projs = bells
    else:
        v = qmath.assert_unitary(measurement_rotation)
        w = np.kron(v, np.eye(2))
        projs = tuple(w @ b for b in bells)
    return TesterSet(
        testers=tuple(
            Tester(input=b, projectors=projs, dim=2, label=f"bell:{k}")
            for k, b in enumerate(bells)
        ),
        dim=2,
    )


def random_tester(d: int, rng, bipartite: bool = False) -> Tester:
    """Haar-random tester: random probe, random full orthonormal measurement."""
    n = d * d if bipartite else d
    basis = qmath.haar_random_unitary(n, rng)
    return Tester(
        input=qmath.haar_random_state(n, rng),
        projectors=tuple(basis[:, i].copy() for i in range(n)),
        dim=d,
    )


def named_tester_set(name: str) -> TesterSet:
    """Complete tester sets: "z" = {0Z,1Z}, "x" = {+X,-X}, "xcomp" = {0X,1X},
    "bell" = Bell-probe testers."""
    if name == "z":
        members = ("0Z", "1Z")
    elif name == "x":
        members = ("+X", "-X")
    elif name == "xcomp":
        members = ("0X", "1X")
    elif name == "bell":
        return bell_tester_set()
    else:
        raise ValueError(f"unknown tester set name: {name!r}")
    return TesterSet(testers=tuple(named_tester(n) for n in members), dim=2)
