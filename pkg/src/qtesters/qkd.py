"""Monte-Carlo simulation of two-way (bidirectional) key distribution.

Two protocols are modeled, both with the same cast: Bob owns testers and
sends their probe states forward, Alice encodes by applying a unitary to
whatever arrives and returns it, Bob measures the returned state with the
tester he started with.

* ``run_lm05`` - the qubit protocol.  Bob draws a tester uniformly from
  the union of two complete sets; Alice either encodes a bit (identity =
  0, the flip i*sigma_y = 1) or, with the configured control fraction,
  measures the incoming qubit in a random basis and publishes the result.
  Control rounds where her basis matches the basis of Bob's probe are
  compared against the state he actually sent; the mismatch rate is the
  eavesdropping alarm.

* ``run_extended`` - the D-ary protocol.  Bob draws one of two complete
  tester sets and a tester within it; Alice draws one of two unitary
  encoding families and a digit.  After her public family announcement the
  rounds where Bob's set is uniform for her family are discarded; on the
  kept rounds his deterministic outcome decodes the digit.  The two tester
  sets must be deterministic on their own family and uniform on the other
  (checked up front, fail fast), which forces the families to be mutually
  unbiased unitary bases.

The adversary is configurable: ``none``, a tester-hijack
(``qmm-equivalent-tester``: Eve keeps Bob's probe, runs her own tester
against Alice, then applies her inferred unitary to the kept probe), or
``intercept-resend`` (Eve measures in flight, never storing anything).

All per-round randomness is pre-drawn in a fixed column layout, so a run
is bit-for-bit reproducible from its (seed, stream) and independent of the
kernel backend.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import muub as muub_mod
from . import qmath, tester as tester_mod
from .kernels import ACTIVE
from .muub import UnitaryBasis, balanced_qubit_rotation, build_named_basis, verify_prop_maximal
from .qmath import RngHandle
from .tester import HypothesisViolation, Tester, TesterSet, is_complete_set

EVE_KINDS = ("none", "qmm-equivalent-tester", "intercept-resend")
RESEND_POLICIES = ("fixed-zero", "random-input")
SET_POLICIES = ("fixed", "uniform")

_SNAP = 1e-9  # probabilities below this are treated as exact zeros in the tables


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EveStrategy:
    """Adversary model; the policies pin down every choice Eve makes.

    ``resend_policy`` fixes the state her hijack sends forward in the
    qubit protocol ("fixed-zero" or "random-input"); ``set_policy`` fixes
    how she picks her tester set in the D-ary protocol ("fixed" = always
    the first set, "uniform").
    """

    kind: str = "none"
    resend_policy: str = "fixed-zero"
    set_policy: str = "fixed"

    def __post_init__(self):
        if self.kind not in EVE_KINDS:
            raise ConfigError(f"unknown eve kind {self.kind!r}; choose from {EVE_KINDS}")
        if self.resend_policy not in RESEND_POLICIES:
            raise ConfigError(f"unknown resend policy {self.resend_policy!r}")
        if self.set_policy not in SET_POLICIES:
            raise ConfigError(f"unknown set policy {self.set_policy!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "resend_policy": self.resend_policy,
                "set_policy": self.set_policy}


@dataclass(frozen=True, eq=False)
class ProtocolConfig:
    d: int
    D: int
    rounds: int
    control_fraction: float
    eve: EveStrategy
    tester_sets: tuple
    encoding_sets: tuple
    rng: RngHandle

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if not 0.0 <= self.control_fraction <= 1.0:
            raise ConfigError("control fraction must lie in [0, 1]")
        if len(self.tester_sets) != 2:
            raise ConfigError("exactly two tester sets are required")
        for s in self.tester_sets:
            if not is_complete_set(s):
                raise ConfigError("tester sets must be complete")

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "D": self.D,
            "rounds": self.rounds,
            "control_fraction": self.control_fraction,
            "eve": self.eve.to_json(),
            "tester_sets": [[t.to_json() for t in s] for s in self.tester_sets],
            "encoding_sets": [b.to_json() for b in self.encoding_sets],
            "seed": self.rng.seed,
            "stream": self.rng.stream,
        }


@dataclass(frozen=True)
class ProtocolStats:
    """Aggregated round outcomes with binomial standard errors."""

    rounds: int
    control_rounds: int
    sifted: int
    sift_fraction: float
    sift_se: float
    bob_errors: int
    bob_error_rate: float
    bob_error_se: float
    cm_comparisons: int
    cm_mismatches: int
    cm_mismatch_rate: float
    cm_mismatch_se: float
    eve_rounds: int
    eve_correct: int
    eve_accuracy: float
    eve_accuracy_se: float

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _rate(successes: int, n: int) -> tuple:
    if n <= 0:
        return 0.0, 0.0
    p = successes / n
    return p, float(np.sqrt(p * (1.0 - p) / n))


def _snap_rows(table: np.ndarray) -> np.ndarray:
    """Zero out sub-1e-9 probabilities and renormalize each distribution, so
    deterministic rows sample identically on every backend."""
    t = np.array(table, dtype=float)
    flat = t.reshape(-1, t.shape[-1])
    flat[flat < _SNAP] = 0.0
    flat /= flat.sum(axis=1, keepdims=True)
    return t


def _dist(projs: np.ndarray, state: np.ndarray) -> np.ndarray:
    return np.abs(projs @ state) ** 2


def analytic_eve_accuracy(D: int) -> float:
    """Sifted-key accuracy of a fixed-set equivalent-tester hijack against a
    uniform family choice: certain in half the rounds, uniform in the rest."""
    if D < 2:
        raise ValueError("D must be >= 2")
    return 0.5 * 1.0 + 0.5 * (1.0 / D)


# ---------------------------------------------------------------------------
# Qubit protocol
# ---------------------------------------------------------------------------

def default_lm05_config(rounds: int = 100_000, control_fraction: float = 0.0,
                        eve: EveStrategy | None = None, seed: int = 0,
                        stream: int = 0) -> ProtocolConfig:
    return ProtocolConfig(
        d=2,
        D=2,
        rounds=rounds,
        control_fraction=control_fraction,
        eve=eve or EveStrategy(),
        tester_sets=(tester_mod.named_tester_set("z"), tester_mod.named_tester_set("x")),
        encoding_sets=(build_named_basis("rotation", 2),),
        rng=RngHandle(seed=seed, stream=stream),
    )


def _lm05_tables(cfg: ProtocolConfig):
    testers = [t for s in cfg.tester_sets for t in s]
    enc = list(cfg.encoding_sets[0])
    if cfg.d != 2 or len(enc) != 2 or len(testers) != 4:
        raise ConfigError("the qubit protocol needs d=2, two 2-member tester sets and 2 encodings")
    if any(t.is_bipartite for t in testers):
        raise ConfigError("the qubit protocol uses ancilla-free testers")
    cm_bases = [np.stack([p.conj() for p in s.testers[0].projectors]) for s in cfg.tester_sets]

    n_t = len(testers)
    p_bob = np.empty((n_t, 2, 2))
    self_idx = np.empty(n_t, dtype=np.int64)
    basis_id = np.empty(n_t, dtype=np.int64)
    state_idx = np.empty(n_t, dtype=np.int64)
    p_state_in_basis = np.empty((n_t, 2, 2))
    for ti, t in enumerate(testers):
        projs = t.projector_matrix()
        own = _dist(projs, t.input)
        if own.max() < 1.0 - 1e-9:
            raise ConfigError(f"tester {t.label!r} probe is not a measurement state")
        self_idx[ti] = int(np.argmax(own))
        for bit, u in enumerate(enc):
            p = _dist(projs, u @ t.input)
            if p.max() < 1.0 - 1e-9:
                raise ConfigError(
                    f"tester {t.label!r} is not deterministic on encoding {bit}"
                )
            p_bob[ti, bit] = p
        if int(np.argmax(p_bob[ti, 0])) != self_idx[ti] or int(np.argmax(p_bob[ti, 1])) == self_idx[ti]:
            raise ConfigError("encodings must act as (stay, flip) on every probe")
        found = None
        for b, mb in enumerate(cm_bases):
            p = _dist(mb, t.input)
            p_state_in_basis[ti, b] = p
            if p.max() > 1.0 - 1e-9:
                found = (b, int(np.argmax(p)))
        if found is None:
            raise ConfigError(f"tester {t.label!r} probe lies in neither control basis")
        basis_id[ti], state_idx[ti] = found

    if cfg.eve.resend_policy == "fixed-zero":
        resend = [np.array([1, 0], dtype=complex)]
    else:
        resend = [t.input for t in testers]
    p_cm_eve = np.stack([
        np.stack([_dist(mb, e) for mb in cm_bases]) for e in resend
    ])

    p_enc_state_basis = np.empty((2, 2, 2, 2))
    p_basis_basis = np.empty((2, 2, 2, 2))
    p_basis_state_tester = np.empty((2, 2, n_t, 2))
    for b in range(2):
        for m in range(2):
            state = cm_bases[b][m].conj()
            for bit, u in enumerate(enc):
                p_enc_state_basis[b, m, bit] = _dist(cm_bases[b], u @ state)
            for b2 in range(2):
                p_basis_basis[b, m, b2] = _dist(cm_bases[b2], state)
            for ti, t in enumerate(testers):
                p_basis_state_tester[b, m, ti] = _dist(t.projector_matrix(), state)

    tables = dict(
        p_bob=_snap_rows(p_bob),
        self_idx=self_idx,
        basis_id=basis_id,
        state_idx=state_idx,
        p_state_in_basis=_snap_rows(p_state_in_basis),
        p_cm_eve=_snap_rows(p_cm_eve),
        p_enc_state_basis=_snap_rows(p_enc_state_basis),
        p_basis_state_tester=_snap_rows(p_basis_state_tester),
        p_basis_basis=_snap_rows(p_basis_basis),
    )
    return testers, tables


_LM05_COLUMNS = ("bob_tester", "mode", "alice_bit", "alice_basis", "eve_choice",
                 "alice_cm_outcome", "bob_outcome", "bob_bit", "cm_matched",
                 "cm_mismatch", "eve_bit")


def run_lm05(cfg: ProtocolConfig, trace=None) -> ProtocolStats:
    """Simulate the qubit protocol; optionally write a per-round CSV."""
    _, tables = _lm05_tables(cfg)
    eve_kind = EVE_KINDS.index(cfg.eve.kind)
    draws = cfg.rng.generator().random((cfg.rounds, 8))
    rec = np.empty((cfg.rounds, 11), dtype=np.int64)
    ACTIVE.lm05_rounds(draws, eve_kind, cfg.control_fraction, tables["p_bob"],
                       tables["self_idx"], tables["basis_id"], tables["state_idx"],
                       tables["p_state_in_basis"], tables["p_cm_eve"],
                       tables["p_enc_state_basis"], tables["p_basis_state_tester"],
                       tables["p_basis_basis"], rec)
    if trace is not None:
        _write_trace(trace, _LM05_COLUMNS, rec)
    enc_rounds = rec[:, 1] == 0
    control_rounds = int(cfg.rounds - enc_rounds.sum())
    sifted = int(enc_rounds.sum())
    bob_errors = int(np.sum(enc_rounds & (rec[:, 7] != rec[:, 2])))
    cm_comparisons = int(np.sum(rec[:, 8] == 1))
    cm_mismatches = int(np.sum(rec[:, 9] == 1))
    if eve_kind == 0:
        eve_rounds = eve_correct = 0
    else:
        eve_rounds = sifted
        eve_correct = int(np.sum(enc_rounds & (rec[:, 10] == rec[:, 2])))
    return _assemble_stats(cfg.rounds, control_rounds, sifted, bob_errors,
                           cm_comparisons, cm_mismatches, eve_rounds, eve_correct)


# ---------------------------------------------------------------------------
# D-ary protocol
# ---------------------------------------------------------------------------

def default_extended_config(D: int = 2, rounds: int = 100_000,
                            eve: EveStrategy | None = None, seed: int = 0,
                            stream: int = 0) -> ProtocolConfig:
    """Fixture configs: D=2 uses the Z/X computational-probe sets with the
    rotation pair families; D=4 uses the Bell-probe sets with the Pauli
    family and its unbiased partner."""
    if D == 2:
        sets = (tester_mod.named_tester_set("z"), tester_mod.named_tester_set("xcomp"))
        encs = (build_named_basis("rotation", 2), build_named_basis("hadamard-pair", 2))
    elif D == 4:
        sets = (tester_mod.named_tester_set("bell"),
                tester_mod.bell_tester_set(measurement_rotation=balanced_qubit_rotation()))
        encs = (build_named_basis("pauli", 2), build_named_basis("pauli-unbiased", 2))
    else:
        raise ConfigError("bundled fixtures exist for D=2 and D=4 only")
    return ProtocolConfig(
        d=2, D=D, rounds=rounds, control_fraction=0.0, eve=eve or EveStrategy(),
        tester_sets=sets, encoding_sets=encs, rng=RngHandle(seed=seed, stream=stream),
    )


def _extended_tables(cfg: ProtocolConfig):
    if len(cfg.encoding_sets) != 2:
        raise ConfigError("the D-ary protocol needs two encoding families")
    s1, s2 = cfg.tester_sets
    f1, f2 = cfg.encoding_sets
    dd = cfg.D
    if f1.D != dd or f2.D != dd or len(s1) != dd or len(s2) != dd:
        raise ConfigError("tester sets and encoding families must all have D members")
    report = verify_prop_maximal(s1, s2, f1, f2, tol=1e-6)
    if not report.hypothesis_pass or not report.muub.verdict:
        raise HypothesisViolation(
            "tester sets are not deterministic/uniform on the encoding families: "
            + "; ".join(report.failures[:3])
        )
    sets = [list(s1), list(s2)]
    fams = [list(f1), list(f2)]
    p_out = np.empty((2, dd, 2, dd, dd))
    for s in range(2):
        for ti, t in enumerate(sets[s]):
            projs = t.projector_matrix()
            for sa in range(2):
                for j, u in enumerate(fams[sa]):
                    p_out[s, ti, sa, j] = _dist(projs, t.embedded(u) @ t.input)
    p_out = _snap_rows(p_out)
    decode = np.full((2, dd, dd), -1, dtype=np.int64)
    for s in range(2):
        for ti in range(dd):
            for j in range(dd):
                k = int(np.argmax(p_out[s, ti, s, j]))
                if decode[s, ti, k] != -1:
                    raise HypothesisViolation("deterministic outcomes do not separate digits")
                decode[s, ti, k] = j
    collapse = np.empty((2, 2, dd, dd))
    for se in range(2):
        probe_basis = np.stack([t.input.conj() for t in sets[se]])
        for sb in range(2):
            for ti, t in enumerate(sets[sb]):
                collapse[se, sb, ti] = np.abs(probe_basis @ t.input) ** 2
    p_proj = np.empty((2, dd, 2, dd))
    for se in range(2):
        for k in range(dd):
            chi = sets[se][0].projectors[k]
            for sb in range(2):
                p_proj[se, k, sb] = _dist(sets[sb][0].projector_matrix(), chi)
    return dict(p_out=p_out, decode=decode, collapse=_snap_rows(collapse),
                p_proj=_snap_rows(p_proj))


_EXT_COLUMNS = ("bob_set", "bob_tester", "alice_set", "alice_digit", "eve_set",
                "eve_tester_or_collapse", "eve_outcome", "eve_digit", "bob_outcome",
                "bob_digit", "sifted", "bob_error", "eve_correct")


def run_extended(cfg: ProtocolConfig, trace=None) -> ProtocolStats:
    """Simulate the D-ary protocol; optionally write a per-round CSV."""
    if cfg.control_fraction != 0.0:
        raise ConfigError("control mode is not modeled for the D-ary protocol")
    tables = _extended_tables(cfg)
    eve_kind = EVE_KINDS.index(cfg.eve.kind)
    set_policy = SET_POLICIES.index(cfg.eve.set_policy)
    draws = cfg.rng.generator().random((cfg.rounds, 9))
    rec = np.empty((cfg.rounds, 13), dtype=np.int64)
    ACTIVE.extended_rounds(draws, eve_kind, set_policy, cfg.D, tables["p_out"],
                           tables["decode"], tables["collapse"], tables["p_proj"], rec)
    if trace is not None:
        _write_trace(trace, _EXT_COLUMNS, rec)
    sifted = int(np.sum(rec[:, 10] == 1))
    bob_errors = int(np.sum(rec[:, 11] == 1))
    if eve_kind == 0:
        eve_rounds = eve_correct = 0
    else:
        eve_rounds = sifted
        eve_correct = int(np.sum(rec[:, 12] == 1))
    return _assemble_stats(cfg.rounds, 0, sifted, bob_errors, 0, 0,
                           eve_rounds, eve_correct)


def _assemble_stats(rounds, control_rounds, sifted, bob_errors, cm_comparisons,
                    cm_mismatches, eve_rounds, eve_correct) -> ProtocolStats:
    sift_fraction, sift_se = _rate(sifted, rounds)
    bob_rate, bob_se = _rate(bob_errors, sifted)
    cm_rate, cm_se = _rate(cm_mismatches, cm_comparisons)
    eve_acc, eve_se = _rate(eve_correct, eve_rounds)
    return ProtocolStats(
        rounds=rounds, control_rounds=control_rounds, sifted=sifted,
        sift_fraction=sift_fraction, sift_se=sift_se,
        bob_errors=bob_errors, bob_error_rate=bob_rate, bob_error_se=bob_se,
        cm_comparisons=cm_comparisons, cm_mismatches=cm_mismatches,
        cm_mismatch_rate=cm_rate, cm_mismatch_se=cm_se,
        eve_rounds=eve_rounds, eve_correct=eve_correct,
        eve_accuracy=eve_acc, eve_accuracy_se=eve_se,
    )


def _write_trace(trace, columns, rec: np.ndarray):
    own = isinstance(trace, (str, bytes))
    fh = open(trace, "w", newline="") if own else trace
    try:
        writer = csv.writer(fh)
        writer.writerow(("round",) + tuple(columns))
        for i, row in enumerate(rec):
            writer.writerow((i,) + tuple(int(x) for x in row))
    finally:
        if own:
            fh.close()


# ---------------------------------------------------------------------------
# Config JSON (mirrors ProtocolConfig; set/basis entries may be registry
# names or inline literals)
# ---------------------------------------------------------------------------

def resolve_tester_set(spec) -> TesterSet:
    if isinstance(spec, str):
        if spec == "bell-rot":
            return tester_mod.bell_tester_set(measurement_rotation=balanced_qubit_rotation())
        return tester_mod.named_tester_set(spec)
    testers = tuple(tester_mod.tester_from_json(t) for t in spec)
    return TesterSet(testers=testers, dim=testers[0].dim)


def resolve_basis(spec, d: int) -> UnitaryBasis:
    if isinstance(spec, str):
        return build_named_basis(spec, d)
    return muub_mod.basis_from_json(spec)


def config_from_json(obj: dict) -> ProtocolConfig:
    try:
        d = int(obj.get("d", 2))
        eve_obj = obj.get("eve", {})
        eve = EveStrategy(
            kind=eve_obj.get("kind", "none"),
            resend_policy=eve_obj.get("resend_policy", "fixed-zero"),
            set_policy=eve_obj.get("set_policy", "fixed"),
        )
        tester_sets = tuple(resolve_tester_set(s) for s in obj["tester_sets"])
        encoding_sets = tuple(resolve_basis(b, d) for b in obj["encoding_sets"])
        return ProtocolConfig(
            d=d,
            D=int(obj.get("D", encoding_sets[0].D)),
            rounds=int(obj["rounds"]),
            control_fraction=float(obj.get("control_fraction", 0.0)),
            eve=eve,
            tester_sets=tester_sets,
            encoding_sets=encoding_sets,
            rng=RngHandle(seed=int(obj.get("seed", 0)), stream=int(obj.get("stream", 0))),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad protocol config: {exc}") from exc
