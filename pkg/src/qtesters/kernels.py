"""Hot numerical kernels, JIT-compiled when numba is available.

The same source runs on two backends: a numba ``@njit`` fast path and the
plain-numpy interpreter path.  Setting the environment variable
``QTESTERS_DISABLE_NUMBA=1`` (before import) forces the numpy path; the
benchmark in ``benchmarks/compare_backends.py`` times both.

Everything here works on flat numpy arrays so both backends execute the
same arithmetic.  Random numbers are always drawn *outside* the kernels
and passed in as uniform arrays, which keeps Monte-Carlo runs bit-for-bit
reproducible regardless of backend.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

ENV_FLAG = "QTESTERS_DISABLE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    numba = None
    HAVE_NUMBA = False

_disabled = os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes"}
NUMBA_ENABLED = HAVE_NUMBA and not _disabled


def _identity(func):
    return func


def _build_backend(decorate, name):
    @decorate
    def expi_hermitian(h):
        # exp(i*h) for Hermitian h: halve until the max-row-sum norm of i*h
        # is <= 0.5 (18-term Taylor remainder < 1e-21), then square back up.
        d = h.shape[0]
        a = 1j * h
        norm = 0.0
        for i in range(d):
            row = 0.0
            for j in range(d):
                row += abs(a[i, j])
            if row > norm:
                norm = row
        squarings = 0
        while norm > 0.5:
            norm *= 0.5
            squarings += 1
        m = a / (2.0 ** squarings)
        out = np.eye(d, dtype=np.complex128)
        term = np.eye(d, dtype=np.complex128)
        for k in range(1, 18):
            term = (term @ m) / k
            out = out + term
        for _ in range(squarings):
            out = out @ out
        return out

    @decorate
    def tester_entropy_bits(u, proj_conj, psi, bipartite, d):
        # Shannon entropy (bits) of |proj_conj @ (U psi)|^2 with U = u or u (x) I_anc.
        if bipartite == 1:
            k = psi.size // d
            s = (u @ psi.reshape(d, k)).reshape(psi.size)
        else:
            s = u @ psi
        amps = proj_conj @ s
        h = 0.0
        for i in range(amps.size):
            p = amps[i].real ** 2 + amps[i].imag ** 2
            if p > 0.0:
                h -= p * np.log2(p)
        return h

    @decorate
    def entropy_sum_objective(theta, gens, m1, psi1, bip1, m2, psi2, bip2):
        # Bound-search objective: summed tester entropies at u = exp(i sum theta_k G_k).
        d = gens.shape[1]
        h = np.zeros((d, d), dtype=np.complex128)
        for k in range(theta.size):
            h += theta[k] * gens[k]
        u = expi_hermitian(h)
        return (tester_entropy_bits(u, m1, psi1, bip1, d)
                + tester_entropy_bits(u, m2, psi2, bip2, d))

    @decorate
    def sample(pvec, r):
        # Index of the first cumulative-probability bin exceeding r.
        acc = 0.0
        last = pvec.size - 1
        for i in range(last):
            acc += pvec[i]
            if r < acc:
                return i
        return last

    @decorate
    def lm05_rounds(draws, eve_kind, control_fraction, p_bob, self_idx, basis_id,
                    state_idx, p_state_in_basis, p_cm_eve, p_enc_state_basis,
                    p_basis_state_tester, p_basis_basis, rec):
        # Per-round records for the two-way qubit protocol.
        # draws columns: 0 bob tester, 1 alice mode, 2 alice bit/basis,
        #   3 eve choice, 4 eve collapse, 5 eve outcome, 6 alice cm outcome,
        #   7 bob outcome.
        # rec columns: 0 bob tester, 1 mode, 2 alice bit, 3 alice basis,
        #   4 eve choice, 5 alice cm outcome, 6 bob outcome, 7 bob bit,
        #   8 cm matched, 9 cm mismatch, 10 eve bit.  Unused fields stay -1.
        # eve_kind: 0 none, 1 equivalent-tester hijack, 2 intercept-resend.
        n_testers = p_bob.shape[0]
        n_resend = p_cm_eve.shape[0]
        for r in range(draws.shape[0]):
            for c in range(11):
                rec[r, c] = -1
            t = int(draws[r, 0] * n_testers)
            rec[r, 0] = t
            cm = 1 if draws[r, 1] < control_fraction else 0
            rec[r, 1] = cm
            if cm == 0:
                bit = int(draws[r, 2] * 2)
                rec[r, 2] = bit
                if eve_kind == 0:
                    out = sample(p_bob[t, bit], draws[r, 7])
                elif eve_kind == 1:
                    te = int(draws[r, 3] * n_testers)
                    rec[r, 4] = te
                    eout = sample(p_bob[te, bit], draws[r, 5])
                    ebit = 0 if eout == self_idx[te] else 1
                    rec[r, 10] = ebit
                    out = sample(p_bob[t, ebit], draws[r, 7])
                else:
                    be = int(draws[r, 3] * 2)
                    rec[r, 4] = be
                    m = sample(p_state_in_basis[t, be], draws[r, 4])
                    eout = sample(p_enc_state_basis[be, m, bit], draws[r, 5])
                    ebit = 0 if eout == m else 1
                    rec[r, 10] = ebit
                    out = sample(p_basis_state_tester[be, eout, t], draws[r, 7])
                rec[r, 6] = out
                rec[r, 7] = 0 if out == self_idx[t] else 1
            else:
                basis = int(draws[r, 2] * 2)
                rec[r, 3] = basis
                if eve_kind == 0:
                    out = sample(p_state_in_basis[t, basis], draws[r, 6])
                elif eve_kind == 1:
                    rchoice = int(draws[r, 3] * n_resend)
                    rec[r, 4] = rchoice
                    out = sample(p_cm_eve[rchoice, basis], draws[r, 6])
                else:
                    be = int(draws[r, 3] * 2)
                    rec[r, 4] = be
                    m = sample(p_state_in_basis[t, be], draws[r, 4])
                    out = sample(p_basis_basis[be, m, basis], draws[r, 6])
                rec[r, 5] = out
                if basis == basis_id[t]:
                    rec[r, 8] = 1
                    rec[r, 9] = 0 if out == state_idx[t] else 1
                else:
                    rec[r, 8] = 0
        return rec

    @decorate
    def extended_rounds(draws, eve_kind, eve_set_policy, n_digits, p_out, decode,
                        collapse, p_proj, rec):
        # Per-round records for the D-ary two-set protocol.
        # draws columns: 0 bob set, 1 bob tester, 2 alice set, 3 alice digit,
        #   4 eve set, 5 eve tester/collapse, 6 eve outcome,
        #   7 eve fallback guess, 8 bob outcome.
        # rec columns: 0 bob set, 1 bob tester, 2 alice set, 3 alice digit,
        #   4 eve set, 5 eve tester/collapse, 6 eve outcome, 7 eve digit,
        #   8 bob outcome, 9 bob digit, 10 sifted, 11 bob error, 12 eve correct.
        # eve_set_policy: 0 fixed set 0, 1 uniform.
        for r in range(draws.shape[0]):
            for c in range(13):
                rec[r, c] = -1
            sb = int(draws[r, 0] * 2)
            tb = int(draws[r, 1] * n_digits)
            sa = int(draws[r, 2] * 2)
            dig = int(draws[r, 3] * n_digits)
            rec[r, 0] = sb
            rec[r, 1] = tb
            rec[r, 2] = sa
            rec[r, 3] = dig
            if eve_kind == 0:
                out = sample(p_out[sb, tb, sa, dig], draws[r, 8])
            else:
                se = 0 if eve_set_policy == 0 else int(draws[r, 4] * 2)
                rec[r, 4] = se
                if eve_kind == 1:
                    te = int(draws[r, 5] * n_digits)
                    rec[r, 5] = te
                    eout = sample(p_out[se, te, sa, dig], draws[r, 6])
                    eraw = decode[se, te, eout]
                    out = sample(p_out[sb, tb, se, eraw], draws[r, 8])
                else:
                    m = sample(collapse[se, sb, tb], draws[r, 5])
                    rec[r, 5] = m
                    eout = sample(p_out[se, m, sa, dig], draws[r, 6])
                    eraw = decode[se, m, eout]
                    out = sample(p_proj[se, eout, sb], draws[r, 8])
                rec[r, 6] = eout
                if se == sa:
                    rec[r, 7] = eraw
                else:
                    rec[r, 7] = int(draws[r, 7] * n_digits)
            rec[r, 8] = out
            bdig = decode[sb, tb, out]
            rec[r, 9] = bdig
            sift = 1 if sb == sa else 0
            rec[r, 10] = sift
            if sift == 1:
                rec[r, 11] = 0 if bdig == dig else 1
                if eve_kind != 0:
                    rec[r, 12] = 1 if rec[r, 7] == dig else 0
        return rec

    return SimpleNamespace(
        name=name,
        expi_hermitian=expi_hermitian,
        tester_entropy_bits=tester_entropy_bits,
        entropy_sum_objective=entropy_sum_objective,
        sample=sample,
        lm05_rounds=lm05_rounds,
        extended_rounds=extended_rounds,
    )


BACKENDS = {"numpy": _build_backend(_identity, "numpy")}
if HAVE_NUMBA:
    BACKENDS["numba"] = _build_backend(numba.njit(cache=True), "numba")

ACTIVE = BACKENDS["numba" if NUMBA_ENABLED else "numpy"]


def active_backend() -> str:
    return ACTIVE.name
