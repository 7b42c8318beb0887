"""Dense complex linear algebra for small-dimensional quantum objects.

All conventions used by the rest of the package are fixed here, once:

* Tensor factors are ordered (system, ancilla): ``tensor(A, B)`` puts ``A``
  on the system slot, and a bipartite pure state is a flat vector with
  row-major index ``i * d_anc + k`` for the basis ket ``|i>_sys |k>_anc``.
* ``vectorize`` maps a d x d operator ``u`` to the vector of dimension d^2
  whose amplitude at position (i, j) is ``<j|u|i>`` (column stacking).  The
  unnormalised maximally entangled state ``sum_i |i>|i>`` is therefore
  ``vectorize(identity)``, and ``<<a|b>> = Tr(a^dag b)``.
* Unitarity and orthonormality are checked in max norm with tolerance
  ``DEFAULT_TOL = 1e-9`` unless a caller overrides it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (np.eye(2, dtype=complex), SIGMA_X, SIGMA_Y, SIGMA_Z)


@dataclass(frozen=True)
class RngHandle:
    """Deterministic random-stream handle.

    The same (seed, stream) pair always reproduces the same draw sequence.
    A handle is single-consumer: concurrent users must take distinct
    stream ids rather than sharing one generator.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this handle's stream."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(seq))


def as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_state(v, unnormalized: bool = False, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Validate a pure-state vector (unit norm unless explicitly waived)."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError("state has non-finite entries")
    if not unnormalized:
        nrm2 = float(np.vdot(v, v).real)
        if abs(nrm2 - 1.0) > tol:
            raise ValueError(f"state norm^2 = {nrm2!r} is not 1 within {tol}")
    return v


def is_unitary(u: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    d = u.shape[0]
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(d))) <= tol)


def assert_unitary(u: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    u = as_matrix(u)
    if not is_unitary(u, tol):
        dev = float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))
        raise ValueError(f"matrix is not unitary: max|u^dag u - I| = {dev:.3e} > {tol}")
    return u


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with entry ((i,k),(j,l)) = A_ij * B_kl.

    Two vectors combine to the flat product state with index i*dim(b) + k.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1 and b.ndim == 1:
        return np.kron(a, b)
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace_ancilla(m: np.ndarray, d: int) -> np.ndarray:
    """Trace out the second (ancilla) tensor factor of a (d*k) x (d*k) matrix."""
    m = as_matrix(m)
    n = m.shape[0]
    if m.shape[0] != m.shape[1] or n % d != 0:
        raise ValueError(f"cannot split a {m.shape} matrix into system dim {d} x ancilla")
    k = n // d
    return np.einsum("iaja->ij", m.reshape(d, k, d, k))


def partial_transpose_first(m: np.ndarray, d: int) -> np.ndarray:
    """Transpose the first (system) tensor factor only."""
    m = as_matrix(m)
    n = m.shape[0]
    if m.shape[0] != m.shape[1] or n % d != 0:
        raise ValueError(f"cannot split a {m.shape} matrix into system dim {d} x ancilla")
    k = n // d
    return m.reshape(d, k, d, k).transpose(2, 1, 0, 3).reshape(n, n)


def swap_operator(d: int) -> np.ndarray:
    """The operator on H_d (x) H_d with S|a>|b> = |b>|a>."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return np.eye(d * d, dtype=complex).reshape(d, d, d, d).transpose(0, 1, 3, 2).reshape(d * d, d * d)


def swap_factors(d1: int, d2: int) -> np.ndarray:
    """Permutation sending |a>_{d1} |b>_{d2} to |b>_{d2} |a>_{d1}."""
    s = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for a in range(d1):
        for b in range(d2):
            s[b * d1 + a, a * d2 + b] = 1.0
    return s


def vectorize(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: amplitude at (i, j) is <j|m|i>.

    For unitaries this realizes the operator/maximally-entangled-state
    isomorphism: vectorize(identity(d)) = sum_i |i>|i> (unnormalised) and
    the induced inner product is <<a|b>> = Tr(a^dag b).
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("vectorize expects a square matrix")
    return np.array(m.T.reshape(-1))


def devectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize` (exact, by construction)."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"vector of size {v.size} is not a vectorized square matrix")
    return np.array(v.reshape(d, d).T)


def max_entangled_state(d: int) -> np.ndarray:
    """Unnormalised sum_i |i>|i> (norm sqrt(d))."""
    return vectorize(np.eye(d, dtype=complex))


def haar_random_unitary(d: int, rng) -> np.ndarray:
    """Haar-distributed d x d unitary, deterministic per (seed, stream).

    QR orthonormalization of a complex Ginibre matrix with the R-diagonal
    phase correction; ``rng`` may be an RngHandle (same handle => same
    matrix) or a live numpy Generator (consumes its stream).
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    gen = rng.generator() if isinstance(rng, RngHandle) else rng
    z = (gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def haar_random_state(d: int, rng) -> np.ndarray:
    """Haar-random pure state (first column of a Haar unitary)."""
    return haar_random_unitary(d, rng)[:, 0].copy()


def complete_onb(first: np.ndarray, rng) -> np.ndarray:
    """Unitary whose first column is ``first``, completed Haar-randomly."""
    first = as_state(first)
    d = first.size
    cols = [first]
    w = haar_random_unitary(d, rng)
    for i in range(d):
        if len(cols) == d:
            break
        v = w[:, i].copy()
        for c in cols:
            v -= np.vdot(c, v) * c
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            cols.append(v / nrm)
    if len(cols) != d:
        raise RuntimeError("orthonormal completion failed")  # would need d collinear draws
    return np.column_stack(cols)


def unitary_mapping(source: np.ndarray, target: np.ndarray, rng) -> np.ndarray:
    """A unitary sending ``source`` to ``target`` exactly, Haar-random on the
    orthogonal complement."""
    return complete_onb(target, rng) @ complete_onb(source, rng).conj().T


# ---------------------------------------------------------------------------
# JSON literals: matrices and states as [re, im] pairs, row-major, with
# explicit "rows"/"cols" fields.  States are stored as single-column matrices.
# ---------------------------------------------------------------------------

def matrix_to_json(m: np.ndarray) -> dict:
    m = as_matrix(m)
    entries = [[float(z.real), float(z.imag)] for z in m.reshape(-1)]
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "entries": entries}


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    entries = obj["entries"]
    if len(entries) != rows * cols:
        raise ValueError(f"literal claims {rows}x{cols} but has {len(entries)} entries")
    flat = np.array([complex(re, im) for re, im in entries])
    return flat.reshape(rows, cols)


def state_to_json(v: np.ndarray) -> dict:
    v = np.asarray(v, dtype=complex).reshape(-1, 1)
    return matrix_to_json(v)


def state_from_json(obj: dict) -> np.ndarray:
    m = matrix_from_json(obj)
    if m.shape[1] != 1:
        raise ValueError("state literal must have cols = 1")
    return m.reshape(-1)
