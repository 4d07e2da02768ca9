"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The helpers here
add the contracts the rest of the package relies on: deterministic unitary
completion, a clamped PSD square root, rank-revealing range bases and the JSON
encoding ``{"rows", "cols", "data": [[re, im], ...]}``.

Pseudorandom matrices come from ``numpy.random.default_rng(seed)`` (PCG64),
drawing the real parts of an ``n x n`` block first and the imaginary parts
second, each from a standard normal.
"""
from __future__ import annotations

import numpy as np

from .errors import NotIsometry, NotPSD, ParseError

RANK_TOL = 1e-9
"""Relative singular-value cutoff used for every rank decision."""

# Gram-Schmidt candidates whose residual falls below this are rejected.
_GS_REJECT = 1e-6


def as_cmatrix(m) -> np.ndarray:
    a = np.array(m, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def adjoint(m: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the row-major layout (i, j) -> i * b.rows + j."""
    return np.kron(a, b)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def op_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def isometry_defect(m: np.ndarray) -> float:
    """Operator norm of ``m* m - I``."""
    m = np.asarray(m)
    return op_norm(adjoint(m) @ m - np.eye(m.shape[1]))


def unitarity_defect(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        return float("inf")
    return max(isometry_defect(m), op_norm(m @ adjoint(m) - np.eye(m.shape[0])))


def _normal_complex(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def haar_unitary(n: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    phases of ``diag(R)`` folded back into ``Q``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = _normal_complex(rng, n, n)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return q * ph


def _orthogonalize(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    # two passes of classical Gram-Schmidt ("twice is enough")
    for _ in range(2):
        if basis.shape[1]:
            v = v - basis @ (adjoint(basis) @ v)
    return v


def unitary_completion(iso: np.ndarray, seed: int, tol: float = 1e-10) -> np.ndarray:
    """Extend the orthonormal columns of ``iso`` to a square unitary.

    The input columns are copied verbatim. Completion columns are seeded
    random vectors orthogonalized against everything accepted so far.
    """
    iso = as_cmatrix(iso)
    rows, cols = iso.shape
    if rows < cols:
        raise NotIsometry(f"iso has more columns ({cols}) than rows ({rows})")
    defect = isometry_defect(iso)
    if defect > tol:
        raise NotIsometry(f"iso*iso deviates from identity by {defect:.3e}")
    out = np.zeros((rows, rows), dtype=np.complex128)
    out[:, :cols] = iso
    rng = np.random.default_rng(seed)
    k = cols
    while k < rows:
        v = _normal_complex(rng, rows, 1)[:, 0]
        v = _orthogonalize(v, out[:, :k])
        nv = np.linalg.norm(v)
        if nv < _GS_REJECT:
            continue
        out[:, k] = v / nv
        k += 1
    return out


def sqrtm_psd(m: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Hermitian PSD square root.

    Eigenvalues in ``[-tol, tol]`` are treated as zero; otherwise rounding
    noise of size ``eps`` would become ``sqrt(eps)`` in the root.
    """
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotPSD(f"non-square input {m.shape}")
    if m.size == 0:
        return m.copy()
    herm = op_norm(m - adjoint(m))
    if herm > tol * (1.0 + op_norm(m)):
        raise NotPSD(f"input is not Hermitian (defect {herm:.3e})")
    w, v = np.linalg.eigh((m + adjoint(m)) / 2)
    if w.min() < -tol:
        raise NotPSD(f"eigenvalue {w.min():.3e} below -{tol:g}")
    w = np.where(w <= tol, 0.0, w)
    return (v * np.sqrt(w)) @ adjoint(v)


def _fix_phases(q: np.ndarray) -> np.ndarray:
    # make the largest-modulus entry of each column real positive (first one on ties)
    if q.shape[1] == 0:
        return q
    idx = np.argmax(np.abs(q) - 1e-12 * np.arange(q.shape[0])[:, None], axis=0)
    piv = q[idx, np.arange(q.shape[1])]
    return q * (np.abs(piv) / piv)


def range_basis(m: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical column space of ``m``.

    Singular values below ``rank_tol`` times the largest one count as zero.
    Column phases are normalized so the output is reproducible.
    """
    m = as_cmatrix(m)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    r = int(np.sum(s > rank_tol * s[0]))
    return _fix_phases(u[:, :r])


def householder_complement(omega: np.ndarray) -> np.ndarray:
    """Unitary ``Q`` with ``Q[:, 0] == omega``; ``Q[:, 1:]`` spans omega's complement.

    Built from the reflector ``I - 2 v v* / |v|^2`` with ``v = p e_1 - omega``,
    where ``p`` is the phase of ``omega[0]`` (1 when that entry vanishes).
    """
    omega = np.asarray(omega, dtype=np.complex128).reshape(-1)
    n = omega.size
    a = omega[0]
    phase = a / abs(a) if abs(a) > 0 else 1.0 + 0j
    v = -omega.copy()
    v[0] += phase
    nv2 = np.vdot(v, v).real
    if nv2 < 1e-30:
        h = np.eye(n, dtype=np.complex128)
    else:
        h = np.eye(n, dtype=np.complex128) - 2.0 * np.outer(v, np.conj(v)) / nv2
    q = h.copy()
    # h maps phase*e1 to omega, so h e1 = omega / phase
    q[:, 0] = omega
    return q


def json_int(x) -> int:
    """Integer field from JSON; rejects floats and bools rather than truncating."""
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"expected an integer, got {x!r}")
    return x


def to_json(m: np.ndarray) -> dict:
    m = as_cmatrix(m)
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def from_json(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = json_int(obj["rows"]), json_int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix object: {exc}") from None
    if rows < 0 or cols < 0 or len(data) != rows * cols:
        raise ParseError(f"matrix data length {len(data)} != {rows}x{cols}")
    arr = np.empty(rows * cols, dtype=np.complex128)
    for k, pair in enumerate(data):
        if len(pair) != 2:
            raise ParseError("matrix entries must be [re, im] pairs")
        arr[k] = complex(float(pair[0]), float(pair[1]))
    if not np.all(np.isfinite(arr)):
        raise ParseError("matrix has non-finite entries")
    return arr.reshape(rows, cols)


def vector_to_json(v: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=np.complex128).reshape(-1)]


def vector_from_json(data: list) -> np.ndarray:
    try:
        out = np.array([complex(float(re), float(im)) for re, im in data], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed vector: {exc}") from None
    if not np.all(np.isfinite(out)):
        raise ParseError("vector has non-finite entries")
    return out
