"""Defect operators, the Fock-space dilation and the characteristic function
of a coisometric lifting.

Defect spaces are carried in orthonormal coordinates from
:func:`repint.matkit.range_basis`, so ``gamma``, ``Phi_C`` and ``Phi_E`` are
plain rectangular matrices. Direct sums ``(+)^d H`` are slot-major: slot
``j`` (1-based) occupies rows ``(j-1)*dim .. j*dim``.

Fock words are stored like every other word (``e_(a1, ..., ak) = e_a1 (x)
... (x) e_ak``); the comparison with the transfer function re-indexes
``z^a -> e_reverse(a)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matkit, model as mdl, transfer as tr
from .errors import GammaNotIsometric, PhiNotUnitary
from .matkit import RANK_TOL, adjoint, op_norm
from .words import enumerate_words, tuple_apply, word_to_json

CERT_TOL = 1e-8
PHI_TOL = 1e-9


def slot_embedding(j: int, d: int, dim: int) -> np.ndarray:
    """``h -> (0, ..., h, ..., 0)`` with ``h`` in slot ``j``."""
    out = np.zeros((d * dim, dim), dtype=np.complex128)
    out[(j - 1) * dim: j * dim] = np.eye(dim)
    return out


def column_defect(T: mdl.RowTuple) -> np.ndarray:
    """``(I - T* T)^(1/2)`` on ``(+)^d`` of the domain, with ``T`` the row operator."""
    row = T.row()
    return matkit.sqrtm_psd(np.eye(row.shape[1]) - adjoint(row) @ row, tol=1e-9)


@dataclass
class DefectData:
    D_C: np.ndarray = field(repr=False)
    DC_basis: np.ndarray = field(repr=False)
    D_E: np.ndarray = field(repr=False)
    DE_basis: np.ndarray = field(repr=False)
    D_starA: np.ndarray = field(repr=False)
    DstarA_basis: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)

    @property
    def dim_DC(self) -> int:
        return self.DC_basis.shape[1]

    @property
    def dim_DE(self) -> int:
        return self.DE_basis.shape[1]

    def DC_slot(self, j: int, n_tilde: int, d: int) -> np.ndarray:
        """``(D_C)_j`` in ``D_C`` coordinates: ``H~ -> coords``."""
        return adjoint(self.DC_basis) @ self.D_C @ slot_embedding(j, d, n_tilde)

    def DE_slot(self, j: int, n: int, d: int) -> np.ndarray:
        return adjoint(self.DE_basis) @ self.D_E @ slot_embedding(j, d, n)

    def gamma_DA(self) -> np.ndarray:
        """``gamma D_{*,A}`` as a map ``H_circ -> D_C`` coordinates."""
        return self.gamma @ adjoint(self.DstarA_basis) @ self.D_starA


def _B_star(L: mdl.LiftingBlocks) -> np.ndarray:
    """``h -> (B_1* h, ..., B_d* h)`` from ``H_circ`` into ``(+)^d H~``."""
    return np.vstack([adjoint(b) for b in L.B]) if L.n_circ else np.zeros((L.d * L.n_tilde, 0))


def defects(L: mdl.LiftingBlocks, rank_tol: float = RANK_TOL) -> DefectData:
    E = L.reassemble()
    D_C = column_defect(L.C)
    D_E = column_defect(E)
    nc = L.n_circ
    if nc:
        AA = sum(a @ adjoint(a) for a in L.A)
        D_starA = matkit.sqrtm_psd(np.eye(nc) - AA, tol=1e-9)
    else:
        D_starA = np.zeros((0, 0), dtype=np.complex128)
    DC_basis = matkit.range_basis(D_C, rank_tol)
    DE_basis = matkit.range_basis(D_E, rank_tol)
    DA_basis = matkit.range_basis(D_starA, rank_tol)

    # gamma (coords of D_{*,A} h) = coords of B* h, solved on the spanning set h in H_circ
    src = adjoint(DA_basis) @ D_starA
    dst = adjoint(DC_basis) @ _B_star(L)
    gamma = dst @ np.linalg.pinv(src) if src.size else np.zeros((DC_basis.shape[1], DA_basis.shape[1]))
    dd = DefectData(D_C, DC_basis, D_E, DE_basis, D_starA, DA_basis, gamma)
    iso = matkit.isometry_defect(gamma) if gamma.shape[1] else 0.0
    rel = op_norm(gamma @ src - dst)
    if iso > CERT_TOL or rel > CERT_TOL:
        raise GammaNotIsometric(f"gamma isometry defect {iso:.3e}, relation residual {rel:.3e}")
    return dd


def defect_invariants(L: mdl.LiftingBlocks, dd: DefectData) -> dict:
    """Numerical certificates for the DefectData invariants."""
    C_row = L.C.row()
    nt, d = L.n_tilde, L.d
    proj = op_norm(dd.D_C @ dd.D_C - dd.D_C)
    DC_blocks = [dd.D_C @ slot_embedding(j, d, nt) for j in range(1, d + 1)]
    slot_gram = max(
        op_norm(adjoint(DC_blocks[j]) @ DC_blocks[i] - ((i == j) * np.eye(nt) - adjoint(L.C[j]) @ L.C[i]))
        for i in range(d) for j in range(d)
    )
    Bs = _B_star(L)
    # Range(B*) inside D_C
    rangeB = op_norm(Bs - dd.DC_basis @ adjoint(dd.DC_basis) @ Bs) if Bs.size else 0.0
    return {
        "D_C_square": op_norm(dd.D_C @ dd.D_C - (np.eye(C_row.shape[1]) - adjoint(C_row) @ C_row)),
        "D_C_projection": proj,
        "slot_gram_defect": slot_gram,
        "gamma_isometry": matkit.isometry_defect(dd.gamma) if dd.gamma.shape[1] else 0.0,
        "gamma_relation": op_norm(dd.gamma_DA() - adjoint(dd.DC_basis) @ Bs) if Bs.size else 0.0,
        "range_Bstar_in_DC": rangeB,
    }


def popescu_dilation(C: mdl.RowTuple, N: int, rank_tol: float = RANK_TOL) -> list:
    """Truncated Fock-space dilation of a row contraction.

    Acts on ``H~ (+) (F_<=N (x) D_C)`` (Fock blocks in word-table order, each
    of size ``dim D_C``). Coefficients pushed past degree N are dropped, so
    the maps are isometric only on vectors of Fock degree < N.
    """
    nt, d = C.shape[0], C.d
    D_C = column_defect(C)
    Q = matkit.range_basis(D_C, rank_tol)
    r = Q.shape[1]
    table = enumerate_words(d, N)
    dim = nt + len(table) * r
    out = []
    for j in range(1, d + 1):
        V = np.zeros((dim, dim), dtype=np.complex128)
        V[:nt, :nt] = C[j - 1]
        V[nt:nt + r, :nt] = adjoint(Q) @ D_C @ slot_embedding(j, d, nt)
        for k, w in enumerate(table):
            if len(w) == N:
                break
            tgt = table.index((j,) + w)
            V[nt + tgt * r: nt + (tgt + 1) * r, nt + k * r: nt + (k + 1) * r] = np.eye(r)
        out.append(V)
    return out


def phi_maps(m: mdl.InteractionModel, L: mdl.LiftingBlocks, dd: DefectData, tol: float = PHI_TOL):
    """``Phi_C : Y -> D_C`` and ``Phi_E : U -> D_E`` (coordinates), defined by
    ``Phi_C(sum D_j h_j) = sum (D_C)_j h_j`` and likewise for ``F``, ``D_E``."""
    D = mdl.extract_D(m)
    F = mdl.extract_F(m)
    D_row = np.hstack(list(D))  # Y <- (+)^d H~
    F_row = np.hstack(list(F))
    DC_row = adjoint(dd.DC_basis) @ dd.D_C
    DE_row = adjoint(dd.DE_basis) @ dd.D_E
    phi_C = DC_row @ np.linalg.pinv(D_row)
    phi_E = DE_row @ np.linalg.pinv(F_row)
    for name, phi, lhs, rhs in (("Phi_C", phi_C, D_row, DC_row), ("Phi_E", phi_E, F_row, DE_row)):
        defect = matkit.unitarity_defect(phi) if phi.size else 0.0
        rel = op_norm(phi @ lhs - rhs)
        if defect > tol or rel > tol:
            raise PhiNotUnitary(f"{name}: unitarity defect {defect:.3e}, relation residual {rel:.3e}")
    return phi_C, phi_E


def charfn_apply(L: mdl.LiftingBlocks, dd: DefectData, i: int, h: np.ndarray, N: int) -> np.ndarray:
    """Coefficients of the characteristic function on the input ``(D_E)_i h``.

    ``h`` is a vector of ``H = H~ (+) H_circ``. Returns an array of shape
    ``(table_size(d, N), dim D_C)`` over Fock words in table order.
    """
    nt, nc, d = L.n_tilde, L.n_circ, L.d
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    ht, hc = h[:nt], h[nt:]
    table = enumerate_words(d, N)
    out = np.zeros((len(table), dd.dim_DC), dtype=np.complex128)
    gDA = dd.gamma_DA()
    A = list(L.A)
    Bi = L.B[i - 1]

    out[0] += dd.DC_slot(i, nt, d) @ ht
    if nc:
        # H~ part: e_0 (x) [-gamma D B_i h], e_a (x) [-gamma D (A_a)* B_i h]
        bh = Bi @ ht
        # H_circ part: e_0 (x) [-gamma D A_i h], e_(j a) (x) gamma D (A_a)* (delta_ji - A_j* A_i) h
        for k, w in enumerate(table):
            Aw_star = adjoint(tuple_apply(A, w))
            out[k] -= gDA @ (Aw_star @ bh)
        out[0] -= gDA @ (A[i - 1] @ hc)
        for j in range(1, d + 1):
            v = (j == i) * hc - adjoint(A[j - 1]) @ (A[i - 1] @ hc)
            for k, w in enumerate(table):
                if len(w) == N:
                    break
                out[table.index((j,) + w)] += gDA @ (adjoint(tuple_apply(A, w)) @ v)
    return out


def characteristic_fn(L: mdl.LiftingBlocks, dd: DefectData, N: int) -> tr.NcSeries:
    """Series with input ``D_E`` coordinates and output ``D_C`` coordinates."""
    n, d = L.n_tilde + L.n_circ, L.d
    table = enumerate_words(d, N)
    # raw[k] maps (+)^d H -> D_C coords at Fock word k
    raw = np.zeros((len(table), dd.dim_DC, d * n), dtype=np.complex128)
    for i in range(1, d + 1):
        for b in range(n):
            raw[:, :, (i - 1) * n + b] = charfn_apply(L, dd, i, np.eye(n)[:, b], N)
    to_coords = adjoint(dd.DE_basis) @ dd.D_E  # (+)^d H -> D_E coords, onto
    pinv = np.linalg.pinv(to_coords)
    coeffs = raw @ pinv
    return tr.NcSeries(table, coeffs, fock=True)


def well_defined_residual(L: mdl.LiftingBlocks, dd: DefectData, series: tr.NcSeries) -> float:
    """The characteristic function must vanish on ``ker D_E``; returns how far
    the coordinate form misses the raw per-slot evaluation."""
    n, d = L.n_tilde + L.n_circ, L.d
    to_coords = adjoint(dd.DE_basis) @ dd.D_E
    worst = 0.0
    for i in range(1, d + 1):
        for b in range(n):
            raw = charfn_apply(L, dd, i, np.eye(n)[:, b], series.degree)
            via = series.coefficients @ (to_coords[:, (i - 1) * n + b])
            worst = max(worst, float(np.abs(raw - via).max(initial=0.0)))
    return worst


@dataclass
class Coincidence:
    degree: int
    defect: float
    per_word: list
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {"coincidence_defect": self.defect, "degree": self.degree, "per_word": self.per_word}


def coincidence(m: mdl.InteractionModel, N: int) -> Coincidence:
    """Compare ``Phi_C``-transported transfer coefficients (re-indexed by word
    reversal) with the characteristic function applied after ``Phi_E``."""
    E = mdl.extract_E(m)
    L = mdl.lifting_blocks(E, m.n_tilde)
    dd = defects(L)
    phi_C, phi_E = phi_maps(m, L, dd)
    theta = tr.transfer_coefficients(m, N)
    table = theta.table
    rev = table.reversal_permutation()
    left = np.einsum("ij,kjl->kil", phi_C, theta.coefficients)[rev]
    right = characteristic_fn(L, dd, N).coefficients @ phi_E
    per_word = []
    worst = 0.0
    for k, w in enumerate(table):
        diff = op_norm(left[k] - right[k])
        worst = max(worst, diff)
        per_word.append({"word": word_to_json(w), "defect": diff})
    return Coincidence(N, worst, per_word, left, right)


def coincidence_defect(m: mdl.InteractionModel, N: int) -> float:
    return coincidence(m, N).defect
