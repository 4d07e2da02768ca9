"""Dilations, the scattering isometry and the wandering-subspace structure.

Everything lives on *level spaces*: ``LevelSpace(base, m) = C^base (x) K_1
(x) ... (x) K_m`` with all later tensor factors frozen at the vacuum
``omega_K``. Row-major layout over the factor order ``(H, K_1, ..., K_m)``.
A level-``l`` vector is viewed at level ``m >= l`` by tensoring
``omega_K`` onto the tail (:func:`pad`).

The scattering operator is only ever formed through its adjoint::

    W*_m = U_1* ... U_m* U~_m ... U~_1   on LevelSpace(n_tilde, m)

which is exact, not an approximation: on vectors whose tail beyond ``m`` is
vacuum the defining product has already stabilized.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matkit, model as mdl, transfer as tr
from .matkit import adjoint, op_norm
from .words import enumerate_words, table_size


def level_dim(base_dim: int, d: int, level: int) -> int:
    return base_dim * d ** level


def _vacuum_tail(m: mdl.InteractionModel, k: int) -> np.ndarray:
    v = np.ones((1, 1), dtype=np.complex128)
    for _ in range(k):
        v = np.kron(v, m.omega_K.reshape(-1, 1))
    return v


def pad(m: mdl.InteractionModel, X: np.ndarray, from_level: int, to_level: int) -> np.ndarray:
    """Columns of ``X`` at ``from_level`` re-expressed at ``to_level``."""
    if to_level < from_level:
        raise ValueError("cannot pad to a lower level")
    return np.kron(X, _vacuum_tail(m, to_level - from_level))


def apply_site(op: np.ndarray, X: np.ndarray, base_dim: int, d: int, level: int, site: int) -> np.ndarray:
    """Apply ``op`` (acting on ``C^base (x) K``) to factors ``(H, K_site)``
    of every column of ``X``."""
    ncols = X.shape[1]
    T = X.reshape((base_dim,) + (d,) * level + (ncols,))
    op4 = op.reshape(base_dim, d, base_dim, d)
    out = np.tensordot(op4, T, axes=([2, 3], [0, site]))
    out = np.moveaxis(out, 1, site)
    return out.reshape(base_dim * d ** level, ncols)


def _v_hat(unitary: np.ndarray, eps_col: np.ndarray, base_dim: int, d: int, level: int) -> np.ndarray:
    first = adjoint(unitary) @ np.kron(np.eye(base_dim), eps_col)
    return np.kron(first, np.eye(d ** level))


def vE(m: mdl.InteractionModel, j: int, level: int) -> np.ndarray:
    """Dilation isometry ``h (x) eta -> U*(h (x) eps_j) (x) eta`` from level
    ``level`` to ``level + 1``."""
    return _v_hat(m.U, m.epsilon[:, [j - 1]], m.n, m.d, level)


def vC(m: mdl.InteractionModel, j: int, level: int) -> np.ndarray:
    return _v_hat(m.U_tilde, m.epsilon[:, [j - 1]], m.n_tilde, m.d, level)


def apply_word(m: mdl.InteractionModel, which: str, word, X: np.ndarray, level: int) -> np.ndarray:
    """``V_word X`` for ``X`` at ``level``; result sits at ``level + len(word)``.

    The word is applied in stored order, ``V_{w1} V_{w2} ... V_{wk}``.
    """
    step = vE if which == "E" else vC
    out = X
    lev = level
    for letter in reversed(tuple(word)):
        out = step(m, letter, lev) @ out
        lev += 1
    return out


def hatW_star(m: mdl.InteractionModel, level: int) -> np.ndarray:
    """Matrix of ``W*`` from ``LevelSpace(n_tilde, level)`` to ``LevelSpace(n, level)``."""
    nt, n, d = m.n_tilde, m.n, m.d
    X = np.eye(nt * d ** level, dtype=np.complex128)
    for site in range(1, level + 1):
        X = apply_site(m.U_tilde, X, nt, d, level, site)
    Y = np.zeros((n * d ** level, X.shape[1]), dtype=np.complex128)
    Y[: X.shape[0]] = X
    Ustar = adjoint(m.U)
    for site in range(level, 0, -1):
        Y = apply_site(Ustar, Y, n, d, level, site)
    return Y


def vacuum_fixing_defect(m: mdl.InteractionModel, level: int) -> float:
    """``|| W*(h~ (x) vac) - h~ (x) vac ||`` over a basis of ``H~``."""
    nt = m.n_tilde
    src = pad(m, np.eye(nt, dtype=np.complex128), 0, level)
    dst = pad(m, np.eye(m.n, dtype=np.complex128)[:, :nt], 0, level)
    return op_norm(hatW_star(m, level) @ src - dst)


def intertwine_defect(m: mdl.InteractionModel, level: int) -> float:
    """``max_j || W* V^C_j - V^E_j W* ||`` from level ``level`` to ``level + 1``."""
    W_lo = hatW_star(m, level)
    W_hi = hatW_star(m, level + 1)
    return max(
        op_norm(W_hi @ vC(m, j, level) - vE(m, j, level) @ W_lo) for j in range(1, m.d + 1)
    )


def orth_complement(B: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of the (orthonormal) columns of ``B``."""
    rows, r = B.shape
    if r == 0:
        return np.eye(rows, dtype=np.complex128)
    u, _, _ = np.linalg.svd(B, full_matrices=True)
    return matkit._fix_phases(u[:, r:])


def _block_report(pieces: list) -> tuple:
    """Orthogonality, orthonormality and completeness defects of a list of
    orthonormal column blocks inside one ambient space."""
    B = np.hstack(pieces)
    G = adjoint(B) @ B
    offsets = np.cumsum([0] + [p.shape[1] for p in pieces])
    cross = 0.0
    within = 0.0
    for a in range(len(pieces)):
        sa = slice(offsets[a], offsets[a + 1])
        if pieces[a].shape[1]:
            within = max(within, op_norm(G[sa, sa] - np.eye(pieces[a].shape[1])))
        for b in range(a + 1, len(pieces)):
            sb = slice(offsets[b], offsets[b + 1])
            if pieces[a].shape[1] and pieces[b].shape[1]:
                cross = max(cross, op_norm(G[sa, sb]))
    complete = op_norm(B @ adjoint(B) - np.eye(B.shape[0]))
    return cross, within, complete


def _word_blocks(m: mdl.InteractionModel, which: str, X: np.ndarray, max_len: int, level: int) -> list:
    """``[pad(V_a X)]`` for every word ``a`` of length <= max_len (table order),
    where ``X`` lives at level 1; everything is padded to ``level``."""
    table = enumerate_words(m.d, max_len)
    step = vE if which == "E" else vC
    raw = {(): X}
    out = []
    for w in table:
        if w:
            raw[w] = step(m, w[0], len(w)) @ raw[w[1:]]
        out.append(pad(m, raw[w], 1 + len(w), level))
    return out


@dataclass
class DecompositionReport:
    level: int
    dimension_identity: dict
    orthogonality: float
    orthonormality: float
    completeness: float
    wandering_star: float
    star_orthogonality: float
    star_completeness: float
    tilde_orthogonality: float
    tilde_completeness: float

    @property
    def max_defect(self) -> float:
        return max(
            self.orthogonality, self.orthonormality, self.completeness, self.wandering_star,
            self.star_orthogonality, self.star_completeness,
            self.tilde_orthogonality, self.tilde_completeness,
        )

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["max_defect"] = self.max_defect
        return out


def dimension_identity(n: int, d: int, level: int) -> dict:
    """Sizes of the pieces in ``H (x) K^level = H~ + H_circ + sum_a V_a E``."""
    words = table_size(d, level - 1)
    pieces = n + n * (d - 1) * words
    return {"total": n * d ** level, "pieces": pieces, "holds": n * d ** level == pieces}


def wandering_decomposition(m: mdl.InteractionModel, level: int) -> DecompositionReport:
    if level < 1:
        raise ValueError("level must be >= 1")
    n, nt, d = m.n, m.n_tilde, m.d
    eye_n = np.eye(n, dtype=np.complex128)
    h_tilde = pad(m, eye_n[:, :nt], 0, level)
    h_circ = pad(m, eye_n[:, nt:], 0, level)

    # H (x) K^level = H~ vac + H_circ vac + sum_{|a| < level} V^E_a E
    E_blocks = _word_blocks(m, "E", m.input_embedding(), level - 1, level)
    cross, within, complete = _block_report([h_tilde, h_circ] + E_blocks)

    # E_* = W* Y is wandering for V^E
    E_star = hatW_star(m, 1) @ m.output_embedding()
    star_blocks = _word_blocks(m, "E", E_star, level - 1, level)
    star_cross, star_within, _ = _block_report(star_blocks)

    # E_* is exactly what the ranges V^E_j (level-1 minus H~ vac) leave over
    prev_circ = orth_complement(pad(m, eye_n[:, :nt], 0, level - 1))
    ranges = [vE(m, j, level - 1) @ prev_circ for j in range(1, d + 1)]
    s_cross, s_within, s_complete = _block_report([h_tilde, pad(m, E_star, 1, level)] + ranges)

    # H~ (x) K^level = H~ vac + sum_{|a| < level} V^C_a Y
    Y_blocks = _word_blocks(m, "C", m.output_embedding(), level - 1, level)
    t_tilde = pad(m, np.eye(nt, dtype=np.complex128), 0, level)
    t_cross, t_within, t_complete = _block_report([t_tilde] + Y_blocks)

    return DecompositionReport(
        level=level,
        dimension_identity=dimension_identity(n, d, level),
        orthogonality=cross,
        orthonormality=within,
        completeness=complete,
        wandering_star=max(star_cross, star_within),
        star_orthogonality=max(s_cross, s_within),
        star_completeness=s_complete,
        tilde_orthogonality=max(t_cross, t_within),
        tilde_completeness=t_complete,
    )


@dataclass
class GammaMaps:
    """Coordinate maps at a fixed level.

    ``gamma_tilde``: ``LevelSpace(n_tilde, level) -> (word, Y)`` coefficients,
    killing ``H~ (x) vac``. ``gamma``: ``LevelSpace(n, level) -> H_circ +
    (word, U)`` coefficients, also killing ``H~ (x) vac``. ``gamma_w =
    gamma_tilde W gamma*``. Words range over ``enumerate_words(d, level - 1)``;
    the vector ``V_a eta`` is sent to coefficient word ``reverse(a)``.
    """

    level: int
    gamma: np.ndarray = field(repr=False)
    gamma_tilde: np.ndarray = field(repr=False)
    gamma_w: np.ndarray = field(repr=False)
    n_circ: int = 0

    def unitarity_defects(self, m: mdl.InteractionModel) -> dict:
        nt, n = m.n_tilde, m.n
        Pt = pad(m, np.eye(nt, dtype=np.complex128), 0, self.level)
        P = pad(m, np.eye(n, dtype=np.complex128)[:, :nt], 0, self.level)
        gt, g = self.gamma_tilde, self.gamma
        return {
            "gamma_tilde": max(
                op_norm(gt @ adjoint(gt) - np.eye(gt.shape[0])),
                op_norm(adjoint(gt) @ gt - (np.eye(gt.shape[1]) - Pt @ adjoint(Pt))),
            ),
            "gamma": max(
                op_norm(g @ adjoint(g) - np.eye(g.shape[0])),
                op_norm(adjoint(g) @ g - (np.eye(g.shape[1]) - P @ adjoint(P))),
            ),
            "gamma_w_coisometry": op_norm(self.gamma_w @ adjoint(self.gamma_w) - np.eye(self.gamma_w.shape[0])),
        }


def gamma_maps(m: mdl.InteractionModel, level: int) -> GammaMaps:
    if level < 1:
        raise ValueError("level must be >= 1")
    n, nt, d = m.n, m.n_tilde, m.d
    table = enumerate_words(d, level - 1)
    rev = table.reversal_permutation()
    dY, dU, nc = m.dim_Y, m.dim_U, m.n_circ

    Y_blocks = _word_blocks(m, "C", m.output_embedding(), level - 1, level)
    gt = np.zeros((len(table) * dY, nt * d ** level), dtype=np.complex128)
    for k, blk in enumerate(Y_blocks):
        r = rev[k]
        gt[r * dY:(r + 1) * dY] = adjoint(blk)

    E_blocks = _word_blocks(m, "E", m.input_embedding(), level - 1, level)
    g = np.zeros((nc + len(table) * dU, n * d ** level), dtype=np.complex128)
    g[:nc] = adjoint(pad(m, np.eye(n, dtype=np.complex128)[:, nt:], 0, level))
    for k, blk in enumerate(E_blocks):
        r = rev[k]
        g[nc + r * dU: nc + (r + 1) * dU] = adjoint(blk)

    W = adjoint(hatW_star(m, level))
    return GammaMaps(level, g, gt, gt @ W @ adjoint(g), nc)


def theorem51_defect(m: mdl.InteractionModel, level: int, series: tr.NcSeries | None = None) -> float:
    """Distance between the scattering picture (input columns of ``gamma_w``)
    and the truncated multi-analytic operator of the transfer function, over
    all words of length < ``level``. Both sides are exact on this block."""
    if level < 1:
        raise ValueError("level must be >= 1")
    N = level - 1
    if series is None:
        series = tr.transfer_coefficients(m, N)
    T = tr.toeplitz(series, N)
    G = gamma_maps(m, level)
    return op_norm(G.gamma_w[:, m.n_circ:] - T)


def w_unitarity_defect(m: mdl.InteractionModel, level: int) -> float:
    """How far ``W*`` at ``level`` is from reaching the base vectors
    ``H (x) vac``: ``|| Vac* (I - P_range(W*)) Vac ||``."""
    Wst = hatW_star(m, level)
    vac = pad(m, np.eye(m.n, dtype=np.complex128), 0, level)
    R = adjoint(Wst) @ vac
    return op_norm(adjoint(R) @ R - np.eye(m.n))


def scatter_report(m: mdl.InteractionModel, level: int) -> dict:
    levels = range(1, level + 1)
    return {
        "level": level,
        "hatW_isometry_defect": max(matkit.isometry_defect(hatW_star(m, l)) for l in range(0, level + 1)),
        "vacuum_fixing_defect": max(vacuum_fixing_defect(m, l) for l in range(0, level + 1)),
        "intertwine_defect": max(intertwine_defect(m, l) for l in levels),
        "decomposition": wandering_decomposition(m, level).to_json(),
        "gamma": gamma_maps(m, level).unitarity_defects(m),
        "scattering_defect": theorem51_defect(m, level) if level >= 2 else None,
    }
