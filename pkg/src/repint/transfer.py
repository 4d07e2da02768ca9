"""Input/output machinery of the model.

The state recursion is indexed by words: ``x(j w) = E_j* x(w) + F_j* u(w)``
(the new letter is prepended) and ``y(w) = C~ x(w) + D~ u(w)``. The
transfer coefficients are stored so that an impulse at the empty word
reproduces them exactly::

    Theta[()] = D~
    Theta[(w1, ..., wk)] = C~ E*_{w1} ... E*_{w(k-1)} F*_{wk}

and an input placed at word ``b`` reaches output word ``a + b`` through
``Theta[a]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import matkit, model as mdl
from .errors import InvalidModel, ParseError, ShapeMismatch
from .matkit import adjoint, op_norm
from .words import WordTable, enumerate_words, word_from_json, word_to_json

COLLIGATION_TOL = 1e-10
PSD_SLACK = 1e-9


@dataclass(frozen=True)
class Colligation:
    E_star: tuple
    F_star: tuple
    C_tilde: np.ndarray
    D_tilde: np.ndarray
    n_tilde: int

    @property
    def d(self) -> int:
        return len(self.E_star)

    @property
    def n(self) -> int:
        return self.C_tilde.shape[1]

    @property
    def dim_U(self) -> int:
        return self.D_tilde.shape[1]

    @property
    def dim_Y(self) -> int:
        return self.D_tilde.shape[0]

    def system_matrix(self) -> np.ndarray:
        """The block operator ``H + U -> (H)^d + Y``."""
        top = [np.hstack([e, f]) for e, f in zip(self.E_star, self.F_star)]
        return np.vstack(top + [np.hstack([self.C_tilde, self.D_tilde])])


def output_map_residual(m: mdl.InteractionModel, c: Colligation) -> float:
    """Compare ``P_Y U~* P_1 U`` on ``H + U`` with ``[C~, D~]``."""
    nt, d = m.n_tilde, m.d
    Q = np.hstack([m.vacuum_embedding(), m.input_embedding()])
    direct = adjoint(m.output_embedding()) @ adjoint(m.U_tilde) @ (m.U @ Q)[: nt * d]
    return op_norm(direct - np.hstack([c.C_tilde, c.D_tilde]))


def build_colligation(m: mdl.InteractionModel) -> Colligation:
    E = mdl.extract_E(m)
    F = mdl.extract_F(m)
    D = mdl.extract_D(m)
    nt = m.n_tilde
    # D_j P_H~ : H -> Y, i.e. D_j padded with zero columns over H_circ
    DP = [np.hstack([Dj, np.zeros((Dj.shape[0], m.n_circ))]) for Dj in D]
    C_tilde = sum(dp @ adjoint(e) for dp, e in zip(DP, E))
    D_tilde = sum(dp @ adjoint(f) for dp, f in zip(DP, F))
    c = Colligation(tuple(E.adjoints()), tuple(F.adjoints()), C_tilde, D_tilde, nt)
    kills = op_norm(C_tilde[:, :nt])
    res = output_map_residual(m, c)
    if kills > COLLIGATION_TOL or res > COLLIGATION_TOL:
        raise InvalidModel(f"colligation invariants fail: C~|H~ = {kills:.3e}, output map = {res:.3e}")
    return c


@dataclass
class NcSeries:
    """Truncated word-indexed family of ``output_dim x input_dim`` matrices."""

    table: WordTable
    coefficients: np.ndarray  # shape (len(table), output_dim, input_dim)
    fock: bool = False

    @property
    def d(self) -> int:
        return self.table.d

    @property
    def degree(self) -> int:
        return self.table.max_len

    @property
    def output_dim(self) -> int:
        return self.coefficients.shape[1]

    @property
    def input_dim(self) -> int:
        return self.coefficients.shape[2]

    def __getitem__(self, w) -> np.ndarray:
        return self.coefficients[self.table.index(w)]

    def truncate(self, N: int) -> "NcSeries":
        if N > self.degree:
            raise ValueError(f"series has degree {self.degree} < {N}")
        t = enumerate_words(self.d, N)
        return NcSeries(t, self.coefficients[: len(t)].copy(), self.fock)

    def to_json(self) -> dict:
        out = {
            "d": self.d,
            "degree": self.degree,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "coefficients": [
                {"word": word_to_json(w), "matrix": matkit.to_json(c)}
                for w, c in zip(self.table, self.coefficients)
            ],
        }
        if self.fock:
            out["fock"] = True
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NcSeries":
        try:
            t = enumerate_words(mdl.json_int(obj["d"]), mdl.json_int(obj["degree"]))
            shape = (len(t), mdl.json_int(obj["output_dim"]), mdl.json_int(obj["input_dim"]))
            coeffs = np.zeros(shape, dtype=np.complex128)
            seen = set()
            for entry in obj["coefficients"]:
                k = t.index(word_from_json(entry["word"]))
                coeffs[k] = matkit.from_json(entry["matrix"])
                seen.add(k)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed series: {exc}") from None
        if len(seen) != len(t):
            raise ParseError("series JSON is missing coefficients")
        return cls(t, coeffs, bool(obj.get("fock", False)))


@dataclass
class Trajectory:
    table: WordTable
    x: np.ndarray  # (len(table), n)
    u: np.ndarray  # (len(table), dim_U)
    y: np.ndarray  # (len(table), dim_Y)

    @property
    def degree(self) -> int:
        return self.table.max_len


def _input_array(u, table: WordTable, dim_U: int) -> np.ndarray:
    if isinstance(u, Mapping):
        arr = np.zeros((len(table), dim_U), dtype=np.complex128)
        for w, v in u.items():
            if len(w) > table.max_len:
                raise ShapeMismatch(f"input word {w} longer than degree {table.max_len}")
            arr[table.index(w)] = v
        return arr
    arr = np.asarray(u, dtype=np.complex128)
    if arr.shape != (len(table), dim_U):
        raise ShapeMismatch(f"input array must have shape {(len(table), dim_U)}, got {arr.shape}")
    return arr


def run_system(c: Colligation, u, N: int, x0=None) -> Trajectory:
    """Run the recursion for all words of length <= N.

    ``u`` is either a mapping word -> vector (missing words are zero) or an
    array laid out over ``enumerate_words(d, N)``.
    """
    table = enumerate_words(c.d, N)
    uu = _input_array(u, table, c.dim_U)
    x = np.zeros((len(table), c.n), dtype=np.complex128)
    if x0 is not None:
        x0 = np.asarray(x0, dtype=np.complex128).reshape(-1)
        if x0.shape != (c.n,):
            raise ShapeMismatch(f"x0 must have length {c.n}")
        x[0] = x0
    for k, w in enumerate(table):
        if len(w) == N:
            break
        for j in range(1, c.d + 1):
            x[table.index((j,) + w)] = c.E_star[j - 1] @ x[k] + c.F_star[j - 1] @ uu[k]
    y = x @ c.C_tilde.T + uu @ c.D_tilde.T
    return Trajectory(table, x, uu, y)


def transfer_coefficients(c, N: int) -> NcSeries:
    if isinstance(c, mdl.InteractionModel):
        c = build_colligation(c)
    table = enumerate_words(c.d, N)
    coeffs = np.zeros((len(table), c.dim_Y, c.dim_U), dtype=np.complex128)
    coeffs[0] = c.D_tilde
    # prefix[w] = C~ E*_{w1} ... E*_{wk}, grown one letter at a time on the right
    prefix = {(): c.C_tilde}
    for k, w in enumerate(table):
        if not w:
            continue
        head, last = w[:-1], w[-1]
        coeffs[k] = prefix[head] @ c.F_star[last - 1]
        if len(w) < N:
            prefix[w] = prefix[head] @ c.E_star[last - 1]
    return NcSeries(table, coeffs)


def toeplitz(series: NcSeries, N: int | None = None) -> np.ndarray:
    """Truncated multi-analytic operator: block (a + b, b) = Theta[a]."""
    N = series.degree if N is None else N
    if N > series.degree:
        raise ValueError(f"series degree {series.degree} < {N}")
    table = enumerate_words(series.d, N)
    p, q = series.output_dim, series.input_dim
    M = np.zeros((len(table) * p, len(table) * q), dtype=np.complex128)
    for col, b in enumerate(table):
        for a in table:
            if len(a) + len(b) > N:
                break
            row = table.index(a + b)
            M[row * p:(row + 1) * p, col * q:(col + 1) * q] = series.coefficients[table.index(a)]
    return M


def contraction_defect(series: NcSeries, N: int | None = None) -> float:
    return max(0.0, op_norm(toeplitz(series, N)) - 1.0)


@dataclass
class InnerReport:
    degree: int
    diag_defect: float
    cross_defect: float
    partial_sum_max_eig: list
    monotonicity_defect: float
    bound_defect: float
    tail_mass: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "diag_defect": self.diag_defect,
            "cross_defect": self.cross_defect,
            "partial_sum_max_eig": self.partial_sum_max_eig,
            "monotonicity_defect": self.monotonicity_defect,
            "bound_defect": self.bound_defect,
            "tail_mass": matkit.to_json(self.tail_mass),
            "tail_mass_norm": op_norm(self.tail_mass),
        }


def inner_defect(series: NcSeries, N: int | None = None) -> InnerReport:
    """Finite-degree certificate for ``sum_a Theta[a]* Theta[a] = I`` and the
    vanishing of the shifted cross sums. A lower bound only: the tail beyond
    degree N is reported as ``tail_mass``."""
    N = series.degree if N is None else N
    t = series.table
    q = series.input_dim
    S = np.zeros((q, q), dtype=np.complex128)
    prev = S.copy()
    max_eigs, mono = [], 0.0
    for k in range(N + 1):
        blk = series.coefficients[t.grade_slice(k)]
        S = S + np.einsum("kij,kil->jl", blk.conj(), blk)
        mono = max(mono, -float(np.linalg.eigvalsh(S - prev).min(initial=0.0)) if q else 0.0)
        max_eigs.append(float(np.linalg.eigvalsh(S).max()) if q else 0.0)
        prev = S.copy()
    tail = np.eye(q) - S
    cross = 0.0
    for delta in t:
        if not delta or len(delta) > N:
            continue
        acc = np.zeros((q, q), dtype=np.complex128)
        for a in t:
            if len(a) + len(delta) > N:
                break
            acc += adjoint(series[a]) @ series[a + delta]
        cross = max(cross, op_norm(acc))
    return InnerReport(
        degree=N,
        diag_defect=op_norm(tail),
        cross_defect=cross,
        partial_sum_max_eig=max_eigs,
        monotonicity_defect=mono,
        bound_defect=max(0.0, max(max_eigs, default=0.0) - 1.0),
        tail_mass=tail,
    )


@dataclass
class ObservabilityReport:
    degree: int
    gram: np.ndarray = field(repr=False)
    eigenvalues: list
    min_eig: float | None
    max_eig: float | None
    isometry_defect: float
    per_degree_min_eig: list
    monotonicity_defect: float
    bound_defect: float

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "gram": matkit.to_json(self.gram) if self.gram.size else {"rows": 0, "cols": 0, "data": []},
            "eigenvalues": self.eigenvalues,
            "min_eig": self.min_eig,
            "max_eig": self.max_eig,
            "isometry_defect": self.isometry_defect,
            "per_degree_min_eig": self.per_degree_min_eig,
            "monotonicity_defect": self.monotonicity_defect,
            "bound_defect": self.bound_defect,
        }


def observability_rows(c: Colligation, N: int) -> np.ndarray:
    """Stack of ``C~ E*_{w1} ... E*_{wk}`` restricted to ``H_circ``, laid out
    over ``enumerate_words(d, N)``; shape ``(len(table), dim_Y, n_circ)``."""
    table = enumerate_words(c.d, N)
    nt = c.n_tilde
    rows = np.zeros((len(table), c.dim_Y, c.n - nt), dtype=np.complex128)
    full = {(): c.C_tilde}
    rows[0] = c.C_tilde[:, nt:]
    for k, w in enumerate(table):
        if not w:
            continue
        full[w] = full[w[:-1]] @ c.E_star[w[-1] - 1]
        rows[k] = full[w][:, nt:]
    return rows


def observability(m, N: int) -> ObservabilityReport:
    c = build_colligation(m) if isinstance(m, mdl.InteractionModel) else m
    rows = observability_rows(c, N)
    table = enumerate_words(c.d, N)
    nc = rows.shape[2]
    G = np.zeros((nc, nc), dtype=np.complex128)
    per_degree, mono = [], 0.0
    for k in range(N + 1):
        blk = rows[table.grade_slice(k)]
        inc = np.einsum("kij,kil->jl", blk.conj(), blk)
        if nc:
            mono = max(mono, -float(np.linalg.eigvalsh(inc).min()))
        G = G + inc
        per_degree.append(float(np.linalg.eigvalsh(G).min()) if nc else None)
    eigs = [float(x) for x in np.linalg.eigvalsh(G)] if nc else []
    return ObservabilityReport(
        degree=N,
        gram=G,
        eigenvalues=eigs,
        min_eig=min(eigs) if eigs else None,
        max_eig=max(eigs) if eigs else None,
        isometry_defect=op_norm(G - np.eye(nc)),
        per_degree_min_eig=per_degree,
        monotonicity_defect=max(mono, 0.0),
        bound_defect=max(0.0, (max(eigs) if eigs else 0.0) - 1.0),
    )


EQUIVALENCE_NOTE = (
    "(a)-(d) are equivalent in the infinite-degree limit; when dim H is finite and "
    "d >= 2, (e) is equivalent to them as well. Finite-degree values are defects only."
)


@dataclass
class ConsistencyReport:
    degree: int
    level: int
    a_observability_gap: float
    b_gram_isometry: float
    d_w_unitarity: float
    e_inner_diag: float
    note: str = EQUIVALENCE_NOTE

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "level": self.level,
            "a_observability_gap": self.a_observability_gap,
            "b_gram_isometry": self.b_gram_isometry,
            "d_w_unitarity": self.d_w_unitarity,
            "e_inner_diag": self.e_inner_diag,
            "note": self.note,
        }


def theorem54_report(m: mdl.InteractionModel, N: int, level: int) -> ConsistencyReport:
    """Four finite-horizon defects whose simultaneous vanishing characterizes a
    unitary scattering map: (a) ``1 - min eig G_N``, (b) ``|G_N - I|``,
    (d) the unitarity defect of ``W`` read on ``H (x) vac`` at ``level``,
    (e) the inner diagonal defect of the transfer series at degree ``N``."""
    if N < 2 or level < 2:
        raise ValueError(f"need N >= 2 and level >= 2, got N={N}, level={level}")
    from . import scatter  # scatter imports this module

    c = build_colligation(m)
    obs = observability(c, N)
    a = 1.0 - obs.min_eig if obs.min_eig is not None else 0.0
    return ConsistencyReport(
        degree=N,
        level=level,
        a_observability_gap=max(0.0, a),
        b_gram_isometry=obs.isometry_defect,
        d_w_unitarity=scatter.w_unitarity_defect(m, level),
        e_inner_diag=inner_defect(transfer_coefficients(c, N), N).diag_defect,
    )


@dataclass(frozen=True)
class EnergyBalance:
    input_energy: float
    output_energy: float
    boundary_energy: float  # sum of |x_circ(w)|^2 over |w| = N + 1

    @property
    def gap(self) -> float:
        """``input - output``; non-negative for a contractive system."""
        return self.input_energy - self.output_energy

    @property
    def residual(self) -> float:
        return abs(self.gap - self.boundary_energy)


def energy_balance(c: Colligation, u, N: int) -> EnergyBalance:
    """Energy bookkeeping for a zero-initial-state run with input supported on
    words of length <= N."""
    table = enumerate_words(c.d, N)
    uu = _input_array(u, table, c.dim_U)
    big = enumerate_words(c.d, N + 1)
    ext = np.zeros((len(big), c.dim_U), dtype=np.complex128)
    ext[: len(table)] = uu
    traj = run_system(c, ext, N + 1)
    low = slice(0, len(table))
    top = big.grade_slice(N + 1)
    return EnergyBalance(
        input_energy=float(np.sum(np.abs(traj.u[low]) ** 2)),
        output_energy=float(np.sum(np.abs(traj.y[low]) ** 2)),
        boundary_energy=float(np.sum(np.abs(traj.x[top, c.n_tilde:]) ** 2)),
    )
