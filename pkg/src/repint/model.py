"""The interaction model: a compatible unitary pair and the tuples it induces.

Coordinates
-----------
``H = C^n`` with ``n = n_tilde + n_circ``; the subspace ``H~`` is spanned by
the first ``n_tilde`` coordinates. ``K = P = C^d``. A basis vector
``(h, k)`` of ``H (x) K`` sits at row ``h * d + k``. ``U`` acts on
``H (x) K`` and ``U_tilde`` on ``H~ (x) K``; because ``H~`` is a leading
coordinate block, the embedding ``H~ (x) P -> H (x) P`` is "take the first
``n_tilde * d`` rows".

The complement of the vacuum ``omega_K`` in ``K`` is spanned by the columns
1..d-1 of :func:`repint.matkit.householder_complement`. The input space
``H (x) omega_K^perp`` and output space ``H~ (x) omega_K^perp`` use the layout
``(h, k) -> h * (d - 1) + k``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import matkit
from .errors import BadDims, InvalidModel, NotALifting, ParseError, ShapeMismatch
from .matkit import adjoint, json_int, op_norm

MODEL_TOL = 1e-10
# omega_K normalization and epsilon unitarity
FRAME_TOL = 1e-12

# roles a RowTuple may carry
ROLES = ("E", "C", "F", "D", "A", "B")


@dataclass(frozen=True)
class RowTuple:
    mats: tuple
    role: str = ""

    def __post_init__(self):
        if self.role and self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        shapes = {np.shape(m) for m in self.mats}
        if len(shapes) > 1:
            raise ShapeMismatch(f"tuple members differ in shape: {sorted(shapes)}")

    def __len__(self):
        return len(self.mats)

    def __getitem__(self, j):
        return self.mats[j]

    def __iter__(self):
        return iter(self.mats)

    @property
    def d(self) -> int:
        return len(self.mats)

    @property
    def shape(self) -> tuple:
        return np.shape(self.mats[0])

    def adjoints(self) -> list:
        return [adjoint(m) for m in self.mats]

    def row(self) -> np.ndarray:
        """The row operator ``[T_1, ..., T_d]``."""
        return np.hstack(self.mats)

    def coisometry_defect(self) -> float:
        """``|| sum_j T_j T_j* - I ||``."""
        s = sum(m @ adjoint(m) for m in self.mats)
        return op_norm(s - np.eye(s.shape[0]))


@dataclass(frozen=True)
class InteractionModel:
    n_tilde: int
    n_circ: int
    d: int
    U: np.ndarray = field(repr=False)
    U_tilde: np.ndarray = field(repr=False)
    omega_K: np.ndarray = field(default=None, repr=False)
    epsilon: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_tilde < 1 or self.n_circ < 0 or self.d < 1:
            raise BadDims(f"bad dimensions n_tilde={self.n_tilde}, n_circ={self.n_circ}, d={self.d}")
        if self.omega_K is None:
            object.__setattr__(self, "omega_K", np.eye(self.d, dtype=np.complex128)[:, 0])
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", np.eye(self.d, dtype=np.complex128))
        object.__setattr__(self, "omega_K", np.asarray(self.omega_K, dtype=np.complex128).reshape(-1))
        for name in ("U", "U_tilde", "epsilon"):
            object.__setattr__(self, name, matkit.as_cmatrix(getattr(self, name)))
        n, nt, d = self.n, self.n_tilde, self.d
        expected = {"U": (n * d, n * d), "U_tilde": (nt * d, nt * d), "epsilon": (d, d)}
        for name, shp in expected.items():
            if getattr(self, name).shape != shp:
                raise InvalidModel(f"{name} has shape {getattr(self, name).shape}, expected {shp}")
        if self.omega_K.shape != (d,):
            raise InvalidModel(f"omega_K has length {self.omega_K.size}, expected {d}")

    @property
    def n(self) -> int:
        return self.n_tilde + self.n_circ

    @property
    def dim_U(self) -> int:
        return self.n * (self.d - 1)

    @property
    def dim_Y(self) -> int:
        return self.n_tilde * (self.d - 1)

    def vacuum_complement(self) -> np.ndarray:
        """``d x (d-1)`` orthonormal basis of the complement of ``omega_K``."""
        return matkit.householder_complement(self.omega_K)[:, 1:]

    def input_embedding(self) -> np.ndarray:
        """Isometry ``H (x) omega^perp -> H (x) K``."""
        return np.kron(np.eye(self.n), self.vacuum_complement())

    def output_embedding(self) -> np.ndarray:
        """Isometry ``H~ (x) omega^perp -> H~ (x) K``."""
        return np.kron(np.eye(self.n_tilde), self.vacuum_complement())

    def vacuum_embedding(self, base_dim: int | None = None) -> np.ndarray:
        """``h -> h (x) omega_K`` on ``C^base_dim`` (default ``n``)."""
        base_dim = self.n if base_dim is None else base_dim
        return np.kron(np.eye(base_dim), self.omega_K.reshape(-1, 1))

    def eps_bra(self, j: int, base_dim: int | None = None) -> np.ndarray:
        """``I (x) <eps_j|`` for 1-based ``j``."""
        base_dim = self.n if base_dim is None else base_dim
        return np.kron(np.eye(base_dim), adjoint(self.epsilon[:, [j - 1]]))

    def to_json(self) -> dict:
        return {
            "n_tilde": self.n_tilde,
            "n_circ": self.n_circ,
            "d": self.d,
            "omega_K": matkit.vector_to_json(self.omega_K),
            "epsilon": matkit.to_json(self.epsilon),
            "U": matkit.to_json(self.U),
            "U_tilde": matkit.to_json(self.U_tilde),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "InteractionModel":
        try:
            nt, nc, d = json_int(obj["n_tilde"]), json_int(obj["n_circ"]), json_int(obj["d"])
            U = matkit.from_json(obj["U"])
            Ut = matkit.from_json(obj["U_tilde"])
            omega = matkit.vector_from_json(obj["omega_K"]) if "omega_K" in obj else None
            eps = matkit.from_json(obj["epsilon"]) if "epsilon" in obj else None
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed model: missing or bad field {exc}") from None
        return cls(nt, nc, d, U, Ut, omega, eps)


def load_model(path) -> InteractionModel:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return InteractionModel.from_json(obj)


def dump_model(m: InteractionModel, path) -> None:
    Path(path).write_text(json.dumps(m.to_json(), indent=1) + "\n")


@dataclass(frozen=True)
class ValidationReport:
    unitarity_U: float
    unitarity_U_tilde: float
    compatibility: float
    vacuum_norm: float
    epsilon_unitarity: float
    tol: float = MODEL_TOL

    @property
    def passed(self) -> bool:
        return bool(
            max(self.unitarity_U, self.unitarity_U_tilde, self.compatibility) <= self.tol
            and max(self.vacuum_norm, self.epsilon_unitarity) <= FRAME_TOL
        )

    def to_json(self) -> dict:
        return {
            "unitarity_U": self.unitarity_U,
            "unitarity_U_tilde": self.unitarity_U_tilde,
            "compatibility": self.compatibility,
            "vacuum_norm": self.vacuum_norm,
            "epsilon_unitarity": self.epsilon_unitarity,
            "tol": self.tol,
            "passed": bool(self.passed),
        }


def compatibility_residual(m: InteractionModel) -> float:
    nt, d = m.n_tilde, m.d
    lhs = m.U @ m.vacuum_embedding()[:, :nt]
    rhs = np.zeros_like(lhs)
    rhs[: nt * d] = m.U_tilde @ m.vacuum_embedding(nt)
    return op_norm(lhs - rhs)


def validate(m: InteractionModel, tol: float = MODEL_TOL) -> ValidationReport:
    return ValidationReport(
        unitarity_U=matkit.unitarity_defect(m.U),
        unitarity_U_tilde=matkit.unitarity_defect(m.U_tilde),
        compatibility=compatibility_residual(m),
        vacuum_norm=float(abs(np.linalg.norm(m.omega_K) - 1.0)),
        epsilon_unitarity=matkit.unitarity_defect(m.epsilon),
        tol=tol,
    )


def _require_valid(m: InteractionModel) -> None:
    rep = validate(m)
    if not rep.passed:
        raise InvalidModel(f"model fails validation: {rep.to_json()}")


def random_model(n_tilde: int, n_circ: int, d: int, seed: int) -> InteractionModel:
    """Draw a compatible pair: Haar ``U_tilde``, then complete ``U``.

    ``U`` is forced on the vectors ``h~ (x) omega`` by the compatibility
    condition; everything else is a seeded unitary completion. The completion
    seed is ``seed + 1``.
    """
    if n_tilde < 1 or n_circ < 0 or d < 2:
        raise BadDims(f"need n_tilde >= 1, n_circ >= 0, d >= 2; got ({n_tilde}, {n_circ}, {d})")
    n = n_tilde + n_circ
    Ut = matkit.haar_unitary(n_tilde * d, seed)
    omega = np.eye(d, dtype=np.complex128)[:, 0]

    constrained = np.zeros((n * d, n_tilde), dtype=np.complex128)
    constrained[: n_tilde * d] = Ut @ np.kron(np.eye(n_tilde), omega.reshape(-1, 1))
    out_basis = matkit.unitary_completion(constrained, seed + 1)

    # input basis: h~ (x) omega first, then h_circ (x) omega, then h (x) omega^perp
    q = matkit.householder_complement(omega)
    cols = [np.kron(np.eye(n)[:, h], q[:, 0]) for h in range(n)]
    cols += [np.kron(np.eye(n)[:, h], q[:, k]) for h in range(n) for k in range(1, d)]
    in_basis = np.column_stack(cols)

    U = out_basis @ adjoint(in_basis)
    m = InteractionModel(n_tilde, n_circ, d, U, Ut, omega, np.eye(d, dtype=np.complex128))
    _require_valid(m)
    return m


def trivial_model(d: int = 2) -> InteractionModel:
    """The T0 fixture: ``H = H~ = C``, ``U = U_tilde = I`` (identify K with P)."""
    return InteractionModel(1, 0, d, np.eye(d), np.eye(d))


def _extract(unitary, bra, ket, d) -> RowTuple:
    return [bra(j) @ unitary @ ket for j in range(1, d + 1)]


def extract_E(m: InteractionModel) -> RowTuple:
    _require_valid(m)
    stars = _extract(m.U, m.eps_bra, m.vacuum_embedding(), m.d)
    return RowTuple(tuple(adjoint(s) for s in stars), "E")


def extract_C(m: InteractionModel) -> RowTuple:
    _require_valid(m)
    nt = m.n_tilde
    stars = _extract(m.U_tilde, lambda j: m.eps_bra(j, nt), m.vacuum_embedding(nt), m.d)
    return RowTuple(tuple(adjoint(s) for s in stars), "C")


def extract_F(m: InteractionModel) -> RowTuple:
    """``F_j : H -> H (x) omega^perp``, each ``n(d-1) x n``."""
    _require_valid(m)
    stars = _extract(m.U, m.eps_bra, m.input_embedding(), m.d)
    return RowTuple(tuple(adjoint(s) for s in stars), "F")


def extract_D(m: InteractionModel) -> RowTuple:
    """``D_j : H~ -> H~ (x) omega^perp``, each ``n_tilde(d-1) x n_tilde``."""
    _require_valid(m)
    nt = m.n_tilde
    stars = _extract(m.U_tilde, lambda j: m.eps_bra(j, nt), m.output_embedding(), m.d)
    return RowTuple(tuple(adjoint(s) for s in stars), "D")


def compress(X: np.ndarray, n_tilde: int) -> np.ndarray:
    """``phi(X) = P_H~ X |_H~``."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] < n_tilde:
        raise ShapeMismatch(f"compress needs a square matrix of size >= {n_tilde}, got {X.shape}")
    return X[:n_tilde, :n_tilde]


@dataclass(frozen=True)
class LiftingBlocks:
    C: RowTuple
    B: RowTuple
    A: RowTuple
    n_tilde: int
    n_circ: int

    @property
    def d(self) -> int:
        return self.C.d

    def reassemble(self) -> RowTuple:
        nt, nc = self.n_tilde, self.n_circ
        mats = []
        for c, b, a in zip(self.C, self.B, self.A):
            e = np.zeros((nt + nc, nt + nc), dtype=np.complex128)
            e[:nt, :nt] = c
            e[nt:, :nt] = b
            e[nt:, nt:] = a
            mats.append(e)
        return RowTuple(tuple(mats), "E")

    def cross_defect(self) -> float:
        """``|| sum_j C_j B_j* ||``."""
        s = sum(c @ adjoint(b) for c, b in zip(self.C, self.B))
        return op_norm(s)


def lifting_blocks(E, n_tilde: int, tol: float = 1e-8) -> LiftingBlocks:
    mats = [np.asarray(e, dtype=np.complex128) for e in E]
    n = mats[0].shape[0]
    if not 0 < n_tilde <= n:
        raise ShapeMismatch(f"n_tilde={n_tilde} incompatible with n={n}")
    upper = max(op_norm(e[:n_tilde, n_tilde:]) for e in mats)
    if upper > tol:
        raise NotALifting(f"upper-right block has norm {upper:.3e}")
    nt = n_tilde
    return LiftingBlocks(
        C=RowTuple(tuple(e[:nt, :nt] for e in mats), "C"),
        B=RowTuple(tuple(e[nt:, :nt] for e in mats), "B"),
        A=RowTuple(tuple(e[nt:, nt:] for e in mats), "A"),
        n_tilde=nt,
        n_circ=n - nt,
    )


def model_laws(m: InteractionModel) -> dict:
    """Defects of the algebraic identities every valid model satisfies."""
    rep = validate(m)
    E, C = extract_E(m), extract_C(m)
    F, D = extract_F(m), extract_D(m)
    L = lifting_blocks(list(E), m.n_tilde)
    nt, d = m.n_tilde, m.d

    def gram_law(X, Y):
        # X_j* X_i = delta_ij I - Y_j* Y_i
        return max(
            op_norm(adjoint(X[j]) @ X[i] - ((i == j) * np.eye(Y[i].shape[1]) - adjoint(Y[j]) @ Y[i]))
            for i in range(d) for j in range(d)
        )

    restrict = max(
        op_norm(adjoint(E[j])[:, :nt] - np.vstack([adjoint(C[j]), np.zeros((m.n_circ, nt))]))
        for j in range(d)
    )
    return {
        "unitarity_U": rep.unitarity_U,
        "unitarity_U_tilde": rep.unitarity_U_tilde,
        "compatibility": rep.compatibility,
        "E_coisometry": E.coisometry_defect(),
        "C_coisometry": C.coisometry_defect(),
        "E_star_restriction": restrict,
        "CB_cross": L.cross_defect(),
        "D_gram": gram_law(D, C),
        "F_gram": gram_law(F, E),
    }


def lifting_from_json(obj: dict) -> LiftingBlocks:
    try:
        nt, nc = json_int(obj["n_tilde"]), json_int(obj["n_circ"])
        E = [matkit.from_json(e) for e in obj["E"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed lifting: {exc}") from None
    if any(e.shape != (nt + nc, nt + nc) for e in E):
        raise ParseError("lifting matrices have the wrong shape")
    return lifting_blocks(E, nt)


def lifting_to_json(L: LiftingBlocks) -> dict:
    return {
        "n_tilde": L.n_tilde,
        "n_circ": L.n_circ,
        "E": [matkit.to_json(e) for e in L.reassemble()],
    }
