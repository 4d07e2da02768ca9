import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repint import matkit
from repint import model as mdl
from repint import transfer as tr
from repint.errors import ParseError, ShapeMismatch
from repint.words import enumerate_words

from conftest import random_cmatrix

# smallest eigenvalue of the degree-6 observability Gram, from a direct
# word-by-word assembly (see test_gram_matches_direct_assembly)
M1_GRAM6 = [0.9349106086413412]
M2_GRAM6 = [0.994451922800765, 0.9954455686675595]


def direct_gram(c, N):
    G = np.zeros((c.n - c.n_tilde,) * 2, dtype=complex)
    for w in enumerate_words(c.d, N):
        R = c.C_tilde
        for a in w:
            R = R @ c.E_star[a - 1]
        R = R[:, c.n_tilde:]
        G += R.conj().T @ R
    return G


def test_trivial_colligation(T0):
    c = tr.build_colligation(T0)
    assert c.C_tilde.shape == (1, 1) and c.C_tilde[0, 0] == 0
    assert abs(abs(c.D_tilde[0, 0]) - 1) <= 1e-15


def test_output_map_kills_invariant_part(any_model):
    c = tr.build_colligation(any_model)
    assert matkit.op_norm(c.C_tilde[:, : c.n_tilde]) <= 1e-12
    assert tr.output_map_residual(any_model, c) <= 1e-10


def test_system_matrix_blocks(any_model):
    c = tr.build_colligation(any_model)
    S = c.system_matrix()
    top = S[: c.d * c.n]
    # the stacked state rows are a rotated copy of U, the output row a contraction
    assert matkit.unitarity_defect(top) <= 1e-12
    assert matkit.op_norm(S[c.d * c.n:]) <= 1 + 1e-12


def test_trivial_impulse_response(T0):
    c = tr.build_colligation(T0)
    u0 = np.array([0.3 - 0.2j])
    traj = tr.run_system(c, {(): u0}, 3)
    assert np.allclose(traj.y[0], c.D_tilde @ u0, atol=1e-15)
    assert np.all(traj.y[1:] == 0)


def test_trivial_series(T0):
    s = tr.transfer_coefficients(T0, 3)
    assert abs(abs(s[()][0, 0]) - 1) <= 1e-15
    assert np.all(s.coefficients[1:] == 0)


@pytest.mark.parametrize("N", [0, 1, 2, 4])
def test_impulse_response_identity(any_model, N):
    c = tr.build_colligation(any_model)
    theta = tr.transfer_coefficients(c, N)
    for k in range(c.dim_U):
        traj = tr.run_system(c, {(): np.eye(c.dim_U)[k]}, N)
        assert np.max(np.abs(traj.y - theta.coefficients[:, :, k]), initial=0) <= 1e-12


def test_first_order_coefficients(any_model):
    c = tr.build_colligation(any_model)
    s = tr.transfer_coefficients(c, 1)
    for j in range(1, c.d + 1):
        assert matkit.op_norm(s[(j,)] - c.C_tilde @ c.F_star[j - 1]) <= 1e-15


def test_shifted_input_reaches_concatenated_words(M1):
    c = tr.build_colligation(M1)
    theta = tr.transfer_coefficients(c, 3)
    u = np.array([1.0, 2.0j, -1.0])[: c.dim_U]
    traj = tr.run_system(c, {(2,): u}, 3)
    for a in enumerate_words(c.d, 2):
        assert np.allclose(traj.y[theta.table.index(a + (2,))], theta[a] @ u, atol=1e-12)


def test_run_system_input_forms_agree(M2):
    c = tr.build_colligation(M2)
    t = enumerate_words(c.d, 2)
    rng = np.random.default_rng(3)
    arr = random_cmatrix(rng, len(t), c.dim_U)
    a = tr.run_system(c, arr, 2)
    b = tr.run_system(c, {w: arr[k] for k, w in enumerate(t)}, 2)
    assert np.array_equal(a.y, b.y)
    with pytest.raises(ShapeMismatch):
        tr.run_system(c, arr[:-1], 2)
    with pytest.raises(ShapeMismatch):
        tr.run_system(c, {(1, 1, 1): arr[0]}, 2)


def test_toeplitz_trivial_is_identity(T0):
    T = tr.toeplitz(tr.transfer_coefficients(T0, 3))
    assert matkit.op_norm(np.abs(T) - np.eye(T.shape[0])) <= 1e-15


def test_toeplitz_diagonal_blocks(M1):
    s = tr.transfer_coefficients(M1, 3)
    T = tr.toeplitz(s)
    p, q = s.output_dim, s.input_dim
    for k in range(len(s.table)):
        assert np.array_equal(T[k * p:(k + 1) * p, k * q:(k + 1) * q], s[()])


def test_toeplitz_column_norms(M1):
    # direct summation oracle: column (u, b) carries Theta[a] u at a + b
    N = 3
    s = tr.transfer_coefficients(M1, N)
    T = tr.toeplitz(s, N)
    q = s.input_dim
    rng = np.random.default_rng(5)
    for col, b in enumerate(s.table):
        u = random_cmatrix(rng, q, 1)[:, 0]
        x = np.zeros(T.shape[1], dtype=complex)
        x[col * q:(col + 1) * q] = u
        expected = sum(
            np.linalg.norm(s[a] @ u) ** 2 for a in s.table if len(a) <= N - len(b)
        )
        assert np.linalg.norm(T @ x) ** 2 == pytest.approx(expected, rel=1e-12)


def test_contraction_defect_on_fixtures(any_model):
    assert tr.contraction_defect(tr.transfer_coefficients(any_model, 4)) <= 1e-8


@given(st.integers(1, 2), st.integers(0, 2), st.integers(2, 3), st.integers(0, 10**6))
def test_contraction_on_random_models(nt, nc, d, seed):
    m = mdl.random_model(nt, nc, d, seed)
    assert tr.contraction_defect(tr.transfer_coefficients(m, 2)) <= 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_energy_balance(any_model, seed):
    c = tr.build_colligation(any_model)
    N = 3
    t = enumerate_words(c.d, N)
    rng = np.random.default_rng(seed)
    u = random_cmatrix(rng, len(t), c.dim_U) * (rng.random((len(t), 1)) < 0.5)
    eb = tr.energy_balance(c, u, N)
    assert eb.gap >= -1e-9
    assert eb.residual <= 1e-9 * (1 + eb.input_energy)


def test_series_json_roundtrip(M2):
    s = tr.transfer_coefficients(M2, 2)
    text = json.dumps(s.to_json(), sort_keys=True)
    back = tr.NcSeries.from_json(json.loads(text))
    assert np.array_equal(back.coefficients, s.coefficients)
    assert json.dumps(back.to_json(), sort_keys=True) == text


def test_series_json_shape(M1):
    obj = tr.transfer_coefficients(M1, 4).to_json()
    assert {"d", "degree", "input_dim", "output_dim", "coefficients"} <= set(obj)
    assert len(obj["coefficients"]) == 31
    assert [e["word"] for e in obj["coefficients"][:3]] == [[], [1], [2]]


def test_series_json_rejects_missing_words(M1):
    obj = tr.transfer_coefficients(M1, 2).to_json()
    obj["coefficients"].pop()
    with pytest.raises(ParseError):
        tr.NcSeries.from_json(obj)


def test_truncate_is_prefix(M2):
    s = tr.transfer_coefficients(M2, 3)
    assert np.array_equal(s.truncate(2).coefficients, tr.transfer_coefficients(M2, 2).coefficients)
    with pytest.raises(ValueError):
        s.truncate(4)


def test_inner_report_trivial(T0):
    rep = tr.inner_defect(tr.transfer_coefficients(T0, 4))
    assert rep.diag_defect <= 1e-15 and rep.cross_defect <= 1e-15


def test_inner_partial_sums_bounded(any_model):
    rep = tr.inner_defect(tr.transfer_coefficients(any_model, 4))
    assert rep.bound_defect <= 1e-9
    assert rep.monotonicity_defect <= 1e-12
    assert np.linalg.eigvalsh(rep.tail_mass).min() >= -1e-12


def test_inner_defect_shrinks_on_observable_fixture(M2):
    # M2's degree-6 Gram is above 0.99 I, so its transfer series is close to inner
    assert min(tr.observability(M2, 6).eigenvalues) >= 0.99
    s = tr.transfer_coefficients(M2, 6)
    diag = [tr.inner_defect(s, N).diag_defect for N in range(1, 7)]
    assert all(b < a for a, b in zip(diag, diag[1:]))
    assert diag[-1] < 0.02


def test_observability_trivial(T0):
    rep = tr.observability(T0, 4)
    assert rep.eigenvalues == [] and rep.min_eig is None
    assert rep.isometry_defect == 0 and rep.gram.shape == (0, 0)


def test_gram_matches_direct_assembly(M1, M2):
    for m, frozen in ((M1, M1_GRAM6), (M2, M2_GRAM6)):
        c = tr.build_colligation(m)
        G = direct_gram(c, 6)
        rep = tr.observability(m, 6)
        assert matkit.op_norm(rep.gram - G) <= 1e-13
        assert rep.eigenvalues == pytest.approx(frozen, abs=1e-12)


@pytest.mark.parametrize("N", range(0, 7))
def test_gram_laws(any_model, N):
    rep = tr.observability(any_model, N)
    assert rep.bound_defect <= 1e-9
    assert rep.monotonicity_defect <= 1e-12
    if rep.eigenvalues:
        assert rep.min_eig >= -1e-12
        mins = rep.per_degree_min_eig
        assert all(b >= a - 1e-12 for a, b in zip(mins, mins[1:]))


def test_characterization_trivial(T0):
    rep = tr.theorem54_report(T0, 6, 4)
    for v in (rep.a_observability_gap, rep.b_gram_isometry, rep.d_w_unitarity, rep.e_inner_diag):
        assert v <= 1e-12


def test_characterization_M1(M1):
    rep = tr.theorem54_report(M1, 6, 4)
    assert rep.b_gram_isometry == pytest.approx(1 - M1_GRAM6[0], abs=1e-12)
    assert rep.a_observability_gap == pytest.approx(rep.b_gram_isometry, abs=1e-12)
    ratio = rep.d_w_unitarity / rep.b_gram_isometry
    assert 0.1 <= ratio <= 10
    assert "equivalent" in rep.to_json()["note"]


def test_characterization_M2_finite(M2):
    rep = tr.theorem54_report(M2, 4, 3).to_json()
    assert all(np.isfinite(v) for k, v in rep.items() if k not in ("note",))


def test_characterization_rejects_small_horizons(M1):
    with pytest.raises(ValueError):
        tr.theorem54_report(M1, 1, 3)
    with pytest.raises(ValueError):
        tr.theorem54_report(M1, 3, 1)
