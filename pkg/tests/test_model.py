import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repint import matkit
from repint import model as mdl
from repint.errors import BadDims, InvalidModel, NotALifting, ParseError

SQ = np.sqrt(0.5)


def loop_extract_E(m):
    """E_j*[a, b] = <e_a (x) eps_j, U (e_b (x) omega)>, by explicit summation."""
    n, d = m.n, m.d
    out = []
    for j in range(d):
        Es = np.zeros((n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                acc = 0
                for k in range(d):
                    for l in range(d):
                        acc += np.conj(m.epsilon[k, j]) * m.U[a * d + k, b * d + l] * m.omega_K[l]
                Es[a, b] = acc
        out.append(Es.conj().T)
    return out


def test_trivial_model_validates(T0):
    rep = mdl.validate(T0)
    assert rep.passed
    assert max(rep.unitarity_U, rep.unitarity_U_tilde, rep.compatibility) <= 1e-15


def test_perturbed_trivial_model_fails(T0):
    U = T0.U.copy()
    U[0, 0] += 0.1
    rep = mdl.validate(mdl.InteractionModel(T0.n_tilde, T0.n_circ, T0.d, U, T0.U_tilde))
    assert rep.unitarity_U > 1e-2
    assert not rep.passed


def test_committed_fixtures_validate(any_model):
    assert mdl.validate(any_model).passed


def test_fixture_regeneration_matches(M1, M2):
    for stored, args in ((M1, (2, 1, 2, 42)), (M2, (2, 2, 3, 7))):
        fresh = mdl.random_model(*args)
        assert np.array_equal(fresh.U, stored.U)
        assert np.array_equal(fresh.U_tilde, stored.U_tilde)


@given(st.integers(1, 2), st.integers(0, 2), st.integers(2, 3), st.integers(0, 10**6))
def test_random_models_obey_laws(nt, nc, d, seed):
    m = mdl.random_model(nt, nc, d, seed)
    assert max(mdl.model_laws(m).values()) <= 1e-10


def test_random_model_rejects_bad_dims():
    with pytest.raises(BadDims):
        mdl.random_model(1, 0, 1, 0)
    with pytest.raises(BadDims):
        mdl.random_model(0, 1, 2, 0)


def test_constructor_checks_shapes(T0):
    with pytest.raises(InvalidModel):
        mdl.InteractionModel(1, 0, 2, np.eye(3), T0.U_tilde)
    with pytest.raises(BadDims):
        mdl.InteractionModel(0, 0, 2, np.eye(0), np.eye(0))


def test_trivial_extractions(T0):
    E, C = mdl.extract_E(T0), mdl.extract_C(T0)
    assert np.array_equal(E[0], [[1]]) and np.array_equal(E[1], [[0]])
    assert np.array_equal(C[0], [[1]]) and np.array_equal(C[1], [[0]])
    F, D = mdl.extract_F(T0), mdl.extract_D(T0)
    assert F[0].shape == (1, 1)
    assert abs(F[0][0, 0]) == 0 and abs(F[1][0, 0]) == pytest.approx(1.0)
    assert abs(D[0][0, 0]) == 0 and abs(D[1][0, 0]) == pytest.approx(1.0)


def test_E_extraction_matches_loop_oracle(any_model):
    E = mdl.extract_E(any_model)
    for mine, ref in zip(E, loop_extract_E(any_model)):
        assert matkit.op_norm(mine - ref) <= 1e-14


def test_C_is_compression_of_E(any_model):
    E, C = mdl.extract_E(any_model), mdl.extract_C(any_model)
    for e, c in zip(E, C):
        assert matkit.op_norm(mdl.compress(e, any_model.n_tilde) - c) <= 1e-12


def test_model_laws_on_fixtures(any_model):
    laws = mdl.model_laws(any_model)
    assert set(laws) >= {"E_coisometry", "C_coisometry", "CB_cross", "D_gram", "F_gram"}
    assert max(laws.values()) <= 1e-10


def test_lifting_blocks_of_L1(L1):
    assert L1.n_tilde == 1 and L1.n_circ == 1
    assert [c[0, 0] for c in L1.C] == [1, 0]
    assert [b[0, 0] for b in L1.B] == pytest.approx([0, SQ])
    assert [a[0, 0] for a in L1.A] == pytest.approx([0.5, 0.5])
    assert L1.reassemble().coisometry_defect() <= 1e-15
    assert L1.cross_defect() <= 1e-15


def test_lifting_requires_block_triangular_form():
    with pytest.raises(NotALifting):
        mdl.lifting_blocks([np.array([[1, 0.1], [0, 1]])], 1)


def test_trivial_lifting_has_empty_circ_blocks(T0):
    L = mdl.lifting_blocks(list(mdl.extract_E(T0)), 1)
    assert L.n_circ == 0 and L.A[0].shape == (0, 0)


def test_model_json_roundtrip_bit_exact(any_model):
    text = json.dumps(any_model.to_json(), sort_keys=True)
    back = mdl.InteractionModel.from_json(json.loads(text))
    assert json.dumps(back.to_json(), sort_keys=True) == text
    assert np.array_equal(back.U, any_model.U)


def test_model_dump_load(tmp_path, M1):
    p = tmp_path / "m.json"
    mdl.dump_model(M1, p)
    assert np.array_equal(mdl.load_model(p).U_tilde, M1.U_tilde)


def test_model_json_rejects_truncating_ints(M1):
    obj = M1.to_json()
    obj["n_tilde"] = 2.001
    with pytest.raises(ParseError):
        mdl.InteractionModel.from_json(obj)
    del obj["U"]
    with pytest.raises(ParseError):
        mdl.InteractionModel.from_json(obj)


def test_lifting_json_roundtrip(L1):
    obj = mdl.lifting_to_json(L1)
    back = mdl.lifting_from_json(json.loads(json.dumps(obj)))
    assert mdl.lifting_to_json(back) == obj
