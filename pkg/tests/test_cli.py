import copy
import json
import shutil

import pytest
from hypothesis import given
from hypothesis import strategies as st

from repint import acceptance, cli
from repint.acceptance import FixtureFailure, default_fixture_dir, fixtures_from_json

DATA = default_fixture_dir()


def run(capsys, *argv):
    try:
        code = cli.main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def model(name):
    return str(DATA / f"{name}.json")


def test_gen_reproduces_committed_fixture(capsys, tmp_path):
    out = tmp_path / "m1.json"
    assert cli.main(["gen", "--dims", "2", "1", "2", "--seed", "42", "--out", str(out)]) == 0
    assert out.read_bytes() == (DATA / "M1.json").read_bytes()
    assert cli.main(["gen", "--trivial", "--out", str(out)]) == 0
    assert out.read_bytes() == (DATA / "T0.json").read_bytes()


def test_gen_degenerate_dims_validate(capsys, tmp_path):
    out = tmp_path / "t.json"
    assert cli.main(["gen", "--dims", "1", "0", "2", "--seed", "5", "--out", str(out)]) == 0
    code, _, _ = run(capsys, "validate", "--model", str(out))
    assert code == 0


def test_gen_rejects_single_letter_alphabet(capsys):
    code, _, err = run(capsys, "gen", "--dims", "1", "0", "1")
    assert code == 4 and "d >= 2" in err


def test_bad_arguments_exit_4(capsys):
    assert run(capsys, "transfer", "--degree", "x")[0] == 4
    assert run(capsys, "nosuchcommand")[0] == 4
    assert run(capsys, "transfer", "--model", model("M1"), "--tol", "nope=1")[0] == 4
    assert run(capsys, "transfer", "--model", model("M1"), "--tol", "impulse=abc")[0] == 4
    assert run(capsys, "transfer")[0] == 4


def test_missing_model_exit_3(capsys, tmp_path):
    assert run(capsys, "scatter", "--model", str(tmp_path / "none.json"))[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "scatter", "--model", str(bad))[0] == 3


def test_validate_report(capsys):
    code, out, _ = run(capsys, "validate", "--model", model("M1"))
    rep = json.loads(out)
    assert code == 0
    assert rep["result"]["passed"] is True
    assert len(rep["fixture_sha256"]) == 64
    assert rep["config"]["degree"] == 4 and rep["config"]["level"] == 3
    assert rep["tolerances"]["validate"] == 1e-10


def test_validate_tampered_exit_2(capsys, tmp_path):
    obj = json.loads((DATA / "T0.json").read_text())
    obj["U"]["data"][0][0] += 1e-3
    p = tmp_path / "t.json"
    p.write_text(json.dumps(obj))
    code, out, _ = run(capsys, "validate", "--model", str(p))
    assert code == 2 and json.loads(out)["result"]["passed"] is False
    assert run(capsys, "transfer", "--model", str(p))[0] == 2


def test_transfer_word_count(capsys):
    code, out, _ = run(capsys, "transfer", "--model", model("M1"))
    res = json.loads(out)["result"]
    assert code == 0 and len(res["coefficients"]) == 31
    assert res["contraction_defect"] <= 1e-8


def test_compare_trivial(capsys):
    code, out, _ = run(capsys, "compare", "--model", model("T0"))
    assert code == 0 and json.loads(out)["result"]["coincidence_defect"] <= 1e-12


def test_scatter_report(capsys):
    code, out, _ = run(capsys, "scatter", "--model", model("M1"), "--level", "3")
    res = json.loads(out)["result"]
    assert code == 0
    assert res["decomposition"]["max_defect"] <= 1e-9
    assert res["intertwine_defect"] <= 1e-9 and res["scattering_defect"] <= 1e-9


def test_observability_report(capsys):
    code, out, _ = run(capsys, "observability", "--model", model("M1"), "--degree", "6", "--level", "4")
    res = json.loads(out)["result"]
    assert code == 0
    assert res["eigenvalues"] == pytest.approx([0.9349106086413412], abs=1e-12)
    assert set(res["characterization"]) >= {"a_observability_gap", "b_gram_isometry", "d_w_unitarity", "e_inner_diag"}


def test_charfn_on_lifting_and_model(capsys):
    code, out, _ = run(capsys, "charfn", "--model", model("L1"), "--degree", "2")
    res = json.loads(out)["result"]
    assert code == 0 and res["fock"] is True and len(res["coefficients"]) == 7
    code, out, _ = run(capsys, "charfn", "--model", model("M2"), "--degree", "1")
    assert code == 0 and json.loads(out)["result"]["invariants"]["gamma_isometry"] <= 1e-9


def test_reports_byte_stable(tmp_path):
    p = tmp_path / "a.json"
    runs = []
    for _ in range(2):
        assert cli.main(["compare", "--model", model("M1"), "--degree", "3", "--out", str(p)]) == 0
        runs.append(p.read_bytes())
    assert runs[0] == runs[1]
    assert not list(tmp_path.glob(".*.tmp"))


def test_tolerance_override_is_echoed(capsys):
    code, out, _ = run(capsys, "validate", "--model", model("T0"), "--tol", "validate=1e-6")
    assert json.loads(out)["tolerances"]["validate"] == 1e-6


def test_write_failure_exit_3(capsys, tmp_path):
    target = tmp_path / "missing" / "out.json"
    assert run(capsys, "validate", "--model", model("T0"), "--out", str(target))[0] == 3


def test_selftest_pristine(capsys, tmp_path):
    out = tmp_path / "st.json"
    code, stdout, _ = run(capsys, "selftest", "--out", str(out))
    assert code == 0
    assert stdout.count("[PASS]") == 9
    rep = json.loads(out.read_text())
    assert set(rep["fixture_sha256"]) == {"T0", "M1", "M2", "L1"}
    assert all(r["passed"] for r in rep["result"])


def _copy_fixtures(tmp_path):
    d = tmp_path / "fx"
    shutil.copytree(DATA, d)
    return d


def test_selftest_tampered_names_validate(capsys, tmp_path):
    d = _copy_fixtures(tmp_path)
    obj = json.loads((d / "M1.json").read_text())
    obj["U"]["data"][5][0] += 1e-3
    (d / "M1.json").write_text(json.dumps(obj))
    code, _, err = run(capsys, "selftest", "--fixtures", str(d))
    assert code != 0 and "validate" in err


def test_selftest_missing_fixture_names_ioerror(capsys, tmp_path):
    d = _copy_fixtures(tmp_path)
    (d / "M2.json").unlink()
    code, _, err = run(capsys, "selftest", "--fixtures", str(d))
    assert code != 0 and "IoError" in err


def test_selftest_tampered_hand_value(capsys, tmp_path):
    d = _copy_fixtures(tmp_path)
    obj = json.loads((d / "L1.json").read_text())
    obj["hand_values"]["e_empty"][1]["value"][0] += 1e-3
    (d / "L1.json").write_text(json.dumps(obj))
    code, out, err = run(capsys, "selftest", "--fixtures", str(d))
    assert code != 0 and "criterion 8" in err


RAW, _ = acceptance.read_fixture_json(DATA)


def _numeric_slots(obj, path=()):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        yield path
    elif isinstance(obj, dict):
        for k, v in obj.items():
            yield from _numeric_slots(v, path + (k,))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _numeric_slots(v, path + (i,))


SLOTS = [
    (name, path)
    for name in ("T0", "M1", "M2", "L1")
    for path in _numeric_slots(RAW[name])
    if not (name == "L1" and path and path[0] == "hand_values")
]


def _perturbed(name, path, delta):
    bad = copy.deepcopy(RAW)
    node = bad[name]
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = node[path[-1]] + delta
    return bad


@pytest.mark.parametrize("delta", [1e-3, -1e-3])
def test_every_single_entry_perturbation_detected(delta):
    missed = []
    for name, path in SLOTS:
        try:
            fixtures_from_json(_perturbed(name, path, delta))
        except FixtureFailure:
            continue
        missed.append((name, path))
    assert len(SLOTS) > 500
    assert missed == []


@given(st.sampled_from(SLOTS), st.floats(1e-3, 10.0), st.booleans())
def test_large_perturbations_detected(slot, size, negative):
    with pytest.raises(FixtureFailure):
        fixtures_from_json(_perturbed(*slot, -size if negative else size))
