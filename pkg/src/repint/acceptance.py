"""The acceptance suite: nine numbered criteria evaluated on the committed
fixtures T0, M1, M2 (interaction models) and L1 (raw lifting blocks).

Every criterion reports a defect number next to its threshold; the pass flag
is derived from the two. ``run`` evaluates all criteria, ``load_fixtures``
separates I/O and validation failures from numerical ones.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import charfn as cf
from . import matkit
from . import model as mdl
from . import scatter as sc
from . import transfer as tr
from .errors import InvalidModel, NotALifting, ParseError, RepintError

MODEL_NAMES = ("T0", "M1", "M2")
FIXTURE_NAMES = MODEL_NAMES + ("L1",)

# name -> threshold; overridable through --tol NAME=VALUE
TOLERANCES = {
    "model_laws": 1e-10,
    "impulse": 1e-12,
    "contraction": 1e-8,
    "energy": 1e-9,
    "hatW_isometry": 1e-12,
    "intertwine": 1e-10,
    "vacuum_fixing": 1e-12,
    "wandering": 1e-9,
    "scattering": 1e-9,
    "scattering_trivial": 1e-12,
    "gram_slack": 1e-9,
    "bd_ratio": 10.0,
    "characterization_trivial": 1e-12,
    "coincidence": 1e-8,
    "coincidence_trivial": 1e-12,
    "hand_values": 1e-12,
}


def default_fixture_dir() -> Path:
    return Path(str(resources.files("repint") / "data"))


@dataclass
class Fixtures:
    models: dict
    lifting: mdl.LiftingBlocks
    hand_values: dict
    raw: dict = field(repr=False)
    hashes: dict = field(default_factory=dict)


class FixtureFailure(RepintError):
    """Raised by ``load_fixtures``; ``stage`` is ``"IoError"``, ``"parse"`` or ``"validate"``."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_fixture_json(directory) -> tuple:
    raw, hashes = {}, {}
    for name in FIXTURE_NAMES:
        path = Path(directory) / f"{name}.json"
        try:
            text = path.read_bytes()
        except OSError as exc:
            raise FixtureFailure("IoError", f"cannot read {path}: {exc.strerror or exc}") from None
        hashes[name] = hashlib.sha256(text).hexdigest()
        try:
            raw[name] = json.loads(text)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise FixtureFailure("parse", f"{path}: {exc}") from None
    return raw, hashes


def fixtures_from_json(raw: dict, hashes: dict | None = None) -> Fixtures:
    models = {}
    for name in MODEL_NAMES:
        try:
            m = mdl.InteractionModel.from_json(raw[name])
        except (ParseError, InvalidModel, ValueError) as exc:
            raise FixtureFailure("parse", f"{name}: {exc}") from None
        rep = mdl.validate(m)
        if not rep.passed:
            raise FixtureFailure("validate", f"{name}: {json.dumps(rep.to_json(), sort_keys=True)}")
        models[name] = m
    try:
        L = mdl.lifting_from_json(raw["L1"])
    except ParseError as exc:
        raise FixtureFailure("parse", f"L1: {exc}") from None
    except NotALifting as exc:
        raise FixtureFailure("validate", f"L1: {exc}") from None
    co = L.reassemble().coisometry_defect()
    if co > TOLERANCES["model_laws"]:
        raise FixtureFailure("validate", f"L1: sum E_j E_j* deviates from I by {co:.3e}")
    try:
        hv = raw["L1"]["hand_values"]
        hand = {
            "gamma": complex(*hv["gamma"]),
            "D_starA": complex(*hv["D_starA"]),
            "e_empty": [
                (mdl.json_int(e["i"]), np.array([complex(*z) for z in e["h"]]), complex(*e["value"]))
                for e in hv["e_empty"]
            ],
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise FixtureFailure("parse", f"L1 hand_values: {exc}") from None
    return Fixtures(models, L, hand, raw, dict(hashes or {}))


def load_fixtures(directory=None) -> Fixtures:
    directory = default_fixture_dir() if directory is None else Path(directory)
    raw, hashes = read_fixture_json(directory)
    return fixtures_from_json(raw, hashes)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    value: float
    threshold: float
    detail: dict
    scaled: bool = False  # value is the worst defect/threshold ratio over sub-checks

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.threshold)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        if self.scaled:
            return f"[{mark}] {self.number}. {self.name}: worst defect/threshold = {self.value:.3e}"
        return f"[{mark}] {self.number}. {self.name}: {self.value:.3e} <= {self.threshold:.1e}"

    def to_json(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "passed": self.passed,
            "scaled": self.scaled,
            "detail": self.detail,
        }


def _ratio_excess(x: float, y: float) -> float:
    """``max(x/y, y/x)``, with 1 for two zeros and inf for exactly one zero."""
    if x == 0.0 and y == 0.0:
        return 1.0
    if x == 0.0 or y == 0.0:
        return float("inf")
    return max(x / y, y / x)


def _random_input(rng, table, dim):
    u = rng.standard_normal((len(table), dim)) + 1j * rng.standard_normal((len(table), dim))
    # finitely supported: keep a random subset of words
    keep = rng.random(len(table)) < 0.6
    return u * keep[:, None]


def criterion_model_laws(fx: Fixtures, tol: dict) -> CriterionResult:
    detail = {name: mdl.model_laws(m) for name, m in fx.models.items()}
    value = max(max(v.values()) for v in detail.values())
    return CriterionResult(1, "model laws", value, tol["model_laws"], detail)


def criterion_impulse(fx: Fixtures, tol: dict, N: int = 4) -> CriterionResult:
    detail = {}
    for name, m in fx.models.items():
        c = tr.build_colligation(m)
        theta = tr.transfer_coefficients(c, N)
        worst = 0.0
        for k in range(c.dim_U):
            e = np.zeros(c.dim_U, dtype=np.complex128)
            e[k] = 1.0
            traj = tr.run_system(c, {(): e}, N)
            worst = max(worst, float(np.max(np.abs(traj.y - theta.coefficients[:, :, k]))))
        detail[name] = worst
    return CriterionResult(2, "impulse response = transfer coefficients", max(detail.values()), tol["impulse"], detail)


def criterion_contraction(fx: Fixtures, tol: dict, N: int = 4, samples: int = 10) -> CriterionResult:
    detail = {}
    value = 0.0
    for idx, (name, m) in enumerate(fx.models.items()):
        c = tr.build_colligation(m)
        cd = tr.contraction_defect(tr.transfer_coefficients(c, N), N)
        rng = np.random.default_rng(1000 + idx)
        table = tr.enumerate_words(c.d, N)
        gaps, residuals = [], []
        for _ in range(samples):
            eb = tr.energy_balance(c, _random_input(rng, table, c.dim_U), N)
            gaps.append(eb.gap)
            residuals.append(eb.residual)
        detail[name] = {
            "contraction_defect": cd,
            "min_energy_gap": min(gaps),
            "max_balance_residual": max(residuals),
        }
        # both sub-checks expressed as "fraction of their threshold"
        value = max(value, cd / tol["contraction"], max(0.0, -min(gaps)) / tol["energy"])
    return CriterionResult(3, "contractive transfer operator and energy balance", value, 1.0, detail, scaled=True)


def criterion_dilation(fx: Fixtures, tol: dict, levels=(1, 2, 3)) -> CriterionResult:
    detail, value = {}, 0.0
    for name, m in fx.models.items():
        iso = max(matkit.isometry_defect(sc.hatW_star(m, l)) for l in levels)
        inter = max(sc.intertwine_defect(m, l) for l in levels)
        vac = max(sc.vacuum_fixing_defect(m, l) for l in (0,) + tuple(levels))
        detail[name] = {"hatW_isometry": iso, "intertwine": inter, "vacuum_fixing": vac}
        value = max(
            value,
            iso / tol["hatW_isometry"],
            inter / tol["intertwine"],
            vac / tol["vacuum_fixing"],
        )
    return CriterionResult(4, "isometric dilation and intertwining", value, 1.0, detail, scaled=True)


def criterion_wandering(fx: Fixtures, tol: dict, level: int = 3) -> CriterionResult:
    detail, value = {}, 0.0
    for name, m in fx.models.items():
        rep = sc.wandering_decomposition(m, level)
        dims = sc.dimension_identity(m.n, m.d, level)
        detail[name] = {"max_defect": rep.max_defect, "dimension_identity": dims}
        value = max(value, rep.max_defect if dims["holds"] else float("inf"))
    return CriterionResult(5, "wandering-subspace decomposition", value, tol["wandering"], detail)


def criterion_scattering(fx: Fixtures, tol: dict, level: int = 4) -> CriterionResult:
    detail, value = {}, 0.0
    for name, m in fx.models.items():
        d = sc.theorem51_defect(m, level)
        detail[name] = d
        limit = tol["scattering_trivial"] if name == "T0" else tol["scattering"]
        value = max(value, d / limit)
    return CriterionResult(6, "scattering operator = multi-analytic transfer operator", value, 1.0, detail, scaled=True)


def criterion_observability(fx: Fixtures, tol: dict, max_N: int = 6, level: int = 4) -> CriterionResult:
    detail, value = {}, 0.0
    slack = tol["gram_slack"]
    for name, m in fx.models.items():
        c = tr.build_colligation(m)
        obs = tr.observability(c, max_N)
        psd = max(0.0, -(obs.min_eig if obs.min_eig is not None else 0.0))
        # per_degree_min_eig is cumulative, so monotonicity is read off the increments
        detail[name] = {
            "psd_violation": psd,
            "monotonicity_defect": obs.monotonicity_defect,
            "bound_defect": obs.bound_defect,
            "eigenvalues": obs.eigenvalues,
        }
        value = max(value, psd / slack, obs.monotonicity_defect / slack, obs.bound_defect / slack)
    rep = tr.theorem54_report(fx.models["M1"], max_N, level).to_json()
    ratio = _ratio_excess(rep["b_gram_isometry"], rep["d_w_unitarity"])
    detail["M1_characterization"] = rep
    detail["M1_bd_ratio"] = ratio
    value = max(value, ratio / tol["bd_ratio"])
    t0 = tr.theorem54_report(fx.models["T0"], max_N, level).to_json()
    t0_max = max(t0[k] for k in ("a_observability_gap", "b_gram_isometry", "d_w_unitarity", "e_inner_diag"))
    detail["T0_characterization"] = t0
    value = max(value, t0_max / tol["characterization_trivial"])
    return CriterionResult(7, "observability laws and characterization defects", value, 1.0, detail, scaled=True)


def criterion_coincidence(fx: Fixtures, tol: dict) -> CriterionResult:
    degrees = {"T0": 4, "M1": 4, "M2": 3}
    detail, value = {}, 0.0
    for name, N in degrees.items():
        d = cf.coincidence_defect(fx.models[name], N)
        detail[name] = {"degree": N, "coincidence_defect": d}
        limit = tol["coincidence_trivial"] if name == "T0" else tol["coincidence"]
        value = max(value, d / limit)
    L, hv = fx.lifting, fx.hand_values
    dd = cf.defects(L)
    hand = [abs(dd.gamma[0, 0] - hv["gamma"]), abs(dd.D_starA[0, 0] - hv["D_starA"])]
    for i, h, expected in hv["e_empty"]:
        got = cf.charfn_apply(L, dd, i, h, 1)[0]
        hand.append(abs(got[0] - expected))
    detail["L1_hand_value_error"] = float(max(hand))
    value = max(value, detail["L1_hand_value_error"] / tol["hand_values"])
    return CriterionResult(8, "characteristic function coincides with transfer function", value, 1.0, detail, scaled=True)


def _roundtrip_error(obj_json: dict, parse, dump) -> float:
    text = json.dumps(obj_json, sort_keys=True)
    again = json.dumps(dump(parse(json.loads(text))), sort_keys=True)
    return 0.0 if again == text else 1.0


def perturbation_cases(raw: dict, size: float = 1e-3):
    """Yield ``(label, raw_copy)`` pairs, each with one numeric entry of one
    fixture shifted by ``size``."""
    targets = [(name, key) for name in MODEL_NAMES for key in ("U", "U_tilde", "epsilon")]
    targets += [("L1", "E")]
    for name, key in targets:
        bad = copy.deepcopy(raw)
        entry = bad[name][key]
        if key == "E":
            entry = entry[0]
        entry["data"][0][0] += size
        yield f"{name}.{key}[0]", bad
    for name in MODEL_NAMES:
        bad = copy.deepcopy(raw)
        bad[name]["omega_K"][0][0] += size
        yield f"{name}.omega_K[0]", bad


def criterion_plumbing(fx: Fixtures, tol: dict) -> CriterionResult:
    errors = {}
    for name in MODEL_NAMES:
        errors[name] = _roundtrip_error(fx.raw[name], mdl.InteractionModel.from_json, lambda m: m.to_json())
    errors["L1"] = _roundtrip_error(
        {k: fx.raw["L1"][k] for k in ("n_tilde", "n_circ", "E")}, mdl.lifting_from_json, mdl.lifting_to_json
    )
    series = tr.transfer_coefficients(fx.models["M1"], 3)
    errors["NcSeries"] = _roundtrip_error(series.to_json(), tr.NcSeries.from_json, lambda s: s.to_json())
    undetected = []
    for label, bad in perturbation_cases(fx.raw):
        try:
            fixtures_from_json(bad)
        except FixtureFailure:
            continue
        undetected.append(label)
    value = max(errors.values()) + len(undetected)
    return CriterionResult(9, "JSON round-trips and tamper detection", value, 0.0,
                           {"roundtrip": errors, "undetected_perturbations": undetected})


CRITERIA = (
    criterion_model_laws,
    criterion_impulse,
    criterion_contraction,
    criterion_dilation,
    criterion_wandering,
    criterion_scattering,
    criterion_observability,
    criterion_coincidence,
    criterion_plumbing,
)


def run(fx: Fixtures, tol: dict | None = None) -> list:
    merged = dict(TOLERANCES)
    merged.update(tol or {})
    return [crit(fx, merged) for crit in CRITERIA]
