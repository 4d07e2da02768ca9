"""Command-line frontend.

Every report is a JSON object carrying the command, the echoed configuration,
the tolerances in force, the SHA-256 of the input file and the per-check
defect numbers. Output is sorted and indented so that it is byte-stable for a
fixed input and configuration.

Exit codes: 0 ok, 2 validation failure, 3 I/O or parse failure, 4 bad arguments.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import acceptance
from . import charfn as cf
from . import model as mdl
from . import scatter as sc
from . import transfer as tr
from .errors import (
    BadDims,
    GammaNotIsometric,
    InvalidModel,
    IoError,
    NotALifting,
    ParseError,
    PhiNotUnitary,
)
from .matkit import RANK_TOL

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_ARGS = 0, 2, 3, 4

TOLERANCES = dict(acceptance.TOLERANCES, validate=mdl.MODEL_TOL, rank=RANK_TOL)


@dataclass(frozen=True)
class RunConfig:
    command: str
    model_path: str | None = None
    degree: int = 4
    level: int = 3
    seed: int | None = None
    output_path: str | None = None
    tol_overrides: dict = field(default_factory=dict)

    def tolerances(self) -> dict:
        out = dict(TOLERANCES)
        out.update(self.tol_overrides)
        return out


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        # JSON has no inf/nan; keep them readable and parseable
        return x if math.isfinite(x) else repr(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        write_atomic(cfg.output_path, text)
    else:
        sys.stdout.write(text)


def _read_json(path) -> tuple:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(data), hashlib.sha256(data).hexdigest()
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def _load_model(cfg: RunConfig):
    if not cfg.model_path:
        raise UsageError(f"{cfg.command} needs --model")
    obj, digest = _read_json(cfg.model_path)
    return mdl.InteractionModel.from_json(obj), digest


def _envelope(cfg: RunConfig, digest: str | None, result) -> dict:
    config = asdict(cfg)
    config.pop("tol_overrides")
    return {
        "command": cfg.command,
        "config": config,
        "fixture_sha256": digest,
        "tolerances": cfg.tolerances(),
        "result": result,
    }


def _require_valid(m: mdl.InteractionModel, tol: dict) -> None:
    rep = mdl.validate(m, tol["validate"])
    if not rep.passed:
        raise InvalidModel(f"model fails validation: {dumps(rep.to_json()).strip()}")


def cmd_gen(cfg: RunConfig, dims, trivial: bool) -> int:
    if trivial:
        m = mdl.trivial_model(dims[2] if dims else 2)
    else:
        if dims is None:
            raise UsageError("gen needs --dims N_TILDE N_CIRC D (or --trivial)")
        m = mdl.random_model(*dims, seed=0 if cfg.seed is None else cfg.seed)
    _emit(cfg, dumps(m.to_json()))
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    m, digest = _load_model(cfg)
    tol = cfg.tolerances()
    rep = mdl.validate(m, tol["validate"])
    result = dict(rep.to_json(), laws=mdl.model_laws(m) if rep.passed else None)
    _emit(cfg, dumps(_envelope(cfg, digest, result)))
    return EXIT_OK if rep.passed else EXIT_INVALID


def cmd_transfer(cfg: RunConfig) -> int:
    m, digest = _load_model(cfg)
    _require_valid(m, cfg.tolerances())
    series = tr.transfer_coefficients(m, cfg.degree)
    result = dict(series.to_json(), contraction_defect=tr.contraction_defect(series))
    _emit(cfg, dumps(_envelope(cfg, digest, result)))
    return EXIT_OK


def cmd_charfn(cfg: RunConfig) -> int:
    if not cfg.model_path:
        raise UsageError("charfn needs --model")
    obj, digest = _read_json(cfg.model_path)
    tol = cfg.tolerances()
    if isinstance(obj, dict) and "U" not in obj and "E" in obj:
        L = mdl.lifting_from_json(obj)
    else:
        m = mdl.InteractionModel.from_json(obj)
        _require_valid(m, tol)
        L = mdl.lifting_blocks(list(mdl.extract_E(m)), m.n_tilde)
    dd = cf.defects(L, tol["rank"])
    series = cf.characteristic_fn(L, dd, cfg.degree)
    result = dict(series.to_json(), invariants=cf.defect_invariants(L, dd))
    _emit(cfg, dumps(_envelope(cfg, digest, result)))
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    m, digest = _load_model(cfg)
    _require_valid(m, cfg.tolerances())
    result = cf.coincidence(m, cfg.degree).to_json()
    _emit(cfg, dumps(_envelope(cfg, digest, result)))
    return EXIT_OK


def cmd_scatter(cfg: RunConfig) -> int:
    m, digest = _load_model(cfg)
    _require_valid(m, cfg.tolerances())
    _emit(cfg, dumps(_envelope(cfg, digest, sc.scatter_report(m, cfg.level))))
    return EXIT_OK


def cmd_observability(cfg: RunConfig) -> int:
    m, digest = _load_model(cfg)
    _require_valid(m, cfg.tolerances())
    result = tr.observability(m, cfg.degree).to_json()
    if cfg.degree >= 2 and cfg.level >= 2:
        result["characterization"] = tr.theorem54_report(m, cfg.degree, cfg.level).to_json()
    _emit(cfg, dumps(_envelope(cfg, digest, result)))
    return EXIT_OK


def cmd_selftest(cfg: RunConfig, fixture_dir) -> int:
    tol = cfg.tolerances()
    try:
        fx = acceptance.load_fixtures(fixture_dir)
    except acceptance.FixtureFailure as exc:
        print(f"selftest FAILED at {exc}", file=sys.stderr)
        return EXIT_IO if exc.stage in ("IoError", "parse") else EXIT_INVALID
    results = acceptance.run(fx, tol)
    for r in results:
        print(r.line())
    if cfg.output_path:
        report = _envelope(cfg, None, [r.to_json() for r in results])
        report["fixture_sha256"] = fx.hashes
        write_atomic(cfg.output_path, dumps(report))
    failed = [r for r in results if not r.passed]
    if failed:
        first = failed[0]
        print(f"selftest FAILED at criterion {first.number} ({first.name})", file=sys.stderr)
        return EXIT_INVALID
    print(f"selftest passed: {len(results)} criteria")
    return EXIT_OK


def _parse_tol(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or name not in TOLERANCES:
            raise UsageError(f"bad --tol {item!r}; known names: {', '.join(sorted(TOLERANCES))}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"bad --tol value in {item!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", metavar="PATH", help="model (or lifting) JSON file")
    common.add_argument("--degree", type=int, default=4, metavar="N", help="word-length truncation (default 4)")
    common.add_argument("--level", type=int, default=3, metavar="L", help="level-space depth (default 3)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a tolerance (repeatable)")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--json", action="store_true", default=True, help="JSON output (the only format)")

    parser = _Parser(prog="repint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    gen = sub.add_parser("gen", parents=[common], help="generate a random compatible model")
    gen.add_argument("--dims", type=int, nargs=3, metavar=("N_TILDE", "N_CIRC", "D"))
    gen.add_argument("--trivial", action="store_true", help="write the trivial model instead")
    sub.add_parser("validate", parents=[common], help="check model invariants")
    sub.add_parser("transfer", parents=[common], help="transfer-function coefficients")
    sub.add_parser("charfn", parents=[common], help="characteristic function of the lifting")
    sub.add_parser("compare", parents=[common], help="transfer vs characteristic function")
    sub.add_parser("scatter", parents=[common], help="dilation and decomposition defects")
    sub.add_parser("observability", parents=[common], help="observability Gram spectrum")
    st = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    st.add_argument("--fixtures", metavar="DIR", help="fixture directory (default: bundled)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.degree < 0 or args.level < 0:
            raise UsageError("--degree and --level must be non-negative")
        cfg = RunConfig(
            command=args.command,
            model_path=args.model,
            degree=args.degree,
            level=args.level,
            seed=args.seed,
            output_path=args.out,
            tol_overrides=_parse_tol(args.tol),
        )
        if args.command == "gen":
            return cmd_gen(cfg, args.dims, args.trivial)
        if args.command == "selftest":
            return cmd_selftest(cfg, args.fixtures)
        handler = {
            "validate": cmd_validate,
            "transfer": cmd_transfer,
            "charfn": cmd_charfn,
            "compare": cmd_compare,
            "scatter": cmd_scatter,
            "observability": cmd_observability,
        }[args.command]
        return handler(cfg)
    except (UsageError, BadDims, ValueError) as exc:
        if isinstance(exc, (InvalidModel, NotALifting)):
            print(f"repint: invalid model: {exc}", file=sys.stderr)
            return EXIT_INVALID
        if isinstance(exc, ParseError):
            print(f"repint: parse error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"repint: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except IoError as exc:
        print(f"repint: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GammaNotIsometric, PhiNotUnitary) as exc:
        print(f"repint: certification failed: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
