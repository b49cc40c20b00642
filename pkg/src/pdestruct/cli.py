"""Command-line front end: ``pdestruct <command> [options]``.

Every command builds a :class:`RunConfig`, hands it to :func:`run` and gets
back an exit status plus a JSON-ready report. Exit status 0 means the
analysis ran and every verdict passed, 1 means a hypothesis gate tripped or a
verdict failed, 2 means the invocation or the input was unusable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .baire_lambda import lambda_field, usc_violations
from .decomposition import decompose_dn, decompose_wave, extract_profile, residual_first_order
from .errors import HypothesisViolation, NonDifferentiableError, PdeStructError, ValidationError
from .function_model import (
    GridSample,
    GridSpec,
    Profile1D,
    Rect,
    catalog_describe,
    from_grid,
    load_grid,
    parse_function_spec,
    profile_names,
)
from .regularity import DEFAULT_BOX, DEFAULT_RADII, DEFAULT_THRESHOLD, constancy_along_characteristics, discontinuity_field
from .vector_transport import gateaux_residual, probe_pairs, vector_catalog_get, vector_catalog_names, verify_translation

SCHEMA = "pde-struct/1"
COMMANDS = ("catalog", "verify", "decompose", "wave", "regularity", "lambda-map", "vector")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# verdict tolerance when --tol is not given
_DEFAULT_TOL = {
    "verify": 1e-6,
    "decompose": 1e-6,
    "wave": 1e-5,
    "lambda-map": 0.05,
    "vector": 1e-10,
}


@dataclasses.dataclass
class RunConfig:
    command: str
    fn: str | None = None
    grid: str | None = None
    rect: tuple | None = None
    nx: int = 101
    ny: int | None = None
    h: float = 1e-4
    eps: float = 1.0
    tol: float | None = None
    gate: float = 1e-3
    resolution: int = 64
    n: int = 2
    k: float = 1.0
    axis: str = "x"
    threshold: float = DEFAULT_THRESHOLD
    box: int = DEFAULT_BOX
    radii: tuple = DEFAULT_RADII
    samples: int = 801
    map: str | None = None
    d: int | None = None
    probes: int = 5
    out: str | None = None
    out_dir: str | None = None
    threads: int | None = None

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValidationError(f"unknown config key(s): {', '.join(unknown)}")
        if "command" not in data:
            raise ValidationError("config needs a 'command'")
        cfg = cls(**dict(data))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.rect is not None:
            r = tuple(float(v) for v in self.rect)
            if len(r) != 4:
                raise ValidationError("rect needs four numbers x0,x1,y0,y1")
            Rect(*r)
            self.rect = r
        if self.radii is not None:
            self.radii = tuple(float(v) for v in self.radii)
        if self.ny is None:
            self.ny = self.nx
        for name in ("h", "eps", "gate", "threshold"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be a positive number, got {v!r}")
        if self.tol is not None and not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValidationError(f"tol must be a positive number, got {self.tol!r}")
        for name in ("nx", "ny", "resolution", "n", "box", "samples", "probes"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
        if self.threads is not None and (int(self.threads) != self.threads or self.threads < 1):
            raise ValidationError(f"threads must be a positive integer, got {self.threads!r}")
        if self.axis not in ("x", "y"):
            raise ValidationError(f"axis must be x or y, got {self.axis!r}")
        if self.command in ("catalog", "vector"):
            if self.fn is not None or self.grid is not None:
                raise ValidationError(f"{self.command} takes no --fn/--grid")
        elif (self.fn is None) == (self.grid is None):
            raise ValidationError(f"{self.command} needs exactly one of --fn or --grid")
        if self.command == "vector" and self.map is None:
            raise ValidationError("vector needs --map")

    def tolerance(self) -> float:
        return self.tol if self.tol is not None else _DEFAULT_TOL.get(self.command, 1e-6)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(report: Mapping) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _profile_csv(p: Profile1D) -> str:
    lines = ["t,value"] + [f"{t!r},{v!r}" for t, v in zip(p.t_values.tolist(), p.values.tolist())]
    return "\n".join(lines) + "\n"


def _field_csv(spec: GridSpec, values) -> str:
    return GridSample.from_spec(spec, np.nan_to_num(np.asarray(values, dtype=float), posinf=np.finfo(float).max)).to_csv()


class _Artifacts:
    """Collects profiles and fields; inline in the report or as CSV side files."""

    def __init__(self, out_dir: str | None):
        self.out_dir = Path(out_dir) if out_dir else None
        self.items: dict[str, Any] = {}
        self.files: dict[str, str] = {}

    def profile(self, name: str, p: Profile1D):
        if self.out_dir is None:
            self.items[name] = p.to_dict()
        else:
            self.files[f"{name}.csv"] = _profile_csv(p)
            self.items[name] = {"file": f"{name}.csv", "points": len(p)}

    def field(self, name: str, spec: GridSpec, values):
        if self.out_dir is None:
            self.items[name] = {**spec.geometry(), "values": np.asarray(values, dtype=float).ravel()}
        else:
            self.files[f"{name}.csv"] = _field_csv(spec, values)
            self.items[name] = {"file": f"{name}.csv", **spec.geometry()}

    def extra(self, name: str, value):
        self.items[name] = value

    def flush(self):
        if self.out_dir is None:
            return
        for fname, text in self.files.items():
            _atomic_write(self.out_dir / fname, text)


def _source(cfg: RunConfig):
    """(function, sample grid or None, analysis grid)."""
    if cfg.grid is not None:
        sample = load_grid(cfg.grid)
        f = from_grid(sample)
        spec = GridSpec(*cfg.rect, cfg.nx, cfg.ny) if cfg.rect else sample.spec
        return f, sample, spec
    rect = cfg.rect
    f = parse_function_spec(cfg.fn, Rect(*rect) if rect and cfg.command != "lambda-map" else None)
    if rect is None:
        d = f.domain
        rect = (d.x0, d.x1, d.y0, d.y1)
        if cfg.command == "lambda-map":
            # sections need room on both sides of every node
            rect = tuple(0.5 * v for v in rect)
    return f, None, GridSpec(*rect, cfg.nx, cfg.ny)


def _interior(spec: GridSpec, axis: str) -> GridSpec:
    if axis == "x":
        return GridSpec(spec.x0 + spec.dx, spec.x1 - spec.dx, spec.y0, spec.y1, spec.nx - 2, spec.ny)
    return GridSpec(spec.x0, spec.x1, spec.y0 + spec.dy, spec.y1 - spec.dy, spec.nx, spec.ny - 2)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_catalog(cfg, art):
    metrics = {
        "functions": catalog_describe(),
        "profiles": profile_names(),
        "vector_maps": vector_catalog_names(),
    }
    return metrics, {"listed": True}


def _cmd_verify(cfg, art):
    f, sample, spec = _source(cfg)
    tol = cfg.tolerance()
    exact = sample is None
    res = residual_first_order(f, cfg.k, spec, cfg.h, use_exact=exact)
    fit = extract_profile(f, cfg.k, spec, cfg.samples)
    char = constancy_along_characteristics(f, cfg.k, spec, tol)
    art.profile("profile", fit.profile)
    art.extra("characteristics", {"offsets": char.offsets, "deviations": char.deviations})
    metrics = {
        "residual": res,
        "reconstruction_error": fit.reconstruction_error,
        "characteristic_max_deviation": char.max_deviation,
        "tolerance": tol,
    }
    verdicts = {
        "residual_within_tol": res <= tol,
        "reconstruction_within_tol": fit.reconstruction_error <= tol,
        "constant_on_characteristics": char.passed,
    }
    return metrics, verdicts


def _cmd_decompose(cfg, art):
    f, sample, spec = _source(cfg)
    tol = cfg.tolerance()
    out = decompose_dn(f, cfg.n, spec, h=cfg.h, gate=cfg.gate, n_samples=cfg.samples, use_exact=sample is None)
    for i, p in enumerate(out.profiles, start=1):
        art.profile(f"phi_{i}", p)
    metrics = {
        "order": out.order,
        "residual": out.residual,
        "reconstruction_error": out.reconstruction_error,
        "tolerance": tol,
        "method": out.method_metadata,
    }
    return metrics, {"reconstruction_within_tol": out.reconstruction_error <= tol}


def _cmd_wave(cfg, art):
    f, sample, spec = _source(cfg)
    tol = cfg.tolerance()
    out = decompose_wave(f, spec, h=cfg.h, gate=cfg.gate, n_samples=cfg.samples, use_exact=sample is None)
    art.profile("phi", out.phi)
    art.profile("psi", out.psi)
    art.profile("psi_tilde", out.psi_tilde)
    metrics = {
        "residuals": out.residuals,
        "reconstruction_error": out.reconstruction_error,
        "tolerance": tol,
        "method": out.method_metadata,
    }
    return metrics, {"reconstruction_within_tol": out.reconstruction_error <= tol}


def _cmd_regularity(cfg, art):
    f, _, spec = _source(cfg)
    rep = discontinuity_field(f, spec, cfg.radii, cfg.threshold, box=cfg.box, threads=cfg.threads)
    d = rep.to_dict()
    art.field("oscillation", spec, rep.oscillation_field)
    art.field("lipschitz", spec, rep.lipschitz_constants)
    art.extra("flagged_points", d["flagged_points"])
    art.extra("witnesses", d["witnesses"])
    osc = rep.oscillation_field
    metrics = {
        "flagged_count": len(rep.flagged_points),
        "max_oscillation": float(np.max(osc)),
        "threshold": rep.threshold,
        "radii": list(rep.radii),
        "box": rep.box,
        "sub_box": d["sub_box"],
        "lipschitz_divergent_count": int(np.count_nonzero(rep.lipschitz_divergent)),
    }
    return metrics, {"nowhere_dense": rep.nowhere_dense_verdict}


def _cmd_lambda(cfg, art):
    f, sample, spec = _source(cfg)
    if sample is not None and cfg.rect is None:
        spec = _interior(spec, cfg.axis)
    tol = cfg.tolerance()
    field = lambda_field(f, cfg.axis, cfg.eps, spec, cfg.resolution, threads=cfg.threads)
    bad = usc_violations(field, tol)
    art.field("lambda", spec, field.values)
    art.extra("usc_violations", [list(p) for p in bad])
    v = field.values
    metrics = {
        "epsilon": field.epsilon,
        "axis": field.axis,
        "resolution": field.resolution,
        "min": float(v.min()),
        "max": float(v.max()),
        "zero_count": int(np.count_nonzero(v == 0)),
        "usc_violation_count": len(bad),
        "tolerance": tol,
    }
    return metrics, {"upper_semicontinuous": not bad}


def _cmd_vector(cfg, art):
    F = vector_catalog_get(cfg.map, cfg.d)
    tol = cfg.tolerance()
    pairs = probe_pairs(F, cfg.probes)
    trans = verify_translation(F, pairs, tol)
    worst = 0.0
    rows = []
    for i, (x, y) in enumerate(pairs):
        g = gateaux_residual(F, x, y, step=cfg.h, probe=i)
        worst = max(worst, g.max_residual)
        rows.extend(g.rows)
    art.extra("translation_defects", trans.defects)
    art.extra("phi_table", {"points": trans.phi_points, "values": trans.phi_values})
    art.extra("gateaux_rows", rows)
    metrics = {
        "map": F.name,
        "d": F.d,
        "m": F.m,
        "probe_pairs": len(pairs),
        "translation_max_defect": trans.max_defect,
        "gateaux_max_residual": worst,
        "tolerance": tol,
    }
    verdicts = {"translation": trans.passed, "gateaux_residual_within_tol": worst <= tol}
    return metrics, verdicts


_DISPATCH = {
    "catalog": _cmd_catalog,
    "verify": _cmd_verify,
    "decompose": _cmd_decompose,
    "wave": _cmd_wave,
    "regularity": _cmd_regularity,
    "lambda-map": _cmd_lambda,
    "vector": _cmd_vector,
}


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute ``config``; returns ``(exit_status, report)``.

    Nothing is written here; see :func:`emit`. A report is produced for exit
    statuses 0 and 1. For status 2 the report only carries the diagnostic.
    """
    base = {"schema": SCHEMA, "version": __version__}
    try:
        config.validate()
    except PdeStructError as exc:
        return EXIT_USAGE, {**base, "command": getattr(config, "command", None), "error": str(exc)}
    echo = dataclasses.asdict(config)
    art = _Artifacts(config.out_dir)
    report = {**base, "command": config.command, "config": echo}
    try:
        metrics, verdicts = _DISPATCH[config.command](config, art)
    except (HypothesisViolation, NonDifferentiableError) as exc:
        report.update(
            metrics={},
            verdicts={"hypothesis": False},
            error={"kind": type(exc).__name__, "message": str(exc)},
            artifacts={},
        )
        return EXIT_FAIL, report
    except (PdeStructError, ValueError, KeyError) as exc:
        return EXIT_USAGE, {**base, "command": config.command, "config": echo, "error": str(exc)}
    report.update(metrics=metrics, verdicts=verdicts, artifacts=art.items)
    report["_files"] = art
    status = EXIT_OK if all(bool(v) for v in verdicts.values()) else EXIT_FAIL
    return status, report


def emit(status: int, report: dict, out: str | None, stream=None) -> None:
    """Write side files and the JSON report (to ``out`` or ``stream``)."""
    art = report.pop("_files", None)
    if status == EXIT_USAGE:
        return
    if art is not None:
        art.flush()
    text = dumps(report)
    if out:
        _atomic_write(Path(out), text)
    else:
        (stream or sys.stdout).write(text)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    src = common.add_argument_group("input")
    src.add_argument("--fn", help="catalog function, e.g. plane_wave:sin:k=1")
    src.add_argument("--grid", help="grid file (.json or .csv with x,y,value)")
    src.add_argument("--config", help="JSON file with RunConfig keys; explicit flags win")
    g = common.add_argument_group("geometry and knobs")
    g.add_argument("--rect", type=_floats, help="x0,x1,y0,y1")
    g.add_argument("--nx", type=int)
    g.add_argument("--ny", type=int)
    g.add_argument("--h", type=float, help="finite-difference step")
    g.add_argument("--eps", type=float, help="lambda window half-width")
    g.add_argument("--tol", type=float, help="verdict tolerance")
    g.add_argument("--gate", type=float, help="hypothesis residual gate")
    g.add_argument("--resolution", type=int)
    g.add_argument("--n", type=int, help="order of D_n")
    g.add_argument("--k", type=float, help="transport speed")
    g.add_argument("--axis", choices=("x", "y"))
    g.add_argument("--threshold", type=float, help="oscillation flag threshold")
    g.add_argument("--box", type=int, help="nowhere-dense box side")
    g.add_argument("--radii", type=_floats)
    g.add_argument("--samples", type=int, help="profile sample count")
    g.add_argument("--map", help="vector catalog map")
    g.add_argument("--d", type=int, help="vector dimension")
    g.add_argument("--probes", type=int, help="probe points per side for vector checks")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="report path (default: stdout)")
    o.add_argument("--out-dir", dest="out_dir", help="directory for CSV side files")
    o.add_argument("--threads", type=int, help="worker threads (default $PDESTRUCT_THREADS or 1)")

    parser = argparse.ArgumentParser(prog="pdestruct", description="Transport-equation structure checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    helps = {
        "catalog": "list catalog functions, profiles and vector maps",
        "verify": "check f_x + k f_y = 0 and extract the profile",
        "decompose": "order-n decomposition for D_n f = 0",
        "wave": "split a wave-equation solution into two travelling profiles",
        "regularity": "oscillation field and nowhere-dense verdict",
        "lambda-map": "lambda field and its upper semicontinuity",
        "vector": "translation structure of a vector-valued map",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    data: dict[str, Any] = {}
    cfg_path = ns.pop("config", None)
    if cfg_path:
        try:
            loaded = json.loads(Path(cfg_path).read_text())
        except OSError as exc:
            raise ValidationError(f"{cfg_path}: cannot read ({exc.strerror or exc})") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{cfg_path}: line {exc.lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(loaded, dict):
            raise ValidationError(f"{cfg_path}: top-level JSON must be an object")
        data.update(loaded)
    data.update(ns)
    return RunConfig.from_mapping(data)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = config_from_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except PdeStructError as exc:
        print(f"pdestruct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status, report = run(cfg)
    if status == EXIT_USAGE:
        print(f"pdestruct: error: {report.get('error')}", file=sys.stderr)
        return status
    if status == EXIT_FAIL and "error" in report:
        print(f"pdestruct: {report['error']['message']}", file=sys.stderr)
    try:
        emit(status, report, cfg.out)
    except OSError as exc:
        print(f"pdestruct: error: cannot write output ({exc})", file=sys.stderr)
        return EXIT_USAGE
    return status


if __name__ == "__main__":
    sys.exit(main())
