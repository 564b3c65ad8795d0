"""Command line interface.

Subcommands: ``spectrum``, ``saddle``, ``lyapunov``, ``sweep``, ``scan-delta``,
``verdict`` and ``reproduce``. Every option may also come from a JSON file
given with ``--config``; flags on the command line take precedence.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import __version__
from ..dynamics import DEFAULT_CELLS, DEFAULT_FIT_LO, DEFAULT_T_END, lyapunov_curve
from ..errors import NumericalFailure
from ..model import BUILDERS, build, load_model
from ..saddle import Verdict, nhse_verdict, saddle_points
from ..spectra import ObcMethod, obc_spectrum, pbc_spectrum
from .io import dumps, format_csv, spectrum_columns, write_csv, write_json
from .reproduce import FIGURES, reproduce
from .sweep import (
    DEFAULT_DV,
    DEFAULT_V_MAX,
    DEFAULT_V_MIN,
    SCAN_THRESHOLD,
    SweepOptions,
    scan_delta_model3,
    sweep_lyapunov,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

MODEL_PARAMS = ("t", "tp", "delta", "t1", "t2", "t3")

# defaults applied after the config file; ``None`` in the parser marks "not given"
DEFAULTS = {
    "model": None, "model_file": None, "out": None, "format": "csv",
    "bc": "pbc", "cells": None, "method": "FULL", "num_k": 512,
    "v": None, "t_end": DEFAULT_T_END, "dt": None, "fit_lo": DEFAULT_FIT_LO, "window": "2",
    "v_min": DEFAULT_V_MIN, "v_max": DEFAULT_V_MAX, "dv": DEFAULT_DV, "workers": 1,
    "no_dt_check": False, "delta_min": 0.1, "delta_max": 1.2, "ddelta": 0.05,
    "threshold": SCAN_THRESHOLD, "no_dynamics": False, "figure": None,
    **{p: None for p in MODEL_PARAMS},
}


class UsageError(Exception):
    """Invalid combination of options detected after argument parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=sorted(BUILDERS), help="named builder")
    g.add_argument("--model-file", help="JSON model description")
    for name in MODEL_PARAMS:
        g.add_argument(f"--{name}", type=float, help=f"builder parameter {name}")
    p.add_argument("--config", help="JSON file supplying any option")
    p.add_argument("--out", help="output directory (default: print to stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def _dynamics_opts(p: argparse.ArgumentParser, cells: bool = True) -> None:
    if cells:
        p.add_argument("--cells", type=int, help=f"chain length (default {DEFAULT_CELLS})")
    p.add_argument("--t-end", type=float, help=f"evolution time (default {DEFAULT_T_END:g})")
    p.add_argument("--dt", type=float, help="largest RK4 step (default from the hopping norm)")
    p.add_argument("--fit-lo", type=float, help="fit window start as a fraction of t_end")
    p.add_argument("--window", help="ray sampling half-width in cells, or 'nearest'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nhprobe", description="Skin-effect probes for two-band lattices.")
    parser.add_argument("--version", action="version", version=f"nhprobe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", help="periodic or open-chain energies")
    _common(p)
    p.add_argument("--bc", choices=("pbc", "obc"))
    p.add_argument("--cells", type=int, help="open-chain length (default 60)")
    p.add_argument("--method", choices=[m.value for m in ObcMethod], type=str.upper)
    p.add_argument("--num-k", type=int, help="periodic k samples (default 512)")

    p = sub.add_parser("saddle", help="saddle points and predicted exponents")
    _common(p)
    p.add_argument("--v", help="comma-separated drift velocities (default 0)")

    p = sub.add_parser("lyapunov", help="measured exponents at given velocities")
    _common(p)
    p.add_argument("--v", help="comma-separated velocities (default 0)")
    _dynamics_opts(p)

    p = sub.add_parser("sweep", help="measured and predicted lambda(v) over a grid")
    _common(p)
    p.add_argument("--v-min", type=float)
    p.add_argument("--v-max", type=float)
    p.add_argument("--dv", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--no-dt-check", action="store_true", default=None)
    _dynamics_opts(p)

    p = sub.add_parser("scan-delta", help="zero-drift exponent versus gain/loss")
    _common(p)
    p.add_argument("--delta-min", type=float)
    p.add_argument("--delta-max", type=float)
    p.add_argument("--ddelta", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--workers", type=int)
    _dynamics_opts(p)

    p = sub.add_parser("verdict", help="skin-effect verdict from saddles and dynamics")
    _common(p)
    p.add_argument("--no-dynamics", action="store_true", default=None)
    p.add_argument("--dv", type=float)
    _dynamics_opts(p)

    p = sub.add_parser("reproduce", help="CSV data and manifest for a figure")
    p.add_argument("figure", help=f"one of: {', '.join(FIGURES)}")
    p.add_argument("--config", help="JSON file supplying any option")
    p.add_argument("--out", help="output directory (default ./nhprobe_out)")
    p.add_argument("--workers", type=int)
    _dynamics_opts(p)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and explicit flags (in rising priority)."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key not in opts:
                raise UsageError(f"unknown config key {k!r}")
            opts[key] = v
    for k, v in vars(args).items():
        if v is not None and k != "config":
            opts[k] = v
    return opts


def _model(o: dict):
    params = {p: o[p] for p in MODEL_PARAMS if o.get(p) is not None}
    if o.get("model_file"):
        if o.get("model") or params:
            raise UsageError("--model-file excludes --model and parameter flags")
        return load_model(o["model_file"])
    if not o.get("model"):
        raise UsageError("one of --model or --model-file is required")
    try:
        return build(o["model"], **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _window(o: dict):
    w = o["window"]
    return w if str(w) == "nearest" else int(w)


def _sweep_options(o: dict, **extra) -> SweepOptions:
    return SweepOptions(
        cells=int(o["cells"] or DEFAULT_CELLS), t_end=float(o["t_end"]),
        dt=None if o["dt"] is None else float(o["dt"]), fit_lo_frac=float(o["fit_lo"]),
        window=_window(o), workers=int(o["workers"]), **extra,
    )


def _emit(o: dict, name: str, columns: dict, meta: dict, kind: str, payload: dict) -> None:
    """Table to ``--out``/stdout as CSV, or ``payload`` as JSON."""
    if o["format"] == "json":
        text = dumps({"meta": meta, **payload}) + "\n"
        if o["out"]:
            path = write_json(Path(o["out"]) / f"{name}.json", {"meta": meta, **payload})
            print(path)
        else:
            sys.stdout.write(text)
        return
    if o["out"]:
        print(write_csv(Path(o["out"]) / f"{name}.csv", columns, meta, kind))
    else:
        sys.stdout.write(format_csv(columns, meta, kind))


def _model_meta(model) -> dict:
    return {"model": model.label, "params": dict(model.params)}


def cmd_spectrum(o: dict) -> int:
    model = _model(o)
    meta = _model_meta(model)
    if o["bc"] == "pbc":
        s = pbc_spectrum(model, int(o["num_k"]))
    else:
        cells = int(o["cells"] or 60)
        s = obc_spectrum(model, cells, o["method"])
        meta.update(s.meta)
    cols = spectrum_columns(s)
    _emit(o, f"spectrum_{o['bc']}", cols, meta, "spectrum", cols)
    return EXIT_OK


def cmd_saddle(o: dict) -> int:
    """One summary row per velocity; per-saddle rows go to ``saddle_points.csv``."""
    model = _model(o)
    vs = _velocities(o["v"])
    verdict = nhse_verdict(model)
    reports = [saddle_points(model, v) for v in vs]
    dom = [r.dominant_saddle for r in reports]
    nan = complex("nan+nanj")
    beta = np.array([nan if d is None else d.beta_s for d in dom], dtype=complex)
    summary = {
        "v": np.array([r.velocity for r in reports]),
        "lambda_pred": np.array([r.lambda_pred for r in reports]),
        "n_saddles": np.array([len(r.saddles) for r in reports], dtype=int),
        "dominant_re_beta": beta.real,
        "dominant_im_beta": beta.imag,
        "dominant_radius": np.abs(beta),
        "verdict": np.full(len(vs), verdict.value),
    }
    rows = [(r.velocity, i, s, i == r.dominant) for r in reports for i, s in enumerate(r.saddles)]
    detail = {
        "v": np.array([x[0] for x in rows], dtype=float),
        "index": np.array([x[1] for x in rows], dtype=int),
        "beta": np.array([x[2].beta_s for x in rows], dtype=complex),
        "radius": np.array([x[2].radius for x in rows], dtype=float),
        "k": np.array([x[2].k_s for x in rows], dtype=complex),
        "E": np.array([x[2].energy for x in rows], dtype=complex),
        "order": np.array([x[2].order for x in rows], dtype=int),
        "lambda_candidate": np.array([x[2].lyapunov_candidate for x in rows], dtype=float),
        "on_unit_circle": np.array([x[2].on_unit_circle for x in rows], dtype=bool),
        "admissible": np.array([x[2].admissible for x in rows], dtype=bool),
        "dominant": np.array([x[3] for x in rows], dtype=bool),
    }
    meta = {**_model_meta(model), "source": [r.source for r in reports],
            "contour_bound": [r.contour_bound for r in reports]}
    _emit(o, "saddle", summary, meta, "saddle", {"summary": summary, "saddles": detail})
    if o["out"] and o["format"] == "csv":
        print(write_csv(Path(o["out"]) / "saddle_points.csv", detail, meta, "saddle_points"))
    return EXIT_OK


def _velocities(text) -> list[float]:
    if text is None:
        return [0.0]
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(x) for x in text]
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"--v expects comma-separated numbers, got {text!r}") from exc


def cmd_lyapunov(o: dict) -> int:
    model = _model(o)
    vs = _velocities(o["v"])
    est = lyapunov_curve(
        model, vs, cells=int(o["cells"] or DEFAULT_CELLS), t_end=float(o["t_end"]),
        dt=o["dt"], fit_lo_frac=float(o["fit_lo"]), window=_window(o),
    )
    cols = {"v": np.array(vs), "lambda": np.array([e.lam for e in est]),
            "stderr": np.array([e.stderr for e in est]),
            "n_points": np.array([e.n_points for e in est], dtype=int)}
    meta = {**_model_meta(model), "cells": int(o["cells"] or DEFAULT_CELLS), "t_end": o["t_end"]}
    _emit(o, "lyapunov", cols, meta, "lyapunov", cols)
    return EXIT_OK


def _sweep(o: dict, model, check_dt: bool):
    return sweep_lyapunov(model, float(o["v_min"]), float(o["v_max"]), float(o["dv"]),
                          _sweep_options(o, check_dt=check_dt))


def cmd_sweep(o: dict) -> int:
    model = _model(o)
    r = _sweep(o, model, not o["no_dt_check"])
    cols = {"v": r.v_grid, "lambda_sim": r.lambda_sim, "lambda_pred": r.lambda_pred,
            "deviation": r.deviation, "stderr": r.stderr, "kink": r.kinks}
    meta = {**_model_meta(model), "v_m_sim": r.v_m_sim, "v_m_pred": r.v_m_pred,
            "verdict_dynamics": r.verdict_dynamics, "verdict_saddle": r.verdict_saddle,
            "max_im_pbc": r.max_im_pbc, "dt": r.dt, "dt_change": r.dt_change, **r.meta}
    _emit(o, "sweep", cols, meta, "sweep", cols)
    return EXIT_OK


def cmd_scan_delta(o: dict) -> int:
    if o.get("model") not in (None, "model_iii") or o.get("model_file"):
        raise UsageError("scan-delta runs the gain/loss dimer chain (model_iii) only")
    t = 0.6 if o["t"] is None else float(o["t"])
    tp = 1.0 if o["tp"] is None else float(o["tp"])
    lo, hi, step = float(o["delta_min"]), float(o["delta_max"]), float(o["ddelta"])
    if not step > 0 or hi < lo:
        raise UsageError("need ddelta > 0 and delta_max >= delta_min")
    grid = np.round(lo + step * np.arange(int(np.floor((hi - lo) / step + 1e-9)) + 1), 12)
    scan = scan_delta_model3(t, tp, grid, _sweep_options(o), float(o["threshold"]))
    cols = {"delta": scan.delta_grid, "lambda0_sim": scan.lambda0_sim,
            "lambda0_theory": scan.lambda0_theory, "stderr": scan.stderr}
    meta = {"model": "model_iii", "t": t, "tp": tp, "threshold": scan.threshold,
            "critical_delta": scan.critical_delta, **scan.meta}
    _emit(o, "scan_delta", cols, meta, "delta_scan", cols)
    return EXIT_OK


def verdict_line(detail, v_m: float | None, dv: float | None) -> str:
    """One-line summary such as ``NHSE (saddle criterion: radius 2.0000; dynamics: v_m != 0)``."""
    off = [r for r, f in zip(detail.radii, detail.off_circle) if f]
    if off:
        far = max(off, key=lambda r: abs(np.log(r)))
        saddle = f"radius {far:.4f}"
    elif detail.radii:
        saddle = "all radii 1"
        if detail.verdict is Verdict.EXCEPTIONAL_CUSP:
            saddle += ", cusps"
    else:
        saddle = f"no saddles, {detail.geometry.lower().replace('_', ' ')}"
    if v_m is None:
        dyn = "not run"
    elif abs(v_m) > dv:
        dyn = f"v_m ≠ 0 ({v_m:+.3f})"
    else:
        dyn = "v_m = 0"
    return f"{detail.verdict.value} (saddle criterion: {saddle}; dynamics: {dyn})"


def cmd_verdict(o: dict) -> int:
    model = _model(o)
    detail = nhse_verdict(model, details=True)
    r = None if o["no_dynamics"] else _sweep(o, model, check_dt=False)
    v_m = None if r is None else r.v_m_sim
    line = verdict_line(detail, v_m, None if r is None else r.dv)
    if o["format"] == "json":
        payload = {**_model_meta(model), "verdict_saddle": detail.verdict, "reason": detail.reason,
                   "radii": detail.radii, "geometry": detail.geometry, "summary": line}
        if r is not None:
            payload.update(verdict_dynamics=r.verdict_dynamics, v_m_sim=r.v_m_sim)
        text = dumps(payload) + "\n"
        if o["out"]:
            print(write_json(Path(o["out"]) / "verdict.json", payload))
        else:
            sys.stdout.write(text)
    else:
        print(line)
    return EXIT_OK


def cmd_reproduce(o: dict) -> int:
    fig = o["figure"]
    if fig not in FIGURES:
        raise UsageError(f"unknown figure {fig!r}; valid ids: {', '.join(FIGURES)}")
    out = Path(o["out"] or "nhprobe_out")
    manifest = reproduce(fig, out, _sweep_options(o))
    for name in manifest["files"]:
        print(out / name)
    print(out / f"{fig}_manifest.json")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum, "saddle": cmd_saddle, "lyapunov": cmd_lyapunov,
    "sweep": cmd_sweep, "scan-delta": cmd_scan_delta, "verdict": cmd_verdict,
    "reproduce": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"nhprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](_resolve(args))
    except UsageError as exc:
        print(f"nhprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        diag = getattr(exc, "diagnostics", {})
        extra = f" {diag}" if diag else ""
        print(f"nhprobe: numerical failure: {exc}{extra}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"nhprobe: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"nhprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
