"""Regenerate the data behind each published figure as CSV plus a JSON manifest."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from ..errors import DegenerateInputError
from ..model import build, model_ii
from ..numerics import hausdorff_distance
from ..saddle import saddle_points
from ..spectra import ObcMethod, obc_spectrum, pbc_spectrum
from ..dynamics import lyapunov_curve, run_seeded, sample_ray
from .io import CSV_SCHEMA, CSV_VERSION, spectrum_columns, write_csv, write_json, write_ray_traces
from .sweep import SweepOptions, scan_delta_model3, sweep_lyapunov

FIG1_MODELS = ("model_i", "model_ii", "model_iii", "model_iv")
FIG2_VELOCITIES = (-0.5, 0.0, 0.5, 1.0)
FIG5_DELTAS = (2.0, 0.9, 0.5, 0.2)
FIG8_T = (-0.5, -1.0)
OBC_CELLS = 60
NUM_K = 512
TOLERANCES = {
    "sweep_agreement": 0.05,
    "bound_slack": 0.05,
    "scan_far": 0.05,
    "scan_near": 0.15,
    "dt_halving": 1e-4,
}


class UnknownFigureError(DegenerateInputError):
    """Figure id not in :data:`FIGURES`."""


def _versions() -> dict:
    return {"nhprobe": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "csv_schema": f"{CSV_SCHEMA} {CSV_VERSION}"}


def _spectra_tables(models: dict, cells: int, num_k: int):
    """Stacked periodic and open-chain spectra keyed by a ``case`` column."""
    pbc: dict[str, list] = {}
    obc: dict[str, list] = {}
    for case, m in models.items():
        for table, spec in ((pbc, pbc_spectrum(m, num_k)), (obc, obc_spectrum(m, cells, ObcMethod.FULL))):
            cols = spectrum_columns(spec)
            table.setdefault("case", []).extend([case] * len(spec))
            for k, v in cols.items():
                table.setdefault(k, []).extend(v.tolist())
    return ({k: np.array(v) for k, v in pbc.items()}, {k: np.array(v) for k, v in obc.items()})


def _fig1_models():
    return {name: build(name) for name in FIG1_MODELS}


def _params(models: dict) -> dict:
    return {case: dict(m.params) for case, m in models.items()}


def _fig1_spectra(out: Path, fig: str, opts):
    models = _fig1_models()
    pbc, obc = _spectra_tables(models, OBC_CELLS, NUM_K)
    meta = {"figure": fig, "params": _params(models), "cells": OBC_CELLS}
    files = [write_csv(out / f"{fig}_pbc.csv", pbc, meta, kind="pbc_spectrum"),
             write_csv(out / f"{fig}_obc.csv", obc, meta, kind="obc_spectrum")]
    return files, {"models": _params(models), "obc_cells": OBC_CELLS, "num_k": NUM_K}, {}


def fig1c(out: Path, opts: SweepOptions):
    """``E^2`` under periodic and open boundaries for the four chains."""
    return _fig1_spectra(out, "fig1c", opts)


def fig1d(out: Path, opts: SweepOptions):
    """``E`` under periodic and open boundaries for the four chains."""
    return _fig1_spectra(out, "fig1d", opts)


def _sweep_table(results: dict):
    cols = {"case": [], "v": [], "lambda_sim": [], "lambda_pred": [], "stderr": [], "kink": []}
    for case, r in results.items():
        n = r.v_grid.size
        cols["case"] += [case] * n
        cols["v"] += list(r.v_grid)
        cols["lambda_sim"] += list(r.lambda_sim)
        cols["lambda_pred"] += list(r.lambda_pred)
        cols["stderr"] += list(r.stderr)
        cols["kink"] += list(r.kinks)
    return {k: np.array(v) for k, v in cols.items()}


def _sweep_summary(r) -> dict:
    return {"v_m_sim": r.v_m_sim, "v_m_pred": r.v_m_pred,
            "verdict_dynamics": r.verdict_dynamics, "verdict_saddle": r.verdict_saddle,
            "max_lambda_sim": float(r.lambda_sim.max()), "max_im_pbc": r.max_im_pbc,
            "max_deviation_off_kinks": r.max_deviation(), "dt": r.dt, "dt_change": r.dt_change}


def fig1e(out: Path, opts: SweepOptions):
    """Simulated ``lambda(v)`` for the four chains."""
    models = _fig1_models()
    res = {case: sweep_lyapunov(m, options=opts) for case, m in models.items()}
    meta = {"figure": "fig1e", "params": _params(models)}
    f = write_csv(out / "fig1e_lambda.csv", _sweep_table(res), meta, kind="sweep")
    return [f], {"models": _params(models)}, {c: _sweep_summary(r) for c, r in res.items()}


def fig2(out: Path, opts: SweepOptions):
    """``log|psi(t)|`` along a few rays for the asymmetric-hopping chain."""
    m = build("model_ii")
    traj = run_seeded(m, cells=opts.cells, t_end=opts.t_end, dt=opts.dt)
    traces = [sample_ray(traj, v, "A", opts.window) for v in FIG2_VELOCITIES]
    est = lyapunov_curve(m, FIG2_VELOCITIES, trajectory=traj, fit_lo_frac=opts.fit_lo_frac,
                         window=opts.window)
    pred = {str(v): saddle_points(m, v).lambda_pred for v in FIG2_VELOCITIES}
    meta = {"figure": "fig2", "params": dict(m.params), "velocities": list(FIG2_VELOCITIES)}
    f = write_ray_traces(out / "fig2_rays.csv", traces, meta)
    summary = {str(v): {"lambda_sim": e.lam, "lambda_pred": pred[str(v)]}
               for v, e in zip(FIG2_VELOCITIES, est)}
    return [f], {"model_ii": dict(m.params), "velocities": list(FIG2_VELOCITIES)}, summary


def _fig3(out: Path, fig: str, name: str, opts: SweepOptions):
    m = build(name)
    r = sweep_lyapunov(m, options=opts)
    meta = {"figure": fig, "params": dict(m.params)}
    f = write_csv(out / f"{fig}_lambda.csv", _sweep_table({name: r}), meta, kind="sweep")
    return [f], {name: dict(m.params)}, {name: _sweep_summary(r)}


def fig3a(out: Path, opts: SweepOptions):
    """Simulated versus predicted ``lambda(v)``, gain/loss chain with edge states."""
    return _fig3(out, "fig3a", "model_i", opts)


def fig3b(out: Path, opts: SweepOptions):
    """Simulated versus predicted ``lambda(v)``, asymmetric-hopping chain."""
    return _fig3(out, "fig3b", "model_ii", opts)


def fig3c(out: Path, opts: SweepOptions):
    """Simulated versus predicted ``lambda(v)``, gain/loss dimer chain."""
    return _fig3(out, "fig3c", "model_iii", opts)


def fig4(out: Path, opts: SweepOptions):
    """Zero-drift exponent across the gain/loss scan, with the closed form."""
    scan = scan_delta_model3(0.6, 1.0, options=opts)
    cols = {"delta": scan.delta_grid, "lambda0_sim": scan.lambda0_sim,
            "lambda0_theory": scan.lambda0_theory, "stderr": scan.stderr}
    meta = {"figure": "fig4", "t": scan.t, "tp": scan.tp, "threshold": scan.threshold}
    f = write_csv(out / "fig4_scan.csv", cols, meta, kind="delta_scan")
    summary = {"critical_delta": scan.critical_delta,
               "max_abs_deviation": float(np.abs(scan.deviation).max())}
    return [f], {"t": scan.t, "tp": scan.tp, "delta_grid": scan.delta_grid}, summary


def fig5(out: Path, opts: SweepOptions):
    """Periodic and open spectra of the asymmetric-hopping chain for four ``delta``."""
    models = {f"delta={d:g}": model_ii(0.6, 1.0, d) for d in FIG5_DELTAS}
    pbc, obc = _spectra_tables(models, OBC_CELLS, NUM_K)
    meta = {"figure": "fig5", "params": _params(models), "cells": OBC_CELLS}
    files = [write_csv(out / "fig5_pbc.csv", pbc, meta, kind="pbc_spectrum"),
             write_csv(out / "fig5_obc.csv", obc, meta, kind="obc_spectrum")]
    summary = {case: {"max_abs_im_obc_bulk": float(np.abs(obc_spectrum(m, OBC_CELLS).bulk.imag).max())}
               for case, m in models.items()}
    return files, {"models": _params(models), "obc_cells": OBC_CELLS}, summary


def fig8(out: Path, opts: SweepOptions):
    """Cusp chain: spectra and ``lambda(v)`` on and off the all-Bloch-point line."""
    models = {f"t={t:g}": build("model_app_c", t=t, delta=1.0) for t in FIG8_T}
    pbc, obc = _spectra_tables(models, OBC_CELLS, NUM_K)
    res = {case: sweep_lyapunov(m, options=opts) for case, m in models.items()}
    meta = {"figure": "fig8", "params": _params(models), "cells": OBC_CELLS}
    files = [write_csv(out / "fig8_pbc.csv", pbc, meta, kind="pbc_spectrum"),
             write_csv(out / "fig8_obc.csv", obc, meta, kind="obc_spectrum"),
             write_csv(out / "fig8_lambda.csv", _sweep_table(res), meta, kind="sweep")]
    summary = {}
    for case, m in models.items():
        s = _sweep_summary(res[case])
        s["saddle_radii"] = sorted(float(x) for x in saddle_points(m, 0.0).radii)
        s["hausdorff_pbc_obc"] = hausdorff_distance(
            pbc_spectrum(m, NUM_K).energies, obc_spectrum(m, OBC_CELLS).bulk)
        summary[case] = s
    return files, {"models": _params(models), "obc_cells": OBC_CELLS}, summary


FIGURES = {
    "fig1c": fig1c, "fig1d": fig1d, "fig1e": fig1e, "fig2": fig2,
    "fig3a": fig3a, "fig3b": fig3b, "fig3c": fig3c, "fig4": fig4,
    "fig5": fig5, "fig8": fig8,
}


def reproduce(figure_id: str, out_dir, options: SweepOptions | None = None) -> dict:
    """Write the CSV files for ``figure_id`` and a ``<id>_manifest.json``.

    Returns the manifest. Outputs depend only on the inputs, so repeated
    runs produce byte-identical files.

    Raises
    ------
    UnknownFigureError
        ``figure_id`` is not one of :data:`FIGURES`.
    """
    if figure_id not in FIGURES:
        raise UnknownFigureError(
            f"unknown figure {figure_id!r}; valid ids: {', '.join(FIGURES)}")
    opts = options or SweepOptions()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files, params, summary = FIGURES[figure_id](out, opts)
    manifest = {
        "figure": figure_id,
        "description": (FIGURES[figure_id].__doc__ or "").strip(),
        "files": sorted(Path(f).name for f in files),
        "parameters": params,
        "options": asdict(opts),
        "tolerances": TOLERANCES,
        "summary": summary,
        "versions": _versions(),
    }
    write_json(out / f"{figure_id}_manifest.json", manifest)
    return manifest
