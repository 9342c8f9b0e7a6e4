"""CSV and JSON writers for analysis results.

Every CSV begins with a ``# schema: <name>/<version>`` comment line. Floats
are written with 17 significant digits (CSV) or ``repr`` (JSON), both of
which round-trip exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .coherence import CoherenceField, Significance
from .cwt import CwtField
from .modwt import ModwtDecomposition, equivalent_length, horizon_label
from .wcorr import ContagionReport, WaveletCorrelation

SCHEMA_VERSION = 1


def clean(obj):
    """Convert numpy scalars/arrays to JSON types; NaN and inf become None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(obj, path) -> None:
    text = json.dumps(clean(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _schema_line(name: str) -> str:
    return f"# schema: wavecontagion.{name}/{SCHEMA_VERSION}"


def write_matrix_csv(matrix: np.ndarray, row_labels, path, name: str, fmt: str = "%.17g") -> None:
    """(scale, time) matrix with one row per scale; first column is the scale."""
    matrix = np.asarray(matrix)
    n = matrix.shape[1]
    header = "scale," + ",".join(str(u) for u in range(n))
    body = np.column_stack([np.asarray(row_labels, dtype=float), matrix.astype(float)])
    fmts = ["%.17g"] + [fmt] * n
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(_schema_line(name) + "\n")
        np.savetxt(fh, body, fmt=fmts, delimiter=",", header=header, comments="")


def read_matrix_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return data[:, 0], data[:, 1:]


def write_cwt(field: CwtField, out_dir, stem: str = "cwt") -> list[Path]:
    out_dir = Path(out_dir)
    scales = field.grid.scales
    paths = [out_dir / f"{stem}_real.csv", out_dir / f"{stem}_imag.csv", out_dir / f"{stem}.json"]
    write_matrix_csv(field.coefficients.real, scales, paths[0], "cwt_real")
    write_matrix_csv(field.coefficients.imag, scales, paths[1], "cwt_imag")
    write_json({"schema": SCHEMA_VERSION, "grid": field.grid.to_dict(), "coi": field.coi,
                "n": field.n_original}, paths[2])
    return paths


def write_coherence(
    field: CoherenceField, out_dir, sig: Significance | None = None, meta: dict | None = None,
) -> list[Path]:
    out_dir = Path(out_dir)
    scales = field.grid.scales
    paths = [out_dir / "r2.csv", out_dir / "phase.csv"]
    write_matrix_csv(field.r2, scales, paths[0], "r2")
    write_matrix_csv(field.phase, scales, paths[1], "phase")
    info = {
        "schema": SCHEMA_VERSION,
        "grid": field.grid.to_dict(),
        "coi": field.coi,
        "n": field.r2.shape[1],
    }
    if field.significant is not None:
        paths.append(out_dir / "significance.csv")
        write_matrix_csv(field.significant.astype(int), scales, paths[-1], "significance", "%d")
        info["alpha"] = field.alpha
        info["thresholds"] = field.thresholds
    if sig is not None:
        info["monte_carlo"] = {
            "n_sim": sig.n_sim, "seed": sig.seed, "alpha": sig.alpha,
            "ar1_x": {"phi": sig.fit_x.phi, "sigma": sig.fit_x.sigma},
            "ar1_y": {"phi": sig.fit_y.phi, "sigma": sig.fit_y.sigma},
        }
        outside = field.outside_coi()
        info["significant_fraction_outside_coi"] = float(sig.mask[outside].mean())
    info.update(meta or {})
    paths.append(out_dir / "coherence.json")
    write_json(info, paths[-1])
    return paths


def write_modwt(d: ModwtDecomposition, path_csv, path_json) -> None:
    J = d.levels
    cols = [f"w{j}" for j in range(1, J + 1)] + [f"v{J}"]
    body = np.column_stack(d.w + [d.v])
    with Path(path_csv).open("w", encoding="utf-8", newline="") as fh:
        fh.write(_schema_line("modwt") + "\n")
        np.savetxt(fh, body, fmt="%.17g", delimiter=",", header=",".join(cols), comments="")
    write_json({
        "schema": SCHEMA_VERSION,
        "filter": d.filter.name,
        "J": J,
        "n": d.n,
        "boundary_counts": [min(d.n, equivalent_length(d.filter.length, j) - 1)
                            for j in range(1, J + 1)],
    }, path_json)


def _num(v) -> str:
    v = float(v)
    return repr(v) if math.isfinite(v) else ""


def wcorr_rows(wc: WaveletCorrelation, bar_minutes: float, day_minutes: float) -> list[dict]:
    return [
        {
            "scale": int(j),
            "horizon": horizon_label(int(j), bar_minutes, day_minutes),
            "rho": wc.rho[i], "ci_low": wc.ci_low[i], "ci_high": wc.ci_high[i],
            "n_eff": int(wc.n_eff[i]), "n_hat": wc.n_hat[i],
        }
        for i, j in enumerate(wc.levels)
    ]


def write_wcorr(wc: WaveletCorrelation, out_dir, bar_minutes: float = 5.0,
                day_minutes: float = 385.0, meta: dict | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    rows = wcorr_rows(wc, bar_minutes, day_minutes)
    csv_path, json_path = out_dir / "wcorr.csv", out_dir / "wcorr.json"
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(_schema_line("wcorr") + "\n")
        fh.write("scale,horizon,rho,ci_low,ci_high,n_eff,n_hat\n")
        for r in rows:
            fh.write(f"{r['scale']},{r['horizon']},{_num(r['rho'])},{_num(r['ci_low'])},"
                     f"{_num(r['ci_high'])},{r['n_eff']},{_num(r['n_hat'])}\n")
    info = {"schema": SCHEMA_VERSION, "alpha": wc.alpha, "filter": wc.filter_name,
            "scales": rows}
    info.update(meta or {})
    write_json(info, json_path)
    return [csv_path, json_path]


def contagion_rows(rep: ContagionReport, bar_minutes: float, day_minutes: float) -> list[dict]:
    change = rep.change
    return [
        {
            "scale": int(j),
            "horizon": horizon_label(int(j), bar_minutes, day_minutes),
            "rho_I": rep.rho_I[i], "rho_II": rep.rho_II[i],
            "ci_I_low": rep.ci_I[0][i], "ci_I_high": rep.ci_I[1][i],
            "ci_II_low": rep.ci_II[0][i], "ci_II_high": rep.ci_II[1][i],
            "z": rep.z[i], "p_value": rep.p_value[i], "reject": bool(rep.reject[i]),
            "change": change[i],
        }
        for i, j in enumerate(rep.levels)
    ]


def write_contagion(rep: ContagionReport, out_dir, bar_minutes: float = 5.0,
                    day_minutes: float = 385.0, meta: dict | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    rows = contagion_rows(rep, bar_minutes, day_minutes)
    csv_path, json_path = out_dir / "contagion.csv", out_dir / "contagion.json"
    keys = ["rho_I", "rho_II", "ci_I_low", "ci_I_high", "ci_II_low", "ci_II_high", "z", "p_value"]
    with csv_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(_schema_line("contagion") + "\n")
        fh.write("scale,horizon," + ",".join(keys) + ",reject,change\n")
        for r in rows:
            nums = ",".join(_num(r[k]) for k in keys)
            fh.write(f"{r['scale']},{r['horizon']},{nums},{int(r['reject'])},{r['change']}\n")
    info = {
        "schema": SCHEMA_VERSION,
        "alpha": rep.alpha,
        "filter": rep.filter_name,
        "break_index": rep.break_index,
        "window_length": rep.window_length,
        "scales": rows,
    }
    info.update(meta or {})
    write_json(info, json_path)
    return [csv_path, json_path]
