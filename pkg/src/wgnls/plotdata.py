"""Figure-of-record data series and optional rendering.

emit_plots writes plain-text multi-column series (consumable by any
plotting tool) next to the run's CSV artifacts; render_figures turns each
series into a PNG with matplotlib.  The core emitter has no rendering
dependency; matplotlib is imported only inside render_figures.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .persistence import RunManifest


def _read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v not in ("", "nan") else float("nan") for v in row]
                for row in reader]
    return header, rows


def _write_series(path: Path, header: list[str], rows: list[list[float]]) -> None:
    lines = ["# " + "\t".join(header)]
    for row in rows:
        lines.append("\t".join(repr(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def emit_plots(manifest: RunManifest, root: Path) -> list[Path]:
    """Write x/y series files for whichever artifacts the run produced.

    Series layout per command:
      sweep/threshold: omega vs gamma and the flat-branch reference, and
        omega vs mass;
      masscurve: c vs m_c;
      evolve: t vs J, t vs K, t vs conservation drift.
    """
    run_dir = root / manifest.run_id
    written: list[Path] = []
    have = {o["path"] for o in manifest.outputs}

    def emit(name, header, rows):
        path = run_dir / name
        _write_series(path, header, rows)
        manifest.register(root, name)
        written.append(path)

    for csv_name in ("sweep.csv", "threshold_probes.csv"):
        if csv_name in have:
            header, rows = _read_csv(run_dir / csv_name)
            i_om = header.index("omega")
            i_g = header.index("gamma")
            i_ref = header.index("rd_reference")
            i_m = header.index("mass_c")
            emit(
                csv_name.replace(".csv", "_action.dat"),
                ["omega", "gamma", "rd_reference"],
                [[r[i_om], r[i_g], r[i_ref]] for r in rows],
            )
            emit(
                csv_name.replace(".csv", "_mass.dat"),
                ["omega", "mass_c"],
                [[r[i_om], r[i_m]] for r in rows],
            )
    if "masscurve.csv" in have:
        header, rows = _read_csv(run_dir / "masscurve.csv")
        i_c, i_m = header.index("c"), header.index("m_c")
        emit("masscurve.dat", ["c", "m_c"],
             [[r[i_c], r[i_m]] for r in rows])
    if "trace.csv" in have:
        header, rows = _read_csv(run_dir / "trace.csv")
        idx = {k: header.index(k) for k in header}
        emit("trace_variance.dat", ["t", "J"],
             [[r[idx["t"]], r[idx["J"]]] for r in rows])
        emit("trace_virial.dat", ["t", "K"],
             [[r[idx["t"]], r[idx["K"]]] for r in rows])
        if rows:
            m0, e0 = rows[0][idx["mass"]], rows[0][idx["energy"]]
            emit(
                "trace_conservation.dat",
                ["t", "mass_drift", "energy_drift"],
                [[r[idx["t"]],
                  abs(r[idx["mass"]] - m0) / m0 if m0 else 0.0,
                  abs(r[idx["energy"]] - e0) / abs(e0) if e0 else 0.0]
                 for r in rows],
            )
    manifest.save(root)
    return written


def render_figures(series_paths: list[Path]) -> list[Path]:
    """Render each series file to a PNG alongside it."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = []
    for path in series_paths:
        with open(path) as fh:
            header = fh.readline().lstrip("# ").strip().split("\t")
            cols = list(zip(*(
                [float(v) for v in line.split("\t")]
                for line in fh if line.strip()
            )))
        if len(cols) < 2:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for j in range(1, len(cols)):
            ax.plot(cols[0], cols[j], marker="." if len(cols[0]) < 64 else None,
                    label=header[j])
        ax.set_xlabel(header[0])
        if len(header) > 2:
            ax.legend(frameon=False, fontsize=8)
        else:
            ax.set_ylabel(header[1])
        ax.grid(alpha=0.3)
        fig.tight_layout()
        png = path.with_suffix(".png")
        fig.savefig(png, dpi=150)
        plt.close(fig)
        out.append(png)
    return out
