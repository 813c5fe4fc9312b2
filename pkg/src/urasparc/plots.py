"""SVG figures from result tables: PUPE against each swept axis, and decode time."""
from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import TableParseError  # noqa: E402
from .harness import TIMING_COLUMNS, read_table, summarize, timing_path  # noqa: E402

SWEEP_AXES = ("M", "ebn0_db", "K", "J")
AXIS_LABELS = {"M": "number of antennas $M$", "ebn0_db": "$E_b/N_0$ (dB)",
               "K": "active users $K$", "J": "$J = \\log_2 N$", "snr_db": "SNR (dB)"}
TARGET_PE = 0.05

plt.rcParams["svg.hashsalt"] = "urasparc"


def _varying(recs, axes):
    # Eb/N0 also moves with J or B at fixed SNR; only a changing SNR makes it a sweep
    out = [a for a in axes if len({r[a] for r in recs}) > 1]
    if "ebn0_db" in out and len({r["snr_db"] for r in recs}) == 1:
        out.remove("ebn0_db")
    return out


def _series_label(key, names):
    dec, rho = key[0], key[1]
    base = f"{dec} (rho={rho:g})" if dec == "accml" else dec
    extra = ", ".join(f"{n}={v:g}" for n, v in zip(names, key[2:]))
    return f"{base}, {extra}" if extra else base


def _series(recs, axis, others, value):
    out = {}
    for r in recs:
        key = (r["decoder"], r["rho"]) + tuple(r[o] for o in others)
        out.setdefault(key, []).append((r[axis], value(r)))
    return {k: sorted(v) for k, v in out.items()}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_plots(table, outdir) -> list:
    """Write one PUPE figure per swept axis (plus decode-time figures for K/J sweeps).

    Axes are chosen among ``M``, ``ebn0_db``, ``K`` and ``J``; a table with no
    swept axis yields a single figure against Eb/N0. Zero PUPE is drawn at
    half the resolution ``1/(2 trials)`` so it stays visible on the log axis.

    Returns the list of written paths.
    """
    rows = read_table(table)
    if not rows:
        raise TableParseError("table has no data rows", 2)
    recs = summarize(rows)
    axes = _varying(recs, SWEEP_AXES) or ["ebn0_db"]
    outdir = Path(outdir)
    os.makedirs(outdir, exist_ok=True)
    floor = 0.5 / max(r["trials"] for r in recs)
    written = []
    for axis in axes:
        others = [a for a in _varying(recs, SWEEP_AXES) if a != axis]
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for i, (key, pts) in enumerate(_series(recs, axis, others, lambda r: r["p_e"]).items()):
            x, y = zip(*pts)
            ax.semilogy(x, np.maximum(y, floor), marker="o", label=_series_label(key, others),
                        gid=f"series{i}")
        ax.axhline(TARGET_PE, color="red", linestyle="--", linewidth=1, label="PUPE = 0.05",
                   gid="target")
        ax.set_xlabel(AXIS_LABELS[axis])
        ax.set_ylabel("PUPE")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize="small")
        path = outdir / f"pupe_vs_{axis}.svg"
        _save(fig, path)
        written.append(path)

    tpath = timing_path(table)
    if tpath.exists():
        timing = read_table(tpath, required=TIMING_COLUMNS)
        for axis in [a for a in axes if a in ("K", "J")]:
            means = {}
            for r in timing:
                means.setdefault((r["decoder"], r[axis]), []).append(r["decode_seconds"])
            fig, ax = plt.subplots(figsize=(6, 4.5))
            for dec in dict.fromkeys(d for d, _ in means):
                pts = sorted((x, np.mean(v)) for (d, x), v in means.items() if d == dec)
                x, y = zip(*pts)
                ax.plot(x, y, marker="o", label=dec)
            ax.set_xlabel(AXIS_LABELS[axis])
            ax.set_ylabel("processing time per trial (s)")
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize="small")
            path = outdir / f"time_vs_{axis}.svg"
            _save(fig, path)
            written.append(path)
    return written
