"""CSV and plot-script writers for sweep results."""

from __future__ import annotations

import csv
import os
from pathlib import Path

from .sweep import CSV_FIELDS, SweepRow, k_db_label

_INT_FIELDS = {"scenario_id", "M", "N", "trials", "discarded", "seed"}
_STR_FIELDS = {"receiver", "csi"}


def _fmt(name, value) -> str:
    if name in _STR_FIELDS:
        return str(value)
    if name in _INT_FIELDS:
        return str(int(value))
    return format(float(value), ".9g")


def emit_csv(rows, path) -> Path:
    """Write rows with 9 significant digits; the file ends with a newline."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for row in rows:
            w.writerow([_fmt(f, v) for f, v in zip(CSV_FIELDS, row.as_tuple())])
    return path


def read_csv(path) -> list[SweepRow]:
    out = []
    with Path(path).open(newline="") as fh:
        for rec in csv.DictReader(fh):
            kw = {}
            for f in CSV_FIELDS:
                v = rec[f]
                kw[f] = v if f in _STR_FIELDS else (int(v) if f in _INT_FIELDS else float(v))
            out.append(SweepRow(**kw))
    return out


_SCRIPT = '''"""Plot sum rate against {xlabel} from {csv_name}.

Markers are Monte Carlo sum rates, lines the closed-form approximations.
"""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
CSV_PATH = os.path.join(HERE, {csv_rel!r})
X = {x!r}

# (receiver, csi, K_dB label)
CURVES = [
{curves}
]


def load():
    with open(CSV_PATH, newline="") as fh:
        return list(csv.DictReader(fh))


def main(out=None):
    rows = load()
    fig, ax = plt.subplots(figsize=(7, 5))
    for receiver, csi, k_label in CURVES:
        sel = [
            r for r in rows
            if r["receiver"] == receiver and r["csi"] == csi
            and (k_label is None or r["K_dB"] == k_label)
        ]
        sel.sort(key=lambda r: float(r[X]))
        xs = [float(r[X]) for r in sel]
        label = f"{{receiver.upper()}} {{csi}}" + ("" if k_label is None else f", K={{k_label}} dB")
        line, = ax.plot(xs, [float(r["rate_approx"]) for r in sel], "-", label=label)
        ax.plot(xs, [float(r["rate_sim"]) for r in sel], "o", color=line.get_color(), mfc="none")
    ax.set_xlabel({xlabel!r})
    ax.set_ylabel("sum rate (bits/s/Hz)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    out = out or os.path.join(HERE, {png_name!r})
    fig.savefig(out, dpi=120)
    return out


if __name__ == "__main__":
    print(main())
'''


def emit_plot_script(rows, path, csv_path, x=None, receivers=None, csis=None, K_dB=None) -> Path:
    """Write a standalone matplotlib script for the rows in ``csv_path``.

    One curve per receiver x CSI x K combination that survives the filters;
    ``x`` defaults to ``K_dB`` when all rows share one array size, else ``M``.
    Raises ``ValueError`` (and writes nothing) if the filters leave no rows.
    """
    rows = [
        r for r in rows
        if (receivers is None or r.receiver in receivers)
        and (csis is None or r.csi in csis)
        and (K_dB is None or r.K_dB in K_dB)
    ]
    if not rows:
        raise ValueError("no rows match the requested receivers/CSI/K filters")
    if x is None:
        x = "K_dB" if len({r.M for r in rows}) == 1 and len({r.K_dB for r in rows}) > 1 else "M"
    keys = []
    for r in rows:
        k = (r.receiver, r.csi, None if x == "K_dB" else k_db_label(r.K_dB))
        if k not in keys:
            keys.append(k)
    path = Path(path)
    csv_rel = os.path.relpath(Path(csv_path).resolve(), path.resolve().parent)
    text = _SCRIPT.format(
        csv_name=Path(csv_path).name,
        csv_rel=csv_rel,
        x=x,
        xlabel="number of BS antennas M" if x == "M" else "Ricean K-factor (dB)",
        curves="\n".join(f"    {k!r}," for k in keys),
        png_name=path.stem + ".png",
    )
    path.write_text(text)
    return path
