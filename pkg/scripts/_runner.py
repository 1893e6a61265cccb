"""Shared runner for the sweep scripts: config -> CSV + plot script."""

import argparse
from pathlib import Path

from mimorate.experiments.config import load_config, with_overrides
from mimorate.experiments.output import emit_csv, emit_plot_script
from mimorate.experiments.sweep import run_sweep

ROOT = Path(__file__).resolve().parent.parent


def run(name, x=None, after=None):
    ap = argparse.ArgumentParser(description=f"Reproduce the {name} sweep.")
    ap.add_argument("--out", type=Path, default=ROOT / "results", help="output directory")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--redrop-per-point", action="store_true")
    args = ap.parse_args()

    cfg = with_overrides(
        load_config(ROOT / "configs" / f"{name}.yaml"),
        seed=args.seed,
        trials=args.trials,
        workers=args.workers,
        redrop=args.redrop_per_point,
    )
    rows = run_sweep(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = emit_csv(rows, args.out / f"{name}.csv")
    script = emit_plot_script(rows, args.out / f"{name}_plot.py", csv_path, x=x)
    print(f"{'M':>6} {'K_dB':>6} {'rx':>4} {'csi':>10} {'sim':>9} {'approx':>9} {'det_eq':>9}")
    for r in rows:
        print(
            f"{r.M:>6} {r.K_dB:>6g} {r.receiver:>4} {r.csi:>10} "
            f"{r.rate_sim:>9.4f} {r.rate_approx:>9.4f} {r.rate_det_equiv:>9.4f}"
        )
    if after is not None:
        after(cfg, rows)
    print(f"wrote {csv_path} and {script}")
