#!/usr/bin/env python3
"""Plot NMSE curves from an `icefill sweep` CSV.

    python3 scripts/plot_sweep.py sweep_snr.csv [-o sweep_snr.png] [--analytic]
"""

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load(path):
    with open(path, newline="") as f:
        rows = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(rows))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("-o", "--out")
    ap.add_argument("--analytic", action="store_true", help="overlay closed-form NMSE where available")
    args = ap.parse_args()

    rows = load(args.csv)
    if not rows:
        raise SystemExit("no data rows")
    axis = rows[0]["axis"]
    curves = defaultdict(list)
    for r in rows:
        curves[(r["designer"], r["estimator"])].append(r)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (designer, estimator), pts in sorted(curves.items()):
        pts.sort(key=lambda r: float(r["value"]))
        x = [float(r["value"]) for r in pts]
        line, = ax.plot(x, [float(r["nmse_db"]) for r in pts], marker="o", label=f"{designer} / {estimator}")
        if args.analytic:
            ana = [(xi, float(r["analytic_nmse_db"])) for xi, r in zip(x, pts) if r["analytic_nmse_db"]]
            if ana:
                ax.plot(*zip(*ana), linestyle="--", color=line.get_color())
    if axis == "spacing":
        ax.set_xscale("log", base=2)
    ax.set_xlabel({"snr-db": "SNR (dB)", "q": "pilot length Q", "spacing": "d / λ", "sigma-h2": "σ_h² (dB)"}.get(axis, axis))
    ax.set_ylabel("NMSE (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = args.out or args.csv.rsplit(".", 1)[0] + ".png"
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
