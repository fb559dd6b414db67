"""Plot cost against iteration and simulated time for one or more trace CSVs.

    python scripts/plot_traces.py l1_fd.csv l1_es.csv l1_coded.csv -o l1.png
"""
import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    it = [int(r["iteration"]) for r in rows]
    cost = [float(r["cost"]) for r in rows]
    elapsed = [float(r["elapsed_time"]) for r in rows]
    return it, cost, elapsed, rows[0]["method"]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("traces", nargs="+")
    parser.add_argument("-o", "--output", default="traces.png")
    args = parser.parse_args()
    fig, (ax_it, ax_t) = plt.subplots(1, 2, figsize=(10, 4))
    for path in args.traces:
        it, cost, elapsed, method = load(path)
        ax_it.semilogy(it, cost, label=method)
        ax_t.semilogy(elapsed, cost, label=method)
    ax_it.set_xlabel("iteration")
    ax_t.set_xlabel("simulated time (s)")
    for ax in (ax_it, ax_t):
        ax.set_ylabel("cost")
        ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)


if __name__ == "__main__":
    main()
