"""Report rendering: deterministic JSON, human-readable text, CSV, figures.

JSON reports are byte-reproducible for a fixed seed: keys are sorted and
timings are omitted unless explicitly requested.
"""

from __future__ import annotations

import csv
import json
import os


def report_to_json(payload, with_timing=False):
    def clean(obj):
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()
                    if with_timing or k not in ("seconds",)}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, complex):
            return [obj.real, obj.imag]
        if isinstance(obj, float):
            return round(obj, 12)
        if hasattr(obj, "to_dict"):
            return clean(obj.to_dict(with_timing=with_timing))
        if obj is None or isinstance(obj, (bool, int, str)):
            return obj
        return repr(obj)

    return json.dumps(clean(payload), sort_keys=True, indent=1) + "\n"


def summary_text(summary):
    lines = [f"variant {summary['variant']}: "
             f"{summary['matched_count']}/{summary['generator_count']} "
             f"generator verdicts matched expectations over "
             f"{summary['row_count']} rows"]
    for row in summary["rows"]:
        for g in row["generators"]:
            mark = "ok " if g["matched"] else "MISMATCH"
            lines.append(f"  {mark} {row['entry']:14s} {g['generator']:14s} "
                         f"expected={g['expected'] or '-':4s} "
                         f"observed={g['observed']}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path, times, tracked, norms):
    names = sorted(tracked)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"re<{n}>" for n in names] +
                   [f"im<{n}>" for n in names] + ["norm"])
        for i, t in enumerate(times):
            row = [f"{t:.10g}"]
            row += [f"{tracked[n][i].real:.12g}" for n in names]
            row += [f"{tracked[n][i].imag:.12g}" for n in names]
            row.append(f"{norms[i]:.12g}")
            w.writerow(row)


def _matplotlib():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_conservation(path, times, tracked, title=""):
    plt = _matplotlib()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name in sorted(tracked):
        vals = [v.real for v in tracked[name]]
        base = vals[0]
        ax.plot(times, [v - base for v in vals], label=f"<{name}> - <{name}>(0)")
    ax.set_xlabel("t")
    ax.set_ylabel("expectation drift")
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_verdict_matrix(path, summary):
    plt = _matplotlib()
    rows = [r for r in summary["rows"]]
    labels, cells = [], []
    for r in rows:
        for g in r["generators"]:
            labels.append(f"{r['entry']}:{g['generator']}")
            cells.append((g["observed"] == "pass", g["matched"]))
    n = len(labels)
    ncols = max(1, (n + 39) // 40)
    per = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(1, ncols, figsize=(3.6 * ncols, 0.17 * per + 1.2))
    if ncols == 1:
        axes = [axes]
    for c in range(ncols):
        ax = axes[c]
        chunk = list(range(c * per, min(n, (c + 1) * per)))
        for i, idx in enumerate(chunk):
            passed, matched = cells[idx]
            color = "#2a9d47" if passed else "#c84630"
            edge = "black" if matched else "#ffb400"
            ax.barh(i, 1.0, color=color, edgecolor=edge,
                    linewidth=1.6 if not matched else 0.4)
        ax.set_yticks(range(len(chunk)))
        ax.set_yticklabels([labels[i] for i in chunk], fontsize=5)
        ax.set_xticks([])
        ax.invert_yaxis()
    fig.suptitle(f"catalog verdicts, variant {summary['variant']} "
                 f"(green=symmetry, red=non-symmetry, orange edge=mismatch)",
                 fontsize=9)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    fig.savefig(path, dpi=150)
    plt.close(fig)


def ensure_dir(path):
    if path:
        os.makedirs(path, exist_ok=True)
    return path
