"""Report figures rendered next to the delimited outputs.

Every function writes one PNG and returns its path.  The figures mirror
the CSV contents: per-epoch score / average-Q / long-action curves for a
training run, best-score bars for a comparison, and the per-action
histogram for a stats run.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

DPI = 150


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def save_score_figure(reports, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = [r.epoch for r in reports]
    ax.plot(epochs, [r.avg_score for r in reports], marker="o")
    ax.set_xlabel("testing epoch")
    ax.set_ylabel("average episode score")
    ax.set_title("Score per testing epoch")
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_q_figure(reports, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = [r.epoch for r in reports]
    ax.plot(epochs, [r.avg_q for r in reports], marker="o", color="tab:orange")
    ax.set_xlabel("testing epoch")
    ax.set_ylabel("average Q value")
    ax.set_title("Average Q over all actions and visited states")
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_long_action_figure(reports, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = [r.epoch for r in reports]
    ax.plot(epochs, [r.long_action_fraction for r in reports], marker="o", color="tab:green")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("testing epoch")
    ax.set_ylabel("long-action fraction")
    ax.set_title("Share of long-repeat decisions")
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_training_figures(reports, out_dir):
    """Render the standard per-run figures into out_dir."""
    return [
        save_score_figure(reports, os.path.join(out_dir, "scores.png")),
        save_q_figure(reports, os.path.join(out_dir, "qvalues.png")),
        save_long_action_figure(reports, os.path.join(out_dir, "long_actions.png")),
    ]


def save_compare_figure(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [row.label for row in rows]
    means = [row.best_mean for row in rows]
    lower = [row.best_mean - row.best_min for row in rows]
    upper = [row.best_max - row.best_mean for row in rows]
    ax.bar(labels, means, yerr=[lower, upper], capsize=4, color="tab:blue", alpha=0.8)
    ax.set_ylabel("best testing-epoch score")
    ax.set_title("Best score per configuration (min/max over seeds)")
    ax.grid(True, axis="y", alpha=0.3)
    fig.autofmt_xdate(rotation=20)
    return _finish(fig, path)


def save_action_histogram(histogram, space, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    idx = range(space.size)
    colors = ["tab:blue" if k < space.basis_count else "tab:red" for k in idx]
    ax.bar(idx, histogram, color=colors)
    ax.set_xlabel(f"extended action (0..{space.basis_count - 1} repeat {space.r1}, "
                  f"{space.basis_count}..{space.size - 1} repeat {space.r2})")
    ax.set_ylabel("decisions")
    ax.set_title("Action usage over completed episodes")
    ax.grid(True, axis="y", alpha=0.3)
    return _finish(fig, path)
