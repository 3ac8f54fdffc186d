"""Campaign report: one machine-readable summary plus rendered figures.

The report command walks an output root produced by the other commands
(dataset, models, traces, comparisons), writes `report/report.json` with
the headline numbers, and renders the standard figures as PNG files next
to it. All figure data comes from the CSV artifacts, which remain the
primary outputs; missing artifacts are reported as warnings rather than
failures.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import METRICS
from .util import dump_json, load_json

_SCENARIOS = (1, 2)

# artifacts whose content is wall-clock timing; they stay in the manifest but
# out of the report summary so regenerated reports stay byte-identical
_TIMING_ARTIFACTS = {"training_times.csv"}


def _read_table(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _collect_manifests(bundle: Path) -> dict[str, dict]:
    """Merge per-command manifests at the bundle root and one level down.

    The report command's own entry is excluded so that regenerating the
    report is idempotent; file keys become bundle-relative paths.
    """
    merged: dict[str, dict] = {}
    candidates = [bundle / "manifest.json", *sorted(bundle.glob("*/manifest.json"))]
    for path in candidates:
        if not path.exists():
            continue
        for command, entry in load_json(path).get("commands", {}).items():
            if command == "report":
                continue
            files = {
                str((path.parent / rel).relative_to(bundle)): digest
                for rel, digest in entry["files"].items()
            }
            merged[command] = {"files": files}
    return merged


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _plot_learning_curves(models_dir: Path, fig_dir: Path) -> list[Path]:
    rows = _read_table(models_dir / "learning_curves.csv")
    written = []
    for metric in METRICS:
        per_spec: dict[str, tuple[list[int], list[float]]] = {}
        for row in rows:
            if row["metric"] != metric:
                continue
            epochs, tests = per_spec.setdefault(row["spec_index"], ([], []))
            epochs.append(int(row["epoch"]))
            tests.append(float(row["test_mse"]))
        if not per_spec:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        for spec_index in sorted(per_spec, key=int):
            epochs, tests = per_spec[spec_index]
            ax.plot(epochs, tests, label=f"model {spec_index}")
        ax.set_yscale("log")
        ax.set_xlabel("epoch")
        ax.set_ylabel("test MSE (z-scored)")
        ax.set_title(f"Learning convergence: {metric}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        written.append(_save(fig, fig_dir / f"learning_{metric}.png"))
    return written


def _plot_training_times(models_dir: Path, fig_dir: Path) -> list[Path]:
    rows = _read_table(models_dir / "training_times.csv")
    specs = sorted({row["spec_index"] for row in rows}, key=int)
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / len(METRICS)
    xs = np.arange(len(specs))
    for k, metric in enumerate(METRICS):
        times = []
        for s in specs:
            match = [float(r["wall_time_seconds"]) for r in rows
                     if r["spec_index"] == s and r["metric"] == metric]
            times.append(match[0] if match else 0.0)
        ax.bar(xs + k * width, times, width, label=metric)
    ax.set_xticks(xs + width)
    ax.set_xticklabels(specs)
    ax.set_xlabel("model index")
    ax.set_ylabel("training time [s]")
    ax.set_title("Training times")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return [_save(fig, fig_dir / "training_times.png")]


def _plot_convergence(traces_dir: Path, fig_dir: Path, scenario: int) -> list[Path]:
    agg_dir = traces_dir / "aggregates"
    files = sorted(agg_dir.glob(f"*_scenario{scenario}.csv"))
    if not files:
        return []
    fig, axes = plt.subplots(1, 3, figsize=(14, 4))
    for path in files:
        variant = path.stem.rsplit("_scenario", 1)[0]
        rows = _read_table(path)
        evals = [int(r["eval_index"]) for r in rows]
        for ax, column in zip(axes, ("mean", "std", "min")):
            ax.plot(evals, [float(r[column]) for r in rows], label=variant, linewidth=1.0)
    for ax, title in zip(axes, ("Mean convergence", "Standard deviation", "Minimum convergence")):
        ax.set_xlabel("function evaluations")
        ax.set_title(title)
    axes[0].set_ylabel("objective")
    axes[0].legend(fontsize=7, ncol=2)
    fig.suptitle(f"Scenario {scenario}")
    fig.tight_layout()
    return [_save(fig, fig_dir / f"convergence_scenario{scenario}.png")]


def _plot_significance(compare_dir: Path, fig_dir: Path, scenario: int) -> list[Path]:
    p_path = compare_dir / f"pvalues_scenario{scenario}.csv"
    if not p_path.exists():
        return []
    rows = _read_table(p_path)
    names = [row["variant"] for row in rows]
    p = np.array([[float(row[n]) for n in names] for row in rows])
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(p, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(names)))
    ax.set_yticks(range(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=7)
    ax.set_yticklabels(names, fontsize=7)
    for i in range(len(names)):
        for j in range(len(names)):
            if i != j and p[i, j] < 0.05:
                ax.text(j, i, "*", ha="center", va="center", color="white", fontsize=9)
    fig.colorbar(image, ax=ax, label="p-value")
    ax.set_title(f"Pairwise comparisons, scenario {scenario} (* = significant at 5%)")
    fig.tight_layout()
    return [_save(fig, fig_dir / f"significance_scenario{scenario}.png")]


def build_report(bundle_dir: Path | str) -> tuple[list[Path], list[str]]:
    """Assemble report.json and figures under `<bundle>/report`.

    Returns (written files, warnings). Missing inputs produce warnings and
    a partial report, never a failure.
    """
    bundle = Path(bundle_dir)
    report_dir = bundle / "report"
    fig_dir = report_dir / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    models_dir = bundle / "models"
    traces_dir = bundle / "traces"
    compare_dir = bundle / "compare"

    warnings: list[str] = []
    written: list[Path] = []
    doc: dict = {"format": "surropt-report", "version": 1, "warnings": warnings}

    manifests = _collect_manifests(bundle)
    if manifests:
        doc["manifest"] = {
            command: {
                rel: digest
                for rel, digest in entry["files"].items()
                if Path(rel).name not in _TIMING_ARTIFACTS
            }
            for command, entry in manifests.items()
        }
        for entry in manifests.values():
            for rel in entry["files"]:
                if not (bundle / rel).exists():
                    warnings.append(f"missing artifact: {rel}")
    else:
        warnings.append("missing artifact: manifest.json")

    mse_path = models_dir / "mse_table.csv"
    if mse_path.exists():
        rows = _read_table(mse_path)
        best = {}
        for metric in METRICS:
            flagged = [r for r in rows if r.get(f"{metric}_best") == "1"]
            if flagged:
                best[metric] = {
                    "spec_index": int(flagged[0]["spec_index"]),
                    "test_mse": float(flagged[0][metric]),
                }
        doc["best_test_mse"] = best
        written.extend(_plot_learning_curves(models_dir, fig_dir))
        written.extend(_plot_training_times(models_dir, fig_dir))
    else:
        warnings.append(f"missing artifact: {mse_path.relative_to(bundle)}")

    best_f: dict[str, dict] = {}
    for scenario in _SCENARIOS:
        layouts_path = traces_dir / f"best_layouts_scenario{scenario}.csv"
        if not layouts_path.exists():
            continue
        rows = _read_table(layouts_path)
        best_row = min(rows, key=lambda r: float(r["best_f"]))
        n_x = sum(1 for c in rows[0] if c.startswith("x"))
        best_f[str(scenario)] = {
            "variant": best_row["variant"],
            "best_f": float(best_row["best_f"]),
            "x": [float(best_row[f"x{i}"]) for i in range(1, n_x + 1)],
        }
        written.extend(_plot_convergence(traces_dir, fig_dir, scenario))
    if best_f:
        doc["best_objective_per_scenario"] = best_f
    elif traces_dir.exists():
        warnings.append("missing artifact: best layout tables")
    else:
        warnings.append(f"missing artifact: {traces_dir.relative_to(bundle)}")

    summary_path = compare_dir / "summary.json"
    if summary_path.exists():
        doc["significance_summary"] = load_json(summary_path)
        for scenario in _SCENARIOS:
            written.extend(_plot_significance(compare_dir, fig_dir, scenario))
    else:
        warnings.append(f"missing artifact: {summary_path.relative_to(bundle)}")

    doc["figures"] = sorted(str(p.relative_to(bundle)) for p in written)
    report_path = report_dir / "report.json"
    dump_json(doc, report_path)
    written.append(report_path)
    return written, warnings
