"""Report serialization: JSON, per-class CSV, and a bar-chart figure."""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .pipeline import Report  # noqa: E402


def write_report(report: Report, json_path: str) -> None:
    """Write <path>.json plus a CSV and a figure alongside it."""
    doc = {
        "miou": report.miou,
        "per_class": {str(k): v for k, v in report.per_class_iou.items()},
        "episodes": report.episode_count,
    }
    if report.per_fold is not None:
        doc["per_fold"] = {str(k): v for k, v in report.per_fold.items()}
    with open(json_path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")

    base, _ = os.path.splitext(json_path)
    with open(base + ".csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["class_id", "iou"])
        for cid, iou in report.per_class_iou.items():
            w.writerow([cid, f"{iou:.6f}"])
        w.writerow(["miou", f"{report.miou:.6f}"])

    fig, ax = plt.subplots(figsize=(max(4, len(report.per_class_iou)), 3))
    classes = [str(c) for c in report.per_class_iou]
    ax.bar(classes, list(report.per_class_iou.values()), color="#4878cf")
    ax.axhline(report.miou, color="#d65f5f", linestyle="--",
               label=f"mIoU = {report.miou:.3f}")
    ax.set_xlabel("class")
    ax.set_ylabel("IoU")
    ax.set_ylim(0, 1.05)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(base + ".png", dpi=100)
    plt.close(fig)
