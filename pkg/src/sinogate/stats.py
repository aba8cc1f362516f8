"""Aggregation of per-run deviation ratios into mean/std cells and gain tables.

Gain = mean deviation without the list minus mean with the list; positive gain
means embedding the list helped. Undefined ratios (runs with no Han output) are
excluded from mean/std but counted, so they stay visible in reports.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from typing import Iterable, Literal, Optional

from .charset import ThresholdLevel
from .errors import SinogateError
from .prompts import TASK_CODES

Condition = Literal["with_list", "without_list"]
CONDITIONS: tuple[Condition, Condition] = ("without_list", "with_list")


class EmptyGroup(SinogateError):
    pass


class MissingCondition(SinogateError):
    def __init__(self, model: str, level: ThresholdLevel, task: str, condition: str):
        self.model, self.level, self.task, self.condition = model, level, task, condition
        super().__init__(f"no {condition} cell for {model}/{level.value}/{task}")


@dataclass(frozen=True)
class RunMeasurement:
    model_id: str
    level: ThresholdLevel
    task: str
    condition: Condition
    run_index: int  # 1-based
    ratio: Optional[float]  # None when undefined (no Han output)


@dataclass(frozen=True)
class AggregateCell:
    mean: float
    std: float  # sample (n-1) standard deviation; 0 when n_defined <= 1
    n_defined: int
    n_undefined: int


GroupKey = tuple[str, ThresholdLevel, str, str]  # (model, level, task, condition)


def aggregate(measurements: Iterable[RunMeasurement]) -> dict[GroupKey, AggregateCell]:
    """Group by (model, level, task, condition); mean/std over defined ratios."""
    groups: dict[GroupKey, list[Optional[float]]] = {}
    for m in measurements:
        key = (m.model_id, m.level, m.task, m.condition)
        groups.setdefault(key, []).append(m.ratio)
    cells: dict[GroupKey, AggregateCell] = {}
    for key, ratios in groups.items():
        defined = [r for r in ratios if r is not None]
        if not defined:
            raise EmptyGroup(f"group {key} has zero defined ratios")
        mean = statistics.fmean(defined)
        std = statistics.stdev(defined) if len(defined) > 1 else 0.0
        cells[key] = AggregateCell(mean=mean, std=std, n_defined=len(defined),
                                   n_undefined=len(ratios) - len(defined))
    return cells


@dataclass(frozen=True)
class GainRow:
    model: str
    level: ThresholdLevel
    task: str
    mean_without: float
    std_without: float
    mean_with: float
    std_with: float

    @property
    def gain(self) -> float:
        return self.mean_without - self.mean_with


def _task_rank(task: str) -> int:
    return TASK_CODES.index(task) if task in TASK_CODES else len(TASK_CODES)


def gain_table(cells: dict[GroupKey, AggregateCell]) -> list[GainRow]:
    """One row per (model, level, task); requires both conditions per pair.

    Rows are ordered model-major, then level, then canonical task order.
    """
    pairs = sorted(
        {(model, level, task) for model, level, task, _ in cells},
        key=lambda p: (p[0], p[1].rank, _task_rank(p[2])),
    )
    rows = []
    for model, level, task in pairs:
        without = cells.get((model, level, task, "without_list"))
        with_ = cells.get((model, level, task, "with_list"))
        if without is None:
            raise MissingCondition(model, level, task, "without_list")
        if with_ is None:
            raise MissingCondition(model, level, task, "with_list")
        rows.append(GainRow(
            model=model, level=level, task=task,
            mean_without=without.mean, std_without=without.std,
            mean_with=with_.mean, std_with=with_.std,
        ))
    return rows


def _pct(value: float, locale: str) -> str:
    text = f"{value * 100:.2f}"
    if locale == "fr":
        text = text.replace(".", ",")
    return f"{text} %" if locale == "fr" else f"{text}%"


_CSV_HEADER = "model,level,task,mean_without,std_without,mean_with,std_with,gain"


def render_table(rows: list[GainRow], fmt: str = "markdown", locale: str = "en") -> str:
    """Deterministic text rendering; percentages with two decimals.

    ``locale="fr"`` switches to comma decimal separators for byte-matching the
    source presentation.
    """
    if not rows:
        raise ValueError("rows must be non-empty")
    if fmt == "csv":
        lines = [_CSV_HEADER]
        for r in rows:
            lines.append(",".join([
                r.model, r.level.value, r.task,
                _pct(r.mean_without, locale), _pct(r.std_without, locale),
                _pct(r.mean_with, locale), _pct(r.std_with, locale),
                _pct(r.gain, locale),
            ]))
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = [
            "| Model | Level | Task | Without list | std | With list | std | Gain |",
            "|---|---|---|---|---|---|---|---|",
        ]
        flagged = False
        for r in rows:
            gain = _pct(r.gain, locale)
            if r.gain < 0:
                gain += " *"
                flagged = True
            lines.append("| " + " | ".join([
                r.model, r.level.value, r.task,
                _pct(r.mean_without, locale), _pct(r.std_without, locale),
                _pct(r.mean_with, locale), _pct(r.std_with, locale),
                gain,
            ]) + " |")
        out = "\n".join(lines) + "\n"
        if flagged:
            out += "\n\\* negative gain: the list increased the out-of-list ratio.\n"
        return out
    if fmt == "json":
        payload = [
            {
                "model": r.model, "level": r.level.value, "task": r.task,
                "mean_without": r.mean_without, "std_without": r.std_without,
                "mean_with": r.mean_with, "std_with": r.std_with,
                "gain": r.gain,
            }
            for r in rows
        ]
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format: {fmt!r}")


def rows_from_json(text: str) -> list[GainRow]:
    """Inverse of ``render_table(..., "json")`` up to the derived gain field."""
    rows = []
    for obj in json.loads(text):
        rows.append(GainRow(
            model=obj["model"], level=ThresholdLevel.parse(obj["level"]),
            task=obj["task"],
            mean_without=obj["mean_without"], std_without=obj["std_without"],
            mean_with=obj["mean_with"], std_with=obj["std_with"],
        ))
    return rows


def plot_data(rows: list[GainRow]) -> list[dict]:
    """Grouped-bar dataset, one entry per level, two bars per task."""
    levels: dict[ThresholdLevel, list[GainRow]] = {}
    for r in rows:
        levels.setdefault(r.level, []).append(r)
    data = []
    for level in sorted(levels, key=lambda l: l.rank):
        groups = []
        for r in sorted(levels[level], key=lambda r: _task_rank(r.task)):
            groups.append({
                "task": r.task,
                "bars": [
                    {"condition": "without_list", "mean": r.mean_without, "std": r.std_without},
                    {"condition": "with_list", "mean": r.mean_with, "std": r.std_with},
                ],
            })
        data.append({"level": level.value, "groups": groups})
    return data


def plot_figure(rows: list[GainRow], out_path: str, title: str = "") -> None:
    """Render the grouped-bar chart (one panel per level) to an SVG/PNG file.

    SVG output is made byte-reproducible via a fixed hash salt and no embedded
    creation date.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "sinogate"
    data = plot_data(rows)
    n = len(data)
    fig, axes = plt.subplots(1, n, figsize=(5.2 * n, 3.6), squeeze=False)
    for ax, panel in zip(axes[0], data):
        tasks = [g["task"] for g in panel["groups"]]
        without = [g["bars"][0]["mean"] * 100 for g in panel["groups"]]
        with_ = [g["bars"][1]["mean"] * 100 for g in panel["groups"]]
        xs = range(len(tasks))
        width = 0.38
        ax.bar([x - width / 2 for x in xs], without, width, label="without list",
               color="#c44e52")
        ax.bar([x + width / 2 for x in xs], with_, width, label="with list",
               color="#4c72b0")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(tasks, rotation=60, fontsize=8)
        ax.set_ylabel("out-of-list characters (%)")
        ax.set_title(panel["level"])
        ax.legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Date": None} if out_path.endswith(".svg") else None)
    plt.close(fig)
