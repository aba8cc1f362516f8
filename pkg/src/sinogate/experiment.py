"""Experiment matrix expansion, execution, persistence, and reporting.

A plan is models x levels x tasks x {with_list, without_list} x runs. Each run
is a fresh single-turn exchange: the level/condition system prompt plus one
user turn holding the bare task code. Results append to a JSONL store; the
store is the unit of resumability (ok records are never re-executed, failed
ones are retried on the next invocation at the same run index).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from . import stats
from .analysis import DeviationReport, deviation
from .charset import ThresholdLevel, ThresholdList, load_builtin
from .errors import SinogateError
from .llm import (ChatTurn, Client, CompletionRequest, GenerationParams,
                  request_hash)
from .prompts import TASK_CODES, build_system_prompt, task_user_message

DEFAULT_RUNS_PER_CELL = 10


class StoreCorrupt(SinogateError):
    pass


@dataclass(frozen=True)
class ExperimentPlan:
    models: tuple[str, ...]
    levels: tuple[ThresholdLevel, ...] = tuple(ThresholdLevel)
    tasks: tuple[str, ...] = TASK_CODES
    runs_per_cell: int = DEFAULT_RUNS_PER_CELL
    temperature: float = 0.7
    max_output_tokens: Optional[int] = None

    def __post_init__(self):
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")

    @classmethod
    def default(cls, model: str = "gpt-4o") -> "ExperimentPlan":
        return cls(models=(model,))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentPlan":
        doc = json.loads(text)
        return cls(
            models=tuple(doc["models"]),
            levels=tuple(ThresholdLevel.parse(l) for l in doc.get("levels", ["A1", "A1plus", "A2"])),
            tasks=tuple(doc.get("tasks", TASK_CODES)),
            runs_per_cell=doc.get("runs_per_cell", DEFAULT_RUNS_PER_CELL),
            temperature=doc.get("temperature", 0.7),
            max_output_tokens=doc.get("max_output_tokens"),
        )


@dataclass(frozen=True)
class WorkItem:
    model: str
    level: ThresholdLevel
    task: str
    condition: stats.Condition
    run_index: int  # 1-based
    runs_per_cell: int

    @property
    def label(self) -> str:
        return (f"Level {self.level.value} Choice {self.task} "
                f"Run {self.run_index}/{self.runs_per_cell}")

    @property
    def key(self) -> tuple:
        return (self.model, self.level.value, self.task, self.condition, self.run_index)


def expand(plan: ExperimentPlan) -> list[WorkItem]:
    """Deterministic, duplicate-free item order: model, level, task, condition, run."""
    items = []
    for model in plan.models:
        for level in sorted(plan.levels, key=lambda l: l.rank):
            for task in plan.tasks:
                for condition in stats.CONDITIONS:
                    for run in range(1, plan.runs_per_cell + 1):
                        items.append(WorkItem(model, level, task, condition,
                                              run, plan.runs_per_cell))
    return items


class RunStore:
    """Append-only JSONL of run records, indexed by (model, level, task, condition, run)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._index: dict[tuple, dict] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    key = (rec["model"], rec["level"], rec["task"],
                           rec["condition"], rec["run"])
                except (ValueError, KeyError) as exc:
                    raise StoreCorrupt(f"{self.path}:{lineno}: {exc}") from exc
                existing = self._index.get(key)
                if existing and existing["status"] == "ok":
                    continue  # ok records are final; never superseded
                self._index[key] = rec

    def get(self, key: tuple) -> Optional[dict]:
        return self._index.get(key)

    def append(self, record: dict) -> None:
        key = (record["model"], record["level"], record["task"],
               record["condition"], record["run"])
        existing = self._index.get(key)
        if existing and existing["status"] == "ok" and record["status"] == "ok":
            return  # no duplicate ok records for one (cell, run)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
        if not (existing and existing["status"] == "ok"):
            self._index[key] = record

    def ok_records(self) -> list[dict]:
        return [r for r in self._index.values() if r["status"] == "ok"]

    def __len__(self) -> int:
        return len(self._index)


def _make_request(item: WorkItem, plan: ExperimentPlan) -> CompletionRequest:
    system = build_system_prompt(item.level, item.condition)
    return CompletionRequest(
        turns=(ChatTurn("system", system.text),
               ChatTurn("user", task_user_message(item.task))),
        params=GenerationParams(model_id=item.model,
                                temperature=plan.temperature,
                                max_output_tokens=plan.max_output_tokens),
    )


@dataclass
class ExecutionSummary:
    planned: int = 0
    skipped: int = 0
    ok: int = 0
    failed: int = 0
    dry_run: bool = False
    labels: list[str] = field(default_factory=list)


def execute(plan: ExperimentPlan, client: Optional[Client], store: RunStore,
            dry_run: bool = False, log=None) -> ExecutionSummary:
    """Run every pending item of the plan; per-item failures are recorded, not fatal."""
    items = expand(plan)
    summary = ExecutionSummary(planned=len(items), dry_run=dry_run)
    lists = {level: load_builtin(level) for level in plan.levels}
    for item in items:
        existing = store.get(item.key)
        if existing and existing["status"] == "ok":
            summary.skipped += 1
            continue
        if dry_run:
            summary.labels.append(item.label)
            if log:
                log(item.label)
            continue
        request = _make_request(item, plan)
        record = {
            "model": item.model,
            "level": item.level.value,
            "task": item.task,
            "condition": item.condition,
            "run": item.run_index,
            "label": item.label,
            "request_hash": request_hash(request),
            "ts": time.time(),
        }
        try:
            response = client.complete(request)
        except SinogateError as exc:
            record.update(status="failed", response=None, deviation=None,
                          error=str(exc))
            store.append(record)
            summary.failed += 1
            if log:
                log(f"{item.label}  FAILED: {exc}")
            continue
        report = deviation(response.content, lists[item.level], "occurrence")
        record.update(status="ok", response=response.content,
                      deviation=report.to_dict())
        store.append(record)
        summary.ok += 1
        if log:
            ratio = "n/a" if report.out_ratio is None else f"{report.out_ratio:.2%}"
            log(f"{item.label}  out-of-list: {ratio}")
    return summary


def measurements(store: RunStore,
                 lists: Optional[dict[ThresholdLevel, ThresholdList]] = None
                 ) -> list[stats.RunMeasurement]:
    """One measurement per ok record, recomputed from the raw response text.

    The stored deviation block is a cache; recomputation is authoritative.
    """
    lists = lists or {}
    out = []
    for rec in store.ok_records():
        level = ThresholdLevel.parse(rec["level"])
        if level not in lists:
            lists[level] = load_builtin(level)
        report = deviation(rec["response"], lists[level], "occurrence")
        out.append(stats.RunMeasurement(
            model_id=rec["model"], level=level, task=rec["task"],
            condition=rec["condition"], run_index=rec["run"],
            ratio=report.out_ratio,
        ))
    return out


def cached_reports(store: RunStore) -> list[tuple[dict, DeviationReport]]:
    """Pairs of (record, recomputed report) for cache-consistency checks."""
    pairs = []
    for rec in store.ok_records():
        level = ThresholdLevel.parse(rec["level"])
        pairs.append((rec, deviation(rec["response"], load_builtin(level), "occurrence")))
    return pairs


def report(store: RunStore, out_dir: str | Path, formats: Iterable[str] = ("csv",),
           plot: bool = True, locale: str = "en") -> dict[str, list[Path]]:
    """Write one gain table per model (per requested format) plus one plot per model."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = stats.aggregate(measurements(store))
    rows = stats.gain_table(cells)
    by_model: dict[str, list[stats.GainRow]] = {}
    for row in rows:
        by_model.setdefault(row.model, []).append(row)
    written: dict[str, list[Path]] = {}
    ext = {"csv": "csv", "markdown": "md", "json": "json"}
    for model, model_rows in sorted(by_model.items()):
        paths = []
        safe = model.replace("/", "_")
        for fmt in formats:
            path = out_dir / f"gain_{safe}.{ext[fmt]}"
            path.write_text(stats.render_table(model_rows, fmt, locale), "utf-8")
            paths.append(path)
        if plot:
            svg = out_dir / f"gain_{safe}.svg"
            stats.plot_figure(model_rows, str(svg), title=model)
            paths.append(svg)
        written[model] = paths
    return written
