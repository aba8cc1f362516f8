"""Command-line entry point.

Exit codes: 0 success, 1 domain error, 2 usage error. Configuration precedence
is flags > environment (SINOGATE_API_KEY, SINOGATE_BASE_URL, SINOGATE_MODEL)
> config file (~/.config/sinogate/config.json).
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import analysis, charset, experiment, llm, prompts, stats
from .errors import SinogateError

CONFIG_PATH = Path(os.environ.get("SINOGATE_CONFIG",
                                  Path.home() / ".config" / "sinogate" / "config.json"))


def load_config(**flag_overrides) -> llm.ClientConfig:
    env = dict(os.environ)
    if CONFIG_PATH.exists():
        file_cfg = json.loads(CONFIG_PATH.read_text("utf-8"))
        for key, value in file_cfg.items():
            env.setdefault(f"SINOGATE_{key.upper()}", str(value))
    cfg = llm.ClientConfig.from_env(env)
    for key, value in flag_overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _level(text: str) -> charset.ThresholdLevel:
    try:
        return charset.ThresholdLevel.parse(text)
    except charset.UnknownLevel:
        raise click.UsageError(f"unknown level: {text!r} (expected A1, A1plus, or A2)")


class _DomainErrors(click.Group):
    """Map domain errors to exit code 1 instead of a traceback."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except SinogateError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_DomainErrors)
def main():
    """Measure and serve EBCL character-threshold compliance of LLM Chinese output."""


@main.command()
@click.option("--level", "level_tag", required=True, help="A1, A1plus, or A2.")
@click.option("--mode", type=click.Choice(["occurrence", "type"]), default="occurrence")
@click.option("--text", "text_arg", default=None)
@click.option("--file", "file_arg", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True)
def analyze(level_tag, mode, text_arg, file_arg, as_json):
    """Score a text's out-of-list character ratio against a threshold list."""
    if (text_arg is None) == (file_arg is None):
        raise click.UsageError("provide exactly one of --text or --file")
    text = text_arg if text_arg is not None else Path(file_arg).read_text("utf-8")
    tlist = charset.load_builtin(_level(level_tag))
    report = analysis.deviation(text, tlist, mode)
    if as_json:
        click.echo(json.dumps(report.to_dict(), ensure_ascii=False))
        return
    ratio = "undefined (no Han characters)" if report.out_ratio is None \
        else f"{report.out_ratio * 100:.2f}%"
    click.echo(f"han characters: {report.total_han}")
    click.echo(f"out of list:    {report.out_count}")
    click.echo(f"ratio:          {ratio}")
    if report.out_unique:
        click.echo(f"offenders:      {' '.join(report.out_unique)}")


@main.group("charset")
def charset_group():
    """Inspect and validate threshold character lists."""


@charset_group.command("show")
@click.option("--level", "level_tag", required=True)
@click.option("--cumulative", is_flag=True, help="Union of all levels up to this one.")
@click.option("--json", "as_json", is_flag=True)
def charset_show(level_tag, cumulative, as_json):
    level = _level(level_tag)
    tlist = charset.load_cumulative(level) if cumulative else charset.load_builtin(level)
    if as_json:
        click.echo(json.dumps({"level": level.value, "count": len(tlist),
                               "characters": list(tlist.characters)},
                              ensure_ascii=False))
        return
    click.echo(f"{level.value} ({len(tlist)} characters, source {tlist.source_id}):")
    click.echo(tlist.render())


@charset_group.command("validate")
@click.option("--json", "as_json", is_flag=True)
def charset_validate(as_json):
    """Check builtin lists: counts vs claims, duplicates, level monotonicity."""
    lists = [charset.load_builtin(level) for level in charset.ThresholdLevel]
    report = charset.validate(lists)
    if as_json:
        click.echo(report.to_json())
        return
    for entry in report.lists:
        claim = "unstated" if entry.claimed_size is None else entry.claimed_size
        click.echo(f"{entry.level}: {entry.actual_count} characters "
                   f"(claimed {claim}), duplicates: "
                   f"{' '.join(entry.duplicates) or 'none'}")
    for gap in report.gaps:
        click.echo(f"missing at higher level {gap.pair}: "
                   f"{' '.join(gap.chars) or 'none'}")


@charset_group.command("diff")
@click.option("--a", "a_tag", required=True)
@click.option("--b", "b_tag", required=True)
@click.option("--json", "as_json", is_flag=True)
def charset_diff(a_tag, b_tag, as_json):
    """Characters present at level A but not at level B."""
    result = charset.diff(charset.load_builtin(_level(a_tag)),
                          charset.load_builtin(_level(b_tag)))
    if as_json:
        click.echo(json.dumps(list(result), ensure_ascii=False))
    else:
        click.echo("".join(result))


@main.group("prompt")
def prompt_group():
    """Render tutor system prompts."""


@prompt_group.command("show")
@click.option("--level", "level_tag", required=True)
@click.option("--condition", type=click.Choice(["with_list", "without_list"]),
              default="with_list")
@click.option("--json", "as_json", is_flag=True)
def prompt_show(level_tag, condition, as_json):
    sp = prompts.build_system_prompt(_level(level_tag), condition)
    if as_json:
        click.echo(json.dumps({"level": sp.level.value, "condition": sp.condition,
                               "derived": sp.derived, "text": sp.text},
                              ensure_ascii=False))
    else:
        click.echo(sp.text, nl=False)


@main.command()
@click.option("--json", "as_json", is_flag=True)
def tasks(as_json):
    """List the ten EBCL task codes with their level descriptors."""
    if as_json:
        click.echo(prompts.tasks_to_json())
        return
    for task in prompts.list_tasks():
        click.echo(f"{task.code}: {task.title}")


def _build_client(transport_name: str, fixtures: str, model: str | None) -> llm.Client:
    cfg = load_config(model=model)
    if transport_name == "replay":
        transport = llm.ReplayTransport(fixtures)
    else:
        live = llm.LiveTransport(cfg.base_url, cfg.api_key, cfg.timeout)
        transport = live if transport_name == "live" \
            else llm.RecordTransport(live, fixtures)
    return llm.Client(transport, cfg)


@main.group("experiment")
def experiment_group():
    """Run the compliance experiment matrix and build reports."""


@experiment_group.command("run")
@click.option("--plan", "plan_path", type=click.Path(exists=True), default=None,
              help="Plan JSON; defaults to the full 600-item single-model plan.")
@click.option("--model", default=None, help="Model id for the default plan.")
@click.option("--store", "store_path", default="runs.jsonl", show_default=True)
@click.option("--transport", type=click.Choice(["live", "record", "replay"]),
              default="live", show_default=True)
@click.option("--fixtures", default="fixtures", show_default=True,
              help="Fixture directory for record/replay transports.")
@click.option("--dry-run", is_flag=True, help="Print planned labels; no calls, no writes.")
def experiment_run(plan_path, model, store_path, transport, fixtures, dry_run):
    if plan_path:
        plan = experiment.ExperimentPlan.from_json(Path(plan_path).read_text("utf-8"))
    else:
        cfg = load_config(model=model)
        plan = experiment.ExperimentPlan.default(cfg.model)
    store = experiment.RunStore(store_path)
    client = None if dry_run else _build_client(transport, fixtures, model)
    summary = experiment.execute(plan, client, store, dry_run=dry_run, log=click.echo)
    if dry_run:
        click.echo(f"planned: {summary.planned} items (dry run, no calls made)")
        return
    click.echo(f"planned {summary.planned}, skipped {summary.skipped} already done, "
               f"ok {summary.ok}, failed {summary.failed}")
    if client.cost() is not None:
        click.echo(f"estimated cost: ${client.cost():.2f}")


@experiment_group.command("report")
@click.option("--store", "store_path", default="runs.jsonl", show_default=True)
@click.option("--format", "formats", multiple=True,
              type=click.Choice(["csv", "markdown", "json"]), default=("markdown",))
@click.option("--plot", "plot_path", default=None, help="Write an SVG bar chart here.")
@click.option("--out-dir", default=None,
              help="Write per-model table and plot files into this directory.")
@click.option("--locale", type=click.Choice(["en", "fr"]), default="en", show_default=True)
def experiment_report(store_path, formats, plot_path, out_dir, locale):
    store = experiment.RunStore(store_path)
    if out_dir:
        written = experiment.report(store, out_dir, formats, plot=True, locale=locale)
        for model, paths in written.items():
            for path in paths:
                click.echo(f"{model}: {path}")
        return
    rows = stats.gain_table(stats.aggregate(experiment.measurements(store)))
    for fmt in formats:
        click.echo(stats.render_table(rows, fmt, locale), nl=False)
    if plot_path:
        stats.plot_figure(rows, plot_path)
        click.echo(f"plot written to {plot_path}")


@main.command()
@click.option("--addr", default="127.0.0.1:8000", show_default=True)
@click.option("--transport", type=click.Choice(["live", "record", "replay"]),
              default="live", show_default=True)
@click.option("--fixtures", default="fixtures", show_default=True)
@click.option("--sessions", "session_dir", default="sessions", show_default=True)
@click.option("--static", "static_dir", default=None,
              help="Directory with the built web UI bundle.")
def serve(addr, transport, fixtures, session_dir, static_dir):
    """Start the tutor HTTP API (and optionally serve the web UI)."""
    import uvicorn

    from .tutor import SessionStore, TutorService, create_app

    client = _build_client(transport, fixtures, None)
    service = TutorService(client, SessionStore(session_dir),
                           known_models={client.config.model, "gpt-4o", "gpt-4o-mini"})
    if static_dir is None and Path("frontend/dist").is_dir():
        static_dir = "frontend/dist"
    app = create_app(service, static_dir)
    host, _, port = addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


if __name__ == "__main__":
    main()
