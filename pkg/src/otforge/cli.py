"""Command-line entry point.

Subcommands compose over newline-delimited canonical tree records, so the
output of ``sample`` feeds ``compile``/``exec``/``stats``/``score`` directly.
Exit codes: 0 success, 1 domain error (single-line ``error:`` prefix on
stderr), 2 usage error.
"""

from __future__ import annotations

import functools
import json
import signal
import sys
from pathlib import Path

import click

# die quietly when a pipe closes early (e.g. `otforge exec ... | head`)
if hasattr(signal, "SIGPIPE"):
    signal.signal(signal.SIGPIPE, signal.SIG_DFL)

from otforge import analysis, plots, sampling, sqlgen, treeio
from otforge.schema import SchemaError, load_schema
from otforge.service import ServiceError, TaskStore


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _domain_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (
            SchemaError,
            treeio.ParseError,
            sampling.ConfigError,
            sqlgen.ExecutionError,
            sqlgen.UnsupportedNodeError,
            ServiceError,
            ValueError,
            OSError,
        ) as exc:
            _fail(str(exc))

    return wrapper


def _load_bridges(path: str | None) -> list[str] | None:
    if path is None:
        return None
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return list(data.get("bridge_tables", []))


@click.group(context_settings={"auto_envvar_prefix": "OTFORGE"})
def main() -> None:
    """Build and annotate operation-tree corpora over relational databases."""


@main.command("schema")
@click.option("--db", required=True, help="Database file.")
@click.option("--bridges", default=None, help="JSON sidecar forcing bridge tables.")
@_domain_errors
def schema_cmd(db: str, bridges: str | None) -> None:
    """Print the schema graph as JSON."""
    graph = load_schema(db, bridge_overrides=_load_bridges(bridges))
    click.echo(json.dumps(graph.to_dict(), indent=2))


@main.command("sample")
@click.option("--db", required=True, help="Database file.")
@click.option("--config", "config_path", default=None, help="SampleConfig JSON file.")
@click.option("-n", "count", required=True, type=int, help="Number of trees to accept.")
@click.option("--seed", default=None, type=int, help="Overrides the config seed.")
@click.option("-o", "out", required=True, help="Output file for tree records.")
@click.option("--jobs", default=1, type=int, help="Parallel draw workers.")
@click.option("--bridges", default=None, help="JSON sidecar forcing bridge tables.")
@_domain_errors
def sample_cmd(db: str, config_path: str | None, count: int, seed: int | None, out: str, jobs: int, bridges: str | None) -> None:
    """Sample executable, non-empty trees; writes records plus a stats sidecar."""
    config = sampling.SampleConfig.from_json(config_path) if config_path else sampling.SampleConfig()
    if seed is not None:
        config = sampling.SampleConfig(**{**config.to_dict(), "seed": seed})
    graph = load_schema(db, bridge_overrides=_load_bridges(bridges))
    try:
        result = sampling.sample_batch(config, graph, db, count, jobs=jobs)
    except sampling.BudgetExhausted as exc:
        treeio.write_trees(exc.result.trees, out)
        Path(f"{out}.stats.json").write_text(json.dumps(exc.result.stats.to_dict(), indent=2), encoding="utf-8")
        _fail(str(exc))
        return
    treeio.write_trees(result.trees, out)
    Path(f"{out}.stats.json").write_text(json.dumps(result.stats.to_dict(), indent=2), encoding="utf-8")
    click.echo(
        f"accepted {result.stats.accepted}/{result.stats.draws} draws "
        f"(rate {result.stats.acceptance_rate:.3f}) -> {out}",
        err=True,
    )


@main.command("compile")
@click.option("-i", "trees_path", required=True, help="Tree records (ndjson).")
@click.option("--db", required=True, help="Database file (resolves table columns).")
@_domain_errors
def compile_cmd(trees_path: str, db: str) -> None:
    """Print the SQL for each tree, one statement per line."""
    graph = load_schema(db)
    for tree in treeio.read_trees(trees_path):
        click.echo(sqlgen.compile_tree(tree, graph))


@main.command("exec")
@click.option("-i", "trees_path", required=True, help="Tree records (ndjson).")
@click.option("--db", required=True, help="Database file.")
@click.option("--row-cap", default=sqlgen.DEFAULT_ROW_CAP, type=int, show_default=True)
@click.option("--timeout-ms", default=sqlgen.DEFAULT_TIMEOUT_MS, type=int, show_default=True)
@_domain_errors
def exec_cmd(trees_path: str, db: str, row_cap: int, timeout_ms: int) -> None:
    """Execute each tree; prints one JSON result set per line."""
    graph = load_schema(db)
    for tree in treeio.read_trees(trees_path):
        rs = sqlgen.execute(tree, db, graph, row_cap=row_cap, timeout_ms=timeout_ms)
        click.echo(json.dumps({
            "id": tree.id,
            "columns": list(rs.columns),
            "rows": [list(r) for r in rs.rows],
            "truncated": rs.truncated,
        }))


@main.command("stats")
@click.option("-i", "trees_path", required=True, help="Tree records (ndjson).")
@click.option("--questions", default=None, help='ndjson of {"id", "question"} records.')
@click.option("--db", required=True, help="Database file.")
@click.option("--out-dir", default=None, help="Where to write report.json/report.tsv and figures.")
@click.option("--segment-length", default=50, type=int, show_default=True, help="MSTTR segment length.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@_domain_errors
def stats_cmd(trees_path: str, questions: str | None, db: str, out_dir: str | None, segment_length: int, figures: bool) -> None:
    """Print the corpus report; optionally write JSON/TSV and figures."""
    graph = load_schema(db)
    corpus = list(treeio.read_trees(trees_path))
    question_map: dict[str, str] | None = None
    if questions:
        question_map = {}
        with open(questions, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "id" not in record or "question" not in record:
                    _fail(f"questions line {lineno}: records need id and question fields")
                question_map[record["id"]] = record["question"]
    report = analysis.corpus_report(corpus, graph, question_map, segment_length=segment_length)
    click.echo(report.to_text())
    if out_dir:
        target = Path(out_dir)
        target.mkdir(parents=True, exist_ok=True)
        (target / "report.json").write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
        (target / "report.tsv").write_text(report.to_tsv(), encoding="utf-8")
        if figures:
            for path in plots.render_report_figures(report, target):
                click.echo(f"wrote {path}", err=True)


@main.command("score")
@click.option("-i", "trees_path", required=True, help="Tree records (ndjson).")
@_domain_errors
def score_cmd(trees_path: str) -> None:
    """Print hardness per tree: id, category, raw score (tab-separated)."""
    for tree in treeio.read_trees(trees_path):
        h = analysis.hardness(tree)
        click.echo(f"{tree.id}\t{h.category.value}\t{h.raw_score}")


@main.command("serve")
@click.option("--db", required=True, help="Database file the trees run against.")
@click.option("--store", "store_path", required=True, help="Task store file.")
@click.option("--port", default=8040, type=int, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--lease-ttl", default=1800, type=int, show_default=True, help="Lease duration in seconds.")
@click.option("--row-cap", default=50, type=int, show_default=True, help="Rows shown per intermediate result.")
@click.option("--token-assignment/--no-token-assignment", default=True, show_default=True)
@click.option("--bridges", default=None, help="JSON sidecar forcing bridge tables.")
@_domain_errors
def serve_cmd(db: str, store_path: str, port: int, host: str, lease_ttl: int, row_cap: int, token_assignment: bool, bridges: str | None) -> None:
    """Run the annotation service."""
    import uvicorn

    from otforge.api import create_app

    graph = load_schema(db, bridge_overrides=_load_bridges(bridges))
    store = TaskStore(
        store_path,
        schema=graph,
        data_source=db,
        lease_ttl=lease_ttl,
        row_cap=row_cap,
        token_assignment=token_assignment,
    )
    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")


@main.command("export")
@click.option("--store", "store_path", required=True, help="Task store file.")
@click.option("--phase", default=None, help="Restrict to one finished phase.")
@click.option("--report", "report_path", default=None, help="Also write the corpus report JSON here.")
@_domain_errors
def export_cmd(store_path: str, phase: str | None, report_path: str | None) -> None:
    """Stream finished corpus records as ndjson."""
    if not Path(store_path).exists():
        _fail(f"store not found: {store_path}")
    store = TaskStore(store_path)
    records, report = store.export(phase=phase)
    for record in records:
        click.echo(json.dumps(record, ensure_ascii=False))
    if report_path:
        Path(report_path).write_text(json.dumps(report, indent=2), encoding="utf-8")


if __name__ == "__main__":
    main()
