from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from otforge.cli import main
from otforge.treeio import read_trees, serialize, write_trees

from conftest import make_fig1_tree


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


class TestSchemaCmd:
    def test_prints_graph(self, runner, moviedata_db):
        result = invoke(runner, "schema", "--db", moviedata_db)
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert {t["name"] for t in payload["tables"]} == {"movie", "cast", "person", "oscar", "oscar_nominee"}

    def test_bridge_override(self, runner, moviedata_db, tmp_path):
        sidecar = tmp_path / "bridges.json"
        sidecar.write_text(json.dumps({"bridge_tables": ["movie"]}), encoding="utf-8")
        result = invoke(runner, "schema", "--db", moviedata_db, "--bridges", str(sidecar))
        payload = json.loads(result.output)
        assert next(t for t in payload["tables"] if t["name"] == "movie")["is_bridge"]

    def test_missing_db_is_domain_error(self, runner):
        result = invoke(runner, "schema", "--db", "/no/such.sqlite")
        assert result.exit_code == 1
        assert result.output.startswith("error:") or "error:" in result.output

    def test_missing_flag_is_usage_error(self, runner):
        result = invoke(runner, "schema")
        assert result.exit_code == 2


class TestSampleCmd:
    def test_writes_trees_and_stats(self, runner, chinook_db, tmp_path):
        out = tmp_path / "trees.ndjson"
        result = invoke(runner, "sample", "--db", chinook_db, "-n", "10", "--seed", "5", "-o", str(out))
        assert result.exit_code == 0, result.output
        trees = list(read_trees(out))
        assert len(trees) == 10
        stats = json.loads((tmp_path / "trees.ndjson.stats.json").read_text())
        assert stats["accepted"] == 10
        assert 0 < stats["acceptance_rate"] <= 1

    def test_seeded_runs_are_identical(self, runner, chinook_db, tmp_path):
        a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
        invoke(runner, "sample", "--db", chinook_db, "-n", "8", "--seed", "7", "-o", str(a))
        invoke(runner, "sample", "--db", chinook_db, "-n", "8", "--seed", "7", "-o", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_with_seed_override(self, runner, chinook_db, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"question_type": "count", "path_length": [1, 2], "seed": 1}))
        out = tmp_path / "c.ndjson"
        result = invoke(runner, "sample", "--db", chinook_db, "--config", str(config),
                        "-n", "5", "--seed", "9", "-o", str(out))
        assert result.exit_code == 0
        trees = list(read_trees(out))
        assert all(t.root.kind.value == "Count" for t in trees)
        assert all(t.id.startswith("ot-9-") for t in trees)  # the flag won over the file


class TestPipeline:
    """sample output feeds every downstream subcommand untouched."""

    @pytest.fixture()
    def sampled(self, runner, chinook_db, tmp_path):
        out = tmp_path / "corpus.ndjson"
        invoke(runner, "sample", "--db", chinook_db, "-n", "6", "--seed", "3", "-o", str(out))
        return str(out)

    def test_compile(self, runner, sampled, chinook_db):
        result = invoke(runner, "compile", "-i", sampled, "--db", chinook_db)
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert len(lines) == 6
        assert all(line.startswith("SELECT") for line in lines)

    def test_exec(self, runner, sampled, chinook_db):
        result = invoke(runner, "exec", "-i", sampled, "--db", chinook_db)
        assert result.exit_code == 0
        for line in result.output.strip().splitlines():
            payload = json.loads(line)
            assert payload["rows"], "sampled trees are non-empty by construction"

    def test_score(self, runner, sampled):
        result = invoke(runner, "score", "-i", sampled)
        assert result.exit_code == 0
        for line in result.output.strip().splitlines():
            tree_id, category, raw = line.split("\t")
            assert category in ("Easy", "Medium", "Hard", "Extra Hard")
            int(raw)

    def test_stats_with_figures(self, runner, sampled, chinook_db, tmp_path):
        out_dir = tmp_path / "report"
        result = invoke(runner, "stats", "-i", sampled, "--db", chinook_db, "--out-dir", str(out_dir))
        assert result.exit_code == 0
        assert "table coverage" in result.output
        assert (out_dir / "report.json").exists()
        assert (out_dir / "report.tsv").exists()
        assert (out_dir / "hardness_histogram.png").exists()
        assert (out_dir / "component_ratios.png").exists()

    def test_stats_with_questions(self, runner, sampled, chinook_db, tmp_path):
        questions = tmp_path / "q.ndjson"
        with open(questions, "w", encoding="utf-8") as handle:
            for tree in read_trees(sampled):
                handle.write(json.dumps({"id": tree.id, "question": f"What about {tree.id}?"}) + "\n")
        result = invoke(runner, "stats", "-i", sampled, "--db", chinook_db,
                        "--questions", str(questions), "--segment-length", "5", "--no-figures")
        assert result.exit_code == 0
        report = result.output
        assert "msttr" in report
        assert "-" not in report.split("msttr")[1].splitlines()[0]  # msttr has a value now


class TestScoreExamples:
    def test_minimal_tree_scores_easy(self, runner, tmp_path, moviedata_schema):
        from otforge import trees as T
        from otforge.trees import OperationTree

        tree = OperationTree(
            root=T.done(T.projection(T.get_data("movie"), ["movie.title"])), id="minimal"
        )
        path = tmp_path / "one.ndjson"
        write_trees([tree], path)
        result = invoke(runner, "score", "-i", str(path))
        assert result.output.strip() == "minimal\tEasy\t0"

    def test_compile_fig1_prints_sql(self, runner, tmp_path, moviedata_db, moviedata_schema):
        path = tmp_path / "fig1.ndjson"
        write_trees([make_fig1_tree(moviedata_schema.schema_id)], path)
        result = invoke(runner, "compile", "-i", str(path), "--db", moviedata_db)
        assert "The Notebook" in result.output
        assert result.output.startswith("SELECT")


class TestServeExportRoundTrip:
    def test_export_reads_persisted_store(self, runner, moviedata_db, moviedata_schema, tmp_path):
        from otforge.service import TaskStore

        store_path = str(tmp_path / "store.sqlite")
        store = TaskStore(store_path, schema=moviedata_schema, data_source=moviedata_db)
        tree = make_fig1_tree(moviedata_schema.schema_id)
        (task_id,) = store.create_tasks([tree])
        store.next_task("a", 1)
        store.submit_question(task_id, "a", "Who starred in 'The Notebook'?")
        store.next_task("b", 2)
        store.submit_token_assignment(task_id, "b", "Who starred in 'The Notebook'?", [])
        store.close()

        report_path = tmp_path / "report.json"
        result = invoke(runner, "export", "--store", store_path, "--report", str(report_path))
        assert result.exit_code == 0
        records = [json.loads(line) for line in result.output.strip().splitlines()]
        assert len(records) == 1
        assert records[0]["question"]["raw"].startswith("Who starred")
        assert json.loads(report_path.read_text())["query_count"] == 1

    def test_export_missing_store(self, runner, tmp_path):
        result = invoke(runner, "export", "--store", str(tmp_path / "absent.sqlite"))
        assert result.exit_code == 1
        assert "error:" in result.output
