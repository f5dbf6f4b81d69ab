from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from otforge.api import create_app
from otforge.sampling import SampleConfig, sample_batch
from otforge.service import TaskStore
from otforge.treeio import serialize

from conftest import make_fig1_tree


@pytest.fixture(scope="module")
def tree_objs(moviedata_schema, moviedata_db):
    batch = sample_batch(SampleConfig(seed=99, path_length=(1, 3)), moviedata_schema, moviedata_db, 4)
    return [json.loads(serialize(t)) for t in batch.trees]


@pytest.fixture()
def client(moviedata_schema, moviedata_db):
    store = TaskStore(":memory:", schema=moviedata_schema, data_source=moviedata_db, lease_ttl=300)
    return TestClient(create_app(store))


def test_full_phase1_phase2_cycle(client, moviedata_schema):
    fig1 = json.loads(serialize(make_fig1_tree(moviedata_schema.schema_id)))
    created = client.post("/tasks", json={"trees": [fig1], "idempotency_key": "api-1"})
    assert created.status_code == 200
    (task_id,) = created.json()["task_ids"]

    leased = client.get("/tasks/next", params={"phase": 1, "annotator": "ann-a"}).json()["task"]
    assert leased["task_id"] == task_id
    assert leased["lease"]["annotator"] == "ann-a"

    detail = client.get(f"/tasks/{task_id}").json()["task"]
    assert detail["node_results"]["r"]["rows"]  # intermediate results shipped to the UI

    question = "Who starred in 'The Notebook'?"
    answered = client.post(f"/tasks/{task_id}/question", json={"annotator": "ann-a", "question": question})
    assert answered.json()["task"]["phase"] == "Phase2Pending"

    assert client.get("/tasks/next", params={"phase": 2, "annotator": "ann-a"}).json()["task"] is None
    phase2 = client.get("/tasks/next", params={"phase": 2, "annotator": "ann-b"}).json()["task"]
    assert phase2["task_id"] == task_id

    suggestions = client.get(f"/tasks/{task_id}/prematch").json()["suggestions"]
    assert suggestions and suggestions[0]["node_path"].startswith("r")

    submitted = client.post(
        f"/tasks/{task_id}/tokens",
        json={"annotator": "ann-b", "corrected_question": question, "assignments": suggestions},
    )
    assert submitted.json()["task"]["phase"] == "Phase2Done"

    export = client.get("/export").json()
    assert len(export["records"]) == 1
    assert export["report"]["query_count"] == 1


def test_adapt_and_skip_over_http(client, tree_objs):
    client.post("/tasks", json={"trees": tree_objs})
    task = client.get("/tasks/next", params={"phase": 1, "annotator": "x"}).json()["task"]
    constraints = task["constraints"]
    if constraints:
        bad = client.post(
            f"/tasks/{task['task_id']}/adapt",
            json={"annotator": "x", "edits": [{"node_path": "r", "value": 1}]},
        )
        assert bad.status_code == 422
    skipped = client.post(
        f"/tasks/{task['task_id']}/skip", json={"annotator": "x", "reason": "nonsensical"}
    )
    assert skipped.json()["task"]["phase"] == "Skipped"


def test_error_mapping(client, tree_objs):
    assert client.get("/tasks/nope").status_code == 404
    client.post("/tasks", json={"trees": tree_objs[:1], "idempotency_key": "k"})
    conflict = client.post("/tasks", json={"trees": tree_objs[1:2], "idempotency_key": "k"})
    assert conflict.status_code == 409
    unleased = client.post("/tasks/nope/skip", json={"annotator": "x", "reason": "other"})
    assert unleased.status_code == 404
    bad_tree = client.post("/tasks", json={"trees": [{"op": "Nope", "args": {}, "children": []}]})
    assert bad_tree.status_code == 422


def test_phase_validation(client):
    response = client.get("/tasks/next", params={"phase": 7, "annotator": "x"})
    assert response.status_code == 422
