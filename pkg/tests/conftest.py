from __future__ import annotations

import pytest

from otforge import trees as T
from otforge.demo import build_moviedata
from otforge.schema import SchemaGraph, load_schema
from otforge.trees import OperationTree

from fixtures_chinook import build_chinook


@pytest.fixture(scope="session")
def moviedata_db(tmp_path_factory) -> str:
    return str(build_moviedata(tmp_path_factory.mktemp("dbs") / "moviedata.sqlite"))


@pytest.fixture(scope="session")
def moviedata_schema(moviedata_db) -> SchemaGraph:
    return load_schema(moviedata_db)


@pytest.fixture(scope="session")
def chinook_db(tmp_path_factory) -> str:
    return str(build_chinook(tmp_path_factory.mktemp("dbs") / "chinook.sqlite"))


@pytest.fixture(scope="session")
def chinook_schema(chinook_db) -> SchemaGraph:
    return load_schema(chinook_db)


def make_fig1_tree(schema_id: str = "") -> OperationTree:
    """Who starred in a given movie: filter the movie, join through cast to person,
    project the person's name."""
    root = T.done(
        T.projection(
            T.join(
                T.join(
                    T.selection(T.get_data("movie"), "movie.title", "=", "The Notebook"),
                    T.get_data("cast"),
                    "movie.id",
                    "cast.movie_id",
                ),
                T.get_data("person"),
                "cast.person_id",
                "person.id",
            ),
            ["person.name"],
        )
    )
    return OperationTree(root=root, id="fig1", schema_id=schema_id)


def make_avg_vote_tree(schema_id: str = "") -> OperationTree:
    """Average movie vote over the five-table path with a year and a character filter."""
    chain = T.join(
        T.join(
            T.join(
                T.join(
                    T.get_data("movie"),
                    T.selection(T.get_data("cast"), "cast.character", "=", "Jesse"),
                    "movie.id",
                    "cast.movie_id",
                ),
                T.get_data("person"),
                "cast.person_id",
                "person.id",
            ),
            T.get_data("oscar_nominee"),
            "person.id",
            "oscar_nominee.person_id",
        ),
        T.selection(T.get_data("oscar"), "oscar.year", ">=", 1991),
        "oscar_nominee.oscar_id",
        "oscar.id",
    )
    return OperationTree(root=T.average(chain, "movie.vote_average"), id="avg-vote", schema_id=schema_id)


@pytest.fixture()
def fig1_tree(moviedata_schema) -> OperationTree:
    return make_fig1_tree(moviedata_schema.schema_id)


@pytest.fixture()
def avg_vote_tree(moviedata_schema) -> OperationTree:
    return make_avg_vote_tree(moviedata_schema.schema_id)
