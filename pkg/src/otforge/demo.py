"""Seeded demo database: a small movie world.

Five tables (movie, person, cast, oscar, oscar_nominee) wired so that
movie-cast-person-oscar_nominee-oscar is a five-table join path. The rows are
fixed, which makes query results hand-checkable; tests and the README
quickstart both build on it.
"""

from __future__ import annotations

import sqlite3
import sys
from pathlib import Path

_DDL = [
    """CREATE TABLE "movie" (
        id INTEGER PRIMARY KEY,
        title TEXT,
        vote_average REAL,
        budget INTEGER,
        release_year INTEGER,
        is_franchise BOOLEAN
    )""",
    """CREATE TABLE "person" (
        id INTEGER PRIMARY KEY,
        name TEXT,
        birth_place TEXT,
        birthdate DATE
    )""",
    """CREATE TABLE "cast" (
        movie_id INTEGER NOT NULL REFERENCES "movie"(id),
        person_id INTEGER NOT NULL REFERENCES "person"(id),
        character TEXT,
        PRIMARY KEY (movie_id, person_id)
    )""",
    """CREATE TABLE "oscar" (
        id INTEGER PRIMARY KEY,
        year INTEGER,
        category TEXT
    )""",
    """CREATE TABLE "oscar_nominee" (
        person_id INTEGER NOT NULL REFERENCES "person"(id),
        oscar_id INTEGER NOT NULL REFERENCES "oscar"(id),
        PRIMARY KEY (person_id, oscar_id)
    )""",
]

_MOVIES = [
    (1, "The Notebook", 7.8, 29000000, 2004, False),
    (2, "Ocean's Eleven", 7.7, 85000000, 2001, True),
    (3, "Se7en", 8.6, 33000000, 1995, False),
    (4, "Before Sunrise", 8.1, 2500000, 1995, True),
    (5, "The Iron Giant", 8.0, 50000000, 1999, False),
]

_PERSONS = [
    (1, "Ryan Gosling", "London, Canada", "1980-11-12"),
    (2, "Rachel McAdams", "London, Canada", "1978-11-17"),
    (3, "Brad Pitt", "Shawnee, USA", "1963-12-18"),
    (4, "George Clooney", "Lexington, USA", "1961-05-06"),
    (5, "Julia Roberts", "Smyrna, USA", "1967-10-28"),
    (6, "Ethan Hawke", "Austin, USA", "1970-11-06"),
    (7, "Julie Delpy", "Paris, France", "1969-12-21"),
    (8, "Morgan Freeman", "Memphis, USA", "1937-06-01"),
]

_CAST = [
    (1, 1, "Noah"),
    (1, 2, "Allie"),
    (2, 3, "Rusty Ryan"),
    (2, 4, "Danny Ocean"),
    (2, 5, "Tess Ocean"),
    (3, 3, "Mills"),
    (3, 8, "Somerset"),
    (4, 6, "Jesse"),
    (4, 7, "Celine"),
    (5, 6, "Dean McCoppin"),
]

_OSCARS = [
    (1, 1990, "Best Actor"),
    (2, 1991, "Best Picture"),
    (3, 1995, "Best Supporting Actor"),
    (4, 2002, "Best Actress"),
    (5, 1985, "Best Director"),
]

_NOMINATIONS = [
    (3, 3),
    (4, 4),
    (5, 4),
    (6, 2),
    (6, 3),
    (7, 5),
    (8, 1),
]


def build_moviedata(path: str | Path) -> Path:
    """Create (or overwrite) the demo database at ``path``."""
    path = Path(path)
    if path.exists():
        path.unlink()
    conn = sqlite3.connect(path)
    try:
        for statement in _DDL:
            conn.execute(statement)
        conn.executemany('INSERT INTO "movie" VALUES (?, ?, ?, ?, ?, ?)', _MOVIES)
        conn.executemany('INSERT INTO "person" VALUES (?, ?, ?, ?)', _PERSONS)
        conn.executemany('INSERT INTO "cast" VALUES (?, ?, ?)', _CAST)
        conn.executemany('INSERT INTO "oscar" VALUES (?, ?, ?)', _OSCARS)
        conn.executemany('INSERT INTO "oscar_nominee" VALUES (?, ?)', _NOMINATIONS)
        conn.commit()
    finally:
        conn.close()
    return path


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "moviedata.sqlite"
    print(f"wrote {build_moviedata(target)}")
