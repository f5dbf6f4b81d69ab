"""Shared fixture trees: one executable case per operation kind.

Built over the movie demo database (at most 3 tables, 20 rows per case) and
used by both the unit suite and the acceptance suite to compare execution
against the independent interpreter. The fixture data was chosen so the
interesting edges exist: release_year 1995 appears twice (argmin ties),
franchise/1995 selections overlap partially (set-op dedup).
"""

from __future__ import annotations

from otforge import trees as T


def semantic_cases() -> dict[str, T.OtNode]:
    movie = T.get_data("movie")
    chain3 = T.join(
        T.join(movie, T.get_data("cast"), "movie.id", "cast.movie_id"),
        T.get_data("person"),
        "cast.person_id",
        "person.id",
    )
    franchise = T.selection(T.get_data("movie"), "movie.is_franchise", "=", True)
    year95 = T.selection(T.get_data("movie"), "movie.release_year", "=", 1995)
    return {
        "done-projection-getdata": T.done(T.projection(movie, ["movie.title", "movie.vote_average"])),
        "selection-contains": T.done(
            T.projection(T.selection(T.get_data("person"), "person.name", "contains", "an"), ["person.name"])
        ),
        "selection-numeric": T.count(T.selection(T.get_data("movie"), "movie.budget", ">=", 30000000)),
        "join-chain": T.done(T.projection(chain3, ["person.name", "movie.title"])),
        "union-dedup": T.count(T.union(franchise, year95)),
        "intersect": T.count(T.intersect(franchise, year95)),
        "diff": T.count(T.diff(year95, franchise)),
        "argmax": T.done(T.projection(T.argmax(movie, "movie.release_year"), ["movie.title"])),
        # release_year 1995 appears twice: argmin must return both movies
        "argmin-ties": T.done(T.projection(T.argmin(movie, "movie.release_year"), ["movie.title"])),
        "distinct": T.count(T.distinct(chain3)),
        "sum": T.sum_of(movie, "movie.budget"),
        "average": T.average(movie, "movie.vote_average"),
        "is-empty-false": T.is_empty(movie),
        "is-empty-true": T.is_empty(T.selection(T.get_data("movie"), "movie.budget", "<", 0)),
        "group-by-avg": T.group_by(movie, "avg", "movie.release_year", "movie.vote_average"),
        "group-by-count": T.group_by(T.get_data("cast"), "count", "cast.movie_id", "cast.person_id"),
        "group-by-sum": T.group_by(movie, "sum", "movie.is_franchise", "movie.budget"),
    }
