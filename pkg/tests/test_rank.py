from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdledger.errors import IncompleteMatrixError, ParseError, RankInputError
from tdledger.rank import (
    AttributeRating,
    QualityAttribute,
    RankMethod,
    aggregate_overall,
    parse_ratings_csv,
    rank_attribute,
    rank_ratings,
    rank_tables_to_dict,
)

QA = QualityAttribute
R = QA.RELIABILITY

# Per-attribute ranks for the four reference projects.
REFERENCE_RANKS = {
    QA.RELIABILITY: {"JWS": 1, "JDBM3": 3, "Jedis": 2, "MyBatis": 3},
    QA.MAINTAINABILITY: {"JWS": 1, "JDBM3": 2, "Jedis": 3, "MyBatis": 4},
    QA.SECURITY: {"JWS": 1, "JDBM3": 2, "Jedis": 3, "MyBatis": 4},
    QA.STABILITY: {"JWS": 4, "JDBM3": 1, "Jedis": 3, "MyBatis": 2},
}


def test_reliability_column():
    ratings = [
        AttributeRating("JWS", R, grade="A"),
        AttributeRating("Jedis", R, grade="B"),
        AttributeRating("JDBM3", R, grade="C", remediation_effort=3),
        AttributeRating("MyBatis", R, grade="C", remediation_effort=3),
    ]
    assert rank_attribute(ratings) == {"JWS": 1, "Jedis": 2, "JDBM3": 3, "MyBatis": 3}


def test_effort_breaks_grade_ties():
    ratings = [AttributeRating("a", R, grade="C", remediation_effort=10), AttributeRating("b", R, grade="C",
                                                                                         remediation_effort=2)]
    assert rank_attribute(ratings) == {"b": 1, "a": 2}


def test_single_project():
    assert rank_attribute([AttributeRating("x", R, grade="E")]) == {"x": 1}


def test_competition_vs_dense():
    ratings = [AttributeRating(p, R, grade=g) for p, g in [("a", "A"), ("b", "B"), ("c", "B"), ("d", "D")]]
    assert rank_attribute(ratings) == {"a": 1, "b": 2, "c": 2, "d": 4}
    assert rank_attribute(ratings, RankMethod.DENSE) == {"a": 1, "b": 2, "c": 2, "d": 3}


def test_scores_higher_is_better():
    ratings = [AttributeRating("a", QA.STABILITY, score=Fraction(40)), AttributeRating("b", QA.STABILITY, score=90)]
    assert rank_attribute(ratings) == {"b": 1, "a": 2}


def brute_force_ranks(ratings):
    """1 + number of strictly better competitors, by pairwise comparison."""
    def better(x, y):
        gx, gy = "ABCDE".index(x.grade), "ABCDE".index(y.grade)
        return gx < gy or (gx == gy and x.remediation_effort < y.remediation_effort)
    return {r.project: 1 + sum(better(o, r) for o in ratings) for r in ratings}


rating_st = st.tuples(st.sampled_from("ABCDE"), st.integers(0, 5))


@given(st.lists(rating_st, min_size=4, max_size=4))
def test_matches_brute_force(rows):
    ratings = [AttributeRating(f"p{i}", R, grade=g, remediation_effort=e) for i, (g, e) in enumerate(rows)]
    assert rank_attribute(ratings) == brute_force_ranks(ratings)


@given(st.lists(rating_st, min_size=1, max_size=8), st.randoms())
def test_permutation_invariant_and_bounded(rows, rnd):
    ratings = [AttributeRating(f"p{i}", R, grade=g, remediation_effort=e) for i, (g, e) in enumerate(rows)]
    ranks = rank_attribute(ratings)
    shuffled = list(ratings)
    rnd.shuffle(shuffled)
    assert rank_attribute(shuffled) == ranks
    assert all(1 <= v <= len(rows) for v in ranks.values())
    # competition ranking: a rank r held by k projects means the next rank is r + k
    values = sorted(ranks.values())
    for v in set(values):
        nxt = [w for w in values if w > v]
        if nxt:
            assert min(nxt) == v + values.count(v)


def test_mixed_inputs_rejected():
    with pytest.raises(RankInputError):
        rank_attribute([AttributeRating("a", R, grade="A"), AttributeRating("b", QA.SECURITY, grade="A")])
    with pytest.raises(RankInputError):
        rank_attribute([AttributeRating("a", R, grade="A"), AttributeRating("b", R, score=3)])
    with pytest.raises(RankInputError):
        rank_attribute([AttributeRating("a", R, grade="A"), AttributeRating("a", R, grade="B")])


@pytest.mark.parametrize("kw", [{}, {"grade": "A", "score": 1}, {"grade": "F"}, {"grade": "A", "remediation_effort": -1}])
def test_rating_validation(kw):
    with pytest.raises(RankInputError):
        AttributeRating("a", R, **kw)


def test_aggregate_reference_matrix():
    tables = aggregate_overall(REFERENCE_RANKS)
    assert {p: t.sum for p, t in tables.items()} == {"JWS": 7, "JDBM3": 8, "Jedis": 11, "MyBatis": 13}
    assert {p: t.overall_rank for p, t in tables.items()} == {"JWS": 1, "JDBM3": 2, "Jedis": 3, "MyBatis": 4}


def test_full_tie():
    tables = aggregate_overall({a: {"x": 1, "y": 1, "z": 1} for a in QA})
    assert {t.overall_rank for t in tables.values()} == {1}
    assert {t.sum for t in tables.values()} == {4}


def test_incomplete_matrix():
    matrix = {a: dict(v) for a, v in REFERENCE_RANKS.items()}
    del matrix[QA.SECURITY]["Jedis"]
    with pytest.raises(IncompleteMatrixError) as info:
        aggregate_overall(matrix)
    assert "Jedis" in str(info.value) and "Security" in str(info.value)


@given(st.randoms())
def test_aggregate_permutation_invariant(rnd):
    items = list(REFERENCE_RANKS.items())
    rnd.shuffle(items)
    shuffled = {a: dict(rnd.sample(list(v.items()), len(v))) for a, v in items}
    assert {p: t.overall_rank for p, t in aggregate_overall(shuffled).items()} == {
        "JWS": 1, "JDBM3": 2, "Jedis": 3, "MyBatis": 4}


@given(st.lists(st.lists(st.integers(1, 5), min_size=4, max_size=4), min_size=2, max_size=6))
def test_unique_best_sum_ranks_first(rows):
    matrix = {a: {f"p{i}": row[j] for i, row in enumerate(rows)} for j, a in enumerate(QA)}
    tables = aggregate_overall(matrix)
    sums = sorted(t.sum for t in tables.values())
    if sums[0] < sums[1]:
        best = min(tables.values(), key=lambda t: t.sum)
        assert best.overall_rank == 1


CSV = """project,attribute,rating,effort
JWS,Reliability,A,0
Jedis,Reliability,B,5
JDBM3,Reliability,C,1
MyBatis,Reliability,C,1
JWS,Stability,,
"""


def test_csv_and_report():
    ratings = parse_ratings_csv(CSV.replace("JWS,Stability,,\n", "JWS,Stability,40\n"))
    assert len(ratings) == 5
    tables = rank_ratings([r for r in ratings if r.attribute is R])
    rows = rank_tables_to_dict(tables)
    assert [r["project"] for r in rows] == ["JWS", "Jedis", "JDBM3", "MyBatis"]
    assert rows[-1]["overall_rank"] == 3


def test_csv_errors():
    with pytest.raises(ParseError) as info:
        parse_ratings_csv(CSV)
    assert info.value.location == "line 6"
    with pytest.raises(ParseError):
        parse_ratings_csv("project,attribute,rating\nx,Happiness,A\n")
    with pytest.raises(ParseError):
        parse_ratings_csv("")


def test_rank_ratings_requires_complete_matrix():
    ratings = [AttributeRating("a", R, grade="A"), AttributeRating("b", R, grade="B"),
               AttributeRating("a", QA.SECURITY, grade="A")]
    with pytest.raises(IncompleteMatrixError):
        rank_ratings(ratings)


def test_random_smoke():
    rnd = random.Random(7)
    ratings = [AttributeRating(f"p{i}", R, grade=rnd.choice("ABCDE")) for i in range(30)]
    assert rank_attribute(ratings) == brute_force_ranks(ratings)
