import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import all_points, random_model, rel_close
from nmlandscapes.errors import (
    InvalidInputError,
    InvalidParameterError,
    MinimumUnknownError,
    UnsupportedModelError,
)
from nmlandscapes.model import (
    BINARY,
    Alphabet,
    InteractionModel,
    Kind,
    Term,
    build_type1,
    build_type1_master,
    build_type1_proportion,
    build_type2,
    build_type3,
    deserialize,
    evaluate,
    evaluate_many,
    max_location,
    max_value,
    min_location,
    min_value,
    min_value_closed_form,
    normalize_by_max,
    normalize_minmax,
    restrict,
    round_half_up,
    sample_coefficient,
    sample_coefficients,
    serialize,
    subset_schedule,
    to_document,
)


def eq5_model():
    terms = (Term((), 1.0), Term((1,), 2.0), Term((2,), 3.0), Term((1, 2), 4.0))
    return InteractionModel(2, terms, BINARY, Kind.TYPE_I)


# --- alphabet / term / model types -------------------------------------------

def test_binary_alphabet_levels():
    assert BINARY.levels.tolist() == [-1.0, 1.0]
    assert Alphabet(0.5, 2.0, 2).levels.tolist() == [-0.5, 2.0]
    assert Alphabet(1.0, 1.0, 3).levels.tolist() == [-1.0, 0.0, 1.0]
    assert Alphabet(1.0, 2.0, 4).levels.tolist() == [-1.0, 0.0, 1.0, 2.0]


@pytest.mark.parametrize("a,b", [(0.0, 1.0), (2.0, 1.0), (-1.0, 1.0)])
def test_alphabet_rejects_bad_ranges(a, b):
    with pytest.raises(InvalidParameterError):
        Alphabet(a, b)


def test_real_alphabet_admits_interval():
    real = Alphabet(1.0, 2.0, None)
    assert real.admits(0.3) and real.admits(2.0) and not real.admits(2.1)
    with pytest.raises(UnsupportedModelError):
        real.levels


def test_terms_are_canonically_sorted():
    m = InteractionModel(3, (Term((1, 2), 1.0), Term((3,), 1.0), Term((1,), 1.0), Term((), 1.0)))
    assert [t.indices for t in m.terms] == [(), (1,), (3,), (1, 2)]
    assert m.m == 4 and m.max_order == 2 and m.constant == 1.0


@pytest.mark.parametrize("indices", [(2, 1), (1, 1), (0, 2)])
def test_term_rejects_bad_indices(indices):
    with pytest.raises(InvalidInputError):
        Term(indices, 1.0)


def test_model_rejects_duplicates_and_out_of_range():
    with pytest.raises(InvalidInputError):
        InteractionModel(2, (Term((1,), 1.0), Term((1,), 2.0)))
    with pytest.raises(InvalidInputError):
        InteractionModel(2, (Term((1, 3), 1.0),))


def test_nm_kinds_enforce_structure():
    with pytest.raises(InvalidInputError):
        InteractionModel(2, (Term((1,), -1.0),), kind=Kind.TYPE_I)
    with pytest.raises(InvalidInputError):
        InteractionModel(4, (Term((1, 3), 1.0),), kind=Kind.TYPE_II)
    with pytest.raises(InvalidInputError):
        InteractionModel(4, (Term((1,), 1.0),), Alphabet(1.0, 2.0), kind=Kind.TYPE_II)
    with pytest.raises(InvalidInputError):
        InteractionModel(4, (Term((1, 2), 1.0),), kind=Kind.TYPE_III)
    # General models may carry negative coefficients
    InteractionModel(2, (Term((1,), -1.0),), kind=Kind.GENERAL)


# --- coefficient sampling ------------------------------------------------------

def test_tiny_sigma_gives_unit_coefficient():
    rng = np.random.default_rng(0)
    assert sample_coefficient(1e-300, rng) == 1.0


@given(sigma=st.floats(1e-3, 1e4), seed=st.integers(0, 2**32 - 1))
def test_coefficients_in_unit_interval(sigma, seed):
    c = sample_coefficients(sigma, np.random.default_rng(seed), 200)
    assert np.all(c > 0) and np.all(c <= 1)


def test_coefficient_mean_decreases_with_sigma():
    rng = np.random.default_rng(1)
    m10 = sample_coefficients(10.0, rng, 100_000).mean()
    m100 = sample_coefficients(100.0, rng, 100_000).mean()
    assert m100 < m10


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_nonpositive_sigma_rejected(sigma):
    with pytest.raises(InvalidParameterError):
        sample_coefficient(sigma, np.random.default_rng(0))


def test_uniform_distribution_ignores_sigma():
    c = sample_coefficients(0.0, np.random.default_rng(0), 1000, "uniform")
    assert np.all((c > 0) & (c <= 1)) and 0.4 < c.mean() < 0.6


# --- builders --------------------------------------------------------------------

def test_master_n10_counts():
    m = build_type1_master(10, 10.0, 3)
    assert m.m == 1023
    assert sum(t.order == 1 for t in m.terms) == 10
    assert m.kind is Kind.TYPE_I and m.constant == 0.0


def test_master_n2_terms():
    assert [t.indices for t in build_type1_master(2, 1.0, 0).terms] == [(1,), (2,), (1, 2)]


def test_master_deterministic():
    assert build_type1_master(6, 5.0, 42) == build_type1_master(6, 5.0, 42)
    assert build_type1_master(6, 5.0, 42) != build_type1_master(6, 5.0, 43)


def test_master_constant_flag():
    m = build_type1_master(3, 1.0, 0, constant=True)
    assert m.m == 8 and m.terms[0].indices == ()


def test_schedule_n10_lengths():
    sched = subset_schedule(build_type1_master(10, 10.0, 0), rng=np.random.default_rng(0))
    ms = [s.m for s in sched]
    assert ms[0] == 10 and ms[1] == 20 and ms[-1] == 1023
    assert sched[-1] == build_type1_master(10, 10.0, 0)
    assert all(b > a for a, b in zip(ms, ms[1:]))


def test_schedule_n3_groups():
    sched = subset_schedule(build_type1_master(3, 1.0, 0), 10, np.random.default_rng(0))
    assert [s.m for s in sched] == [3, 6, 7]


def test_schedule_is_nested_and_lowest_order_first():
    sched = subset_schedule(build_type1_master(6, 2.0, 9), 4, np.random.default_rng(5))
    for prev, nxt in zip(sched, sched[1:]):
        assert set(prev.terms) < set(nxt.terms)
        added = set(nxt.terms) - set(prev.terms)
        assert len({t.order for t in added}) == 1
        k = next(iter(added)).order
        # nothing of lower order may still be missing
        assert all(t in prev.terms for t in sched[-1].terms if t.order < k)


def test_schedule_type2_master():
    sched = subset_schedule(build_type2(10, 10, 10.0, 0), rng=np.random.default_rng(0))
    assert sched[0].m == 5 and sched[-1].m == 512
    assert all(s.kind is Kind.TYPE_II for s in sched)


def test_schedule_requires_main_effects():
    no_mains = InteractionModel(3, (Term((1, 2), 1.0),), kind=Kind.TYPE_I)
    with pytest.raises(InvalidInputError):
        subset_schedule(no_mains, rng=np.random.default_rng(0))


def test_type2_parity_rule():
    assert [t.indices for t in build_type2(4, 1, 1.0, 0).terms] == [(1,), (3,)]
    m2 = [t.indices for t in build_type2(4, 2, 1.0, 0).terms]
    assert m2 == [(1,), (3,), (1, 2), (1, 4), (2, 3), (3, 4)]
    assert (1, 3, 5) in {t.indices for t in build_type2(5, 3, 1.0, 0).terms}


def test_type3_term_sets():
    assert [t.indices for t in build_type3(3, 3, 1.0, 0).terms] == [(1,), (2,), (3,), (1, 2, 3)]
    assert build_type3(32, 1, 32.0, 0).m == 32
    assert build_type3(5, 5, 1.0, 0).m == 5 + 10 + 1
    with pytest.raises(InvalidParameterError):
        build_type3(5, 2, 1.0, 0)


@pytest.mark.parametrize("n,p,expected", [(10, 0.0, 10), (32, 1.0, 528), (10, 0.5, 33), (10, 0.7, 10 + 32)])
def test_proportion_model_sizes(n, p, expected):
    m = build_type1_proportion(n, p, 5.0, 1)
    assert m.m == expected
    assert m.max_order == (2 if p > 0 else 1)


def test_round_half_up():
    assert round_half_up(22.5) == 23 and round_half_up(0.1 * 45) == 5 and round_half_up(2.4999) == 2


def test_restrict_keeps_low_orders():
    m = build_type1_master(5, 2.0, 0)
    r = restrict(m, 2)
    assert r.m == 15 and r.max_order == 2 and set(r.terms) <= set(m.terms)


# --- evaluation ------------------------------------------------------------------

def test_evaluate_eq5_examples():
    m = eq5_model()
    assert evaluate(m, [1, 1]) == 10.0
    assert evaluate(m, [-1, 1]) == -2.0


def test_main_effects_vanish_at_zero():
    alpha = Alphabet(1.0, 1.0, 3)
    m = InteractionModel(3, (Term((), 0.7), Term((1,), 0.2), Term((2,), 0.3), Term((3,), 0.4)), alpha, Kind.TYPE_I)
    assert evaluate(m, [0, 0, 0]) == 0.7


def test_evaluate_validates_points():
    m = eq5_model()
    with pytest.raises(InvalidInputError):
        evaluate(m, [1, 1, 1])
    with pytest.raises(InvalidInputError):
        evaluate(m, [0.5, 1])


def test_evaluate_many_matches_evaluate():
    rng = np.random.default_rng(4)
    m = random_model(rng, 6, alphabet=Alphabet(0.5, 1.5, 3), constant=True)
    pts = np.array(list(all_points(m.alphabet, 6)))
    direct = np.array([evaluate(m, p) for p in pts])
    assert np.allclose(evaluate_many(m, pts), direct, rtol=0, atol=1e-12)


# --- extremes --------------------------------------------------------------------

def test_binary_max_is_coefficient_sum():
    m = build_type1_master(6, 2.0, 1)
    assert max_value(m) == math.fsum(t.coeff for t in m.terms)
    assert max_location(m) == (1.0,) * 6


def test_max_with_b_two():
    m = InteractionModel(2, (Term((1, 2), 0.5),), Alphabet(1.0, 2.0, 2), Kind.TYPE_I)
    assert max_value(m) == 2.0 and max_location(m) == (2.0, 2.0)
    assert evaluate(m, max_location(m)) == max_value(m)


@given(seed=st.integers(0, 10_000), b=st.floats(1.0, 3.0), frac=st.floats(0.05, 1.0))
@settings(max_examples=50, deadline=None)
def test_max_value_equals_evaluation_exactly(seed, b, frac):
    rng = np.random.default_rng(seed)
    m = random_model(rng, 5, alphabet=Alphabet(b * frac, b, None), constant=True)
    assert evaluate(m, max_location(m)) == max_value(m)


def test_max_independent_of_arity():
    m2 = build_type1(4, 3, 2.0, 7, alphabet=Alphabet(1.0, 1.5, 2))
    m3 = build_type1(4, 3, 2.0, 7, alphabet=Alphabet(1.0, 1.5, 3))
    assert max_value(m2) == max_value(m3) and max_location(m2) == max_location(m3)


def test_general_with_negative_coefficients_has_no_known_max():
    g = InteractionModel(2, (Term((1,), -1.0),), kind=Kind.GENERAL)
    with pytest.raises(UnsupportedModelError):
        max_value(g)


def test_type3_min_is_negated_max():
    m = build_type3(6, 5, 3.0, 2)
    assert min_location(m) == (-1.0,) * 6
    assert rel_close(min_value(m), -max_value(m))
    assert rel_close(min_value_closed_form(m), min_value(m))


def test_type2_small_minimum():
    m = InteractionModel(2, (Term((1,), 2.0), Term((1, 2), 3.0)), kind=Kind.TYPE_II)
    assert min_location(m) == (-1.0, 1.0)
    assert min_value(m) == -5.0


def test_type2_n10_argmin_bruteforce():
    # brute force over all 1024 points with direct evaluation
    for seed in range(3):
        m = build_type2(10, 2, 10.0, seed)
        pts = list(itertools.product([-1.0, 1.0], repeat=10))
        vals = [evaluate(m, p) for p in pts]
        best = pts[int(np.argmin(vals))]
        assert best == min_location(m) == (-1.0, 1.0) * 5
        assert min(vals) == min_value(m)


def test_constant_keeps_sign_at_minimum():
    m = build_type2(4, 2, 1.0, 0, constant=True)
    assert rel_close(min_value(m), -(max_value(m) - m.constant) + m.constant)
    with pytest.raises(UnsupportedModelError):
        min_value_closed_form(m)


def test_type1_minimum_unknown():
    with pytest.raises(MinimumUnknownError):
        min_value(build_type1_master(3, 1.0, 0))
    with pytest.raises(MinimumUnknownError):
        min_location(build_type3(3, 3, 1.0, 0, alphabet=Alphabet(0.5, 1.0)))


# --- normalisation ---------------------------------------------------------------

def test_normalisations_at_extremes():
    m = build_type3(5, 3, 2.0, 1)
    fmax, fmin = max_value(m), min_value(m)
    assert normalize_by_max(m, fmax) == 1.0
    assert normalize_minmax(m, fmax) == 1.0
    assert normalize_minmax(m, fmin) == 0.0
    assert normalize_minmax(m, 0.0) == pytest.approx(0.5, abs=1e-15)


def test_normalisation_vectorised():
    m = build_type3(5, 3, 2.0, 1)
    arr = normalize_minmax(m, np.array([min_value(m), max_value(m)]))
    assert arr.tolist() == [0.0, 1.0]


def test_minmax_needs_known_minimum():
    with pytest.raises(MinimumUnknownError):
        normalize_minmax(build_type1_master(3, 1.0, 0), 0.0)


# --- documents -------------------------------------------------------------------

def test_round_trip_random_models():
    rng = np.random.default_rng(11)
    kinds = [Kind.TYPE_I, Kind.TYPE_II, Kind.TYPE_III]
    for i in range(100):
        kind = kinds[i % 3]
        alpha = Alphabet(1.0, 1.0, int(rng.integers(2, 5))) if kind == Kind.TYPE_II else \
            Alphabet(float(rng.uniform(0.1, 1)), 1.0, None if i % 7 == 0 else 2)
        m = random_model(rng, int(rng.integers(1, 8)), kind, alpha, constant=kind != Kind.TYPE_III and i % 2 == 0)
        m = InteractionModel(m.n, m.terms, m.alphabet, m.kind, m.sigma, int(rng.integers(0, 2**62)))
        assert deserialize(serialize(m)) == m


def test_document_fields():
    doc = to_document(build_type3(4, 3, 2.0, 5))
    assert set(doc) == {"format_version", "kind", "n", "m", "max_order", "sigma", "seed", "alphabet", "terms"}
    assert doc["alphabet"] == {"a": 1.0, "b": 1.0, "arity": 2}
    assert doc["terms"][-1] == {"indices": [2, 3, 4], "coeff": doc["terms"][-1]["coeff"]}


def test_document_negative_coefficient_rejected():
    doc = to_document(build_type1_master(2, 1.0, 0))
    doc["terms"][0]["coeff"] = -0.5
    with pytest.raises(InvalidInputError):
        deserialize(json.dumps(doc))
    doc["kind"] = "General"
    assert deserialize(json.dumps(doc)).terms[0].coeff == -0.5


def test_document_duplicate_rejected():
    doc = to_document(build_type1_master(2, 1.0, 0))
    doc["terms"].append(dict(doc["terms"][0]))
    doc["m"] += 1
    with pytest.raises(InvalidInputError):
        deserialize(json.dumps(doc))


@pytest.mark.parametrize("text", ["not json", "[]", '{"format_version": 1}', '{"format_version": 9}'])
def test_malformed_documents(text):
    with pytest.raises(InvalidInputError):
        deserialize(text)
