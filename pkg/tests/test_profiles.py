import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bernlab.profiles import (
    CertificationError,
    Profile,
    SignSeq,
    dot,
    functional_S,
    functional_T,
    profile_from_json,
    profile_to_json,
    reflect,
    tail_sum,
    tail_value_range,
)

probs = st.floats(0.0, 1.0, allow_nan=False)
explicit_profiles = st.lists(probs, min_size=1, max_size=12).map(Profile.explicit)


# -- value ------------------------------------------------------------------


def test_power_law_cap_active_at_small_j():
    p = Profile.power_law(2.0)
    assert p.value(1) == 0.5  # 2^(-1/2) > 1/2, cap applies
    assert p.value(100) == pytest.approx(101 ** (-0.5))


def test_step_values():
    p = Profile.step(0.1, 100)
    assert p.value(5) == 0.1
    assert p.value(101) == 0.0
    # size-1 support coordinates (see README on the log-argument convention)
    assert p.value(99) == 0.1
    assert p.value(100) == 0.0


def test_const_far_out():
    assert Profile.constant(0.3).value(10**6) == 0.3


def test_overrides_win():
    p = Profile(Profile.step(0.1, 10).family, {3: 0.7})
    assert p.value(3) == 0.7
    assert p.value(2) == 0.1
    assert p.values(5)[2] == 0.7


def test_values_vector_matches_scalar():
    for p in [
        Profile.power_law(1.5),
        Profile.step_bump(0.1, 0.3, 4, 20),
        Profile.half_band(0.5, seed=3),
        Profile.explicit([0.2, 0.9, 0.0, 1.0]),
    ]:
        vec = p.values(12)
        assert vec.tolist() == [p.value(j) for j in range(1, 13)]


def test_power_law_non_increasing():
    for t in (0.4, 1.0, 3.0):
        vals = Profile.power_law(t).values(500)
        assert np.all(np.diff(vals) <= 0)
        assert np.all(vals <= 0.5) and np.all(vals > 0)


def test_half_band_within_band():
    p = Profile.half_band(0.5, seed=11)
    for j in range(1, 50):
        assert abs(p.value(j) - 0.5) <= 0.5 / math.sqrt(j) + 1e-15


# -- dot --------------------------------------------------------------------


def test_dot_examples():
    assert dot(Profile.constant(0.7)).value(3) == pytest.approx(0.3)
    assert dot(Profile.constant(0.5)).value(9) == 0.5


@given(explicit_profiles)
def test_dot_idempotent(p):
    d1 = dot(p)
    d2 = dot(d1)
    assert d1.values(14).tolist() == d2.values(14).tolist()


def test_dot_coordinatewise_all_families():
    for p in [
        Profile.power_law(3.0),
        Profile.step(0.8, 12),
        Profile.step_bump(0.2, 0.9, 2, 12),
        Profile.half_band(0.4, seed=5),
        Profile(Profile.explicit([0.6, 0.1]).family, {5: 0.95}),
    ]:
        got = dot(p).values(15)
        want = np.minimum(p.values(15), 1 - p.values(15))
        assert np.allclose(got, want, atol=1e-15)


# -- reflect ----------------------------------------------------------------


def test_reflect_examples():
    p = Profile.step(0.1, 50)
    r = reflect(p, SignSeq("const_minus"))
    assert r.value(1) == pytest.approx(0.9)
    assert reflect(p, SignSeq("const_plus")) == p
    r2 = reflect(Profile.explicit([0.2, 0.8]), SignSeq("explicit", (-1, 1)))
    assert (r2.value(1), r2.value(2)) == (pytest.approx(0.8), pytest.approx(0.8))


@given(explicit_profiles, st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_reflect_preserves_dot_and_functionals(p, seed):
    b = SignSeq("seeded", seed=seed)
    r = reflect(p, b)
    assert np.allclose(dot(r).values(14), dot(p).values(14), atol=1e-15)
    assert functional_S(r).value == pytest.approx(functional_S(p).value, abs=1e-12)
    assert functional_T(r).value == pytest.approx(functional_T(p).value, abs=1e-12)


# -- functionals ------------------------------------------------------------


def test_functional_s_step():
    rep = functional_S(Profile.step(0.1, 100))
    assert rep.value == pytest.approx(0.1 * math.log(100), abs=1e-15)


def test_functional_s_diverges_for_half_constant():
    rep = functional_S(Profile.constant(0.5))
    assert math.isinf(rep.value)
    assert rep.attained_at == "limit"
    assert len(rep.witness) >= 2
    assert rep.witness[-1][1] > rep.witness[0][1]


def test_functional_s_zero():
    assert functional_S(Profile.explicit([0, 0, 0])).value == 0.0


def test_functional_t_power_law_exact():
    for t in (0.5, 1.0, 2.0, 5.0):
        assert functional_T(Profile.power_law(t)).value == pytest.approx(t, abs=1e-12)


def test_functional_t_step():
    rep = functional_T(Profile.step(0.1, 100))
    assert rep.value == pytest.approx(math.log(100) / math.log(10), abs=1e-14)


def test_functional_t_zero_profile():
    assert functional_T(Profile.explicit([0.0, 0.0])).value == 0.0


def test_step_bump_closed_forms():
    q, qp, size = 0.1, 0.45, 100
    p = Profile.step_bump(q, qp, 7, size)
    assert functional_S(p).value == pytest.approx(
        max(q * math.log(size), qp * math.log(2)), abs=1e-14
    )
    assert functional_T(p).value == pytest.approx(
        max(math.log(size) / math.log(1 / q), math.log(2) / math.log(1 / qp)),
        abs=1e-14,
    )


@given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=2, max_size=10), st.randoms())
@settings(max_examples=40, deadline=None)
def test_permutation_invariance_explicit(vals, rnd):
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    a, b = Profile.explicit(vals), Profile.explicit(shuffled)
    assert functional_S(a).value == pytest.approx(functional_S(b).value, abs=1e-12)
    assert functional_T(a).value == pytest.approx(functional_T(b).value, abs=1e-12)


def test_half_band_functionals_diverge():
    p = Profile.half_band(0.5, seed=1)
    assert math.isinf(functional_S(p).value)
    assert math.isinf(functional_T(p).value)


def test_functionals_reject_bad_tol():
    with pytest.raises(ValueError):
        functional_S(Profile.constant(0.1), tol=0.0)


# -- tails ------------------------------------------------------------------


def test_tail_sum_finite_support():
    assert tail_sum(Profile.step(0.3, 10), 9).high == 0.0
    b = tail_sum(Profile.step(0.3, 10), 5)
    assert b.low == b.high == pytest.approx(0.3 * 4)


def test_tail_sum_power_law_divergent():
    assert not tail_sum(Profile.power_law(2.0), 10).is_finite


def test_tail_sum_power_law_bracket():
    b = tail_sum(Profile.power_law(0.5), 100)
    # sum_{j>100} (j+1)^-2 lies in [1/102, 1/101]
    assert b.low == pytest.approx(1 / 102)
    assert b.high == pytest.approx(1 / 101)
    truth = sum((j + 1) ** -2.0 for j in range(101, 200000))
    assert b.low <= truth <= b.high


def test_tail_sum_seeded_reflection_uncertifiable():
    r = reflect(Profile.power_law(0.5), SignSeq("seeded", seed=2))
    with pytest.raises(CertificationError):
        tail_sum(r, 5)


def test_tail_value_range():
    lo, hi = tail_value_range(Profile.power_law(2.0), 10)
    assert lo == 0.0 and hi == pytest.approx(12 ** (-0.5))
    lo, hi = tail_value_range(Profile.constant(0.3), 99)
    assert (lo, hi) == (0.3, 0.3)
    lo, hi = tail_value_range(Profile.half_band(0.5, seed=0), 24)
    assert lo == pytest.approx(0.5 - 0.1) and hi == pytest.approx(0.5 + 0.1)


# -- serialization ----------------------------------------------------------


@pytest.mark.parametrize(
    "p",
    [
        Profile.power_law(2.0),
        Profile.step(0.1, 100),
        Profile.step_bump(0.1, 0.3, 5, 100),
        Profile.constant(0.3),
        Profile.half_band(0.5, seed=7),
        Profile(Profile.explicit([0.1, 0.9]).family, {4: 0.25}),
        reflect(Profile.step(0.2, 9), SignSeq("const_minus")),
        reflect(Profile.power_law(1.0), SignSeq("seeded", seed=3)),
    ],
)
def test_json_round_trip(p):
    blob = json.dumps(profile_to_json(p))
    q = profile_from_json(blob)
    assert q == p
    assert q.values(10).tolist() == p.values(10).tolist()
