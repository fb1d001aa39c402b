import math

import numpy as np
import pytest

from bernlab.oracle import exact_deviation, joint_enumeration_deviation
from bernlab.profiles import Profile


def test_single_half_coordinate():
    # Bin(2, 1/2): deviation 0.5 w.p. 1/2, 0 w.p. 1/2
    assert exact_deviation(Profile.explicit([0.5]), 2).value == pytest.approx(0.25)


def test_zero_profile():
    assert exact_deviation(Profile.explicit([0.0]), 7).value == 0.0


def test_two_outcome_case():
    # E|X - 0.1| with X ~ Bernoulli(0.1): 2 * 0.1 * 0.9
    assert exact_deviation(Profile.explicit([0.1]), 1).value == pytest.approx(0.18)


def test_agrees_with_joint_enumeration():
    rng = np.random.default_rng(42)
    for _ in range(12):
        J = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        p = Profile.explicit(rng.random(J).tolist())
        a = exact_deviation(p, n).value
        b = joint_enumeration_deviation(p, n)
        assert a == pytest.approx(b, abs=1e-12)


def test_appending_zero_coordinate_is_noop():
    vals = [0.3, 0.62, 0.11]
    a = exact_deviation(Profile.explicit(vals), 6).value
    b = exact_deviation(Profile.explicit(vals + [0.0]), 6).value
    assert a == pytest.approx(b, abs=1e-14)


def test_size_limits():
    with pytest.raises(ValueError):
        exact_deviation(Profile.explicit([0.5] * 25), 4)
    with pytest.raises(ValueError):
        exact_deviation(Profile.explicit([0.5]), 65)
    with pytest.raises(ValueError):
        exact_deviation(Profile.power_law(2.0), 4)


def test_step_profile_accepted():
    # any finite-support profile works, not just explicit lists
    v = exact_deviation(Profile.step(0.2, 5), 8).value
    w = exact_deviation(Profile.explicit([0.2] * 4), 8).value
    assert v == pytest.approx(w, abs=1e-14)


def test_value_in_unit_interval():
    p = Profile.explicit([0.9, 0.05, 0.5, 1.0])
    v = exact_deviation(p, 16).value
    assert 0.0 <= v <= 1.0


def test_exact_vs_tight_bound_reported():
    # the default bracket constants are calibration, not derived values, so
    # the exact/expression ratio is reported rather than asserted
    from bernlab.bounds import tight_bound

    print("\nexact vs two-regime expression (reported, not asserted):")
    for vals, n in [([0.25, 0.1], 8), ([0.5] * 4, 16), ([0.02] * 8, 32)]:
        p = Profile.explicit(vals)
        exact = exact_deviation(p, n).value
        rep = tight_bound(p, n)
        ratio = exact / rep.expression if rep.expression else math.inf
        print(
            f"  J={len(vals)} n={n}: exact={exact:.4f} expr={rep.expression:.4f} "
            f"ratio={ratio:.2f} bracket=({rep.value_low:.4f},{rep.value_high:.4f})"
        )
        assert math.isfinite(ratio)
