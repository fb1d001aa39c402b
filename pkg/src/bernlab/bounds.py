"""Closed-form bounds and the minimax lower-bound construction.

Universal constants are existential in the underlying theory, so they are
runtime configuration here (defaults C=8, c=0.1, c_prime=4, asymptotic-
equivalence pair (1/4, 4)); every report carries the values used.  These
defaults are calibration choices of this package, not derived quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .profiles import (
    CertificationError,
    Const,
    HalfBand,
    PowerLaw,
    Profile,
    Reflected,
    functional_S,
    tail_sum,
)

__all__ = [
    "DEFAULT_C",
    "DEFAULT_SMALL_C",
    "DEFAULT_C_PRIME",
    "DEFAULT_EQUIV_PAIR",
    "bernoulli_kl",
    "symmetric_kl",
    "alpha_ie",
    "fano_bound",
    "union_lower_bound",
    "solve_qprime",
    "QPrimeSolution",
    "step_profiles",
    "TightBoundReport",
    "tight_bound",
    "MinimaxInstance",
    "minimax_instance",
]

DEFAULT_C = 8.0
DEFAULT_SMALL_C = 0.1
DEFAULT_C_PRIME = 4.0
DEFAULT_EQUIV_PAIR = (0.25, 4.0)

_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200


def bernoulli_kl(q: float, q_prime: float) -> float:
    """q log(q/q') + (1-q) log((1-q)/(1-q')), with 0 log 0 = 0.

    Boundary q' in {0, 1} is allowed only when q agrees; otherwise +inf.
    """
    if not 0.0 <= q <= 1.0 or not 0.0 <= q_prime <= 1.0:
        raise ValueError("arguments must be probabilities")
    if q_prime in (0.0, 1.0):
        return 0.0 if q == q_prime else math.inf
    out = 0.0
    if q > 0.0:
        out += q * math.log(q / q_prime)
    if q < 1.0:
        out += (1.0 - q) * math.log((1.0 - q) / (1.0 - q_prime))
    return out


def symmetric_kl(q: float, q_prime: float) -> float:
    return bernoulli_kl(q, q_prime) + bernoulli_kl(q_prime, q)


def alpha_ie(xs: Sequence[float]) -> float:
    """Inclusion-exclusion of independent event probabilities.

    alpha_1(x) = x and alpha_{N+1}(..., x) = x + (1-x) alpha_N(...); equals
    1 - prod(1 - x_i).
    """
    out = 0.0
    for x in xs:
        if not 0.0 <= x <= 1.0:
            raise ValueError("probabilities required")
        out = x + (1.0 - x) * out
    return out


def fano_bound(alpha: float, beta: float, r: int) -> float:
    """(alpha/2) * (1 - (beta + log 2)/log r), clamped at zero."""
    if alpha < 0 or beta < 0 or r < 2:
        raise ValueError("need alpha, beta >= 0 and r >= 2")
    return max(0.0, (alpha / 2.0) * (1.0 - (beta + math.log(2.0)) / math.log(r)))


def union_lower_bound(ps: Sequence[float]) -> float:
    """(1 - 1/e) * min(1, sum of probabilities) <= P(union)."""
    s = 0.0
    for p in ps:
        if not 0.0 <= p <= 1.0:
            raise ValueError("probabilities required")
        s += p
    return (1.0 - math.exp(-1.0)) * min(1.0, s)


class QPrimeSolution(NamedTuple):
    q_prime: float
    residual: float
    saturated: bool
    iterations: int


def solve_qprime(q: float, target: float) -> QPrimeSolution:
    """Solve h(q||x) + h(x||q) = target for x in [q, 1/2] by bisection.

    The map is continuous and strictly increasing on [q, 1/2]; if the target
    exceeds its value at 1/2, returns 1/2 flagged saturated.
    """
    if not 0.0 < q <= 0.5:
        raise ValueError("q must lie in (0, 1/2]")
    if target < 0.0:
        raise ValueError("target must be nonnegative")
    if target == 0.0:
        return QPrimeSolution(q, 0.0, False, 0)
    top = symmetric_kl(q, 0.5)
    if target >= top:
        return QPrimeSolution(0.5, top - target, True, 0)
    lo, hi = q, 0.5
    it = 0
    while it < _BISECT_MAX_ITER:
        mid = 0.5 * (lo + hi)
        val = symmetric_kl(q, mid)
        if abs(val - target) <= _BISECT_TOL:
            return QPrimeSolution(mid, val - target, False, it)
        if val < target:
            lo = mid
        else:
            hi = mid
        it += 1
    mid = 0.5 * (lo + hi)
    return QPrimeSolution(mid, symmetric_kl(q, mid) - target, False, it)


def step_profiles(q: float, q_prime: float, size: int) -> list[Profile]:
    """The bump family: size-1 bumped profiles plus the flat one.

    Any two distinct members are exactly q_prime - q apart in sup norm.
    """
    if not 0.0 <= q <= q_prime <= 0.5:
        raise ValueError("need 0 <= q <= q' <= 1/2")
    if size < 2:
        raise ValueError("size must be >= 2")
    out = [Profile.step_bump(q, q_prime, k, size) for k in range(1, size)]
    out.append(Profile.step(q, size))
    return out


# ---------------------------------------------------------------------------
# Tightened two-regime bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TightBoundReport:
    regime: str  # active | dormant
    value_low: float
    value_high: float
    expression: float
    sqrt_term: float = math.nan
    log_sup_term: float = math.nan
    coordinate_sum: float = math.nan
    regime_stat: float = math.nan  # n * sup_j 2 j p_j (inf when divergent)
    const_pair: tuple = DEFAULT_EQUIV_PAIR


def _regime_stat_sup(p: Profile) -> float:
    """sup_j j * p_j, certified per family (inf when it diverges)."""
    end = p.support_end()
    if end is not None:
        if end == 0:
            return 0.0
        j = np.arange(1, end + 1, dtype=np.float64)
        return float((j * p.values(end)).max())
    fam = p.family
    base = None
    if isinstance(fam, Const):
        base = math.inf if fam.value > 0 else 0.0
    elif isinstance(fam, HalfBand):
        base = math.inf
    elif isinstance(fam, PowerLaw):
        t = fam.log_ratio
        if t >= 1.0:
            base = math.inf if t > 1.0 else 1.0  # t=1: j/(j+1) -> 1
        else:
            peak = max(2, int(math.ceil(t / (1.0 - t))) + 2)
            j = np.arange(1, peak + 1, dtype=np.float64)
            base = float((j * p.values(peak)).max())
    elif isinstance(fam, Reflected):
        raise CertificationError("no j*p_j envelope for reflections")
    else:
        raise CertificationError(f"no j*p_j envelope for {type(fam).__name__}")
    for j, v in p.overrides.items():
        if math.isfinite(base):
            base = max(base, j * v)
    return base


def _log_sup_term(p: Profile, n: int) -> float:
    """Certified upper envelope of sup_j log(j+1)/(n log(2 + log(j+1)/(n p_j))).

    Exact for finite support; for power laws the supremum of the continuous
    relaxation is scanned on a dense log grid and capped with the analytic
    tail envelope (within ~6 percent); constant-like tails diverge (+inf).
    """
    end = p.support_end()
    if end is not None:
        if end == 0:
            return 0.0
        j = np.arange(1, end + 1, dtype=np.float64)
        vals = p.values(end)
        with np.errstate(divide="ignore"):
            inner = np.where(vals > 0, np.log1p(1.0 + np.log(j + 1.0) / (n * np.where(vals > 0, vals, 1.0))), math.inf)
        # log(2 + x) spelled via log1p(1 + x)
        terms = np.where(np.isfinite(inner), np.log(j + 1.0) / (n * inner), 0.0)
        return float(terms.max())
    fam = p.family
    if isinstance(fam, (Const, HalfBand)):
        return math.inf  # terms grow like log(j)/ (n log log j)
    if isinstance(fam, PowerLaw):
        t = fam.log_ratio
        k = 20.0
        L = np.exp(np.linspace(math.log(math.log(2.0)), math.log(max(k * t * math.log(max(n, 2)), 50.0)), 8192))
        pj = np.minimum(0.5, np.exp(-L / t))  # p at log-position L
        terms = L / (n * np.log(2.0 + L / (n * pj)))
        grid_max = float(terms.max())
        tail_env = (t / n) * k / (k - 1.0)
        best = max(grid_max, tail_env)
        for j, v in p.overrides.items():
            if v > 0:
                best = max(best, math.log(j + 1.0) / (n * math.log(2.0 + math.log(j + 1.0) / (n * v))))
        return best
    raise CertificationError(f"no log-term envelope for {type(fam).__name__}")


def tight_bound(
    p: Profile, n: int, const_pair: tuple[float, float] = DEFAULT_EQUIV_PAIR
) -> TightBoundReport:
    """Evaluate the two-regime deviation expression with a constant bracket."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c_low, c_high = const_pair
    stat = _regime_stat_sup(p)
    regime_stat = 2.0 * n * stat
    if regime_stat > 1.0:
        s_rep = functional_S(p)
        sqrt_term = math.sqrt(s_rep.value / n) if s_rep.is_finite else math.inf
        log_term = _log_sup_term(p, n)
        expr = min(1.0, sqrt_term + log_term)
        return TightBoundReport(
            "active", c_low * expr, c_high * expr, expr, sqrt_term, log_term,
            math.nan, regime_stat, const_pair,
        )
    ts = tail_sum(p, 0)
    total = ts.high if ts.is_finite else math.inf
    expr = min(1.0 / n, total)
    return TightBoundReport(
        "dormant", c_low * expr, c_high * expr, expr, math.nan, math.nan,
        total, regime_stat, const_pair,
    )


# ---------------------------------------------------------------------------
# Minimax construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MinimaxInstance:
    s: float
    t: float
    n: int
    C: float
    small_c: float
    c_prime: float
    q: float
    J_plus_1: int
    q_prime: float
    saturated: bool
    kl_residual: float
    S_flat: float  # functional S of the flat profile, after rounding
    T_flat: float
    T_prerounding: float
    lower_bound: float
    Q_factor: float
    fano_value: float
    in_class_S: bool
    in_class_T: bool
    ratio_condition_ok: bool
    n_threshold: float
    n_threshold_denominator_positive: bool
    n_threshold_ok: bool
    sandwich_s_ok: bool
    sandwich_t_ok: bool | None
    profiles: tuple = field(default=(), repr=False)

    def to_json(self) -> dict:
        from .profiles import profile_to_json

        d = {
            k: getattr(self, k)
            for k in self.__dataclass_fields__
            if k != "profiles"
        }
        d["profiles"] = [profile_to_json(pp) for pp in self.profiles]
        return d


PROFILE_MATERIALIZE_CAP = 100_000
_IN_CLASS_TOL = 1e-12


def minimax_instance(
    s: float,
    t: float,
    n: int,
    C: float = DEFAULT_C,
    small_c: float = DEFAULT_SMALL_C,
    c_prime: float = DEFAULT_C_PRIME,
    materialize_profiles: bool = True,
) -> MinimaxInstance:
    """Build the hard instance for given scales (s, t) and sample count n.

    Requires t/s > e (the correction factor is undefined at the boundary).
    Range conditions of the underlying theorem are evaluated and reported as
    flags; the construction itself proceeds regardless.
    """
    if s <= 0 or t <= 0 or n < 1:
        raise ValueError("need s, t > 0 and n >= 1")
    ratio = t / s
    if ratio <= math.e:
        raise ValueError("t/s must exceed e (correction factor undefined at the boundary)")
    L = math.log(ratio)
    LL = math.log(L)
    q = 1.0 / (ratio * L)
    log_target = t * L
    if log_target > 690.0:
        raise ValueError("family size overflows the representable range")
    J_plus_1 = int(math.ceil(math.exp(log_target)))
    logJ1 = math.log(J_plus_1)

    S_flat = q * logJ1
    T_flat = logJ1 / math.log(1.0 / q)
    T_pre = log_target / math.log(1.0 / q)  # equals t * L / (L + log L)

    sol = solve_qprime(q, logJ1 / (2.0 * C * n))
    qp = sol.q_prime

    in_class_S = qp * math.log(2.0) <= S_flat + _IN_CLASS_TOL
    in_class_T = (
        math.log(2.0) / math.log(1.0 / qp) <= T_flat + _IN_CLASS_TOL
        if qp < 1.0
        else False
    ) and T_flat <= t + _IN_CLASS_TOL

    sym = symmetric_kl(q, qp)
    sandwich_s_ok = (
        (qp - q) ** 2 / qp <= sym + 1e-12 and sym <= 2.0 * (qp - q) ** 2 / q + 1e-12
    )
    if qp >= 9.0 * q:
        denom = q * ((qp - q) / q) * math.log((qp - q) / q)
        ratio_t = sym / denom if denom > 0 else math.inf
        sandwich_t_ok = 0.5 - 1e-12 <= ratio_t <= 4.0 + 1e-12
    else:
        sandwich_t_ok = None

    ratio_ok = c_prime * math.log(n) / n <= s / t <= math.exp(-1.0)
    num = (t * t) / (C * s) * L
    den = ratio * L * math.exp(-log_target / math.log(2.0)) - 1.0
    n_threshold = num / den if den != 0.0 else math.inf
    den_pos = den > 0.0
    n_threshold_ok = n >= n_threshold if den_pos else True

    Q = C / (1.0 + L / LL)
    lower = min(1.0, max(small_c * math.sqrt(s / n), Q * t / n))
    fano = fano_bound(qp - q, n * sym, J_plus_1)

    profs: tuple = ()
    if materialize_profiles and J_plus_1 <= PROFILE_MATERIALIZE_CAP:
        profs = tuple(step_profiles(q, qp, J_plus_1))

    return MinimaxInstance(
        s=s,
        t=t,
        n=n,
        C=C,
        small_c=small_c,
        c_prime=c_prime,
        q=q,
        J_plus_1=J_plus_1,
        q_prime=qp,
        saturated=sol.saturated,
        kl_residual=sol.residual,
        S_flat=S_flat,
        T_flat=T_flat,
        T_prerounding=T_pre,
        lower_bound=lower,
        Q_factor=Q,
        fano_value=fano,
        in_class_S=in_class_S,
        in_class_T=in_class_T,
        ratio_condition_ok=ratio_ok,
        n_threshold=n_threshold,
        n_threshold_denominator_positive=den_pos,
        n_threshold_ok=n_threshold_ok,
        sandwich_s_ok=sandwich_s_ok,
        sandwich_t_ok=sandwich_t_ok,
        profiles=profs,
    )
