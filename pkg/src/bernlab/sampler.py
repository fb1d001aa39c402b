"""Seeded sampling from Bernoulli product measures and Monte Carlo deviation.

The infinite coordinate tail is never silently dropped: every run reports a
certified bracket.  `truncation_index` picks the simulated width J and one of
three tail modes:

  exact     the profile is zero beyond J (finite support);
  summable  n * sum_{j>J} p_j <= delta, so with probability >= 1 - delta no
            sample has a one beyond J and a zero-filled estimator tail sees
            deviation at most sup_{j>J} p_j;
  divergent sum p_j = inf; J is chosen so that with probability >= 1 - delta
            no tail coordinate collects m successes (m = smallest moment
            order with sum of folded p^m finite), which pins the unseen
            empirical means below (m-1)/n.

`deviation_mc` combines the per-repetition supremum over the simulated
coordinates with an estimator-aware tail bracket: the estimate's implicit
tail rule (zero / half / constant c) is compared against the certified range
of the profile's tail values.  Repetitions run in fixed blocks of
`_rng.REP_BLOCK`, one Philox stream per block, so results are bit-identical
for any worker count.
"""

from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _rng
from .profiles import (
    CertificationError,
    Profile,
    dot_power_tail_sum,
    profile_from_json,
    profile_to_json,
    tail_sum,
    tail_value_range,
)

__all__ = [
    "SampleBlock",
    "DeviationEstimate",
    "truncation_index",
    "sample_block",
    "deviation_mc",
    "save_sample_block",
    "load_sample_block",
]

DEFAULT_DELTA = 1e-3
MAX_MOMENT_ORDER = 16


@dataclass(frozen=True)
class SampleBlock:
    """n x J binary matrix of draws from the truncated product measure."""

    data: np.ndarray  # uint8, shape (n, J)
    n: int
    J: int
    tail_mode: str  # exact | summable | divergent
    tail_risk: float
    seed: int

    def __post_init__(self):
        if self.data.shape != (self.n, self.J):
            raise ValueError("data shape does not match (n, J)")


@dataclass(frozen=True)
class DeviationEstimate:
    """Monte Carlo bracket [low, high] for the expected supremum deviation."""

    low: float
    high: float
    std_err: float
    reps: int
    tail_bias: float
    n: int
    J: int = 0
    tail_mode: str = "exact"
    delta: float = DEFAULT_DELTA
    seed: int = 0


def _smallest_finite_moment(p: Profile) -> int:
    """Smallest m >= 2 with sum_j min(p_j, 1-p_j)^m < inf, certified."""
    for m in range(2, MAX_MOMENT_ORDER + 1):
        try:
            b = dot_power_tail_sum(p, 0, m)
        except CertificationError:
            raise
        if b.is_finite:
            return m
    raise CertificationError(
        f"no finite folded moment of order <= {MAX_MOMENT_ORDER}; cannot certify a tail"
    )


def truncation_index(p: Profile, n: int, delta: float = DEFAULT_DELTA) -> tuple[int, str]:
    """Smallest certified truncation width and its tail mode."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    end = p.support_end()
    if end is not None:
        return end, "exact"
    ts = tail_sum(p, 0)
    if ts.is_finite:
        target = delta / n

        def ok(J):
            return tail_sum(p, J).high <= target

        J = _smallest_satisfying(ok)
        return J, "summable"
    # divergent: control the event "some tail coordinate sees >= m successes"
    m = _smallest_finite_moment(p)
    # P(Bin(n, p) >= m) <= C(n, m) p^m, union over the tail
    coeff = math.comb(n, m)
    target = delta / coeff if coeff > 0 else math.inf

    def ok(J):
        return dot_power_tail_sum(p, J, m).high <= target

    J = _smallest_satisfying(ok)
    return J, "divergent"


def _smallest_satisfying(ok) -> int:
    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > 2**40:
            raise CertificationError("truncation index exceeds 2^40")
    lo = hi // 2
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return hi


def sample_block(p: Profile, n: int, J: int, seed: int) -> SampleBlock:
    """Draw the n x J Bernoulli matrix; bit-identical for identical inputs."""
    if n < 1 or J < 0:
        raise ValueError("need n >= 1 and J >= 0")
    pv = p.values(J)
    data = _rng.bernoulli_matrix(seed, 0, n, J, pv)
    tail_mode, tail_risk = _tail_mode_for(p, n, J)
    return SampleBlock(data, n, J, tail_mode, tail_risk, seed)


def _tail_mode_for(p: Profile, n: int, J: int) -> tuple[str, float]:
    end = p.support_end()
    if end is not None and J >= end:
        return "exact", 0.0
    try:
        ts = tail_sum(p, J)
    except CertificationError:
        return "divergent", 1.0
    if ts.is_finite:
        return "summable", min(1.0, n * ts.high)
    return "divergent", 1.0


# ---------------------------------------------------------------------------
# Estimator-aware tail deviation brackets
# ---------------------------------------------------------------------------


def _rule_tail_bracket(p: Profile, J: int, g: float) -> tuple[float, float]:
    """Certified bracket for sup_{j>J} |g - p_j| (rule value g beyond J)."""
    lo_v, hi_v = tail_value_range(p, J)
    # value sets are interval-dense enough for a sup bracket from endpoints:
    # the sup over an arbitrary subset of [lo_v, hi_v] lies between the
    # largest endpoint distance attained at a known coordinate and the
    # envelope max; use attained candidates at J+1 plus the envelope.
    env_hi = max(abs(g - lo_v), abs(g - hi_v))
    attained = abs(g - p.value(J + 1))
    # limits: decaying families approach lo_v or hi_v, so env_hi is a true sup
    # bound while `attained` certifies the lower end
    return min(attained, env_hi), env_hi


def _exact_tail_cases(p: Profile, J: int, g: float | None) -> tuple[float, float] | None:
    """Tail brackets that are exact (or a.s. exact) for special families."""
    end = p.support_end()
    if end is not None and J >= end:
        if g is None:
            return 0.0, 0.0  # zero rule over zero tail
        return abs(g), abs(g)
    return None


def _zero_rule_divergent_bracket(p: Profile, J: int, n: int, m: int) -> tuple[float, float]:
    """Spec bracket for the unseen empirical tail of a zero-filled estimate."""
    fam_tail_lo, fam_tail_hi = tail_value_range(p, J)
    if fam_tail_lo == fam_tail_hi:  # constant-like tail: extremes occur a.s.
        c = fam_tail_hi
        v = max(c, 1.0 - c)
        return v, v
    p_next = p.value(J + 1)
    return max(0.0, 1.0 / n - p_next), (m - 1) / n


# ---------------------------------------------------------------------------
# Monte Carlo deviation
# ---------------------------------------------------------------------------


def _block_ranges(reps: int):
    for b, start in enumerate(range(0, reps, _rng.REP_BLOCK)):
        yield b, start, min(_rng.REP_BLOCK, reps - start)


def _eme_sup_devs(p_vec: np.ndarray, n: int, seed: int, b: int, count: int) -> np.ndarray:
    """Per-repetition sup_j |counts_j/n - p_j| for one block (binomial path)."""
    gen = np.random.Generator(_rng.philox(seed, 1 + b))
    counts = gen.binomial(n, np.broadcast_to(p_vec, (count, p_vec.size)))
    if p_vec.size == 0:
        return np.zeros(count)
    return np.abs(counts / n - p_vec[None, :]).max(axis=1)


def deviation_mc(
    p: Profile,
    est: str,
    n: int,
    reps: int,
    delta: float = DEFAULT_DELTA,
    seed: int = 0,
    *,
    J: int | None = None,
    kappa: float = 1.0,
    horizon: tuple[int, int] | None = None,
    workers: int = 1,
) -> DeviationEstimate:
    """Monte Carlo bracket for the expected supremum deviation of `est`.

    est is one of "eme", "truncated", "hybrid".  J defaults to the certified
    truncation width (for "truncated" the estimator's own cutoff suffices, so
    uncertifiable profiles are still runnable).  Certification failures
    propagate for estimators whose tail cannot be pinned down.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if est not in ("eme", "truncated", "hybrid"):
        raise ValueError(f"unknown estimator id {est!r}")

    mode_m = 2
    if J is None:
        if est == "truncated":
            J = int(math.ceil(kappa * n))
            tail_mode = "rule"  # the estimator never looks beyond its cutoff
        else:
            J, tail_mode = truncation_index(p, n, delta)
    else:
        tail_mode = _tail_mode_for(p, n, J)[0]
    if est == "truncated" and J < int(math.ceil(kappa * n)):
        tail_mode = "rule"  # values beyond J follow the 1/2 rule anyway
    if tail_mode == "divergent" and est != "truncated":
        lo_v, hi_v = tail_value_range(p, J)
        if lo_v != hi_v:
            # a genuine moment certificate is needed; constant-like tails
            # resolve exactly (extreme columns occur almost surely)
            mode_m = _smallest_finite_moment(p)

    p_vec = p.values(J)
    lo = np.empty(reps)
    hi = np.empty(reps)

    def run_block(args):
        b, start, count = args
        if est == "eme":
            devs = _eme_sup_devs(p_vec, n, seed, b, count)
            tl, th = _tail_for_eme(p, J, n, tail_mode, mode_m)
            return start, np.maximum(devs, tl), np.maximum(devs, th)
        if est == "truncated":
            # column counts suffice: the estimator never inspects row patterns
            cutoff = min(int(math.ceil(kappa * n)), J)
            devs = _eme_sup_devs(p_vec[:cutoff], n, seed, b, count)
            if cutoff < J:
                rule_dev = float(np.abs(0.5 - p_vec[cutoff:]).max())
                devs = np.maximum(devs, rule_dev)
            tl, th = _rule_value_tail(p, J, 0.5, tail_mode)
            return start, np.maximum(devs, tl), np.maximum(devs, th)
        return _matrix_block(p, p_vec, est, n, seed, b, start, count, J, kappa, horizon, tail_mode, mode_m)

    blocks = list(_block_ranges(reps))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run_block, blocks))
    else:
        results = [run_block(a) for a in blocks]
    for start, blo, bhi in results:
        lo[start : start + blo.size] = blo
        hi[start : start + bhi.size] = bhi

    risk = delta if tail_mode in ("summable", "divergent") else 0.0
    low = float(lo.mean())
    high = float(hi.mean()) + risk
    mid = (lo + hi) / 2.0
    std_err = float(mid.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    tail_bias = float(np.max(hi - lo)) + risk if reps else risk
    return DeviationEstimate(
        low, high, std_err, reps, tail_bias, n, J, tail_mode, delta, seed
    )


def _tail_for_eme(p, J, n, tail_mode, m):
    if tail_mode == "exact":
        return 0.0, 0.0
    if tail_mode == "summable":
        # on the good event the unseen tail is all zeros: deviation = p_j
        _, hi_v = tail_value_range(p, J)
        return 0.0, hi_v
    return _zero_rule_divergent_bracket(p, J, n, m)


def _rule_value_tail(p, J, g, tail_mode):
    """Tail bracket when the estimate fixes a constant value g beyond J."""
    exact = _exact_tail_cases(p, J, g)
    if exact is not None:
        return exact
    return _rule_tail_bracket(p, J, g)


def _matrix_block(p, p_vec, est, n, seed, b, start, count, J, kappa, horizon, tail_mode, m):
    from .estimators import hybrid_estimate

    lo = np.empty(count)
    hi = np.empty(count)
    bg = _rng.philox(seed, 1 + b)
    for r in range(count):
        # repetitions inside a block consume the block stream in rep order
        if n * J:
            u = (bg.random_raw(n * J) >> np.uint64(11)) * (2.0**-53)
            bits = (u.reshape(n, J) < p_vec[None, :]).astype(np.uint8)
        else:
            bits = np.zeros((n, J), dtype=np.uint8)
        block = SampleBlock(bits, n, J, tail_mode if tail_mode != "rule" else "divergent", 0.0, seed)
        e = hybrid_estimate(block, horizon)
        prefix = float(np.abs(np.asarray(e.values) - p_vec).max()) if J else 0.0
        if e.beyond.kind == "zero":
            if tail_mode == "exact":
                tl = th = 0.0
            elif tail_mode == "summable":
                _, th = tail_value_range(p, J)
                tl = 0.0
            else:
                tl, th = _zero_rule_divergent_bracket(p, J, n, m)
        else:
            g = 0.5 if e.beyond.kind == "half" else e.beyond.value
            tl, th = _rule_value_tail(p, J, g, tail_mode)
        lo[r] = max(prefix, tl)
        hi[r] = max(prefix, th)
    return start, lo, hi


# ---------------------------------------------------------------------------
# Binary container
# ---------------------------------------------------------------------------

_MAGIC = b"BLBLK1\n"


def save_sample_block(block: SampleBlock, path, profile: Profile | None = None) -> None:
    """Packed-bit container: magic, header length, JSON header, row bits."""
    header = {
        "n": block.n,
        "J": block.J,
        "seed": block.seed,
        "tail_mode": block.tail_mode,
        "tail_risk": block.tail_risk,
        "profile": profile_to_json(profile) if profile is not None else None,
    }
    hb = json.dumps(header, sort_keys=True).encode()
    packed = np.packbits(block.data, axis=1)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(hb)))
        f.write(hb)
        f.write(packed.tobytes())


def load_sample_block(path) -> tuple[SampleBlock, Profile | None]:
    with open(path, "rb") as f:
        if f.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("not a sample block container")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode())
        n, J = header["n"], header["J"]
        row_bytes = (J + 7) // 8
        packed = np.frombuffer(f.read(n * row_bytes), dtype=np.uint8).reshape(n, row_bytes)
    data = np.unpackbits(packed, axis=1)[:, :J]
    prof = header.get("profile")
    return (
        SampleBlock(
            data.astype(np.uint8),
            n,
            J,
            header["tail_mode"],
            header["tail_risk"],
            header["seed"],
        ),
        profile_from_json(prof) if prof else None,
    )
