"""Infinite [0,1]-valued probability sequences and their scale functionals.

A profile assigns a Bernoulli parameter p_j to every coordinate j = 1, 2, ...
of an infinite product measure.  Closed-form families plus a sparse override
map cover everything the rest of the package needs: sampling, the two scale
functionals, and certified tail arithmetic for truncation.

The two functionals are computed on the folded sequence min(p_j, 1 - p_j),
sorted non-increasingly (the minimizing rearrangement):

    S = sup_r  v_r * log(r + 1)           (rate scale)
    T = sup_r  log(r + 1) / log(1 / v_r)  (learnability index)

where v_r is the r-th largest folded value.  Both may be +inf; the reports
carry a divergence witness in that case.  Step families are parameterized by
``size`` and carry size - 1 support coordinates, so S = level * log(size) and
T = log(size) / log(1 / level) hold exactly (see the README for why the log
argument, not the support length, is the primitive quantity).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

__all__ = [
    "PowerLaw",
    "Step",
    "StepBump",
    "Const",
    "HalfBand",
    "Explicit",
    "Reflected",
    "SignSeq",
    "Profile",
    "FunctionalReport",
    "TailSumBracket",
    "CertificationError",
    "dot",
    "reflect",
    "functional_S",
    "functional_T",
    "tail_sum",
    "tail_value_range",
    "dot_power_tail_sum",
    "dot_power_partial_sum",
    "profile_to_json",
    "profile_from_json",
]

_MASK64 = (1 << 64) - 1


class CertificationError(Exception):
    """A tail quantity cannot be certified for the given family."""


def _half_band_signs(seed: int, start: int, count: int) -> np.ndarray:
    """Deterministic +-1 signs for coordinates start..start+count-1 (1-based).

    One raw 64-bit Philox word per coordinate; the low bit decides the sign.
    Position-addressable so any window of the infinite sequence is cheap.
    """
    if count <= 0:
        return np.zeros(0, dtype=np.int8)
    out = np.empty(count, dtype=np.int8)
    # Philox emits 4 words per counter step; generate the covering window.
    bg = np.random.Philox(key=np.array([seed & _MASK64, 0x5B5], dtype=np.uint64))
    raw = bg.random_raw(start - 1 + count)[start - 1 :]
    out[:] = np.where(raw & np.uint64(1), 1, -1)
    return out


@dataclass(frozen=True)
class PowerLaw:
    """p_j = min(1/2, (j+1)^(-1/log_ratio)).

    ``log_ratio`` is the constant value of log(j+1)/log(1/p_j) off the cap,
    hence exactly the profile's learnability index.
    """

    log_ratio: float

    def __post_init__(self):
        if not self.log_ratio > 0:
            raise ValueError("log_ratio must be positive")


@dataclass(frozen=True)
class Step:
    """Flat profile: `level` on coordinates 1..size-1, zero afterwards.

    ``size`` is the step family's cardinality parameter (the number of
    hypotheses a size-member family carries); both functionals evaluate to
    closed forms in log(size).
    """

    level: float
    size: int

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValueError("level must be a probability")
        if self.size < 1:
            raise ValueError("size must be a positive integer")


@dataclass(frozen=True)
class StepBump:
    """Step profile with one coordinate raised to `bump_level`."""

    level: float
    bump_level: float
    bump_at: int
    size: int

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0 or not 0.0 <= self.bump_level <= 1.0:
            raise ValueError("levels must be probabilities")
        if not 1 <= self.bump_at <= self.size - 1:
            raise ValueError("bump_at must lie in the support 1..size-1")


@dataclass(frozen=True)
class Const:
    """p_j = value for every coordinate."""

    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("value must be a probability")


@dataclass(frozen=True)
class HalfBand:
    """p_j = 1/2 + s_j * band / sqrt(j), clipped to [0,1].

    sign_mode "seeded" draws s_j deterministically from `seed`; "minus" forces
    s_j = -1 (the folded image of the seeded family, used by dot()).
    """

    band: float
    seed: int = 0
    sign_mode: str = "seeded"

    def __post_init__(self):
        if not self.band > 0:
            raise ValueError("band must be positive")
        if self.sign_mode not in ("seeded", "minus"):
            raise ValueError("sign_mode must be 'seeded' or 'minus'")


@dataclass(frozen=True)
class Explicit:
    """Finite list of values; zero beyond the list."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError("values must be probabilities")


@dataclass(frozen=True)
class SignSeq:
    """Sign sequence b for reflections: kinds const_plus, const_minus,
    explicit (finite, +1 beyond), seeded."""

    kind: str
    values: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("const_plus", "const_minus", "explicit", "seeded"):
            raise ValueError(f"unknown sign kind {self.kind!r}")
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if any(v not in (-1, 1) for v in self.values):
            raise ValueError("explicit signs must be +-1")

    def window(self, start: int, count: int) -> np.ndarray:
        if self.kind == "const_plus":
            return np.ones(count, dtype=np.int8)
        if self.kind == "const_minus":
            return -np.ones(count, dtype=np.int8)
        if self.kind == "seeded":
            return _half_band_signs(self.seed ^ 0xC0FFEE, start, count)
        out = np.ones(count, dtype=np.int8)
        for i in range(count):
            j = start + i
            if j <= len(self.values):
                out[i] = self.values[j - 1]
        return out


@dataclass(frozen=True)
class Reflected:
    """b-reflection of a base profile: p'_j = b_j * (p_j - 1/2) + 1/2."""

    base: "Profile"
    signs: SignSeq


Family = Union[PowerLaw, Step, StepBump, Const, HalfBand, Explicit, Reflected]

_FAMILY_NAMES = {
    PowerLaw: "power_law",
    Step: "step",
    StepBump: "step_bump",
    Const: "const",
    HalfBand: "half_band",
    Explicit: "explicit",
    Reflected: "reflected",
}


@dataclass(frozen=True)
class Profile:
    """A closed-form family plus finitely many per-coordinate overrides."""

    family: Family
    overrides: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        ov = {int(j): float(v) for j, v in dict(self.overrides).items()}
        for j, v in ov.items():
            if j < 1:
                raise ValueError("override indices are 1-based")
            if not 0.0 <= v <= 1.0:
                raise ValueError("override values must be probabilities")
        object.__setattr__(self, "overrides", ov)

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def power_law(log_ratio: float) -> "Profile":
        return Profile(PowerLaw(float(log_ratio)))

    @staticmethod
    def step(level: float, size: int) -> "Profile":
        return Profile(Step(float(level), int(size)))

    @staticmethod
    def step_bump(level: float, bump_level: float, bump_at: int, size: int) -> "Profile":
        return Profile(StepBump(float(level), float(bump_level), int(bump_at), int(size)))

    @staticmethod
    def constant(value: float) -> "Profile":
        return Profile(Const(float(value)))

    @staticmethod
    def half_band(band: float, seed: int = 0, sign_mode: str = "seeded") -> "Profile":
        return Profile(HalfBand(float(band), int(seed), sign_mode))

    @staticmethod
    def explicit(values: Sequence[float]) -> "Profile":
        return Profile(Explicit(tuple(values)))

    # -- evaluation -----------------------------------------------------------

    def value(self, j: int) -> float:
        """p_j with overrides applied; j >= 1."""
        if j < 1:
            raise ValueError("coordinates are 1-based")
        if j in self.overrides:
            return self.overrides[j]
        return self._family_value(j)

    def _family_value(self, j: int) -> float:
        fam = self.family
        if isinstance(fam, PowerLaw):
            # np.power so scalar and vectorized evaluation agree bitwise
            return min(0.5, float(np.power(np.float64(j + 1.0), np.float64(-1.0 / fam.log_ratio))))
        if isinstance(fam, Step):
            return fam.level if j <= fam.size - 1 else 0.0
        if isinstance(fam, StepBump):
            if j > fam.size - 1:
                return 0.0
            return fam.bump_level if j == fam.bump_at else fam.level
        if isinstance(fam, Const):
            return fam.value
        if isinstance(fam, HalfBand):
            s = -1.0 if fam.sign_mode == "minus" else float(
                _half_band_signs(fam.seed, j, 1)[0]
            )
            return float(min(1.0, max(0.0, 0.5 + s * fam.band / math.sqrt(j))))
        if isinstance(fam, Explicit):
            return fam.values[j - 1] if j <= len(fam.values) else 0.0
        if isinstance(fam, Reflected):
            b = float(fam.signs.window(j, 1)[0])
            return b * (fam.base.value(j) - 0.5) + 0.5
        raise TypeError(f"unknown family {fam!r}")

    def values(self, upto: int) -> np.ndarray:
        """Vector of p_1..p_upto (overrides applied)."""
        fam = self.family
        j = np.arange(1, upto + 1, dtype=np.float64)
        if isinstance(fam, PowerLaw):
            out = np.minimum(0.5, (j + 1.0) ** (-1.0 / fam.log_ratio))
        elif isinstance(fam, Step):
            out = np.where(j <= fam.size - 1, fam.level, 0.0)
        elif isinstance(fam, StepBump):
            out = np.where(j <= fam.size - 1, fam.level, 0.0)
            if fam.bump_at <= upto:
                out[fam.bump_at - 1] = fam.bump_level
        elif isinstance(fam, Const):
            out = np.full(upto, fam.value)
        elif isinstance(fam, HalfBand):
            if fam.sign_mode == "minus":
                s = -np.ones(upto)
            else:
                s = _half_band_signs(fam.seed, 1, upto).astype(np.float64)
            out = np.clip(0.5 + s * fam.band / np.sqrt(j), 0.0, 1.0)
        elif isinstance(fam, Explicit):
            out = np.zeros(upto)
            m = min(upto, len(fam.values))
            out[:m] = fam.values[:m]
        elif isinstance(fam, Reflected):
            b = fam.signs.window(1, upto).astype(np.float64)
            out = b * (fam.base.values(upto) - 0.5) + 0.5
        else:
            raise TypeError(f"unknown family {fam!r}")
        for jj, v in self.overrides.items():
            if jj <= upto:
                out[jj - 1] = v
        return out

    def support_end(self) -> int | None:
        """Largest coordinate that can be nonzero, or None for infinite support."""
        fam = self.family
        if isinstance(fam, (Step, StepBump)):
            end = fam.size - 1
        elif isinstance(fam, Explicit):
            end = len(fam.values)
        elif isinstance(fam, Const) and fam.value == 0.0:
            end = 0
        elif isinstance(fam, Reflected) and fam.signs.kind in ("const_plus", "explicit"):
            base_end = fam.base.support_end()
            if base_end is None:
                return None
            # a minus sign over a zero coordinate creates a 1; beyond the
            # explicit sign window the reflection is the identity
            end = max(base_end, len(fam.signs.values))
        else:
            return None
        nz = [j for j, v in self.overrides.items() if v != 0.0]
        end = max([end] + nz)
        # overrides can only shrink the family support by zeroing coordinates,
        # which does not move the certified end; keep the conservative value
        return end

    def descriptor(self) -> str:
        """Compact stable string for result tables."""
        fam = self.family
        name = _FAMILY_NAMES[type(fam)]
        if isinstance(fam, Reflected):
            inner = fam.base.descriptor()
            core = f"{name}({inner},signs={fam.signs.kind})"
        elif isinstance(fam, Explicit):
            vals = ",".join(repr(v) for v in fam.values)
            core = f"{name}([{vals}])"
        else:
            parts = ",".join(
                f"{k}={getattr(fam, k)!r}" for k in fam.__dataclass_fields__
            )
            core = f"{name}({parts})"
        if self.overrides:
            ov = ",".join(f"{j}:{v!r}" for j, v in sorted(self.overrides.items()))
            core += f"+overrides{{{ov}}}"
        return core


# ---------------------------------------------------------------------------
# dot and reflections
# ---------------------------------------------------------------------------


def dot(p: Profile) -> Profile:
    """Fold about one half: value(result, j) = min(p_j, 1 - p_j)."""
    fam = p.family
    ov = {j: min(v, 1.0 - v) for j, v in p.overrides.items()}
    if isinstance(fam, PowerLaw):
        return Profile(fam, ov)  # already <= 1/2
    if isinstance(fam, Step):
        return Profile(Step(min(fam.level, 1 - fam.level), fam.size), ov)
    if isinstance(fam, StepBump):
        return Profile(
            StepBump(
                min(fam.level, 1 - fam.level),
                min(fam.bump_level, 1 - fam.bump_level),
                fam.bump_at,
                fam.size,
            ),
            ov,
        )
    if isinstance(fam, Const):
        return Profile(Const(min(fam.value, 1 - fam.value)), ov)
    if isinstance(fam, HalfBand):
        return Profile(HalfBand(fam.band, fam.seed, "minus"), ov)
    if isinstance(fam, Explicit):
        return Profile(Explicit(tuple(min(v, 1 - v) for v in fam.values)), ov)
    if isinstance(fam, Reflected):
        base_dot = dot(fam.base)
        merged = dict(base_dot.overrides)
        merged.update(ov)
        return Profile(base_dot.family, merged)
    raise TypeError(f"unknown family {fam!r}")


def reflect(p: Profile, b: SignSeq) -> Profile:
    """b-reflection about 1/2; dot(reflect(p, b)) == dot(p) coordinatewise."""
    if b.kind == "const_plus":
        return p
    return Profile(Reflected(p, b))


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionalReport:
    """Certified evaluation of S or T.

    value may be math.inf, in which case `witness` holds (rank, term) pairs
    demonstrating divergence. attained_at is the 1-based rank of the sorted
    folded sequence achieving the supremum, or "limit".
    """

    value: float
    truncation_index: int
    tolerance: float
    attained_at: int | str
    witness: tuple = ()

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


def _sorted_dot_values(p: Profile) -> np.ndarray | None:
    """Non-increasing folded values for finite-support profiles, else None."""
    dp = dot(p)
    end = dp.support_end()
    if end is None:
        return None
    vals = dp.values(end) if end > 0 else np.zeros(0)
    vals = vals[vals > 0.0]
    return np.sort(vals)[::-1]


def _finite_report(terms: np.ndarray, scanned: int) -> FunctionalReport:
    if terms.size == 0:
        return FunctionalReport(0.0, scanned, 0.0, 0)
    r = int(np.argmax(terms))
    return FunctionalReport(float(terms[r]), scanned, 0.0, r + 1)


def functional_S(p: Profile, tol: float = 1e-12) -> FunctionalReport:
    """sup of sorted folded values times log(rank + 1), within tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    sorted_vals = _sorted_dot_values(p)
    if sorted_vals is not None:
        ranks = np.arange(1, sorted_vals.size + 1, dtype=np.float64)
        return _finite_report(sorted_vals * np.log(ranks + 1.0), sorted_vals.size)
    return _infinite_S(p, tol)


def functional_T(p: Profile, tol: float = 1e-12) -> FunctionalReport:
    """sup of log(rank + 1) / log(1 / folded value), within tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    sorted_vals = _sorted_dot_values(p)
    if sorted_vals is not None:
        ranks = np.arange(1, sorted_vals.size + 1, dtype=np.float64)
        with np.errstate(divide="ignore", over="ignore"):
            terms = np.log(ranks + 1.0) / np.log(1.0 / sorted_vals)
        terms[sorted_vals >= 1.0] = math.inf  # folded values never exceed 1/2
        return _finite_report(terms, sorted_vals.size)
    return _infinite_T(p, tol)


def _diverging_report(p: Profile, term) -> FunctionalReport:
    """Build a +inf report with a growth witness along rank ~ 10^k."""
    witness = []
    for k in (2, 4, 6):
        r = 10**k
        witness.append((r, float(term(r))))
    return FunctionalReport(math.inf, 10**6, 0.0, "limit", tuple(witness))


def _infinite_base_kind(p: Profile):
    """Classify infinite-support profiles by their folded tail behaviour."""
    dp = dot(p)
    fam = dp.family
    if isinstance(fam, Const):
        return ("const", fam.value, dp)
    if isinstance(fam, HalfBand):
        return ("half_band", fam.band, dp)
    if isinstance(fam, PowerLaw):
        return ("power_law", fam.log_ratio, dp)
    raise CertificationError(
        f"no tail envelope for family {type(fam).__name__}; cannot certify"
    )


def _sorted_prefix(dp: Profile, prefix_len: int) -> np.ndarray:
    """Sorted (desc) folded values over coordinates 1..prefix_len, overrides
    applied; valid once prefix_len covers every override index."""
    vals = dp.values(prefix_len)
    return np.sort(vals)[::-1]


def _power_law_S_exact(t: float) -> tuple[float, int]:
    """Exact sup of min(1/2,(j+1)^(-1/t)) * log(j+1) with the attaining j.

    Both branches are unimodal in x = j+1 (the cap branch 0.5*log(x) grows to
    the cap edge x = 2^t; off the cap x^(-1/t)*log(x) peaks at x = e^t >= 2^t),
    so the integer supremum is attained among a handful of branch-boundary and
    peak neighbors.
    """
    xs: set[int] = {2, 3}
    cap_edge = 2.0**t
    if cap_edge >= 2.0 and cap_edge <= 2**53:
        e = int(math.floor(cap_edge))
        xs.update(x for x in (e - 1, e, e + 1, e + 2) if x >= 2)
    peak = math.exp(t) if t <= 36.0 else None
    if peak is not None:
        f = int(math.floor(peak))
        xs.update(x for x in (f - 1, f, f + 1, f + 2) if x >= 2)
        best_x, best = 0, -1.0
        for x in sorted(xs):
            v = min(0.5, np.power(np.float64(x), np.float64(-1.0 / t))) * math.log(x)
            if v > best:
                best_x, best = x, float(v)
        return best, best_x - 1
    # peak index beyond exact-integer range: the continuous value t/e is
    # within e^(-2t) (< 1e-31) of the integer supremum
    return t / math.e, -1


def _infinite_S(p: Profile, tol: float) -> FunctionalReport:
    kind, param, dp = _infinite_base_kind(p)
    if kind == "const":
        c = param
        if c == 0.0:
            # only overrides contribute
            over = np.sort(np.array([v for v in dp.overrides.values() if v > 0]))[::-1]
            ranks = np.arange(1, over.size + 1, dtype=np.float64)
            return _finite_report(over * np.log(ranks + 1.0), over.size)
        return _diverging_report(p, lambda r: c * math.log(r + 1.0))
    if kind == "half_band":
        band = param

        def term(r):  # folded values approach 1/2 from below
            return max(0.0, 0.5 - band / math.sqrt(r)) * math.log(r + 1.0)

        return _diverging_report(p, term)
    t = param
    if not dp.overrides:
        value, at = _power_law_S_exact(t)
        if at < 0:
            return FunctionalReport(value, 2**53, min(tol, 1e-30), "limit")
        return FunctionalReport(value, at, 0.0, at)
    # overrides shift sorted ranks by at most their count; an exact merged
    # scan certifies the supremum whenever the peak region is scannable
    max_override = max(dp.overrides)
    cap_end = min(2.0**t, 2.0**53) if t >= 1 else 0.0
    peak = math.exp(min(t, 60.0))
    scan_to = int(max(64, 4 * peak, 2 * cap_end, 2 * max_override))
    if scan_to <= 2_000_000:
        vals = _sorted_prefix(dp, scan_to)
        ranks = np.arange(1, vals.size + 1, dtype=np.float64)
        terms = vals * np.log(ranks + 1.0)
        best = float(terms.max())
        return FunctionalReport(best, scan_to, 0.0, int(np.argmax(terms)) + 1)
    # peak out of scan range: base terms at ranks shifted by k overrides are
    # inflated by at most log(r+k+1)/log(r+1); certify within tol or refuse
    k = len(dp.overrides)
    base_sup, _ = _power_law_S_exact(t)
    scan_cap = 2_000_000
    slack = base_sup * (k / (scan_cap * math.log(scan_cap))) + 1e-30
    if slack > tol or max_override > scan_cap // 2:
        raise CertificationError(
            f"power-law supremum with overrides not certifiable to {tol:g} "
            f"at log_ratio={t:g} (achievable slack {slack:.2e})"
        )
    vals = _sorted_prefix(dp, scan_cap)
    ranks = np.arange(1, vals.size + 1, dtype=np.float64)
    best = float((vals * np.log(ranks + 1.0)).max())
    return FunctionalReport(max(best, base_sup + slack), scan_cap, slack, "limit")


def _infinite_T(p: Profile, tol: float) -> FunctionalReport:
    kind, param, dp = _infinite_base_kind(p)
    if kind == "const":
        c = param
        if c == 0.0:
            over = np.sort(np.array([v for v in dp.overrides.values() if v > 0]))[::-1]
            ranks = np.arange(1, over.size + 1, dtype=np.float64)
            with np.errstate(divide="ignore"):
                terms = np.log(ranks + 1.0) / np.log(1.0 / over)
            return _finite_report(terms, over.size)
        return _diverging_report(p, lambda r: math.log(r + 1.0) / math.log(1.0 / c))
    if kind == "half_band":
        band = param

        def term(r):
            v = max(1e-12, 0.5 - band / math.sqrt(r))
            return math.log(r + 1.0) / math.log(1.0 / v)

        return _diverging_report(p, term)
    # power law: off-cap ranks satisfy log(r+1)/log(1/v_r) = log_ratio exactly.
    t = param
    if not dp.overrides:
        first_off_cap = int(math.floor(2.0**t)) + 1 if t >= 1 else 1
        return FunctionalReport(float(t), first_off_cap, 0.0, first_off_cap)
    # overrides shift ranks by at most their count; beyond a certified prefix
    # the terms lie within tol of log_ratio
    k = len(dp.overrides)
    max_override = max(dp.overrides)
    # log(r+k+1)/log(r+1) <= 1 + k/((r+1) log(r+1)) <= 1 + tol/t for large r
    r_needed = 16
    while (r_needed + 1) * math.log(r_needed + 1) < k * t / tol and r_needed < 10**7:
        r_needed *= 2
    scan_to = int(min(max(64, 2.0**t * 2, 2 * max_override, r_needed), 5_000_000))
    vals = _sorted_prefix(dp, scan_to)
    vals = vals[vals > 0]
    ranks = np.arange(1, vals.size + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        terms = np.log(ranks + 1.0) / np.log(1.0 / vals)
    best = float(terms.max()) if terms.size else 0.0
    if best >= t:
        return FunctionalReport(best, scan_to, 0.0, int(np.argmax(terms)) + 1)
    return FunctionalReport(float(t), scan_to, tol, "limit")


# ---------------------------------------------------------------------------
# Tail arithmetic
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailSumBracket:
    """Certified bracket for sum_{j>J} p_j. kind: exact | bracket | divergent."""

    low: float
    high: float
    kind: str

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.high)


def _override_tail_adjust(p: Profile, J: int) -> float:
    """Sum of (override - family value) over override indices beyond J."""
    adj = 0.0
    for j, v in p.overrides.items():
        if j > J:
            adj += v - p._family_value(j)
    return adj


def tail_sum(p: Profile, J: int) -> TailSumBracket:
    """sum_{j>J} p_j: exact for finite support, integral bracket for
    summable power laws, +inf flag when divergent."""
    if J < 0:
        raise ValueError("J must be >= 0")
    end = p.support_end()
    if end is not None:
        if J >= end:
            return TailSumBracket(0.0, 0.0, "exact")
        vals = p.values(end)[J:]
        s = float(math.fsum(vals.tolist()))
        return TailSumBracket(s, s, "exact")
    fam = p.family
    if isinstance(fam, Const):
        if fam.value == 0.0:
            adj = _override_tail_adjust(p, J)
            return TailSumBracket(adj, adj, "exact")
        return TailSumBracket(math.inf, math.inf, "divergent")
    if isinstance(fam, HalfBand):
        return TailSumBracket(math.inf, math.inf, "divergent")
    if isinstance(fam, PowerLaw):
        t = fam.log_ratio
        if t >= 1.0:
            return TailSumBracket(math.inf, math.inf, "divergent")
        a = 1.0 / t  # summand (j+1)^(-a), a > 1
        # cap region j+1 <= 2^t only exists for t >= 1; none here
        lo = (J + 2.0) ** (1.0 - a) / (a - 1.0)
        hi = (J + 1.0) ** (1.0 - a) / (a - 1.0)
        adj = _override_tail_adjust(p, J)
        return TailSumBracket(lo + adj, hi + adj, "bracket")
    if isinstance(fam, Reflected):
        k = fam.signs.kind
        if k == "const_plus":
            return tail_sum(fam.base, J)
        if k == "explicit":
            # +1 beyond the finite sign list; adjust the reflected window
            base = tail_sum(fam.base, J)
            if not base.is_finite:
                return base
            adj = 0.0
            for idx in range(J + 1, len(fam.signs.values) + 1):
                b = fam.signs.values[idx - 1]
                v = fam.base.value(idx)
                adj += (b * (v - 0.5) + 0.5) - v
            # p-level overrides of the reflected profile
            adj += _override_tail_adjust(p, J)
            return TailSumBracket(base.low + adj, base.high + adj, base.kind)
        if k == "const_minus":
            blo, bhi = tail_value_range(fam.base, J)
            if blo == bhi == 1.0:
                adj = _override_tail_adjust(p, J)
                return TailSumBracket(adj, adj, "exact")
            return TailSumBracket(math.inf, math.inf, "divergent")
        raise CertificationError(
            "tail_sum of a seeded reflection cannot be certified from a finite scan"
        )
    raise CertificationError(f"no tail envelope for {type(fam).__name__}")


def dot_power_tail_sum(p: Profile, J: int, m: int) -> TailSumBracket:
    """Certified bracket for sum_{j>J} min(p_j, 1-p_j)^m."""
    dp = dot(p)
    end = dp.support_end()
    if end is not None:
        if J >= end:
            return TailSumBracket(0.0, 0.0, "exact")
        vals = dp.values(end)[J:]
        s = float(math.fsum((vals**m).tolist()))
        return TailSumBracket(s, s, "exact")
    fam = dp.family
    if isinstance(fam, Const):
        return TailSumBracket(math.inf, math.inf, "divergent")
    if isinstance(fam, HalfBand):
        return TailSumBracket(math.inf, math.inf, "divergent")
    if isinstance(fam, PowerLaw):
        t = fam.log_ratio
        a = m / t
        if a <= 1.0:
            return TailSumBracket(math.inf, math.inf, "divergent")
        # beyond the cap region the summand is (j+1)^(-a); fold the cap and
        # overrides into an exact prefix when J sits inside them
        cap_end = int(math.floor(2.0**t)) if t >= 1 else 0
        prefix_end = max(cap_end, max(dp.overrides, default=0))
        extra = 0.0
        if J < prefix_end:
            vals = dp.values(prefix_end)[J:]
            extra = float(math.fsum((vals**m).tolist()))
            J = prefix_end
        lo = (J + 2.0) ** (1.0 - a) / (a - 1.0)
        hi = (J + 1.0) ** (1.0 - a) / (a - 1.0)
        return TailSumBracket(extra + lo, extra + hi, "bracket")
    raise CertificationError(f"no dot-moment envelope for {type(fam).__name__}")


def dot_power_partial_sum(p: Profile, m: int, upto: int) -> float:
    """sum_{j<=upto} min(p_j, 1-p_j)^m, evaluated directly."""
    dp = dot(p)
    vals = dp.values(upto)
    return float(math.fsum((vals.astype(np.float64) ** m).tolist()))


def tail_value_range(p: Profile, J: int) -> tuple[float, float]:
    """Certified [inf, sup] of {p_j : j > J}; sup/inf need not be attained."""
    end = p.support_end()
    fam = p.family
    if end is not None:
        if J >= end:
            lo = hi = 0.0
        else:
            vals = p.values(end)[J:]
            lo, hi = float(min(vals.min(), 0.0)), float(vals.max())
        return lo, hi
    if isinstance(fam, Const):
        base = (fam.value, fam.value)
    elif isinstance(fam, PowerLaw):
        base = (0.0, p._family_value(J + 1))
    elif isinstance(fam, HalfBand):
        e = fam.band / math.sqrt(J + 1)
        if fam.sign_mode == "minus":
            base = (max(0.0, 0.5 - e), 0.5)
        else:
            base = (max(0.0, 0.5 - e), min(1.0, 0.5 + e))
    elif isinstance(fam, Reflected):
        blo, bhi = tail_value_range(fam.base, J)
        k = fam.signs.kind
        if k == "const_plus":
            base = (blo, bhi)
        elif k == "const_minus":
            base = (1.0 - bhi, 1.0 - blo)
        else:
            # explicit (finite, +1 beyond) or seeded: both branches possible
            base = (min(blo, 1.0 - bhi), max(bhi, 1.0 - blo))
    else:
        raise CertificationError(f"no tail envelope for {type(fam).__name__}")
    lo, hi = base
    for j, v in p.overrides.items():
        if j > J:
            lo, hi = min(lo, v), max(hi, v)
    return lo, hi


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def _signs_to_json(s: SignSeq) -> dict:
    d = {"kind": s.kind}
    if s.kind == "explicit":
        d["values"] = list(s.values)
    if s.kind == "seeded":
        d["seed"] = s.seed
    return d


def _signs_from_json(d: dict) -> SignSeq:
    return SignSeq(d["kind"], tuple(d.get("values", ())), int(d.get("seed", 0)))


def profile_to_json(p: Profile) -> dict:
    fam = p.family
    name = _FAMILY_NAMES[type(fam)]
    if isinstance(fam, Reflected):
        params = {"base": profile_to_json(fam.base), "signs": _signs_to_json(fam.signs)}
    elif isinstance(fam, Explicit):
        params = {"values": list(fam.values)}
    else:
        params = {k: getattr(fam, k) for k in fam.__dataclass_fields__}
    return {
        "family": name,
        "params": params,
        "overrides": {str(j): v for j, v in sorted(p.overrides.items())},
    }


def profile_from_json(d: dict | str) -> Profile:
    if isinstance(d, str):
        d = json.loads(d)
    name = d["family"]
    params = d.get("params", {})
    overrides = {int(j): float(v) for j, v in d.get("overrides", {}).items()}
    if name == "power_law":
        fam = PowerLaw(float(params["log_ratio"]))
    elif name == "step":
        fam = Step(float(params["level"]), int(params["size"]))
    elif name == "step_bump":
        fam = StepBump(
            float(params["level"]),
            float(params["bump_level"]),
            int(params["bump_at"]),
            int(params["size"]),
        )
    elif name == "const":
        fam = Const(float(params["value"]))
    elif name == "half_band":
        fam = HalfBand(
            float(params["band"]),
            int(params.get("seed", 0)),
            params.get("sign_mode", "seeded"),
        )
    elif name == "explicit":
        fam = Explicit(tuple(params["values"]))
    elif name == "reflected":
        fam = Reflected(profile_from_json(params["base"]), _signs_from_json(params["signs"]))
    else:
        raise ValueError(f"unknown profile family {name!r}")
    return Profile(fam, overrides)
