"""Estimators over sampled blocks: empirical means, the pattern-test hybrid,
the truncation estimator, and majority-vote sign decoding.

Every estimator returns an `Estimate` whose `beyond` field states the implicit
rule on unsimulated coordinates (zero, one half, or a data-dependent
constant), which is what the sampler's tail accounting consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import SampleBlock

__all__ = [
    "BeyondRule",
    "Estimate",
    "eme",
    "phi_test",
    "hybrid_estimate",
    "truncated_estimate",
    "majority_sign",
    "estimate_to_json",
]


@dataclass(frozen=True)
class BeyondRule:
    """Implicit estimate beyond the simulated width: zero | half | constant."""

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "half", "constant"):
            raise ValueError(f"unknown tail rule {self.kind!r}")
        if (self.kind == "constant") != (self.value is not None):
            raise ValueError("constant rule needs a value; others must not carry one")


@dataclass(frozen=True)
class Estimate:
    values: tuple  # coordinates 1..J
    beyond: BeyondRule

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError("estimates must be probabilities")


def eme(block: SampleBlock) -> Estimate:
    """Coordinatewise empirical mean; zero beyond the simulated width."""
    means = block.data.mean(axis=0) if block.n else np.zeros(block.J)
    return Estimate(tuple(means.tolist()), BeyondRule("zero"))


def _hit_columns(data: np.ndarray) -> np.ndarray:
    """Columns whose first floor(n/2) rows are zero and the rest are one."""
    n = data.shape[0]
    half = n // 2
    top = (data[:half] == 0).all(axis=0)
    bottom = (data[half:] == 1).all(axis=0)
    return top & bottom


def phi_test(
    block: SampleBlock, horizon: tuple[int, int] | None = None
) -> tuple[bool, list[int]]:
    """Detect the zeros-then-ones column pattern inside the horizon.

    Returns (flag, hits): hits are the 1-based columns showing the pattern;
    the flag fires when a hit lands in the upper half of the horizon, the
    finite stand-in for the pattern recurring infinitely often.
    """
    if horizon is None:
        horizon = (1, block.J)
    a, b = horizon
    if not 1 <= a <= b <= block.J:
        raise ValueError("horizon must be a sub-range of 1..J")
    mask = _hit_columns(block.data[:, a - 1 : b])
    hits = [a + int(i) for i in np.nonzero(mask)[0]]
    mid = (a + b) // 2
    flag = any(j > mid for j in hits)
    return flag, hits


def hybrid_estimate(
    block: SampleBlock, horizon: tuple[int, int] | None = None
) -> Estimate:
    """Pattern-flagged constant estimate, else the plain empirical mean.

    When the flag fires, every coordinate gets the average of the empirical
    means over coordinates 1..min(n, J) and the tail rule carries the same
    constant; otherwise the output is bit-identical to `eme`.
    """
    base = eme(block)
    flag, _ = phi_test(block, horizon)
    if not flag:
        return base
    window = min(block.n, block.J)
    cbar = float(np.mean(base.values[:window])) if window else 0.0
    return Estimate((cbar,) * block.J, BeyondRule("constant", cbar))


def truncated_estimate(block: SampleBlock, kappa: float) -> Estimate:
    """Empirical means up to ceil(kappa * n), one half afterwards."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    cutoff = min(int(np.ceil(kappa * block.n)), block.J)
    means = block.data.mean(axis=0) if block.n else np.zeros(block.J)
    values = np.concatenate([means[:cutoff], np.full(block.J - cutoff, 0.5)])
    return Estimate(tuple(values.tolist()), BeyondRule("half"))


def majority_sign(column) -> int:
    """+1 if ones strictly outnumber zeros, else -1 (ties break to -1)."""
    col = np.asarray(column)
    ones = int(col.sum())
    return 1 if 2 * ones > col.size else -1


def estimate_to_json(e: Estimate) -> dict:
    beyond = {"kind": e.beyond.kind}
    if e.beyond.kind == "constant":
        beyond["value"] = e.beyond.value
    return {"values": list(e.values), "beyond_J": beyond}
