"""Declarative experiment runner with reproducible CSV/JSON output.

A config names a preset plus its grid; `run` executes the grid through the
sampler/estimator/bounds/oracle layers and returns a `ResultTable` whose CSV
serialization is byte-identical across reruns and worker counts.  Rows use a
frozen column set; preset-specific extras are encoded in the `estimator`
column (documented per preset below).

Interpretation notes (also embedded in every CSV header):

* appendix_a1 realizes the "variance control parameter q" as a step profile
  of size 100 at level q; the theory column is min(1, sqrt(q*log(100)/n)).
  The theory curve is this package's reading, not a quoted formula.
* appendix_a2 draws a constant c per repetition from the named distribution
  (clamped to [0,1]; "one_over_n" uses c = 1/(repetition index); "gaussian"
  is N(1/2, 0.1^2) clamped), builds a constant profile over k coordinates,
  and compares the per-coordinate empirical mean against the grand average;
  errors are over the k simulated coordinates.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _rng, __version__
from .bounds import (
    DEFAULT_C,
    DEFAULT_C_PRIME,
    DEFAULT_SMALL_C,
    minimax_instance,
    union_lower_bound,
)
from .estimators import eme, hybrid_estimate, truncated_estimate
from .profiles import (
    Profile,
    dot_power_partial_sum,
    functional_S,
    profile_from_json,
)
from .sampler import DEFAULT_DELTA, SampleBlock, deviation_mc

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "run",
    "sign_recovery",
    "phi_consistency",
    "mean_sup_error",
    "log_decay_profile",
]

PRESETS = (
    "appendix_a1",
    "appendix_a2",
    "sign_recovery",
    "phi_consistency",
    "minimax_sweep",
    "custom",
)

CSV_COLUMNS = (
    "experiment",
    "profile",
    "n",
    "estimator",
    "low",
    "high",
    "std_err",
    "theory",
    "seed",
    "reps",
    "delta",
)

_A1_NOTE = (
    "appendix_a1: q realized as step(level=q,size=100); "
    "theory=min(1,sqrt(q*log(100)/n)) is this package's interpretation"
)
_A2_NOTE = (
    "appendix_a2: per-rep constant c from the named distribution over k "
    "coordinates; errors over the simulated coordinates; one_over_n means "
    "c=1/(rep index); gaussian means N(1/2,0.1^2) clamped"
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    preset: str
    profile: dict | None = None
    n_grid: list = field(default_factory=list)
    reps: int = 1000
    rep_counts: list | None = None  # appendix_a1
    q_values: list | None = None  # appendix_a1
    distributions: list | None = None  # appendix_a2
    k_values: list | None = None  # appendix_a2
    j_grid: list | None = None  # sign_recovery
    horizon: int | None = None  # phi_consistency / hybrid runs
    estimator: str = "eme"
    kappa: float = 1.0
    t_values: list | None = None  # minimax_sweep
    ratio_values: list | None = None  # minimax_sweep (t/s)
    seed: int = 20240801
    delta: float = DEFAULT_DELTA
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        grid = list(self.n_grid)
        if grid != sorted(grid) or len(set(grid)) != len(grid):
            raise ConfigError("n_grid must be strictly increasing")

    @staticmethod
    def from_json(d: dict | str) -> "ExperimentConfig":
        if isinstance(d, str):
            d = json.loads(d)
        known = set(ExperimentConfig.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown config fields: {sorted(bad)}")
        try:
            return ExperimentConfig(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("out")  # the output path does not affect results
        d.pop("workers")  # parallelism must not affect results
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    profile: str
    n: int
    estimator: str
    low: float
    high: float
    std_err: float
    theory: float  # nan renders as an empty cell
    seed: int
    reps: int
    delta: float

    def csv_cells(self) -> list[str]:
        def num(x):
            if isinstance(x, float):
                return "" if math.isnan(x) else repr(x)
            return str(x)

        return [
            self.experiment,
            self.profile,
            str(self.n),
            self.estimator,
            num(self.low),
            num(self.high),
            num(self.std_err),
            num(self.theory),
            str(self.seed),
            str(self.reps),
            num(self.delta),
        ]


@dataclass
class ResultTable:
    rows: list
    config: ExperimentConfig
    notes: tuple = ()

    def to_csv_bytes(self) -> bytes:
        out = ["# bernlab-results v1"]
        out.append(f"# config_hash={self.config.config_hash()}")
        out.append(
            f"# constants C={DEFAULT_C!r} c={DEFAULT_SMALL_C!r} c_prime={DEFAULT_C_PRIME!r}"
        )
        for note in self.notes:
            out.append(f"# note: {note}")
        out.append(",".join(CSV_COLUMNS))
        for r in self.rows:
            cells = r.csv_cells()
            quoted = [
                f'"{c}"' if ("," in c or '"' in c) else c for c in cells
            ]
            out.append(",".join(quoted))
        return ("\n".join(out) + "\n").encode()

    def manifest(self) -> dict:
        return {
            "config": self.config.canonical(),
            "config_hash": self.config.config_hash(),
            "constants": {
                "C": DEFAULT_C,
                "c": DEFAULT_SMALL_C,
                "c_prime": DEFAULT_C_PRIME,
            },
            "versions": {
                "bernlab": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
            },
            "notes": list(self.notes),
            "rows": len(self.rows),
        }

    def write(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.to_csv_bytes())
        with open(str(path) + ".manifest.json", "w") as f:
            json.dump(self.manifest(), f, indent=2, sort_keys=True)
            f.write("\n")


def log_decay_profile(upto: int) -> Profile:
    """Explicit profile with values 1/log(j+2); its learnability index is
    infinite while the values still decay to zero."""
    j = np.arange(1, upto + 1)
    return Profile.explicit((1.0 / np.log(j + 2)).tolist())


# ---------------------------------------------------------------------------
# Row builders (each consumes a derived per-row seed)
# ---------------------------------------------------------------------------


def _dev_row(experiment, profile, est, n, reps, delta, seed, theory, **kw) -> ResultRow:
    d = deviation_mc(profile, est, n, reps, delta, seed, **kw)
    return ResultRow(
        experiment,
        profile.descriptor(),
        n,
        est,
        d.low,
        d.high,
        d.std_err,
        theory,
        seed,
        reps,
        delta,
    )


def _map_rows(tasks, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return [row for rows in ex.map(lambda f: f(), tasks) for row in rows]
    return [row for f in tasks for row in f()]


def run(config: ExperimentConfig) -> ResultTable:
    """Execute a preset; writes nothing unless config.out is set."""
    builder = {
        "appendix_a1": _run_a1,
        "appendix_a2": _run_a2,
        "sign_recovery": _run_sign_recovery,
        "phi_consistency": _run_phi,
        "minimax_sweep": _run_minimax_sweep,
        "custom": _run_custom,
    }[config.preset]
    rows, notes = builder(config)
    table = ResultTable(rows, config, notes)
    if config.out:
        table.write(config.out)
    return table


def _run_a1(config: ExperimentConfig):
    q_values = config.q_values or [0.1, 0.2, 0.05, 0.01, 0.005, 0.002]
    n_grid = config.n_grid or [100, 200, 400, 800, 1600, 3200]
    rep_counts = config.rep_counts or [100, 1000, 10000]
    tasks = []
    idx = 0
    for q in q_values:
        prof = Profile.step(q, 100)
        s_val = functional_S(prof).value
        for n in n_grid:
            theory = min(1.0, math.sqrt(s_val / n))
            for reps in rep_counts:
                seed = _rng.spawn_seed(config.seed, idx)
                idx += 1
                tasks.append(
                    lambda prof=prof, n=n, reps=reps, seed=seed, theory=theory: [
                        _dev_row("appendix_a1", prof, "eme", n, reps, config.delta, seed, theory)
                    ]
                )
    return _map_rows(tasks, config.workers), (_A1_NOTE,)


_A2_DISTS = ("uniform", "triangular", "beta22", "exponential", "one_over_n", "gaussian")


def _a2_constants(gen: np.random.Generator, dist: str, count: int) -> np.ndarray:
    if dist == "uniform":
        return gen.random(count)
    if dist == "triangular":
        return gen.triangular(0.0, 0.5, 1.0, count)
    if dist == "beta22":
        return gen.beta(2.0, 2.0, count)
    if dist == "exponential":
        return np.clip(gen.exponential(1.0, count), 0.0, 1.0)
    if dist == "one_over_n":
        return 1.0 / np.arange(1, count + 1, dtype=np.float64)
    if dist == "gaussian":
        return np.clip(gen.normal(0.5, 0.1, count), 0.0, 1.0)
    raise ConfigError(f"unknown distribution {dist!r}")


def _run_a2(config: ExperimentConfig):
    dists = config.distributions or list(_A2_DISTS)
    k_values = config.k_values or [10, 50, 100, 500]
    n_grid = config.n_grid or [8, 32, 128, 512]
    reps = config.reps
    rows = []
    idx = 0
    tasks = []
    for dist in dists:
        for k in k_values:
            for n in n_grid:
                seed = _rng.spawn_seed(config.seed, idx)
                idx += 1
                tasks.append(
                    lambda dist=dist, k=k, n=n, seed=seed: _a2_cell(
                        dist, k, n, reps, config.delta, seed
                    )
                )
    rows = _map_rows(tasks, config.workers)
    return rows, (_A2_NOTE,)


def _a2_cell(dist, k, n, reps, delta, seed):
    eme_err = np.empty(reps)
    avg_err = np.empty(reps)
    for b, start in enumerate(range(0, reps, _rng.REP_BLOCK)):
        count = min(_rng.REP_BLOCK, reps - start)
        gen = np.random.Generator(_rng.philox(seed, 1 + b))
        if dist == "one_over_n":
            c = 1.0 / np.arange(start + 1, start + count + 1, dtype=np.float64)
        else:
            c = _a2_constants(gen, dist, count)
        counts = gen.binomial(n, np.broadcast_to(c[:, None], (count, k)))
        phat = counts / n
        eme_err[start : start + count] = np.abs(phat - c[:, None]).max(axis=1)
        avg_err[start : start + count] = np.abs(phat.mean(axis=1) - c)
    desc = f"const~{dist}(k={k})"
    out = []
    for name, err in (("eme", eme_err), ("average", avg_err)):
        se = float(err.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        out.append(
            ResultRow(
                "appendix_a2", desc, n, name, float(err.mean()), float(err.mean()),
                se, math.nan, seed, reps, delta,
            )
        )
    return out


def _run_sign_recovery(config: ExperimentConfig):
    j_grid = [int(j) for j in (config.j_grid or [100, 1000, 10000])]
    n = config.n_grid[0] if config.n_grid else 4
    prof = (
        profile_from_json(config.profile)
        if config.profile
        else log_decay_profile(max(j_grid))
    )
    rows = sign_recovery(prof, n, j_grid, config.reps, config.seed, config.delta)
    return rows, ()


def sign_recovery(
    p: Profile,
    n: int,
    j_grid: list[int],
    reps: int,
    seed: int,
    delta: float = DEFAULT_DELTA,
) -> list[ResultRow]:
    """Monte Carlo recovery-failure frequency under random reflections.

    Per repetition a fair sign sequence picks, per coordinate, either the
    profile's base value v_j or its mirror 1 - v_j; a failure at column j is
    an all-ones column drawn while the base branch was active (the event
    whose probability is exactly v_j^n / 2 whenever the branches differ).
    Rows report the empirical P(any failure among j <= J) next to the
    analytic independent-events union lower bound.
    """
    j_grid = sorted(int(j) for j in j_grid)
    max_j = j_grid[-1]
    dv = p.values(max_j)  # base-branch parameters, used as given
    decodable = dv != 0.5  # at exactly 1/2 both branches coincide: no failure
    fail_counts = {J: 0 for J in j_grid}
    chunk = max(1, min(_rng.REP_BLOCK, 8_000_000 // ((n + 1) * max_j) or 1))
    done = 0
    block = 0
    while done < reps:
        bg = _rng.philox(seed, 1 + block)
        todo = min(_rng.REP_BLOCK, reps - done)
        sub = 0
        while sub < todo:
            cnt = min(chunk, todo - sub)
            u = (bg.random_raw(cnt * (n + 1) * max_j) >> np.uint64(11)) * (2.0**-53)
            u = u.reshape(cnt, n + 1, max_j)
            low_branch = u[:, 0, :] < 0.5
            p_refl = np.where(low_branch, dv[None, :], 1.0 - dv[None, :])
            all_ones = (u[:, 1:, :] < p_refl[:, None, :]).all(axis=1)
            fails = all_ones & low_branch & decodable[None, :]
            for J in j_grid:
                fail_counts[J] += int(fails[:, :J].any(axis=1).sum())
            sub += cnt
        done += todo
        block += 1
    a = 0.5 * dv**n
    rows = []
    for J in j_grid:
        freq = fail_counts[J] / reps
        se = math.sqrt(max(freq * (1 - freq), 1e-12) / reps)
        rows.append(
            ResultRow(
                "sign_recovery",
                p.descriptor(),
                n,
                f"majority_vote(J={J})",
                freq,
                freq,
                se,
                union_lower_bound(a[:J].tolist()),
                seed,
                reps,
                delta,
            )
        )
    return rows


def _run_phi(config: ExperimentConfig):
    if config.profile:
        profiles = [profile_from_json(config.profile)]
    else:
        profiles = [Profile.constant(0.3), Profile.power_law(2.0), Profile.step(0.1, 100)]
    n_grid = config.n_grid or [4, 10]
    horizon = config.horizon or 1000
    rows = phi_consistency(
        profiles, n_grid, horizon, config.reps, config.seed, config.delta
    )
    return rows, ()


def phi_consistency(
    families: list[Profile],
    n_grid: list[int],
    horizon: int,
    reps: int,
    seed: int,
    delta: float = DEFAULT_DELTA,
) -> list[ResultRow]:
    """Empirical flag frequency of the pattern test plus the two series that
    bound its hit sum (folded^floor(n/2) and folded^n partial sums)."""
    rows = []
    idx = 0
    for prof in families:
        for n in n_grid:
            res = mean_sup_error(
                prof,
                "hybrid",
                n,
                horizon,
                reps,
                _rng.spawn_seed(seed, idx),
                horizon=(1, horizon),
            )
            idx += 1
            freq = res["flag_freq"]
            se = math.sqrt(max(freq * (1 - freq), 1e-12) / reps)
            desc = prof.descriptor()
            rows.append(
                ResultRow("phi_consistency", desc, n, "phi_flag", freq, freq, se,
                          math.nan, seed, reps, delta)
            )
            s_half = dot_power_partial_sum(prof, max(1, n // 2), horizon)
            s_full = dot_power_partial_sum(prof, n, horizon)
            rows.append(
                ResultRow("phi_consistency", desc, n, "series_halfn", s_half, s_half,
                          0.0, math.nan, seed, reps, delta)
            )
            rows.append(
                ResultRow("phi_consistency", desc, n, "series_n", s_full, s_full,
                          0.0, math.nan, seed, reps, delta)
            )
    return rows


def mean_sup_error(
    p: Profile,
    est: str,
    n: int,
    cols: int,
    reps: int,
    seed: int,
    kappa: float = 1.0,
    horizon: tuple[int, int] | None = None,
) -> dict:
    """Mean supremum error over the simulated coordinates (desk-scale metric).

    Unlike deviation_mc this does not account for the infinite tail; it is
    the finite-coordinate comparison the appendix experiments use.  Returns
    mean, std_err, flag frequency, and how often the hybrid equalled the
    plain empirical mean.
    """
    if est not in ("eme", "truncated", "hybrid"):
        raise ConfigError(f"unknown estimator id {est!r}")
    p_vec = p.values(cols)
    errs = np.empty(reps)
    flags = 0
    eq_eme = 0
    done = 0
    block = 0
    while done < reps:
        count = min(_rng.REP_BLOCK, reps - done)
        bg = _rng.philox(seed, 1 + block)
        for r in range(count):
            u = (bg.random_raw(n * cols) >> np.uint64(11)) * (2.0**-53)
            bits = (u.reshape(n, cols) < p_vec[None, :]).astype(np.uint8)
            sb = SampleBlock(bits, n, cols, "exact", 0.0, seed)
            if est == "eme":
                e = eme(sb)
            elif est == "truncated":
                e = truncated_estimate(sb, kappa)
            else:
                e = hybrid_estimate(sb, horizon)
                base = eme(sb)
                if e.beyond.kind == "constant":
                    flags += 1
                if e.values == base.values:
                    eq_eme += 1
            errs[done + r] = np.abs(np.asarray(e.values) - p_vec).max() if cols else 0.0
        done += count
        block += 1
    return {
        "mean": float(errs.mean()),
        "std_err": float(errs.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
        "flag_freq": flags / reps,
        "eme_match_freq": eq_eme / reps,
    }


def _run_minimax_sweep(config: ExperimentConfig):
    t_values = config.t_values or [2.0, 3.0]
    ratios = config.ratio_values or [math.exp(2.0), math.exp(3.0), math.exp(math.e)]
    n_grid = config.n_grid or [256, 1024, 4096]
    rows = []
    for t in t_values:
        for ratio in ratios:
            for n in n_grid:
                inst = minimax_instance(t / ratio, t, n, materialize_profiles=False)
                desc = f"step_family(t={t!r},ratio={ratio!r},size={inst.J_plus_1})"
                rows.append(
                    ResultRow(
                        "minimax_sweep", desc, n, "minimax_lower_bound",
                        inst.lower_bound, inst.lower_bound, 0.0, inst.Q_factor,
                        config.seed, 1, config.delta,
                    )
                )
    return rows, ()


def _run_custom(config: ExperimentConfig):
    if not config.profile:
        raise ConfigError("custom preset requires a profile")
    prof = profile_from_json(config.profile)
    n_grid = config.n_grid or [100]
    s_rep = functional_S(prof)
    tasks = []
    for i, n in enumerate(n_grid):
        seed = _rng.spawn_seed(config.seed, i)
        theory = min(1.0, math.sqrt(s_rep.value / n)) if s_rep.is_finite else math.nan
        kw = {}
        if config.estimator == "truncated":
            kw["kappa"] = config.kappa
        if config.estimator == "hybrid" and config.horizon:
            kw["J"] = config.horizon
        tasks.append(
            lambda n=n, seed=seed, theory=theory, kw=kw: [
                _dev_row("custom", prof, config.estimator, n, config.reps,
                         config.delta, seed, theory, **kw)
            ]
        )
    return _map_rows(tasks, config.workers), ()
