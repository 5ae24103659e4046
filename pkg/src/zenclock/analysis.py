"""Batch experiments: amplitude tables, the large-n limit, and Monte Carlo
accuracy sweeps comparing excitation-count policies.

Two notions of accuracy are kept apart.  ``a0`` is the oscillation
amplitude of the outcome probability; ``rmse`` is the root-mean-square
error of the |skew| estimates over the sweep grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .analytic import a0_opt, amplitude, k_opt, prob_plus
from .errors import CapacityError, ConfigError
from .protocol import ProtocolConfig, estimate_from_probability, estimate_skew, run_protocol

MC_MAX_N = 12


@dataclass(frozen=True)
class AmplitudeRow:
    n: int
    k_opt: int
    a0_w: float
    a0_opt: float
    ratio: float


def amplitude_table(n_min: int, n_max: int) -> list[AmplitudeRow]:
    if not 2 <= n_min <= n_max:
        raise ValueError(f"need 2 <= n_min <= n_max, got {n_min}..{n_max}")
    rows = []
    for n in range(n_min, n_max + 1):
        ko = k_opt(n)
        # ratio from integers: k(n-k)/(n-1)
        rows.append(AmplitudeRow(n, ko, float(amplitude(1, n)), a0_opt(n), ko * (n - ko) / (n - 1)))
    return rows


@dataclass(frozen=True)
class LimitReport:
    n_values: list[int]
    a0: list[float]
    gap: list[float]
    even_monotone: bool
    bounded: bool

    @property
    def ok(self) -> bool:
        return self.even_monotone and self.bounded


def limit_check(n_max: int, points: int = 25) -> LimitReport:
    """Distance of the optimal amplitude from 1/4 on a log-spaced n schedule.

    The monotonicity flag comes from a full scan of even n in [4, n_max],
    not just the schedule.
    """
    if n_max < 4:
        raise ValueError("n_max must be >= 4")
    ns = sorted({int(round(x)) for x in np.geomspace(4, n_max, points)} | {n_max})
    a0 = [a0_opt(n) for n in ns]
    gap = [abs(a - 0.25) for a in a0]
    bounded = all(g <= 1 / (2 * (n - 1)) for n, g in zip(ns, gap))
    even_gap = [abs(a0_opt(n) - 0.25) for n in range(4, n_max + 1, 2)]
    monotone = all(b < a for a, b in zip(even_gap, even_gap[1:]))
    return LimitReport(ns, a0, gap, monotone, bounded)


def resolve_policy(policy: str, n: int) -> int:
    """``"w_state"`` -> 1, ``"optimal"`` -> floor(n/2), ``"fixed:K"`` -> K."""
    if policy == "w_state":
        return 1
    if policy == "optimal":
        return k_opt(n)
    if policy.startswith("fixed:"):
        try:
            k = int(policy.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad fixed policy {policy!r}") from None
        if not 0 <= k <= n:
            raise ValueError(f"fixed k={k} out of range for n={n}")
        return k
    raise ValueError(f"unknown policy {policy!r}")


@dataclass(frozen=True)
class SweepSpec:
    n_values: list[int]
    policies: list[str]
    skew_grid: list[float]
    shots: int
    seed: int
    omega: float = 1.0
    exact: bool = False
    use_minus_rounds: bool = False

    def __post_init__(self):
        if not self.n_values:
            raise ConfigError("n_values", "must be a non-empty list")
        if not self.policies:
            raise ConfigError("policies", "must be a non-empty list")
        if not self.skew_grid:
            raise ConfigError("skew_grid", "must be a non-empty list")
        for i, n in enumerate(self.n_values):
            if isinstance(n, bool) or not isinstance(n, int) or n < 2:
                raise ConfigError(f"n_values[{i}]", "must be an integer >= 2")
        for i, p in enumerate(self.policies):
            try:
                for n in self.n_values:
                    if resolve_policy(p, n) in (0, n):
                        raise ValueError(f"zero amplitude at n={n}")
            except (ValueError, AttributeError) as e:
                raise ConfigError(f"policies[{i}]", str(e)) from None
        for i, s in enumerate(self.skew_grid):
            if isinstance(s, bool) or not isinstance(s, (int, float)) or not math.isfinite(s):
                raise ConfigError(f"skew_grid[{i}]", "must be a finite number")
        if isinstance(self.shots, bool) or not isinstance(self.shots, int) or self.shots < 1:
            raise ConfigError("shots", "must be an integer >= 1")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if isinstance(self.omega, bool) or not isinstance(self.omega, (int, float)) or not self.omega > 0:
            raise ConfigError("omega", "must be positive")
        for i, s in enumerate(self.skew_grid):
            if abs(self.omega * s) > math.pi:
                raise ConfigError(f"skew_grid[{i}]", "|omega*skew| must be <= pi to be identifiable")
        if not self.exact and max(self.n_values) > MC_MAX_N:
            raise CapacityError(f"Monte Carlo sweeps are capped at n={MC_MAX_N}")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SweepSpec":
        known = {"n_values", "policies", "skew_grid", "shots", "seed", "omega", "exact", "use_minus_rounds"}
        extra = set(d) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        for name in ("n_values", "policies", "skew_grid", "shots", "seed"):
            if name not in d:
                raise ConfigError(name, "missing")
        for name in ("n_values", "policies", "skew_grid"):
            if not isinstance(d[name], list):
                raise ConfigError(name, "must be a list")
        return cls(**{k: d[k] for k in d})

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_values": list(self.n_values),
            "policies": list(self.policies),
            "skew_grid": list(self.skew_grid),
            "shots": self.shots,
            "seed": self.seed,
            "omega": self.omega,
            "exact": self.exact,
            "use_minus_rounds": self.use_minus_rounds,
        }


@dataclass
class SweepRow:
    n: int
    policy: str
    k_used: int
    a0: float
    skews: list[float]
    p_analytic: list[float] = field(default_factory=list)
    p_hat: list[float] = field(default_factory=list)
    estimates: list[float] = field(default_factory=list)

    @property
    def abs_err(self) -> list[float]:
        return [abs(e - abs(s)) for e, s in zip(self.estimates, self.skews)]

    @property
    def rmse(self) -> float:
        err = self.abs_err
        return math.sqrt(sum(e * e for e in err) / len(err))

    def table_rows(self) -> list[dict[str, Any]]:
        rmse = self.rmse
        return [
            {
                "n": self.n,
                "policy": self.policy,
                "k": self.k_used,
                "a0": self.a0,
                "skew": s,
                "p_analytic": pa,
                "p_hat": ph,
                "abs_err": e,
                "rmse": rmse,
            }
            for s, pa, ph, e in zip(self.skews, self.p_analytic, self.p_hat, self.abs_err)
        ]


def cell_seed(seed: int, n: int, skew_index: int) -> int:
    # policy is deliberately not mixed in: policies at the same (n, skew)
    # share random numbers, which sharpens their comparison
    ss = np.random.SeedSequence(seed, spawn_key=(n, skew_index))
    return int(ss.generate_state(1, np.uint64)[0])


def accuracy_sweep(spec: SweepSpec, *, jobs: int = 1) -> list[SweepRow]:
    """One row per (n, policy); each grid skew is its own protocol run.

    All Bobs in a cell share the grid skew and party 1 supplies the
    estimate.  In exact mode the analytic probability replaces the tally.
    """
    rows = []
    for n in spec.n_values:
        for policy in spec.policies:
            k = resolve_policy(policy, n)
            row = SweepRow(n, policy, k, float(amplitude(k, n)), [float(s) for s in spec.skew_grid])
            for i, skew in enumerate(row.skews):
                p = prob_plus(n, k, spec.omega, skew)
                if spec.exact:
                    p_hat = p
                    _, est = estimate_from_probability(p_hat, row.a0, spec.omega)
                else:
                    cfg = ProtocolConfig(
                        n, k, spec.omega, (skew,) * (n - 1), spec.shots, cell_seed(spec.seed, n, i),
                        spec.use_minus_rounds,
                    )
                    tally = run_protocol(cfg, jobs=jobs)
                    e = estimate_skew(
                        tally, n, k, spec.omega, use_minus_rounds=spec.use_minus_rounds
                    ).for_party(1)
                    p_hat, est = e.p_hat, e.estimated_abs_skew
                row.p_analytic.append(p)
                row.p_hat.append(p_hat)
                row.estimates.append(est)
            rows.append(row)
    return rows


def flatten(rows: Sequence[SweepRow]) -> list[dict[str, Any]]:
    return [r for row in rows for r in row.table_rows()]
