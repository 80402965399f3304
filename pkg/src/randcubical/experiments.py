"""Monte Carlo experiments: laws of large numbers, CLT diagnostics, positivity
witnesses and the deterministic bounds used in the proofs."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from . import lattice
from .cubes import CubicalSet, ElementaryCube, Window, faces_all, supercubes
from .errors import NonProductModelError, PlanError, PropertyViolation
from .filtration import BettiCurve, Configuration, betti_curves, build_filtration
from .homology import betti
from .models import ModelSpec, SampleSeed, marginal_cdf, resample_origin, sample_configuration

__all__ = [
    "ExperimentPlan",
    "LLNResult",
    "LifetimeLLNResult",
    "CLTResult",
    "ResamplingReport",
    "StabilizationReport",
    "PositivityWitness",
    "LemmaReport",
    "default_n_list",
    "run_lln",
    "run_lifetime_lln",
    "run_clt",
    "run_clt_suite",
    "check_resampling_bound",
    "check_stabilization",
    "stabilization_frequency",
    "count_positivity_witnesses",
    "estimate_positivity",
    "pattern_probability",
    "check_lemma_bounds",
    "continuity_modulus",
    "continuity_violations",
    "render",
    "emit",
]

DEFAULT_T_GRID = tuple(i / 100 for i in range(101))


def default_n_list(d: int) -> tuple[int, ...]:
    return {1: (8, 16, 32, 64), 2: (8, 16, 32, 64), 3: (4, 8, 12, 16)}.get(d, (2, 3, 4))


@dataclass(frozen=True)
class ExperimentPlan:
    model: ModelSpec
    q: int
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    n_list: tuple[int, ...] | None = None
    samples_per_n: int = 5
    seed: int = 0
    output: str | None = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.n_list is None:
            object.__setattr__(self, "n_list", default_n_list(self.model.ambient_dim))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))

    def validate(self) -> "ExperimentPlan":
        d = self.model.ambient_dim
        if not 0 <= self.q < d:
            raise PlanError(f"q must satisfy 0 <= q < {d}, got {self.q}")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise PlanError("n_list must be non-empty with positive entries")
        if any(a >= b for a, b in zip(self.n_list, self.n_list[1:])):
            raise PlanError("n_list must be strictly ascending")
        if not self.t_grid or any(not 0.0 <= t <= 1.0 for t in self.t_grid):
            raise PlanError("t_grid must be non-empty within [0, 1]")
        if any(a > b for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise PlanError("t_grid must be sorted")
        if self.samples_per_n < 1:
            raise PlanError("samples_per_n must be >= 1")
        if self.format not in ("csv", "json"):
            raise PlanError(f"unknown output format {self.format!r}")
        return self


# --------------------------------------------------------------------------- sampling helpers


def _sample_curves(args) -> dict[int, BettiCurve]:
    model, n, index, seed, qs = args
    w = Window(n, model.ambient_dim)
    omega = sample_configuration(model, w.grow(1), SampleSeed(seed, (n, index)))
    return betti_curves(build_filtration(omega, w), qs)


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(x) for x in items]


def _union_times(curves: Sequence[BettiCurve], extra: Sequence[float] = ()) -> np.ndarray:
    parts = [c.times for c in curves] + [np.asarray(extra, dtype=np.float64), np.array([0.0])]
    return np.unique(np.concatenate(parts))


def _std(x: np.ndarray, axis=0) -> np.ndarray:
    return np.std(x, axis=axis, ddof=1) if x.shape[axis] > 1 else np.zeros(np.delete(x.shape, axis))


def _step_integral(times: np.ndarray, values: np.ndarray) -> float:
    right = np.append(times[1:], 1.0)
    return float(np.dot(values, right - times))


def _require_continuous(model: ModelSpec):
    if not model.has_continuous_marginals():
        raise PlanError(f"{model} has discontinuous marginals; sup-over-t statistics are not supported")


# --------------------------------------------------------------------------- LLN


@dataclass
class LLNResult:
    model: str
    q: int
    n_list: tuple[int, ...]
    t_grid: tuple[float, ...]
    samples: int
    mean: list[np.ndarray]
    std: list[np.ndarray]
    sup_diff: list[float]
    """Exact sup over t of |mean curve(n_i) - mean curve(n_{i+1})|."""
    grid_sup_diff: list[float]
    max_std: list[float]
    """Exact max over t of the across-sample std of the normalized curve, per n."""
    curve_max: list[float]

    header = ("model", "q", "n", "t", "mean_norm_betti", "std", "samples")
    kind = "lln"

    @property
    def beta_hat_estimate(self) -> np.ndarray:
        return self.mean[-1]

    def rows(self):
        for n, mu, sd in zip(self.n_list, self.mean, self.std):
            for t, a, b in zip(self.t_grid, mu.tolist(), sd.tolist()):
                yield (self.model, self.q, n, t, a, b, self.samples)

    def summary(self) -> dict:
        return {
            "sup_diff": self.sup_diff,
            "grid_sup_diff": self.grid_sup_diff,
            "max_std": self.max_std,
            "curve_max": self.curve_max,
        }


def run_lln(plan: ExperimentPlan) -> LLNResult:
    plan.validate()
    _require_continuous(plan.model)
    d = plan.model.ambient_dim
    grid = np.asarray(plan.t_grid)
    means, stds, per_n = [], [], []
    max_std, curve_max = [], []
    for n in plan.n_list:
        vol = Window(n, d).volume
        jobs = [(plan.model, n, i, plan.seed, [plan.q]) for i in range(plan.samples_per_n)]
        curves = [c[plan.q] for c in _map(_sample_curves, jobs, plan.workers)]
        vals = np.stack([c(grid) for c in curves]) / vol
        means.append(vals.mean(axis=0))
        stds.append(_std(vals))
        pts = _union_times(curves, grid)
        exact = np.stack([c(pts) for c in curves]) / vol
        max_std.append(float(_std(exact).max()))
        curve_max.append(float(exact.mean(axis=0).max()))
        per_n.append(curves)
        limit = 3 ** d
        if exact.max() > limit:
            raise PropertyViolation(f"normalized Betti number {exact.max()} exceeds 3^d = {limit}")
    sup_diff, grid_sup = [], []
    for i in range(len(plan.n_list) - 1):
        a, b = per_n[i], per_n[i + 1]
        va, vb = Window(plan.n_list[i], d).volume, Window(plan.n_list[i + 1], d).volume
        pts = _union_times(a + b, grid)
        ma = np.mean([c(pts) for c in a], axis=0) / va
        mb = np.mean([c(pts) for c in b], axis=0) / vb
        sup_diff.append(float(np.abs(ma - mb).max()))
        grid_sup.append(float(np.abs(means[i] - means[i + 1]).max()))
    return LLNResult(str(plan.model), plan.q, plan.n_list, plan.t_grid, plan.samples_per_n,
                     means, stds, sup_diff, grid_sup, max_std, curve_max)


def continuity_modulus(model: ModelSpec, n: int, s: float, t: float) -> float:
    """Upper bound on ``E|beta(t) - beta(s)| / |Lambda_n|`` for ``s <= t``.

    Each newly present cube has some supercube whose value jumped into
    ``(s, t]``; a j-cube has ``C(d-j, k-j) 2^(k-j)`` supercubes of dimension k.
    """
    d = model.ambient_dim
    w = Window(n, d)
    dF = [marginal_cdf(model, k)(t) - marginal_cdf(model, k)(s) for k in range(d + 1)]
    total = 0.0
    for j in range(d + 1):
        count = comb(d, j) * (2 * n) ** j * (2 * n + 1) ** (d - j)
        total += count * sum(comb(d - j, k - j) * 2 ** (k - j) * dF[k] for k in range(j, d + 1))
    return total / w.volume


def continuity_violations(result: LLNResult, model: ModelSpec) -> list[tuple[int, float, float, float]]:
    """Adjacent grid points where the mean curve jumps more than the modulus allows."""
    out = []
    for n, mu in zip(result.n_list, result.mean):
        for (s, t), (a, b) in zip(itertools.pairwise(result.t_grid), itertools.pairwise(mu.tolist())):
            bound = continuity_modulus(model, n, s, t)
            if abs(b - a) > bound:
                out.append((n, s, t, abs(b - a)))
    return out


@dataclass
class LifetimeLLNResult:
    model: str
    q: int
    n_list: tuple[int, ...]
    samples: int
    mean: list[float]
    std: list[float]
    integral_of_mean_curve: list[float]

    header = ("model", "q", "n", "mean_norm_lifetime", "std", "integral_of_mean_curve", "samples")
    kind = "lifetime-lln"

    def rows(self):
        for n, a, b, c in zip(self.n_list, self.mean, self.std, self.integral_of_mean_curve):
            yield (self.model, self.q, n, a, b, c, self.samples)

    def summary(self) -> dict:
        gaps = [abs(a - b) for a, b in zip(self.mean, self.integral_of_mean_curve)]
        return {"consistency_gap": gaps}


def run_lifetime_lln(plan: ExperimentPlan) -> LifetimeLLNResult:
    plan.validate()
    _require_continuous(plan.model)
    d = plan.model.ambient_dim
    means, stds, integ = [], [], []
    for n in plan.n_list:
        vol = Window(n, d).volume
        jobs = [(plan.model, n, i, plan.seed, [plan.q]) for i in range(plan.samples_per_n)]
        curves = [c[plan.q] for c in _map(_sample_curves, jobs, plan.workers)]
        lifetimes = np.array([c.integral() for c in curves]) / vol
        means.append(float(lifetimes.mean()))
        stds.append(float(_std(lifetimes[:, None])[0]))
        pts = _union_times(curves)
        mean_curve = np.mean([c(pts) for c in curves], axis=0) / vol
        integ.append(_step_integral(pts, mean_curve))
    return LifetimeLLNResult(str(plan.model), plan.q, plan.n_list, plan.samples_per_n, means, stds, integ)


# --------------------------------------------------------------------------- CLT


@dataclass
class CLTRow:
    n: int
    mean: float
    var_over_volume: float
    ks_distance: float | None
    standardized: np.ndarray
    samples: int


@dataclass
class CLTResult:
    model: str
    q: int
    target: str
    rows_: list[CLTRow]

    header = ("model", "q", "n", "t", "var_over_volume", "ks_distance", "samples")
    kind = "clt"

    def rows(self):
        t = "" if self.target == "lifetime" else float(self.target)
        for r in self.rows_:
            yield (self.model, self.q, r.n, t, r.var_over_volume, r.ks_distance, r.samples)

    def summary(self) -> dict:
        return {"target": self.target, "mean": [r.mean for r in self.rows_]}

    def by_n(self, n: int) -> CLTRow:
        return next(r for r in self.rows_ if r.n == n)


def _clt_stats(args) -> list[float]:
    model, n, index, seed, targets = args
    curves = _sample_curves((model, n, index, seed, sorted({q for q, _ in targets})))
    return [curves[q].integral() if tgt == "lifetime" else float(curves[q](tgt)) for q, tgt in targets]


def _check_target(target):
    if target == "lifetime":
        return target
    target = float(target)
    if not 0.0 <= target <= 1.0:
        raise PlanError("CLT time must lie in [0, 1]")
    return target


def run_clt_suite(plan: ExperimentPlan, targets: Sequence[tuple[int, float | str]]) -> list[CLTResult]:
    """Several ``(q, target)`` statistics evaluated on the same samples.

    Each result equals what :func:`run_clt` gives for that ``q`` and target
    with the same plan, since the sample streams are identical.
    """
    plan.validate()
    if not plan.model.is_product:
        raise NonProductModelError(f"{plan.model} is not a product measure")
    targets = [(int(q), _check_target(t)) for q, t in targets]
    d = plan.model.ambient_dim
    for q, _ in targets:
        if not 0 <= q < d:
            raise PlanError(f"q must satisfy 0 <= q < {d}, got {q}")
    rows: list[list[CLTRow]] = [[] for _ in targets]
    for n in plan.n_list:
        vol = Window(n, d).volume
        jobs = [(plan.model, n, i, plan.seed, targets) for i in range(plan.samples_per_n)]
        table = np.array(_map(_clt_stats, jobs, plan.workers), dtype=np.float64).reshape(-1, len(targets))
        for j, x in enumerate(table.T):
            sd = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
            if sd > 0:
                z = (x - x.mean()) / sd
                ks = float(stats.kstest(z, "norm").statistic)
            else:
                z, ks = np.zeros_like(x), None
            rows[j].append(CLTRow(n, float(x.mean()), sd ** 2 / vol, ks, z, len(x)))
    return [CLTResult(str(plan.model), q, "lifetime" if t == "lifetime" else repr(t), r)
            for (q, t), r in zip(targets, rows)]


def run_clt(plan: ExperimentPlan, target: float | str) -> CLTResult:
    """Variance/|Lambda_n| and normality of ``beta_q^n(t)`` (``target=t``) or of
    ``L_q^n`` (``target="lifetime"``)."""
    return run_clt_suite(plan, [(plan.q, target)])[0]


# --------------------------------------------------------------------------- resampling / stabilization


@dataclass
class ResamplingReport:
    model: str
    n: int
    trials: int
    max_abs: dict[int, int]
    bound: int
    violations: int

    header = ("model", "n", "q", "trials", "max_abs_diff", "bound", "violations")
    kind = "resampling"

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def rows(self):
        for q, m in sorted(self.max_abs.items()):
            yield (self.model, self.n, q, self.trials, m, self.bound, self.violations)

    def summary(self) -> dict:
        return {"passed": self.passed}


def _curve_sup_diff(a: BettiCurve, b: BettiCurve) -> int:
    pts = _union_times([a, b])
    return int(np.abs(a(pts) - b(pts)).max())


def check_resampling_bound(model: ModelSpec, w: Window, trials: int, seed: int,
                           qs: Sequence[int] | None = None) -> ResamplingReport:
    """Max over trials and all t of ``|beta_q(X^n(t)) - beta_q(X^{*,n}(t))|`` after
    redrawing the origin cubes, against the bound ``2^(d+1)``."""
    if not (model.is_product or model.is_deterministic):
        raise NonProductModelError(f"{model} is not a product measure")
    d = model.ambient_dim
    qs = list(range(d)) if qs is None else list(qs)
    bound = 2 ** (d + 1)
    worst = {q: 0 for q in qs}
    violations = 0
    for i in range(trials):
        omega = sample_configuration(model, w.grow(1), SampleSeed(seed, (i, 0)))
        star = resample_origin(omega, SampleSeed(seed, (i, 1)))
        ca = betti_curves(build_filtration(omega, w), qs)
        cb = betti_curves(build_filtration(star, w), qs)
        for q in qs:
            diff = _curve_sup_diff(ca[q], cb[q])
            worst[q] = max(worst[q], diff)
            if diff > bound:
                violations += 1
    return ResamplingReport(str(model), w.n, trials, worst, bound, violations)


@dataclass
class StabilizationReport:
    n_list: tuple[int, ...]
    differences: list[int]
    stable_from: int
    tail_constant: bool


def check_stabilization(omega: Configuration, omega_star: Configuration, n_list: Sequence[int],
                        q: int, t: float, tail: int = 3) -> StabilizationReport:
    """``D(n) = beta_q(X^n(t)) - beta_q(X^{*,n}(t))`` along ``n_list``."""
    n_list = tuple(n_list)
    diffs = []
    for n in n_list:
        w = Window(n, omega.ambient_dim)
        a = betti_curves(build_filtration(omega, w), [q])[q](t)
        b = betti_curves(build_filtration(omega_star, w), [q])[q](t)
        diffs.append(int(a) - int(b))
    j = len(diffs) - 1
    while j > 0 and diffs[j - 1] == diffs[-1]:
        j -= 1
    tail_ok = len(set(diffs[-tail:])) == 1 if len(diffs) >= tail else False
    return StabilizationReport(n_list, diffs, n_list[j], tail_ok)


def stabilization_frequency(model: ModelSpec, n_list: Sequence[int], pairs: int, seed: int,
                            q: int, t: float, tail: int = 3) -> tuple[float, list[StabilizationReport]]:
    """Fraction of frozen ``(omega, omega*)`` pairs whose ``D(n)`` is constant on the tail."""
    d = model.ambient_dim
    region = Window(max(n_list) + 1, d)
    reports = []
    for i in range(pairs):
        omega = sample_configuration(model, region, SampleSeed(seed, (i, 0)))
        star = resample_origin(omega, SampleSeed(seed, (i, 1)))
        reports.append(check_stabilization(omega, star, n_list, q, t, tail))
    return sum(r.tail_constant for r in reports) / max(pairs, 1), reports


# --------------------------------------------------------------------------- positivity


def _pattern_offsets(d: int, q: int):
    """Offsets (doubled coords) around a (q+1)-cube odd on the first q+1 axes, tagged
    'face' (q-face: value must be <= t), 'free' (lower face) or 'absent' (> t)."""
    ranges = [range(-2, 3)] * (q + 1) + [range(-1, 2)] * (d - q - 1)
    out = []
    for o in itertools.product(*ranges):
        inner = all(abs(v) <= 1 for v in o[: q + 1]) and not any(o[q + 1:])
        nz = sum(1 for v in o if v)
        if inner and nz == 1:
            out.append((o, "face"))
        elif inner and nz >= 2:
            out.append((o, "free"))
        else:
            out.append((o, "absent"))
    return out


def pattern_probability(model: ModelSpec, q: int, t: float) -> float:
    """Probability that a fixed (q+1)-cube forms an isolated hollow sphere at time t."""
    if not model.is_product:
        raise NonProductModelError(f"{model} is not a product measure")
    d = model.ambient_dim
    F = [marginal_cdf(model, k)(t) for k in range(d + 1)]
    p = 1.0
    for o, kind in _pattern_offsets(d, q):
        # dimension of the offset cube: odd doubled coordinate on the first q+1 axes flips parity
        dim = sum((1 + v) & 1 for v in o[: q + 1]) + sum(v & 1 for v in o[q + 1:])
        if kind == "face":
            p *= F[dim]
        elif kind == "absent":
            p *= 1.0 - F[dim]
    return p


@dataclass
class PositivityWitness:
    q: int
    t: float
    K: int
    counts: list[int]
    positions: int
    origin_hits: int
    p_hat: float
    se: float
    p_exact: float | None
    lower_bound: float

    header = ("q", "t", "K", "samples", "witnesses", "positions", "origin_hits", "p_hat", "se",
              "p_exact", "lower_bound")
    kind = "positivity"

    def rows(self):
        yield (self.q, self.t, self.K, len(self.counts), sum(self.counts), self.positions,
               self.origin_hits, self.p_hat, self.se, self.p_exact, self.lower_bound)

    def summary(self) -> dict:
        return {}


def _witness_scan(values: np.ndarray, region: Window, q: int, t: float) -> tuple[int, int, int]:
    """(count, positions, origin_hit) of isolated hollow (q+1)-cubes inside ``[-(m-1), m-1]^d``."""
    d = region.ambient_dim
    L = 4 * region.n + 1
    if L < 5:
        raise PlanError("region too small for the witness pattern")
    base_offsets = _pattern_offsets(d, q)
    par = np.arange(L) & 1
    count = positions = 0
    origin_hit = 0
    inner = slice(2, L - 2)
    for axes in itertools.combinations(range(d), q + 1):
        perm = list(axes) + [a for a in range(d) if a not in axes]
        mask = np.ones((L - 4,) * d, dtype=bool)
        for ax in range(d):
            want = 1 if ax in axes else 0
            shape = [1] * d
            shape[ax] = -1
            mask &= (par[inner] == want).reshape(shape)
        positions += int(mask.sum())
        for o, kind in base_offsets:
            if kind == "free":
                continue
            off = [0] * d
            for src, ax in enumerate(perm):
                off[ax] = o[src]
            sl = tuple(slice(2 + v, L - 2 + v) for v in off)
            view = values[sl]
            mask &= (view <= t) if kind == "face" else (view > t)
            if not mask.any():
                break
        count += int(mask.sum())
        if axes == tuple(range(q + 1)):
            idx = tuple(2 * region.n + (1 if ax in axes else 0) - 2 for ax in range(d))
            origin_hit = int(mask[idx])
    return count, positions, origin_hit


def _lower_bound(p: float, K: int, d: int) -> float:
    return p / (2 * K + 2) ** d


def _check_K(K: int, q: int, d: int):
    # the pattern plus its neighbourhood spans 3 units per axis; it must fit in [-K, K]
    if K < 2:
        raise PlanError(f"witness pattern needs K >= 2, got K={K}")
    if not 0 <= q < d:
        raise PlanError(f"q must satisfy 0 <= q < {d}")


def count_positivity_witnesses(omega: Configuration, q: int, t: float, K: int) -> PositivityWitness:
    """Isolated hollow (q+1)-cubes of ``omega`` at time ``t``.

    A witness is a (q+1)-cube S whose q-faces all have value <= t while every
    other cube meeting S (S included, lower faces of S excepted) has value > t.
    Then the boundary of S is a separate q-sphere component of X(t) and adds 1
    to beta_q.  Positions range over (q+1)-cubes whose neighbourhood lies in the
    sampling region.
    """
    d = omega.ambient_dim
    _check_K(K, q, d)
    count, positions, origin = _witness_scan(np.asarray(omega.values), omega.region, q, t)
    p_hat = count / positions if positions else 0.0
    p_exact = pattern_probability(omega.model, q, t) if omega.model is not None and omega.model.is_product else None
    ref = p_exact if p_exact is not None else p_hat
    se = math.sqrt(ref * (1 - ref) / positions) if positions else 0.0
    return PositivityWitness(q, t, K, [count], positions, origin, p_hat, se, p_exact, _lower_bound(p_hat, K, d))


def estimate_positivity(model: ModelSpec, q: int, t: float, K: int, samples: int, n: int,
                        seed: int) -> PositivityWitness:
    """Pool witness counts over samples on ``[-(n+1), n+1]^d``.

    By stationarity every position has the pattern probability, so the pooled
    frequency estimates it; ``(2K+2)^-d`` times that probability lower-bounds
    the limiting normalized Betti number.
    """
    d = model.ambient_dim
    _check_K(K, q, d)
    region = Window(n + 1, d)
    counts, positions, origin = [], 0, 0
    for i in range(samples):
        omega = sample_configuration(model, region, SampleSeed(seed, (n, i)))
        c, p, o = _witness_scan(np.asarray(omega.values), region, q, t)
        counts.append(c)
        positions += p
        origin += o
    p_hat = sum(counts) / positions
    p_exact = pattern_probability(model, q, t) if model.is_product else None
    ref = p_exact if p_exact is not None else p_hat
    se = math.sqrt(ref * (1 - ref) / positions)
    return PositivityWitness(q, t, K, counts, positions, origin, p_hat, se, p_exact, _lower_bound(p_hat, K, d))


# --------------------------------------------------------------------------- lemma bounds


@dataclass
class LemmaReport:
    trials_diff: int
    violations_diff: list[dict] = field(default_factory=list)
    trials_cover: int = 0
    violations_cover: list[dict] = field(default_factory=list)
    max_ratio_diff: float = 0.0
    max_ratio_cover: float = 0.0

    header = ("check", "trials", "violations", "max_ratio")
    kind = "lemmas"

    @property
    def passed(self) -> bool:
        return not self.violations_diff and not self.violations_cover

    def rows(self):
        yield ("betti_difference", self.trials_diff, len(self.violations_diff), self.max_ratio_diff)
        yield ("cover_count", self.trials_cover, len(self.violations_cover), self.max_ratio_cover)

    def summary(self) -> dict:
        return {"passed": self.passed, "counterexamples": self.violations_diff + self.violations_cover}


def _prefix_set(cells, k, d) -> CubicalSet:
    return CubicalSet((c for c, _ in cells[:k]), d)


def check_lemma_bounds(trials: int, seed: int, dims: Sequence[int] = (1, 2, 3)) -> LemmaReport:
    """Random nested pairs ``X ⊂ Y``: ``|beta_q(Y) - beta_q(X)| <= #Y - #X``, and
    for removals covered by top cells Z: ``#Y - #X <= 3^d |Z|``."""
    rng = np.random.default_rng(seed)
    rep = LemmaReport(trials, trials_cover=trials)
    for i in range(trials):
        d = int(rng.choice(dims))
        n = int(rng.integers(1, 3)) if d < 3 else 1
        model = ModelSpec.uniform(d)
        w = Window(n, d)
        cells = build_filtration(sample_configuration(model, w.grow(1), SampleSeed(seed, (i, d))), w).cells
        a, b = sorted(int(x) for x in rng.integers(0, len(cells) + 1, size=2))
        X, Y = _prefix_set(cells, a, d), _prefix_set(cells, b, d)
        bx, by = betti(X), betti(Y)
        gap = len(Y) - len(X)
        for q in range(d + 1):
            diff = abs(by[q] - bx[q])
            if diff > gap:
                rep.violations_diff.append({"trial": i, "d": d, "q": q, "betti_diff": diff, "count_diff": gap})
            if gap:
                rep.max_ratio_diff = max(rep.max_ratio_diff, diff / gap)

        # cover check: remove an up-closed set of cubes lying inside random top cells
        Y = _prefix_set(cells, int(rng.integers(1, len(cells) + 1)), d)
        tops = [ElementaryCube.from_doubled(c) for c in itertools.product(range(-2 * n, 2 * n + 1), repeat=d)
                if all(x & 1 for x in c)]
        Z = [tops[j] for j in rng.choice(len(tops), size=int(rng.integers(1, min(4, len(tops)) + 1)), replace=False)]
        inside = lambda c: any(z.contains(c) for z in Z)
        removable = [c for c in sorted(Y.cubes, key=lambda c: c.doubled)
                     if inside(c) and all(inside(s) for s in supercubes(c) if s in Y)]
        picked = [c for c in removable if rng.random() < 0.5]
        removed = set()
        for c in picked:
            removed |= {s for s in supercubes(c) if s in Y}
        X = CubicalSet(Y.cubes - removed, d)
        if not X.is_face_closed():
            raise PropertyViolation("cover construction produced a set that is not face-closed")
        gap = len(Y) - len(X)
        if gap > 3 ** d * len(Z):
            rep.violations_cover.append({"trial": i, "d": d, "count_diff": gap, "cover": len(Z)})
        rep.max_ratio_cover = max(rep.max_ratio_cover, gap / (3 ** d * len(Z)))
    return rep


# --------------------------------------------------------------------------- output


def _clean(v: Any):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    return v


def render(result, fmt: str = "csv") -> str:
    rows = [[_clean(v) for v in r] for r in result.rows()]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(result.header)
        for r in rows:
            writer.writerow(["" if v is None else v for v in r])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "kind": result.kind,
            "header": list(result.header),
            "rows": [dict(zip(result.header, r)) for r in rows],
            "summary": _clean(result.summary()),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(result, fmt: str = "csv", path: str | None = None) -> str:
    """Write ``result`` as CSV or JSON to ``path`` (or just return the text)."""
    text = render(result, fmt)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
