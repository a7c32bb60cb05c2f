"""Replicated simulation studies: data generation, estimation, MSE/AMSE.

Two summary metrics accompany the per-component errors. ``aggregate`` is
the mean of the component MSEs within a replication; ``mean_curve`` is the
MSE of the implied mean aggregated curve ``alpha_hat @ ybar`` against
``alpha @ ybar``.

Every replication ``r`` draws its weights, noise and sampler streams from
``SeedSequence(seed, spawn_key=(r, purpose))``. The estimator does not
enter the seed, so two scenarios that differ only in the estimator see
identical panels, and results never depend on scheduling.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .gamma_posterior import GammaModel, shrink_panel_gamma
from .models import aggregate_panel, project_components, reconstruct_components
from .noise import GammaNoiseSpec, generate_panel, snr_calibrate
from .scenario import ScenarioSpec
from .shrinkage import shrink_panel_level_dependent, universal_soft_threshold
from .signals import dj_function
from .wavelets import TransformPlan, dwt

__all__ = [
    "AGGREGATE",
    "MEAN_CURVE",
    "ReplicationResult",
    "ScenarioResult",
    "ComparisonResult",
    "mse",
    "true_components",
    "generate_replication",
    "estimate_components",
    "run_replication",
    "run_scenario",
    "compare_methods",
    "summary_rows",
    "summary_csv",
    "replication_csv",
]

log = logging.getLogger(__name__)

AGGREGATE = "aggregate"
MEAN_CURVE = "mean_curve"
_WEIGHTS, _NOISE, _SAMPLER = 0, 1, 2


def mse(estimate, truth) -> float:
    """Mean squared pointwise difference."""
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


@dataclass
class ReplicationResult:
    index: int
    component_mse: dict[str, float] = field(default_factory=dict)
    aggregate_mse: float = math.nan
    mean_curve_mse: float = math.nan
    wall_time: float = 0.0
    error: str | None = None
    acceptance_rate: float | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def metric(self, name: str) -> float:
        if name == AGGREGATE:
            return self.aggregate_mse
        if name == MEAN_CURVE:
            return self.mean_curve_mse
        return self.component_mse[name]

    def metrics(self) -> list[tuple[str, float]]:
        return list(self.component_mse.items()) + [
            (AGGREGATE, self.aggregate_mse), (MEAN_CURVE, self.mean_curve_mse)]


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    replications: list[ReplicationResult]

    @property
    def successes(self) -> list[ReplicationResult]:
        return [r for r in self.replications if r.ok]

    @property
    def failures(self) -> int:
        return sum(not r.ok for r in self.replications)

    def values(self, component: str) -> np.ndarray:
        return np.array([r.metric(component) for r in self.successes])

    def amse(self, component: str = AGGREGATE) -> float:
        v = self.values(component)
        return float(v.mean()) if v.size else math.nan

    def sd(self, component: str = AGGREGATE) -> float:
        v = self.values(component)
        return float(v.std(ddof=1)) if v.size > 1 else 0.0


def _seed(spec: ScenarioSpec, r: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(spec.seed, spawn_key=(r, purpose))


def true_components(spec: ScenarioSpec) -> np.ndarray:
    """(M, L) matrix of the scenario's component curves."""
    return np.column_stack([dj_function(n, spec.M, spec.component_sd) for n in spec.components])


def _weights(spec: ScenarioSpec, r: int) -> np.ndarray:
    if spec.L == 1:
        return np.ones((1, spec.N))
    rng = np.random.default_rng(_seed(spec, r, _WEIGHTS))
    return rng.dirichlet(np.full(spec.L, spec.weights.concentration), size=spec.N).T


def generate_replication(spec: ScenarioSpec, r: int, alpha: np.ndarray | None = None):
    """Return ``(alpha, y, A, noise_spec)`` for replication ``r``."""
    alpha = true_components(spec) if alpha is None else alpha
    y = _weights(spec, r)
    mean_curve = alpha @ y.mean(axis=1)
    nc = spec.noise
    noise_spec = snr_calibrate(nc.family, mean_curve, spec.snr, shape=nc.shape, phi=nc.phi,
                               d=nc.d, truncation_Q=nc.truncation_Q, scale_override=nc.sd_override,
                               reference=nc.snr_reference)
    eps = generate_panel(noise_spec, (spec.M, spec.N), _seed(spec, r, _NOISE))
    return alpha, y, aggregate_panel(alpha, y, eps), noise_spec


def _gamma_model(spec: ScenarioSpec, plan: TransformPlan, noise_spec) -> GammaModel:
    if isinstance(noise_spec, GammaNoiseSpec):
        gamma = noise_spec
    else:
        sd = noise_spec.marginal_sd
        if not sd > 0:
            raise InvalidInputError("gamma-bayes needs a positive noise scale")
        shape = spec.noise.shape
        gamma = GammaNoiseSpec(shape=shape, rate=math.sqrt(shape) / sd)
    return GammaModel(plan, gamma, spec.prior.config(), spec.prior.spike_scale_fraction)


def estimate_components(spec: ScenarioSpec, A, y, noise_spec, sampler_seed=None):
    """Run the scenario's estimator on panel ``A``; returns ``(alpha_hat, acceptance)``."""
    plan = spec.plan()
    D = dwt(A, plan)
    acceptance = None
    if spec.estimator == "identity":
        shrunk = D
    elif spec.estimator == "correlated-bayes":
        shrunk = shrink_panel_level_dependent(D, plan, spec.prior.config())
    elif spec.estimator == "universal-threshold":
        shrunk = universal_soft_threshold(D, plan)
    else:
        model = _gamma_model(spec, plan, noise_spec)
        seed = np.random.SeedSequence(0) if sampler_seed is None else sampler_seed
        shrunk, chains = shrink_panel_gamma(D, model, spec.sampler.config(spec.seed), seed)
        acceptance = float(np.mean([c.acceptance_rate for c in chains]))
    theta = project_components(shrunk, y)
    return reconstruct_components(theta, plan), acceptance


def run_replication(spec: ScenarioSpec, r: int, alpha: np.ndarray | None = None) -> ReplicationResult:
    start = time.perf_counter()
    res = ReplicationResult(index=r)
    try:
        alpha, y, A, noise_spec = generate_replication(spec, r, alpha)
        alpha_hat, res.acceptance_rate = estimate_components(
            spec, A, y, noise_spec, _seed(spec, r, _SAMPLER)
        )
        for l, name in enumerate(spec.components):
            res.component_mse[name] = mse(alpha_hat[:, l], alpha[:, l])
        res.aggregate_mse = float(np.mean(list(res.component_mse.values())))
        ybar = y.mean(axis=1)
        res.mean_curve_mse = mse(alpha_hat @ ybar, alpha @ ybar)
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.warning("scenario %s replication %d failed: %s", spec.id, r, exc)
        res.error = f"{type(exc).__name__}: {exc}"
    res.wall_time = time.perf_counter() - start
    return res


def run_scenario(spec: ScenarioSpec, threads: int = 1) -> ScenarioResult:
    """Run all replications; results are ordered by replication index."""
    if spec.estimator == "gamma-bayes" and spec.noise.family != "gamma":
        log.warning("scenario %s: gamma-bayes on %s noise is a misspecified model",
                    spec.id, spec.noise.family)
    alpha = true_components(spec)
    indices = range(spec.replications)
    if threads <= 1:
        reps = [run_replication(spec, r, alpha) for r in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reps = list(pool.map(lambda r: run_replication(spec, r, alpha), indices))
    return ScenarioResult(spec, reps)


@dataclass
class ComparisonResult:
    first: ScenarioResult
    second: ScenarioResult

    def differences(self, component: str = AGGREGATE) -> np.ndarray:
        """Per-replication ``MSE(first) - MSE(second)`` over jointly successful replications."""
        out = []
        for a, b in zip(self.first.replications, self.second.replications):
            if a.ok and b.ok:
                out.append(a.metric(component) - b.metric(component))
        return np.array(out)

    def table(self) -> list[dict]:
        rows = []
        for comp in _metric_names(self.first.spec):
            diff = self.differences(comp)
            rows.append({
                "component": comp,
                "estimator_a": self.first.spec.estimator,
                "amse_a": self.first.amse(comp),
                "sd_a": self.first.sd(comp),
                "estimator_b": self.second.spec.estimator,
                "amse_b": self.second.amse(comp),
                "sd_b": self.second.sd(comp),
                "mean_diff": float(diff.mean()) if diff.size else math.nan,
                "sd_diff": float(diff.std(ddof=1)) if diff.size > 1 else 0.0,
            })
        return rows


def compare_methods(first: ScenarioSpec, second: ScenarioSpec, threads: int = 1) -> ComparisonResult:
    """Run two estimators on identical generated panels."""
    if first.data_fields() != second.data_fields():
        a, b = first.data_fields(), second.data_fields()
        diff = sorted(k for k in a if a[k] != b[k])
        raise InvalidInputError(f"scenarios differ beyond the estimator in: {', '.join(diff)}")
    return ComparisonResult(run_scenario(first, threads), run_scenario(second, threads))


def _metric_names(spec: ScenarioSpec) -> list[str]:
    return list(spec.components) + [AGGREGATE, MEAN_CURVE]


def _fmt(x: float) -> str:
    return format(x, ".17g")


def summary_rows(result: ScenarioResult) -> list[list[str]]:
    spec = result.spec
    rows = []
    for comp in _metric_names(spec):
        rows.append([spec.id, comp, _fmt(result.amse(comp)), _fmt(result.sd(comp)),
                     str(spec.replications), str(result.failures)])
    return rows


SUMMARY_HEADER = ["scenario_id", "component", "amse", "sd", "R", "failures"]
REPLICATION_HEADER = ["scenario_id", "replication", "component", "mse", "status",
                      "acceptance_rate", "wall_time_s"]


def summary_csv(results: list[ScenarioResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for res in results:
        w.writerows(summary_rows(res))
    return buf.getvalue()


def replication_csv(results: list[ScenarioResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPLICATION_HEADER)
    for res in results:
        for rep in res.replications:
            status = "ok" if rep.ok else f"failed: {rep.error}"
            acc = "" if rep.acceptance_rate is None else _fmt(rep.acceptance_rate)
            pairs = rep.metrics()
            if not rep.ok:
                pairs = [(AGGREGATE, math.nan)]
            for comp, value in pairs:
                w.writerow([res.spec.id, rep.index, comp, _fmt(value), status, acc,
                            f"{rep.wall_time:.6f}"])
    return buf.getvalue()
