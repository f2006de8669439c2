"""Monte Carlo drivers tying noise, solvers, and estimators together.

Each sample index owns an independent substream of the master seed, so runs
are reproducible bit-for-bit regardless of worker count: workers only decide
*where* a sample is computed, never *what* it computes, and results are
assembled in sample order before any reduction.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .drifts import drift_from_spec
from .errors import (
    ErrorRecord,
    OptimalityVerdict,
    RateReport,
    cp_half_norm,
    fit_rate,
    lp_moment,
    optimality_verdict,
    strong_error_sample,
)
from .exceptions import NumericalAbort
from .hierarchy import NoiseHierarchy, derivative_of_top, lift, restrict
from .noise import HurstParams, NoiseProvenance, RngSpec, UniformGrid, fbm_path
from .solvers import (
    euler_maruyama,
    optimality_ode,
    optimality_record,
    reference_solution,
)


def simulate_hierarchy(
    params: HurstParams, grid: UniformGrid, dim: int, rng_spec: RngSpec, sample_index: int
) -> NoiseHierarchy:
    """Sample the base fBM for one substream and lift it to the full hierarchy."""
    rng = rng_spec.stream(sample_index)
    base = fbm_path(params, grid, dim, rng)
    provenance = NoiseProvenance(
        master_seed=rng_spec.master_seed, sample_index=sample_index, hurst=params.hurst, dim=dim
    )
    return lift(base, params.levels, params=params, provenance=provenance)


def _map_samples(worker, config: ExperimentConfig, count: int, threads: int):
    """Run `worker(config, i)` for i in range(count), in sample order."""
    indices = range(count)
    if threads <= 1:
        return [worker(config, i) for i in indices]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, count // (4 * threads))
        return list(pool.map(worker, [config] * count, indices, chunksize=chunk))


def _rate_sample(config: ExperimentConfig, sample_index: int):
    """One rate-study sample: per-n (sup, terminal, diff sequence) errors."""
    params = HurstParams(config.hurst)
    grid = UniformGrid(config.n_ref)
    drift = drift_from_spec(config.drift)
    try:
        hierarchy = simulate_hierarchy(params, grid, config.dim, RngSpec(config.master_seed), sample_index)
        ref = reference_solution(drift, config.x0, hierarchy)
        out = {}
        for n in config.n_list:
            em = euler_maruyama(
                drift,
                config.x0n,
                restrict(hierarchy.top, n),
                provenance=hierarchy.provenance,
            )
            err = strong_error_sample(ref, em)
            out[n] = (err.sup, err.terminal, err.diffs)
        return out
    except NumericalAbort as abort:
        raise NumericalAbort(str(abort), step=abort.step, sample_index=sample_index) from abort


@dataclass(frozen=True)
class RateResult:
    records: tuple[ErrorRecord, ...]
    report: RateReport


def run_rate_experiment(config: ExperimentConfig, threads: int = 1) -> RateResult:
    """Monte Carlo strong-error estimates per resolution plus the fitted rate."""
    config.validate_rate()
    per_sample = _map_samples(_rate_sample, config, config.samples, threads)
    records = []
    for n in config.n_list:
        if config.metric == "sup-grid":
            values = [s[n][0] for s in per_sample]
            estimate, se = lp_moment(values, config.p)
        elif config.metric == "Lp-terminal":
            values = [s[n][1] for s in per_sample]
            estimate, se = lp_moment(values, config.p)
        else:  # Cp-half
            diffs = np.stack([s[n][2] for s in per_sample])
            estimate, se = cp_half_norm(diffs, UniformGrid(n), config.p, config.pair_budget)
        records.append(
            ErrorRecord(
                n=n,
                p=config.p,
                metric=config.metric,
                estimate=estimate,
                std_error=se,
                samples=config.samples,
            )
        )
    return RateResult(records=tuple(records), report=fit_rate(records))


def _optimality_sample(config: ExperimentConfig, sample_index: int) -> OptimalityVerdict:
    """One path: reference solve, limit ODE, scaled errors across the n ladder."""
    params = HurstParams(config.hurst)
    grid = UniformGrid(config.n_ref)
    drift = drift_from_spec(config.drift)
    try:
        hierarchy = simulate_hierarchy(params, grid, config.dim, RngSpec(config.master_seed), sample_index)
        ref = reference_solution(drift, config.x0, hierarchy)
        c_path = optimality_ode(drift, ref, derivative_of_top(hierarchy))
        records = []
        for n in config.n_list:
            em = euler_maruyama(
                drift,
                config.x0n,
                restrict(hierarchy.top, n),
                provenance=hierarchy.provenance,
            )
            records.append(optimality_record(ref, em, c_path))
        return optimality_verdict(records, config.threshold)
    except NumericalAbort as abort:
        raise NumericalAbort(str(abort), step=abort.step, sample_index=sample_index) from abort


@dataclass(frozen=True)
class OptimalityResult:
    verdicts: tuple[OptimalityVerdict, ...]
    eligible: int  # paths judged: |c(1)| above the cutoff, or exactly at the limit
    confirmed: int

    @property
    def confirmed_fraction(self) -> float:
        return self.confirmed / self.eligible if self.eligible else float("nan")


def run_optimality_experiment(config: ExperimentConfig, threads: int = 1) -> OptimalityResult:
    """Per-path limit verdicts over `config.samples` independent noise paths."""
    config.validate_optimality()
    verdicts = tuple(_map_samples(_optimality_sample, config, config.samples, threads))
    eligible = sum(1 for v in verdicts if not v.small_limit or v.exact)
    confirmed = sum(1 for v in verdicts if v.verdict == "confirmed")
    return OptimalityResult(verdicts=verdicts, eligible=eligible, confirmed=confirmed)


def default_thread_count() -> int:
    return os.cpu_count() or 1
