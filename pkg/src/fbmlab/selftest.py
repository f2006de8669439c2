"""Fast deterministic invariant suites behind the `selftest` and `covcheck` commands.

Each check returns (name, ok, detail).  All randomness is derived from the
given master seed, so two runs with the same seed print identical reports.
Module functions are looked up through the module objects (not bound at
import time) so a corrupted primitive is caught, not baked in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import drifts, errors, hierarchy, noise, solvers


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    ok: bool
    detail: str


def _check(results, suite, name, ok, detail=""):
    results.append(CheckResult(suite=suite, name=name, ok=bool(ok), detail=detail))


# -- covariance law ----------------------------------------------------------


def covariance_suite(master_seed: int, draws: int = 4000, steps: int = 256) -> list[CheckResult]:
    """Empirical fGn autocovariance at lags 0..5 against the closed form."""
    results = []
    grid = noise.UniformGrid(steps)
    for idx, frac in enumerate((0.25, 0.5, 0.75)):
        params = noise.HurstParams(1.0 + frac)
        rng = noise.RngSpec(master_seed).stream(1000 + idx)
        inc = noise.sample_fgn(params, grid, draws, rng)  # columns are iid draws
        for lag in range(6):
            exact = noise.fgn_autocovariance(frac, lag, grid.dt)
            prods = np.mean(inc[: steps - lag] * inc[lag:], axis=0)  # one value per draw
            est = float(np.mean(prods))
            se = float(np.std(prods, ddof=1) / math.sqrt(draws))
            ok = abs(est - exact) <= 4.0 * se
            _check(
                results,
                "covcheck",
                f"fgn-autocov frac={frac} lag={lag}",
                ok,
                f"est={est:.6g} exact={exact:.6g} se={se:.2g}",
            )
    return results


def noise_suite(master_seed: int) -> list[CheckResult]:
    results = []
    grid = noise.UniformGrid(256)
    params = noise.HurstParams(0.3)

    a = noise.sample_fgn(params, grid, 2, noise.RngSpec(master_seed).stream(0))
    b = noise.sample_fgn(params, grid, 2, noise.RngSpec(master_seed).stream(0))
    _check(results, "noise", "determinism: same substream is bit-identical", np.array_equal(a, b))

    spectrum = noise.embedding_spectrum(0.3, 256, grid.dt)
    _check(
        results,
        "noise",
        "embedding spectrum nonnegative (frac=0.3, n=256)",
        spectrum.min() >= -noise.NEG_EIG_RTOL * spectrum.max(),
        f"min={spectrum.min():.3g}",
    )

    worst = 0.0
    for frac in (0.2, 0.5, 0.8):
        for lag in (0, 1, 5):
            g1 = noise.fgn_autocovariance(frac, lag, 0.01)
            g2 = noise.fgn_autocovariance(frac, lag, 0.02)
            if g1 != 0.0:
                worst = max(worst, abs(g2 / g1 - 2.0 ** (2 * frac)))
    _check(results, "noise", "autocovariance scaling in dt is exact", worst <= 1e-12, f"max rel dev={worst:.2g}")

    rng = noise.RngSpec(master_seed).stream(1)
    w, integral = noise.exact_integrated_bm(noise.UniformGrid(64), 4000, rng)
    var_est = float(np.mean(integral.values[-1] ** 2))
    se = float(np.std(integral.values[-1] ** 2, ddof=1) / math.sqrt(4000))
    _check(
        results,
        "noise",
        "integrated BM terminal variance = 1/3",
        abs(var_est - 1.0 / 3.0) <= 4.0 * se,
        f"est={var_est:.4f} se={se:.2g}",
    )
    return results


def lift_suite(master_seed: int) -> list[CheckResult]:
    results = []
    grid = noise.UniformGrid(100)
    t = grid.times()[:, None]

    ones = noise.SamplePath(grid, np.ones((101, 1)))
    h = hierarchy.lift(ones, 2)
    exact_first = t
    exact_second = t**2 / 2
    err = max(
        float(np.max(np.abs(h.levels[0].values - exact_first))),
        float(np.max(np.abs(h.levels[1].values - exact_second))),
    )
    _check(results, "lift", "trapezoid exact on constant base (levels t, t^2/2)", err <= 1e-14, f"max err={err:.2g}")

    quad = noise.SamplePath(grid, t**2)
    lifted = hierarchy.lift(quad, 1)
    err = float(np.max(np.abs(lifted.levels[0].values - t**3 / 3)))
    _check(results, "lift", "s^2 base integrates to t^3/3 within t*dt^2/6", err <= grid.dt**2 / 6 + 1e-15, f"max err={err:.2g}")

    rng = noise.RngSpec(master_seed).stream(2)
    base = noise.fbm_path(noise.HurstParams(1.5), noise.UniformGrid(128), 1, rng)
    h2 = hierarchy.lift(base, 2)
    from scipy.integrate import cumulative_trapezoid

    reintegrated = cumulative_trapezoid(
        hierarchy.derivative_of_top(h2).values, dx=base.grid.dt, axis=0, initial=0.0
    )
    err = float(np.max(np.abs(reintegrated - h2.top.values)))
    _check(results, "lift", "derivative of top re-integrates to the top", err <= 1e-12, f"max err={err:.2g}")

    p = noise.SamplePath(noise.UniformGrid(8), np.arange(9.0)[:, None])
    r = hierarchy.restrict(p, 2)
    ok = np.array_equal(r.values[:, 0], [0.0, 4.0, 8.0]) and np.array_equal(
        hierarchy.restrict(hierarchy.restrict(p, 4), 2).values, hierarchy.restrict(p, 2).values
    )
    _check(results, "lift", "restriction is exact index extraction and composes", ok)
    return results


def drift_suite(master_seed: int) -> list[CheckResult]:
    results = []
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, 3]))

    capped = drifts.make_drift("capped_holder", alpha=0.8)
    value = capped.eval(np.array([0.5]))[0]
    _check(
        results,
        "drift",
        "capped_holder(0.8) at 0.5 equals 0.5^0.8",
        abs(value - 0.5743491774985174) <= 1e-15,
        f"value={value!r}",
    )

    sin_drift = drifts.make_drift("sin", amplitude=1.0)
    grad = sin_drift.gradient(np.array([0.0]))[0, 0]
    _check(results, "drift", "sin(1) gradient at 0 equals -1", grad == -1.0)

    worst = 0.0
    for drift in (sin_drift, drifts.make_drift("tanh", scale=1.0)):
        for _ in range(20):
            x = rng.uniform(-3, 3, size=2)
            eps = 1e-5
            jac = drift.gradient(x)
            for i in range(2):
                step = np.zeros(2)
                step[i] = eps
                fd = (drift.eval(x + step) - drift.eval(x)) / eps
                worst = max(worst, float(np.max(np.abs(fd - jac[:, i]))))
    _check(results, "drift", "gradients match finite differences", worst <= 1e-4, f"max dev={worst:.2g}")

    gate_rejects = not drifts.satisfies_assumption(
        drifts.make_drift("capped_holder", alpha=0.5), 1.5
    )
    gate_accepts = drifts.satisfies_assumption(capped, 1.5)
    _check(results, "drift", "regularity gate rejects alpha=0.5 and accepts alpha=0.8 at H=1.5", gate_rejects and gate_accepts)

    x = rng.uniform(-5, 5, size=(50, 3))
    odd = max(
        float(np.max(np.abs(capped.eval(-x) + capped.eval(x)))),
        float(np.max(np.abs(sin_drift.eval(-x) + sin_drift.eval(x)))),
    )
    _check(results, "drift", "capped_holder and sin are odd", odd <= 1e-15, f"max dev={odd:.2g}")
    return results


def solver_suite(master_seed: int) -> list[CheckResult]:
    results = []
    params = noise.HurstParams(1.5)
    grid = noise.UniformGrid(512)
    rng_spec = noise.RngSpec(master_seed)
    base = noise.fbm_path(params, grid, 1, rng_spec.stream(4))
    levels = hierarchy.lift(base, 1, params=params)
    top = levels.top

    zero = drifts.make_drift("zero")
    sol = solvers.euler_maruyama(zero, [0.25], top, hurst=1.5)
    expected = 0.25 + top.values
    _check(
        results,
        "solver",
        "zero drift gives x0 + noise exactly",
        np.array_equal(sol.path.values, expected),
    )

    const = drifts.make_drift("constant", value=1.0)
    fine = solvers.euler_maruyama(const, [0.0], top, hurst=1.5)
    coarse = solvers.euler_maruyama(const, [0.0], hierarchy.restrict(top, 64), hurst=1.5)
    _check(
        results,
        "solver",
        "constant drift: coarse equals restricted fine bitwise",
        np.array_equal(coarse.path.values, fine.path.values[::8]),
    )

    linear = drifts.Drift(name="linear(-1)", alpha=1.0, bound=float("inf"), eval=lambda x: -x)
    flat = noise.SamplePath(noise.UniformGrid(4), np.zeros((5, 1)))
    closed = solvers.euler_maruyama(linear, [1.0], flat, unchecked=True)
    _check(
        results,
        "solver",
        "zero-noise Euler closed form (1 - 1/4)^4",
        closed.path.values[-1, 0] == 0.31640625,
    )

    _check(
        results,
        "solver",
        "recursion recomputes bitwise from any intermediate state",
        solvers.verify_recursion(fine, const, top, start=0)
        and solvers.verify_recursion(fine, const, top, start=100),
    )

    coupled = solvers.coupled_integrate(zero, [0.0], levels, 512)
    gap = abs(coupled.values[-1, 0] - top.values[-1, 0])
    bound = np.max(np.abs(base.values)) / 512
    _check(
        results,
        "solver",
        "coupled integrator matches the lift within the left-rule bound",
        gap <= bound,
        f"gap={gap:.3g} bound={bound:.3g}",
    )
    return results


def error_suite(master_seed: int) -> list[CheckResult]:
    results = []
    est, se = errors.lp_moment([3.0, 3.0, 3.0, 3.0], 3.0)
    _check(results, "error", "lp_moment of constants is exact with zero se", est == 3.0 and se == 0.0)
    est, _ = errors.lp_moment([0.0, 2.0], 2.0)
    _check(results, "error", "lp_moment({0,2}, p=2) = sqrt(2)", abs(est - math.sqrt(2.0)) <= 1e-15)

    grid = noise.UniformGrid(64)
    t = grid.times()
    ramp = t[None, :, None] * np.ones((1, 1, 1))
    est, _ = errors.cp_half_seminorm(ramp, grid, 2.0)
    _check(results, "error", "seminorm of f(t)=t is 1 at the extreme pair", abs(est - 1.0) <= 1e-12)
    root = np.sqrt(t)[None, :, None]
    est, _ = errors.cp_half_seminorm(root, grid, 2.0)
    _check(results, "error", "seminorm of f(t)=sqrt(t) is 1", abs(est - 1.0) <= 1e-12)

    records = [
        errors.ErrorRecord(n=n, p=2.0, metric="sup-grid", estimate=1.0 / n, std_error=0.0, samples=8)
        for n in (16, 32, 64)
    ]
    report = errors.fit_rate(records)
    _check(
        results,
        "error",
        "fit on exact 1/n data gives slope -1, r^2=1",
        abs(report.slope + 1.0) <= 1e-12 and abs(report.r_squared - 1.0) <= 1e-12,
    )

    rng = np.random.default_rng(np.random.SeedSequence([master_seed, 5]))
    sup = np.abs(rng.standard_normal(64)) + 0.5
    term = sup * rng.uniform(0.0, 1.0, size=64)
    _check(
        results,
        "error",
        "terminal moment never exceeds sup moment",
        errors.lp_moment(term, 2.0)[0] <= errors.lp_moment(sup, 2.0)[0],
    )
    return results


SUITES = {
    "covcheck": covariance_suite,
    "noise": noise_suite,
    "lift": lift_suite,
    "drift": drift_suite,
    "solver": solver_suite,
    "error": error_suite,
}


def run_suites(master_seed: int, names=None) -> list[CheckResult]:
    chosen = names if names is not None else list(SUITES)
    results = []
    for name in chosen:
        results.extend(SUITES[name](master_seed))
    return results


def format_report(results) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        suffix = f"  ({r.detail})" if r.detail else ""
        lines.append(f"[{status}] {r.suite}: {r.name}{suffix}")
    failed = sum(1 for r in results if not r.ok)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines)
