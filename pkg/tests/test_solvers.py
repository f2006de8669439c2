"""EM scheme identities, shared-noise coupling, coupled integrator, limit ODE."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fbmlab.drifts import Drift, make_drift
from fbmlab.exceptions import ConfigurationError, NumericalAbort
from fbmlab.experiments import simulate_hierarchy
from fbmlab.hierarchy import derivative_of_top, lift, restrict
from fbmlab.noise import HurstParams, RngSpec, SamplePath, UniformGrid
from fbmlab.solvers import (
    EmSolution,
    coupled_integrate,
    em_difference,
    euler_maruyama,
    optimality_ode,
    optimality_record,
    reference_solution,
    verify_recursion,
)


def make_hierarchy(seed=0, n=4096, hurst=1.5, dim=1, sample=0):
    return simulate_hierarchy(HurstParams(hurst), UniformGrid(n), dim, RngSpec(seed), sample)


def zero_path(n, dim=1):
    return SamplePath(UniformGrid(n), np.zeros((n + 1, dim)))


LINEAR = Drift(name="linear(-1)", alpha=1.0, bound=float("inf"), eval=lambda x: -x)


def test_zero_drift_gives_shifted_noise_exactly():
    h = make_hierarchy(n=512)
    sol = euler_maruyama(make_drift("zero"), [0.25], h.top, hurst=1.5)
    assert np.array_equal(sol.path.values, 0.25 + h.top.values)


def test_constant_drift_closed_form_and_bitwise_restriction():
    h = make_hierarchy(n=4096)
    const = make_drift("constant", value=1.0)
    fine = euler_maruyama(const, [0.0], h.top, provenance=h.provenance)
    coarse = euler_maruyama(const, [0.0], restrict(h.top, 64), provenance=h.provenance)
    # Scheme is exact for constant drift: x0 + v k/n + B_{k/n}.
    k_over_n = UniformGrid(64).times()[:, None]
    assert np.array_equal(coarse.path.values, k_over_n + restrict(h.top, 64).values)
    # Coarse run equals the restricted fine run bitwise.
    assert np.array_equal(coarse.path.values, fine.path.values[::64])
    assert np.array_equal(coarse.drift_integral, fine.drift_integral[::64])


def test_constant_drift_bitwise_for_dyadic_value():
    h = make_hierarchy(seed=3, n=2048)
    const = make_drift("constant", value=0.75)
    fine = euler_maruyama(const, [0.5], h.top, provenance=h.provenance)
    coarse = euler_maruyama(const, [0.5], restrict(h.top, 32), provenance=h.provenance)
    assert np.array_equal(coarse.path.values, fine.path.values[::64])


def test_zero_noise_euler_closed_form():
    sol = euler_maruyama(LINEAR, [1.0], zero_path(4), unchecked=True)
    assert sol.path.values[-1, 0] == 0.31640625  # (1 - 1/4)^4


def test_gate_enforced_unless_unchecked():
    h = make_hierarchy(n=64)
    rough = make_drift("capped_holder", alpha=0.5)
    with pytest.raises(ConfigurationError):
        euler_maruyama(rough, [0.0], h.top, hurst=1.5)
    euler_maruyama(rough, [0.0], h.top, unchecked=True)  # test mode bypasses
    with pytest.raises(ConfigurationError):
        euler_maruyama(rough, [0.0], h.top)  # no Hurst index available


def test_nonfinite_drift_aborts_with_step_index():
    exploding = Drift(
        name="exploding",
        alpha=1.0,
        bound=float("inf"),
        eval=lambda x: np.full_like(x, np.nan) if x[0] > 0.5 else np.ones_like(x),
    )
    path = zero_path(8)
    with pytest.raises(NumericalAbort) as info:
        euler_maruyama(exploding, [0.0], path, unchecked=True)
    assert info.value.step is not None


def test_recursion_recomputes_bitwise_from_any_intermediate_state():
    # Flow property: n steps then m steps from the stored intermediate state
    # reproduces the single n+m step run exactly.
    h = make_hierarchy(seed=1, n=512)
    drift = make_drift("tanh", scale=1.0)
    sol = euler_maruyama(drift, [0.3], h.top, hurst=1.5)
    for start in (0, 170, 256, 511):
        assert verify_recursion(sol, drift, h.top, start=start)


def test_shared_noise_coupling_is_exact():
    # The values the coarse scheme consumes are the fine values, bitwise, so
    # the summed fine noise over a coarse cell (formed as a value difference)
    # equals the coarse increment exactly.
    h = make_hierarchy(seed=2, n=4096)
    for n in (16, 64, 512):
        coarse = restrict(h.top, n)
        stride = 4096 // n
        assert np.array_equal(coarse.values, h.top.values[::stride])
        fine_totals = h.top.values[stride::stride] - h.top.values[:-stride:stride]
        coarse_increments = coarse.values[1:] - coarse.values[:-1]
        assert np.array_equal(coarse_increments, fine_totals)


def test_reference_solution_matches_em_on_top_level():
    h = make_hierarchy(seed=4, n=1024)
    drift = make_drift("capped_holder", alpha=0.8)
    ref = reference_solution(drift, [0.1], h)
    direct = euler_maruyama(drift, [0.1], h.top, provenance=h.provenance, hurst=1.5)
    assert np.array_equal(ref.path.values, direct.path.values)
    shorter = reference_solution(drift, [0.1], h, n_ref=256)
    assert shorter.n == 256


def test_reference_self_convergence_slope():
    # Halving the reference step roughly halves the distance to the next
    # refinement (first-order self-convergence on a smooth drift).
    drift = make_drift("sin", amplitude=1.0)
    h = make_hierarchy(seed=5, n=4096)
    gaps = []
    for n_ref in (512, 1024, 2048):
        sol = reference_solution(drift, [0.0], h, n_ref=n_ref)
        finer = reference_solution(drift, [0.0], h, n_ref=2 * n_ref)
        diff = em_difference(finer, sol)
        gaps.append(float(np.max(np.abs(diff))))
    slope = np.polyfit(np.log([512, 1024, 2048]), np.log(gaps), 1)[0]
    assert abs(slope + 1.0) <= 0.2


def test_zero_noise_euler_global_error_slope():
    # Exact flow for x' = tanh(x): x(t) = asinh(e^t sinh(x0)); cross-checked
    # once against a tight adaptive integration.
    drift = make_drift("tanh", scale=1.0)
    exact = math.asinh(math.e * math.sinh(1.0))
    ivp = solve_ivp(
        lambda t, y: np.tanh(y), (0.0, 1.0), [1.0], rtol=1e-12, atol=1e-14
    )
    assert abs(ivp.y[0, -1] - exact) <= 1e-9

    ns = [2**k for k in range(4, 11)]
    errs = []
    for n in ns:
        sol = euler_maruyama(drift, [1.0], zero_path(n), unchecked=True)
        errs.append(abs(sol.path.values[-1, 0] - exact))
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert abs(slope + 1.0) <= 0.05


def test_coupled_integrate_constant_base():
    grid = UniformGrid(40)
    base = SamplePath(grid, np.ones((41, 1)))
    h = lift(base, 1)
    path = coupled_integrate(make_drift("zero"), [0.5], h, 40)
    assert np.allclose(path.values, 0.5 + grid.times()[:, None], atol=1e-14)


def test_coupled_integrate_left_rule_bound():
    h = make_hierarchy(seed=6, n=1024)
    path = coupled_integrate(make_drift("zero"), [0.0], h, 1024)
    gap = abs(path.values[-1, 0] - h.top.values[-1, 0])
    assert gap <= np.max(np.abs(h.base.values)) / 1024


def test_coupled_integrate_agrees_with_em_on_fine_grid():
    n = 4096
    h = make_hierarchy(seed=7, n=n)
    drift = make_drift("sin", amplitude=1.0)
    em = euler_maruyama(drift, [0.0], h.top, provenance=h.provenance)
    coupled = coupled_integrate(drift, [0.0], h, n)
    gap = np.max(np.abs(coupled.values - em.path.values))
    assert gap <= 5.0 * np.max(np.abs(derivative_of_top(h).values)) / n


def test_optimality_ode_constant_drift_is_zero():
    h = make_hierarchy(seed=8, n=256)
    drift = make_drift("constant", value=2.0)
    ref = reference_solution(drift, [0.0], h)
    c = optimality_ode(drift, ref, derivative_of_top(h))
    assert np.array_equal(c.values, np.zeros_like(c.values))
    assert c.values[0, 0] == 0.0


def test_optimality_ode_synthetic_closed_form():
    # Frozen inputs: X_t = e^t, noise derivative 0, b(x) = x.  Then
    # c(t) = t e^t / 2 by the integrating factor; c(1) = e/2.
    linear_up = Drift(
        name="linear(+1)",
        alpha=1.0,
        bound=float("inf"),
        eval=lambda x: np.asarray(x, dtype=float),
        gradient=lambda x: np.eye(len(x)),
    )
    n = 512
    grid = UniformGrid(n)
    xs = np.exp(grid.times())[:, None]
    ref = EmSolution(
        n=n,
        x0=np.array([1.0]),
        path=SamplePath(grid, xs),
        drift_integral=np.zeros((n + 1, 1)),
        drift_name="synthetic",
    )
    c = optimality_ode(linear_up, ref, zero_path(n))
    assert c.values[0, 0] == 0.0
    assert abs(c.values[-1, 0] - 1.3591409142295225) <= 1e-10
    times = c.grid.times()
    assert np.max(np.abs(c.values[:, 0] - 0.5 * times * np.exp(times))) <= 1e-10


def test_optimality_ode_self_convergence_order():
    linear_up = Drift(
        name="linear(+1)",
        alpha=1.0,
        bound=float("inf"),
        eval=lambda x: np.asarray(x, dtype=float),
        gradient=lambda x: np.eye(len(x)),
    )

    def solve(n):
        grid = UniformGrid(n)
        xs = np.exp(grid.times())[:, None]
        ref = EmSolution(
            n=n,
            x0=np.array([1.0]),
            path=SamplePath(grid, xs),
            drift_integral=np.zeros((n + 1, 1)),
            drift_name="synthetic",
        )
        return optimality_ode(linear_up, ref, zero_path(n))

    gaps = []
    for n in (64, 128, 256):
        coarse = solve(n)
        fine = solve(2 * n)
        aligned = restrict(fine, coarse.grid.steps)
        gaps.append(float(np.max(np.abs(aligned.values - coarse.values))))
    for a, b in zip(gaps, gaps[1:]):
        assert a / b >= 8.0  # order >= 3 observed (the integrator is order 4)


def test_optimality_ode_requires_gradient_and_matching_grid():
    h = make_hierarchy(seed=9, n=128)
    ref = reference_solution(make_drift("sin"), [0.0], h)
    with pytest.raises(ConfigurationError):
        optimality_ode(make_drift("capped_holder", alpha=0.8), ref, derivative_of_top(h))
    with pytest.raises(ConfigurationError):
        optimality_ode(make_drift("sin"), ref, restrict(derivative_of_top(h), 64))


def test_em_difference_provenance_and_divisibility():
    h1 = make_hierarchy(seed=10, n=256, sample=0)
    h2 = make_hierarchy(seed=10, n=256, sample=1)
    drift = make_drift("zero")
    ref = reference_solution(drift, [0.0], h1)
    other = euler_maruyama(drift, [0.0], restrict(h2.top, 64), provenance=h2.provenance)
    with pytest.raises(ConfigurationError):
        em_difference(ref, other)
    em100 = euler_maruyama(
        drift, [0.0], restrict(h1.top, 128), provenance=h1.provenance
    )
    coarse_ref = euler_maruyama(
        drift, [0.0], restrict(h1.top, 64), provenance=h1.provenance
    )
    with pytest.raises(ConfigurationError):
        em_difference(coarse_ref, em100)  # 128 does not divide 64


def test_optimality_record_fields():
    h = make_hierarchy(seed=11, n=1024)
    drift = make_drift("sin", amplitude=1.0)
    ref = reference_solution(drift, [0.0], h)
    c = optimality_ode(drift, ref, derivative_of_top(h))
    em = euler_maruyama(drift, [0.0], restrict(h.top, 64), provenance=h.provenance)
    record = optimality_record(ref, em, c)
    assert record.n == 64
    assert record.e_n.grid.steps == 64 and record.c.grid.steps == 64
    assert record.e_n.values[0, 0] == 0.0 and record.c.values[0, 0] == 0.0
    expected = abs(record.e_n.values[-1, 0] - record.c.values[-1, 0])
    assert record.terminal_deviation == pytest.approx(expected, rel=1e-12)
