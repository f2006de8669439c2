"""Euler-Maruyama scheme, shared-noise reference solve, and the first-order limit ODE.

The EM recursion is evaluated in drift-accumulator form: with phi_0 = 0 and

    phi_{k+1} = phi_k + b(X_k) * dt,      X_k = (x0 + phi_k) + (B_k - B_0),

which is the textbook scheme in exact arithmetic but keeps the noise
contribution bitwise identical between a coarse run and the restriction of a
fine run on the same path.  Consequence: for constant drift on dyadic grids
the coarse solution equals the restricted fine solution bitwise, and path
differences between two solutions sharing the noise can be formed from the
drift accumulators alone, with no cancellation of the large noise part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .drifts import Drift, require_assumption
from .exceptions import ConfigurationError, NumericalAbort
from .hierarchy import NoiseHierarchy, derivative_of_top, restrict
from .noise import NoiseProvenance, SamplePath, UniformGrid


@dataclass(frozen=True)
class EmSolution:
    """EM iterates on an n-step grid plus the drift accumulator that built them."""

    n: int
    x0: np.ndarray
    path: SamplePath
    drift_integral: np.ndarray  # phi, shape (n+1, dim), phi[0] = 0
    drift_name: str
    provenance: NoiseProvenance | None = None


def euler_maruyama(
    drift: Drift,
    x0,
    bh: SamplePath,
    provenance: NoiseProvenance | None = None,
    hurst: float | None = None,
    unchecked: bool = False,
) -> EmSolution:
    """Run the EM scheme X_{k+1} = X_k + b(X_k)/n + (B_{(k+1)/n} - B_{k/n}).

    The driving path `bh` must live on exactly the scheme grid.  Unless
    `unchecked` (deterministic test mode), the drift must clear the
    regularity gate for the Hurst index taken from `provenance` or `hurst`.
    """
    if not unchecked:
        h = hurst if hurst is not None else (provenance.hurst if provenance else None)
        if h is None:
            raise ConfigurationError(
                "euler_maruyama needs a Hurst index (provenance or hurst=) "
                "to apply the regularity gate; pass unchecked=True to skip"
            )
        require_assumption(drift, h)
    n = bh.grid.steps
    dim = bh.dim
    x0 = np.asarray(x0, dtype=float).reshape(dim).copy()
    dt = bh.grid.dt
    noise = bh.values - bh.values[0]
    phi = np.zeros((n + 1, dim))
    xs = np.empty((n + 1, dim))
    xs[0] = x0
    for k in range(n):
        bval = drift.eval(xs[k])
        if not np.all(np.isfinite(bval)):
            raise NumericalAbort(
                f"drift {drift.name!r} returned a non-finite value at step {k}", step=k
            )
        phi[k + 1] = phi[k] + bval * dt
        xs[k + 1] = (x0 + phi[k + 1]) + noise[k + 1]
    return EmSolution(
        n=n,
        x0=x0,
        path=SamplePath(bh.grid, xs),
        drift_integral=phi,
        drift_name=drift.name,
        provenance=provenance,
    )


def verify_recursion(sol: EmSolution, drift: Drift, bh: SamplePath, start: int = 0) -> bool:
    """Recompute steps start..n from the stored state at `start`; True iff bitwise equal.

    The recursion is memoryless given (x0, phi_k, X_k), so restarting at any
    intermediate step must reproduce the stored tail exactly.
    """
    dt = bh.grid.dt
    noise = bh.values - bh.values[0]
    phi = sol.drift_integral[start].copy()
    x = sol.path.values[start].copy()
    for k in range(start, sol.n):
        phi = phi + drift.eval(x) * dt
        x = (sol.x0 + phi) + noise[k + 1]
        if not (
            np.array_equal(phi, sol.drift_integral[k + 1])
            and np.array_equal(x, sol.path.values[k + 1])
        ):
            return False
    return True


def reference_solution(
    drift: Drift,
    x0,
    hierarchy: NoiseHierarchy,
    n_ref: int | None = None,
    unchecked: bool = False,
) -> EmSolution:
    """Fine-grid EM on the hierarchy's own noise; stands in for the exact solution."""
    top = hierarchy.top
    if n_ref is not None and n_ref != top.grid.steps:
        top = restrict(top, n_ref)
    hurst = hierarchy.params.hurst if hierarchy.params is not None else None
    return euler_maruyama(
        drift, x0, top, provenance=hierarchy.provenance, hurst=hurst, unchecked=unchecked
    )


def coupled_integrate(drift: Drift, x0, hierarchy: NoiseHierarchy, n: int) -> SamplePath:
    """Explicit Euler for the coupled form X' = b(X) + (top noise)' on the n-grid.

    Cross-validates the EM scheme: both converge to the same limit equation.
    """
    deriv = restrict(derivative_of_top(hierarchy), n)
    dt = deriv.grid.dt
    dim = deriv.dim
    x = np.asarray(x0, dtype=float).reshape(dim).copy()
    values = np.empty((n + 1, dim))
    values[0] = x
    for k in range(n):
        bval = drift.eval(x)
        if not np.all(np.isfinite(bval)):
            raise NumericalAbort(
                f"drift {drift.name!r} returned a non-finite value at step {k}", step=k
            )
        x = x + (bval + deriv.values[k]) * dt
        values[k + 1] = x
    return SamplePath(deriv.grid, values)


def optimality_ode(drift: Drift, ref: EmSolution, bh_prime: SamplePath) -> SamplePath:
    """Solve c' = grad_b(X_t) c + (1/2) grad_b(X_t) (b(X_t) + (B^H)'_t), c(0) = 0.

    Classical fourth-order Runge-Kutta over pairs of fine steps, so every
    stage lands exactly on a gridpoint of the reference solution and no
    interpolation of X or (B^H)' is needed.  Returns c on the grid with
    ref.n/2 steps.
    """
    if drift.gradient is None:
        raise ConfigurationError(f"drift {drift.name!r} has no gradient; the limit ODE needs one")
    n = ref.n
    if n % 2 != 0:
        raise ConfigurationError(f"reference grid must have an even step count, got {n}")
    if bh_prime.grid.steps != n:
        raise ConfigurationError(
            f"noise derivative grid ({bh_prime.grid.steps}) must match the reference grid ({n})"
        )
    xs = ref.path.values
    dim = xs.shape[1]
    grads = np.empty((n + 1, dim, dim))
    source = np.empty((n + 1, dim))
    for k in range(n + 1):
        g = np.asarray(drift.gradient(xs[k]), dtype=float)
        grads[k] = g
        source[k] = 0.5 * g @ (drift.eval(xs[k]) + bh_prime.values[k])
    h = 2.0 * ref.path.grid.dt
    half = n // 2
    c_values = np.zeros((half + 1, dim))
    c = np.zeros(dim)
    for m in range(half):
        j = 2 * m
        k1 = grads[j] @ c + source[j]
        k2 = grads[j + 1] @ (c + 0.5 * h * k1) + source[j + 1]
        k3 = grads[j + 1] @ (c + 0.5 * h * k2) + source[j + 1]
        k4 = grads[j + 2] @ (c + h * k3) + source[j + 2]
        c = c + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        c_values[m + 1] = c
    return SamplePath(UniformGrid(half, horizon=ref.path.grid.horizon), c_values)


def em_difference(ref: EmSolution, em: EmSolution) -> np.ndarray:
    """X^ref - X^n on the coarse grid, formed from the drift accumulators.

    Requires matching noise provenance: differencing solutions driven by
    unrelated noise is meaningless for strong error.  Because the noise part
    is shared bitwise, (x0_ref - x0_em) + (phi_ref - phi_em) equals the path
    difference exactly, without cancellation against the noise.
    """
    if ref.provenance != em.provenance:
        raise ConfigurationError(
            f"noise provenance mismatch: {ref.provenance} vs {em.provenance}"
        )
    if em.n < 1 or ref.n % em.n != 0:
        raise ConfigurationError(f"coarse steps {em.n} must divide reference steps {ref.n}")
    stride = ref.n // em.n
    dphi = ref.drift_integral[::stride] - em.drift_integral
    return (ref.x0 - em.x0) + dphi


@dataclass(frozen=True)
class OptimalityRecord:
    """n * (X^ref - X^n) against the limit ODE solution on the n-step grid.

    `terminal_deviation` is the headline |e_n(1) - c(1)|.  Because the exact
    solution is approximated by EM at n_ref on the same noise, e_n converges
    to (1 - n/n_ref) * c rather than c; `limit_deviation` is the sup over the
    coarse grid of |e_n(t) - (1 - n/n_ref) c(t)|, the residual the first-order
    limit actually sends to zero, and is the quantity whose decrease along an
    n-ladder certifies convergence.
    """

    n: int
    e_n: SamplePath
    c: SamplePath
    terminal_deviation: float
    limit_deviation: float
    provenance: NoiseProvenance | None = None


def optimality_record(ref: EmSolution, em: EmSolution, c_path: SamplePath) -> OptimalityRecord:
    """Assemble the scaled-error path and its deviations from the ODE limit."""
    n = em.n
    e_values = n * em_difference(ref, em)
    e_n = SamplePath(em.path.grid, e_values)
    c_coarse = restrict(c_path, n)
    terminal = float(np.linalg.norm(e_values[-1] - c_coarse.values[-1]))
    proxy_factor = 1.0 - n / ref.n
    residual = np.linalg.norm(e_values - proxy_factor * c_coarse.values, axis=1)
    return OptimalityRecord(
        n=n,
        e_n=e_n,
        c=c_coarse,
        terminal_deviation=terminal,
        limit_deviation=float(residual.max()),
        provenance=em.provenance,
    )
