"""Drift functions for the singular-SDE experiments.

The built-ins span the two regimes the experiments need: bounded Holder
drifts without a gradient (`capped_holder`) and smooth bounded drifts with
one (`sin`, `tanh`).  `bound` is the componentwise sup bound, since every
built-in acts componentwise in any dimension.  Rate and limit experiments
only accept a drift whose declared Holder exponent clears the regularity
gate alpha > 1 - 1/(2H).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import ConfigurationError

NEAR_COINCIDENT_GAPS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class Drift:
    """A drift b: R^d -> R^d with declared regularity metadata.

    `eval` must be vectorized over leading axes (inputs of shape (..., d));
    `gradient` maps a single point (d,) to the (d, d) Jacobian.
    """

    name: str
    alpha: float
    bound: float
    eval: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def has_gradient(self) -> bool:
        return self.gradient is not None


def make_drift(name: str, **params) -> Drift:
    """Build one of the named drifts: zero, constant, capped_holder, sin, tanh."""
    if name == "zero":
        return Drift(
            name="zero",
            alpha=1.0,
            bound=0.0,
            eval=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            gradient=lambda x: np.zeros((len(x), len(x))),
        )
    if name == "constant":
        value = np.asarray(params.pop("value", 1.0), dtype=float)
        _reject_extra(name, params)
        return Drift(
            name="constant",
            alpha=1.0,
            bound=float(np.max(np.abs(value))),
            eval=lambda x: np.broadcast_to(value, np.shape(x)).copy(),
            gradient=lambda x: np.zeros((len(x), len(x))),
        )
    if name == "capped_holder":
        alpha = float(params.pop("alpha", 0.8))
        _reject_extra(name, params)
        if not 0.0 < alpha <= 1.0:
            raise ConfigurationError(f"capped_holder needs alpha in (0, 1], got {alpha}")
        return Drift(
            name=f"capped_holder({alpha})",
            alpha=alpha,
            bound=1.0,
            eval=lambda x: np.sign(x) * np.minimum(np.abs(x) ** alpha, 1.0),
            gradient=None,
        )
    if name == "sin":
        amplitude = float(params.pop("amplitude", 1.0))
        _reject_extra(name, params)
        return Drift(
            name=f"sin({amplitude})",
            alpha=1.0,
            bound=abs(amplitude),
            eval=lambda x: -amplitude * np.sin(x),
            gradient=lambda x: np.diag(-amplitude * np.cos(np.asarray(x, dtype=float))),
        )
    if name == "tanh":
        scale = float(params.pop("scale", 1.0))
        _reject_extra(name, params)
        return Drift(
            name=f"tanh({scale})",
            alpha=1.0,
            bound=abs(scale),
            eval=lambda x: scale * np.tanh(x),
            gradient=lambda x: np.diag(scale * (1.0 - np.tanh(np.asarray(x, dtype=float)) ** 2)),
        )
    raise ConfigurationError(f"unknown drift {name!r}")


def drift_from_spec(spec: dict) -> Drift:
    """Build a drift from the config form {"name": ..., "params": {...}}."""
    if "name" not in spec:
        raise ConfigurationError("drift spec needs a 'name' key")
    return make_drift(spec["name"], **spec.get("params", {}))


def _reject_extra(name, params):
    if params:
        raise ConfigurationError(f"unknown parameters for drift {name!r}: {sorted(params)}")


def assumption_threshold(hurst: float) -> float:
    """Minimal admissible Holder exponent for the given Hurst index."""
    return 1.0 - 1.0 / (2.0 * hurst)


def satisfies_assumption(drift: Drift, hurst: float) -> bool:
    return drift.alpha > assumption_threshold(hurst)


def require_assumption(drift: Drift, hurst: float) -> None:
    """Regularity gate: experiments only accept alpha > 1 - 1/(2H)."""
    threshold = assumption_threshold(hurst)
    if not drift.alpha > threshold:
        raise ConfigurationError(
            f"drift {drift.name!r} fails the regularity gate: "
            f"alpha={drift.alpha} must exceed 1 - 1/(2H) = {threshold} for H={hurst}"
        )


def holder_certificate(
    drift: Drift,
    alpha: float,
    pairs: int,
    rng: np.random.Generator,
    dim: int = 1,
    radius: float = 10.0,
) -> float:
    """Sampled lower bound on the alpha-Holder seminorm of the drift.

    Probes `pairs` random pairs in the ball |x| <= radius plus, for each of a
    ladder of gaps 1e-1..1e-6, near-coincident pairs along random directions.
    Diagnostic only: a large value refutes a declared exponent, a small one
    proves nothing.
    """
    if pairs < 1:
        raise ConfigurationError(f"need pairs >= 1, got {pairs}")
    x = rng.uniform(-radius, radius, size=(pairs, dim))
    y = rng.uniform(-radius, radius, size=(pairs, dim))
    best = _max_ratio(drift, alpha, x, y)
    for gap in NEAR_COINCIDENT_GAPS:
        base = rng.uniform(-radius, radius, size=(pairs, dim))
        direction = rng.standard_normal((pairs, dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        best = max(best, _max_ratio(drift, alpha, base, base + gap * direction))
    return best


def _max_ratio(drift, alpha, x, y):
    dist = np.linalg.norm(x - y, axis=1)
    keep = dist > 0
    if not np.any(keep):
        return 0.0
    dvals = np.linalg.norm(drift.eval(x[keep]) - drift.eval(y[keep]), axis=1)
    return float(np.max(dvals / dist[keep] ** alpha))
