"""Lift a rough base path to its iterated time-integrals.

For Hurst index H > 1 the driving noise is the floor(H)-fold cumulative
integral of an fBM with the fractional Hurst part.  The whole hierarchy is
kept: levels[j] is the (j+1)-fold integral of the base, so the top entry
levels[-1] is the smooth noise itself and the entry below it is its time
derivative.  Integration rule: cumulative trapezoid (exact on piecewise
linear data); every solver consumes the same lifted discrete noise, so the
lift output is the ground-truth noise of an experiment by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy.integrate import cumulative_trapezoid

from .exceptions import ConfigurationError
from .noise import HurstParams, NoiseProvenance, SamplePath, UniformGrid


@dataclass(frozen=True)
class NoiseHierarchy:
    """Base rough path plus its cumulative-integral levels (top = smooth noise)."""

    base: SamplePath
    levels: tuple[SamplePath, ...]
    params: HurstParams | None = None
    provenance: NoiseProvenance | None = None

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def top(self) -> SamplePath:
        return self.levels[-1]


def lift(
    base: SamplePath,
    levels: int,
    params: HurstParams | None = None,
    provenance: NoiseProvenance | None = None,
) -> NoiseHierarchy:
    """Cumulatively trapezoid-integrate `base` `levels` times."""
    if levels < 1:
        raise ConfigurationError(f"lift needs levels >= 1, got {levels} (use the base directly)")
    dt = base.grid.dt
    paths = []
    current = base.values
    for _ in range(levels):
        current = cumulative_trapezoid(current, dx=dt, axis=0, initial=0.0)
        paths.append(SamplePath(base.grid, current))
    return NoiseHierarchy(base=base, levels=tuple(paths), params=params, provenance=provenance)


def derivative_of_top(hierarchy: NoiseHierarchy) -> SamplePath:
    """The level right below the top, i.e. the time derivative of the smooth noise."""
    if hierarchy.depth >= 2:
        return hierarchy.levels[-2]
    return hierarchy.base


def restrict(path: SamplePath, n: int) -> SamplePath:
    """Exact restriction of a path to the coarse grid with n steps (no interpolation)."""
    fine_n = path.grid.steps
    if n < 1:
        raise ConfigurationError(f"restriction needs n >= 1, got {n}")
    if fine_n % n != 0:
        raise ConfigurationError(f"coarse steps {n} must divide fine steps {fine_n}")
    stride = fine_n // n
    coarse = UniformGrid(n, horizon=path.grid.horizon)
    return SamplePath(coarse, path.values[::stride].copy())
