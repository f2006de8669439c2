"""Exact-in-law sampling of fractional Gaussian noise and fractional Brownian motion.

Paths live on a uniform grid over [0, 1] (extensible horizon).  Increments of
fBM with Hurst fraction H' in (0, 1) form a stationary Gaussian sequence with
the classical autocovariance

    gamma(k) = (dt^{2H'} / 2) * (|k+1|^{2H'} - 2|k|^{2H'} + |k-1|^{2H'}),

normalized so that E|B_t - B_s|^2 = |t - s|^{2H'} per component.  Sampling
uses circulant embedding (Davies-Harte), exact in law at O(N log N), with a
dense Cholesky fallback for short grids or an indefinite embedding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz

from .exceptions import ConfigurationError, SpectralFactorizationError

# Grids at or below this size always use the dense sampler (cheap anyway).
DENSE_CUTOFF = 64
# Embedding eigenvalues below -NEG_EIG_RTOL * max(eig) indicate a genuine
# failure; anything above is roundoff and gets clipped to zero.
NEG_EIG_RTOL = 1e-9
# Hurst indices closer than this to an integer are rejected.
INTEGER_HURST_ATOL = 1e-12


@dataclass(frozen=True)
class UniformGrid:
    """Uniform time grid with `steps` intervals on [0, horizon]."""

    steps: int
    horizon: float = 1.0

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigurationError(f"grid needs steps >= 1, got {self.steps}")
        if not self.horizon > 0:
            raise ConfigurationError(f"grid horizon must be positive, got {self.horizon}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def gridpoint(self, i: int) -> float:
        return i * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


@dataclass(frozen=True)
class SamplePath:
    """Values of a vector process at the gridpoints: (steps+1, dim) array."""

    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.grid.steps + 1:
            raise ConfigurationError(
                f"path values must have shape ({self.grid.steps + 1}, dim), got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("path values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def terminal(self) -> np.ndarray:
        return self.values[-1]


@dataclass(frozen=True)
class HurstParams:
    """Hurst index split into integration levels floor(H) and fraction H - floor(H)."""

    hurst: float
    levels: int = field(init=False)
    frac: float = field(init=False)

    def __post_init__(self):
        h = float(self.hurst)
        if not math.isfinite(h) or h <= 0:
            raise ConfigurationError(f"Hurst index must be positive, got {h}")
        if abs(h - round(h)) <= INTEGER_HURST_ATOL:
            raise ConfigurationError(
                f"Hurst index must not be an integer (within {INTEGER_HURST_ATOL}), got {h}"
            )
        levels = int(math.floor(h))
        object.__setattr__(self, "hurst", h)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "frac", h - levels)


@dataclass(frozen=True)
class RngSpec:
    """Master seed plus the substream rule used for parallel Monte Carlo.

    Substream rule: sample `i` draws from
    ``np.random.default_rng(np.random.SeedSequence([master_seed, i]))``,
    so identical (master_seed, i) gives bit-identical noise on any worker
    count and in any execution order.
    """

    master_seed: int

    def stream(self, sample_index: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.master_seed, sample_index]))


@dataclass(frozen=True)
class NoiseProvenance:
    """Identifies the exact noise realization a solution was driven by."""

    master_seed: int
    sample_index: int
    hurst: float
    dim: int


def fgn_autocovariance(frac: float, lag: int, dt: float) -> float:
    """Autocovariance of fractional Gaussian noise at integer lag `lag`."""
    if not 0.0 < frac < 1.0:
        raise ConfigurationError(f"Hurst fraction must lie in (0, 1), got {frac}")
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if lag < 0:
        raise ConfigurationError(f"lag must be nonnegative, got {lag}")
    k = float(lag)
    two_h = 2.0 * frac
    return 0.5 * dt**two_h * (abs(k + 1) ** two_h - 2 * k**two_h + abs(k - 1) ** two_h)


def _autocov_vector(frac: float, max_lag: int, dt: float) -> np.ndarray:
    k = np.arange(max_lag + 1, dtype=float)
    two_h = 2.0 * frac
    return 0.5 * dt**two_h * (np.abs(k + 1) ** two_h - 2 * k**two_h + np.abs(k - 1) ** two_h)


def fgn_covariance_matrix(frac: float, n: int, dt: float) -> np.ndarray:
    """Exact (n x n) covariance matrix of n consecutive fGn increments."""
    if n < 1:
        raise ConfigurationError(f"need n >= 1, got {n}")
    return toeplitz(_autocov_vector(frac, n - 1, dt))


def embedding_spectrum(frac: float, n: int, dt: float) -> np.ndarray:
    """Eigenvalues of the length-2n circulant embedding (before clipping)."""
    gamma = _autocov_vector(frac, n, dt)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    return np.fft.fft(row).real


def sampling_method(frac: float, n: int, dt: float) -> str:
    """Which sampler ('circulant' or 'dense') sample_fgn uses for these parameters."""
    return _sampling_plan(frac, n, dt)[0]


@lru_cache(maxsize=64)
def _sampling_plan(frac: float, n: int, dt: float):
    if not 0.0 < frac < 1.0:
        raise ConfigurationError(f"Hurst fraction must lie in (0, 1), got {frac}")
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if n > DENSE_CUTOFF:
        lam = embedding_spectrum(frac, n, dt)
        if lam.min() >= -NEG_EIG_RTOL * lam.max():
            sqrt_lam = np.sqrt(np.clip(lam, 0.0, None))
            sqrt_lam.setflags(write=False)
            return "circulant", sqrt_lam
    sigma = fgn_covariance_matrix(frac, n, dt)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        # Nearly singular from roundoff: clip the spectrum at zero.
        eigval, eigvec = np.linalg.eigh(sigma)
        if eigval.min() < -NEG_EIG_RTOL * eigval.max():
            raise SpectralFactorizationError(
                f"fGn covariance indefinite for frac={frac}, n={n}: min eig {eigval.min()}"
            )
        chol = eigvec * np.sqrt(np.clip(eigval, 0.0, None))
    chol.setflags(write=False)
    return "dense", chol


def sample_fgn(
    params: HurstParams,
    grid: UniformGrid,
    dim: int,
    rng: np.random.Generator,
    method: str | None = None,
) -> np.ndarray:
    """Draw fGn increments, shape (grid.steps, dim), components independent.

    `method` forces 'circulant' or 'dense' (testing hook); default picks the
    plan automatically.
    """
    if dim < 1:
        raise ConfigurationError(f"dim must be >= 1, got {dim}")
    n = grid.steps
    if method is None:
        plan_method, factor = _sampling_plan(params.frac, n, grid.dt)
    elif method == "circulant":
        lam = embedding_spectrum(params.frac, n, grid.dt)
        if lam.min() < -NEG_EIG_RTOL * lam.max():
            raise SpectralFactorizationError(
                f"circulant embedding indefinite for frac={params.frac}, n={n}"
            )
        plan_method, factor = "circulant", np.sqrt(np.clip(lam, 0.0, None))
    elif method == "dense":
        sigma = fgn_covariance_matrix(params.frac, n, grid.dt)
        plan_method, factor = "dense", np.linalg.cholesky(sigma)
    else:
        raise ConfigurationError(f"unknown sampling method {method!r}")

    if plan_method == "circulant":
        m = 2 * n
        z = rng.standard_normal((m, dim)) + 1j * rng.standard_normal((m, dim))
        spectral = factor[:, None] * z
        return math.sqrt(m) * np.fft.ifft(spectral, axis=0).real[:n]
    z = rng.standard_normal((n, dim))
    return factor @ z


def fbm_path(
    params: HurstParams, grid: UniformGrid, dim: int, rng: np.random.Generator
) -> SamplePath:
    """Fractional Brownian motion with Hurst fraction params.frac, started at 0."""
    increments = sample_fgn(params, grid, dim, rng)
    values = np.zeros((grid.steps + 1, dim))
    np.cumsum(increments, axis=0, out=values[1:])
    return SamplePath(grid, values)


def exact_integrated_bm(
    grid: UniformGrid, dim: int, rng: np.random.Generator
) -> tuple[SamplePath, SamplePath]:
    """Jointly exact sample of Brownian motion W and its running integral I.

    Per step of size dt the pair (dW, dA) with dA = integral of W - W_start
    over the step is Gaussian with covariance [[dt, dt^2/2], [dt^2/2, dt^3/3]];
    both paths then have the exact joint law at the gridpoints.
    """
    n, dt = grid.steps, grid.dt
    z1 = rng.standard_normal((n, dim))
    z2 = rng.standard_normal((n, dim))
    dw = math.sqrt(dt) * z1
    da = dt**1.5 * (0.5 * z1 + z2 / (2.0 * math.sqrt(3.0)))
    w_values = np.zeros((n + 1, dim))
    np.cumsum(dw, axis=0, out=w_values[1:])
    i_values = np.zeros((n + 1, dim))
    np.cumsum(w_values[:-1] * dt + da, axis=0, out=i_values[1:])
    return SamplePath(grid, w_values), SamplePath(grid, i_values)


def format_float(x: float) -> str:
    """17 significant digits so dumps are byte-checkable and round-trip."""
    return format(float(x), ".17g")


def write_path_csv(path: SamplePath, dest) -> None:
    """Dump a path as CSV rows `t,x_1,...,x_d` at full double precision."""
    header = "t," + ",".join(f"x_{i + 1}" for i in range(path.dim))
    lines = [header]
    for i in range(path.grid.steps + 1):
        row = [format_float(path.grid.gridpoint(i))]
        row.extend(format_float(v) for v in path.values[i])
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)
