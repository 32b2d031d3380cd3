"""Process families: parameters, Palm intensities, and simulators.

Three families are fittable (Poisson, log-Gaussian Cox, Thomas cluster);
the determinantal family is evaluation-only (no simulator).  Parameter
objects know how to map themselves to and from the unconstrained vectors
the sampler works on (log scales for positive parameters, raw scale for
regression coefficients).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import NumericalError
from .geometry import GridPartition, PointPattern, Window

__all__ = [
    "PoissonParams",
    "LgcpParams",
    "ThomasParams",
    "DppKernel",
    "CovariateField",
    "palm_intensity_lgcp",
    "palm_intensity_thomas",
    "palm_intensity_dpp",
    "simulate_poisson",
    "simulate_gp_grid",
    "simulate_lgcp",
    "simulate_thomas",
]


@dataclass(frozen=True)
class PoissonParams:
    """Homogeneous Poisson process with intensity ``lam``."""

    lam: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")

    def to_sampling_vector(self) -> np.ndarray:
        return np.array([math.log(self.lam)])

    @staticmethod
    def from_sampling_vector(vec) -> "PoissonParams":
        return PoissonParams(lam=math.exp(vec[0]))


@dataclass(frozen=True)
class LgcpParams:
    """Log-Gaussian Cox process: log-intensity x(s)'beta + W(s).

    ``beta`` holds the intercept plus optional covariate slopes; the latent
    field W has mean 0, variance ``sigma2`` and exponential correlation
    exp(-d/phi).  sigma2 == 0 is the degenerate Poisson reduction and is
    tolerated for limiting cases.
    """

    beta: tuple
    sigma2: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))
        if not self.sigma2 >= 0:
            raise ValueError(f"sigma2 must be nonnegative, got {self.sigma2}")
        if not self.phi > 0:
            raise ValueError(f"phi must be positive, got {self.phi}")

    @property
    def mean_intensity(self) -> float:
        """lambda = exp(beta0 + sigma2/2) in the constant-mean case."""
        if len(self.beta) != 1:
            raise ValueError("mean_intensity is defined for the constant-mean model only")
        return math.exp(self.beta[0] + self.sigma2 / 2.0)

    @staticmethod
    def from_mean_intensity(lam: float, sigma2: float, phi: float) -> "LgcpParams":
        """Constant-mean parameterization: beta0 = log(lam) - sigma2/2."""
        if not lam > 0:
            raise ValueError(f"lam must be positive, got {lam}")
        return LgcpParams(beta=(math.log(lam) - sigma2 / 2.0,), sigma2=sigma2, phi=phi)

    def to_sampling_vector(self) -> np.ndarray:
        """Constant mean: (log lam, log s2, log phi); else (beta..., log s2, log phi)."""
        tail = [math.log(self.sigma2), math.log(self.phi)]
        if len(self.beta) == 1:
            return np.array([math.log(self.mean_intensity)] + tail)
        return np.array(list(self.beta) + tail)

    @staticmethod
    def from_sampling_vector(vec, n_beta: int = 1) -> "LgcpParams":
        vec = np.asarray(vec, dtype=float)
        sigma2, phi = math.exp(vec[-2]), math.exp(vec[-1])
        if n_beta == 1:
            return LgcpParams.from_mean_intensity(math.exp(vec[0]), sigma2, phi)
        return LgcpParams(beta=tuple(vec[:n_beta]), sigma2=sigma2, phi=phi)


@dataclass(frozen=True)
class ThomasParams:
    """Thomas cluster process: Poisson(mu) parents, Poisson(nu) offspring
    per parent displaced by N(0, sigma2 * I2).  Overall intensity mu*nu."""

    mu: float
    nu: float
    sigma2: float

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if not self.nu >= 0:
            raise ValueError(f"nu must be nonnegative, got {self.nu}")
        if not self.sigma2 >= 0:
            raise ValueError(f"sigma2 must be nonnegative, got {self.sigma2}")

    @property
    def intensity(self) -> float:
        return self.mu * self.nu

    def to_sampling_vector(self) -> np.ndarray:
        return np.array(
            [math.log(self.mu * self.nu), math.log(self.mu), math.log(self.sigma2)]
        )

    @staticmethod
    def from_sampling_vector(vec) -> "ThomasParams":
        lam, mu, sigma2 = np.exp(np.asarray(vec, dtype=float))
        return ThomasParams(mu=mu, nu=lam / mu, sigma2=sigma2)


@dataclass(frozen=True)
class DppKernel:
    """Exponential determinantal kernel C(s,t) = lam * exp(-||s-t||/phi_d)."""

    lam: float
    phi_d: float

    def __post_init__(self):
        if not (self.lam > 0 and self.phi_d > 0):
            raise ValueError("lam and phi_d must be positive")

    def __call__(self, s_i, s_j) -> float:
        d = math.hypot(s_i[0] - s_j[0], s_i[1] - s_j[1])
        return self.lam * math.exp(-d / self.phi_d)

    def palm_at_distance(self, u):
        """Stationary form lam * (1 - exp(-2u/phi_d)); vanishes at u = 0."""
        return self.lam * (1.0 - np.exp(-2.0 * np.asarray(u, dtype=float) / self.phi_d))


class CovariateField:
    """Piecewise-constant covariate rasters aligned to a grid partition.

    Lookup is by containing cell (same half-open convention as the grid).
    The design matrix carries an intercept column first, then one column
    per named raster.
    """

    def __init__(self, grid: GridPartition, names, rasters):
        rasters = np.asarray(rasters, dtype=float)
        if rasters.ndim == 2:
            rasters = rasters[None, :, :]
        if rasters.shape != (len(names), grid.n_y, grid.n_x):
            raise ValueError(
                f"raster stack shape {rasters.shape} does not match "
                f"{len(names)} x ({grid.n_y}, {grid.n_x})"
            )
        self.grid = grid
        self.names = tuple(names)
        self.rasters = rasters
        k = grid.n_cells
        self._design = np.column_stack(
            [np.ones(k)] + [rasters[p].reshape(k) for p in range(len(self.names))]
        )

    @property
    def n_covariates(self) -> int:
        return len(self.names)

    def design_matrix(self) -> np.ndarray:
        """(n_cells, 1 + p) matrix in flat cell order, intercept first."""
        return self._design

    def values_at(self, points) -> np.ndarray:
        """(n, 1 + p) covariate rows for arbitrary points."""
        idx = self.grid.cell_index(np.atleast_2d(points))
        return self._design[idx]


# ---------------------------------------------------------------------------
# Palm intensities

def palm_intensity_lgcp(params: LgcpParams, x_i, u):
    """exp{x_i' beta + sigma2/2 + sigma2 * exp(-u/phi)} for the LGCP.

    ``x_i`` is the covariate row of the conditioned-on location (pass None
    for the constant-mean model); ``u`` may be a scalar or array of
    interpoint distances.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("distances must be nonnegative")
    if x_i is None:
        if len(params.beta) != 1:
            raise ValueError("x_i is required when covariate slopes are present")
        mean_term = params.beta[0]
    else:
        x_i = np.asarray(x_i, dtype=float)
        if x_i.shape[-1] != len(params.beta):
            raise ValueError(f"covariate row has {x_i.shape[-1]} entries, beta has {len(params.beta)}")
        mean_term = float(x_i @ np.asarray(params.beta))
    s2 = params.sigma2
    return np.exp(mean_term + s2 / 2.0 + s2 * np.exp(-u / params.phi))


def palm_intensity_thomas(params: ThomasParams, u):
    """mu*nu + nu/(4 pi sigma2) * exp(-u^2 / (4 sigma2)) for the Thomas process."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("distances must be nonnegative")
    if params.nu == 0:
        return np.zeros_like(u)
    if not params.sigma2 > 0:
        raise ValueError("sigma2 must be positive when nu > 0")
    return params.mu * params.nu + params.nu / (4.0 * np.pi * params.sigma2) * np.exp(
        -(u**2) / (4.0 * params.sigma2)
    )


def palm_intensity_dpp(kernel, s_i, s_j) -> float:
    """C(s_i,s_i) - C(s_i,s_j) C(s_j,s_i) / C(s_j,s_j); zero at s_i == s_j."""
    c_jj = kernel(s_j, s_j)
    if not c_jj > 0:
        raise ValueError(f"kernel diagonal must be positive, got C(s_j,s_j)={c_jj}")
    return kernel(s_i, s_i) - kernel(s_i, s_j) * kernel(s_j, s_i) / c_jj


# ---------------------------------------------------------------------------
# Simulators

def simulate_poisson(lam: float, window: Window, rng) -> PointPattern:
    """Homogeneous Poisson pattern: N ~ Poisson(lam * |W|), points uniform."""
    if not lam >= 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    n = rng.poisson(lam * window.area)
    xs = window.x_min + rng.random(n) * window.width
    ys = window.y_min + rng.random(n) * window.height
    return PointPattern(np.column_stack([xs, ys]), window)


# Cholesky factors of unit-variance exponential correlation matrices are
# cached by (phi, grid geometry); sigma2 scales out of the factor exactly.
_CHOL_CACHE: dict = {}
_CHOL_CACHE_MAX = 2
JITTER_START = 1e-10
JITTER_STOP = 1e-4


def _grid_key(grid: GridPartition):
    w = grid.window
    return (grid.n_x, grid.n_y, w.x_min, w.x_max, w.y_min, w.y_max)


def correlation_cholesky(phi: float, grid: GridPartition) -> np.ndarray:
    """Lower Cholesky factor of exp(-d/phi) over the grid cell centers.

    Jitter is added to the diagonal when needed, starting at 1e-10 and
    growing tenfold up to 1e-4 (relative to the unit diagonal) before
    giving up with NumericalError.
    """
    key = (float(phi), _grid_key(grid))
    hit = _CHOL_CACHE.get(key)
    if hit is not None:
        return hit
    centers = grid.cell_centers()
    corr = np.exp(-cdist(centers, centers) / phi)
    eps = JITTER_START
    while True:
        try:
            factor = np.linalg.cholesky(
                corr if eps == 0 else corr + eps * np.eye(corr.shape[0])
            )
            break
        except np.linalg.LinAlgError:
            eps *= 10.0
            if eps > JITTER_STOP:
                raise NumericalError(
                    f"correlation Cholesky failed for phi={phi} even with jitter {JITTER_STOP}"
                ) from None
    while len(_CHOL_CACHE) >= _CHOL_CACHE_MAX:
        _CHOL_CACHE.pop(next(iter(_CHOL_CACHE)))
    _CHOL_CACHE[key] = factor
    return factor


def simulate_gp_grid(sigma2: float, phi: float, grid: GridPartition, rng) -> np.ndarray:
    """Draw a mean-zero GP with covariance sigma2*exp(-d/phi) at cell centers."""
    if not sigma2 >= 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    if not phi > 0:
        raise ValueError(f"phi must be positive, got {phi}")
    if sigma2 == 0:
        return np.zeros(grid.n_cells)
    factor = correlation_cholesky(phi, grid)
    return math.sqrt(sigma2) * (factor @ rng.standard_normal(grid.n_cells))


def _scatter_in_cells(grid: GridPartition, counts: np.ndarray, rng) -> np.ndarray:
    """Place counts[c] points uniformly inside each cell c."""
    total = int(counts.sum())
    if total == 0:
        return np.empty((0, 2))
    cells = np.repeat(np.arange(grid.n_cells), counts)
    ix = cells % grid.n_x
    iy = cells // grid.n_x
    w = grid.window
    xs = w.x_min + (ix + rng.random(total)) * grid.cell_width
    ys = w.y_min + (iy + rng.random(total)) * grid.cell_height
    return np.column_stack([xs, ys])


def simulate_lgcp(
    params: LgcpParams,
    covariates: CovariateField | None,
    grid: GridPartition,
    rng,
) -> PointPattern:
    """Grid-based LGCP simulation with piecewise-constant intensity.

    Draws W on the grid, sets lambda(cell) = exp(x(cell)'beta + W(cell)),
    draws Poisson counts per cell and scatters points uniformly in cells.
    """
    if covariates is None:
        if len(params.beta) != 1:
            raise ValueError("covariates are required when beta has slopes")
        mean_log = np.full(grid.n_cells, params.beta[0])
    else:
        if covariates.grid != grid:
            raise ValueError("covariate raster grid does not match the simulation grid")
        if covariates.n_covariates + 1 != len(params.beta):
            raise ValueError("covariate count does not match beta length")
        mean_log = covariates.design_matrix() @ np.asarray(params.beta)
    field = simulate_gp_grid(params.sigma2, params.phi, grid, rng)
    rates = np.exp(mean_log + field) * grid.cell_area
    counts = rng.poisson(rates)
    return PointPattern(_scatter_in_cells(grid, counts, rng), grid.window)


THOMAS_PARENT_MARGIN_SIGMAS = 6.0


def simulate_thomas(params: ThomasParams, window: Window, rng) -> PointPattern:
    """Thomas process: parents on a 6-sigma-expanded window, Gaussian offspring.

    Parents are discarded; offspring falling outside the window are dropped.
    The margin keeps edge parents' contributions: beyond six dispersal
    standard deviations the lost mass is negligible at double precision.
    """
    sigma = math.sqrt(params.sigma2)
    parent_window = window.expand(THOMAS_PARENT_MARGIN_SIGMAS * sigma)
    n_parents = rng.poisson(params.mu * parent_window.area)
    px = parent_window.x_min + rng.random(n_parents) * parent_window.width
    py = parent_window.y_min + rng.random(n_parents) * parent_window.height
    n_offspring = rng.poisson(params.nu, size=n_parents)
    total = int(n_offspring.sum())
    centers = np.column_stack([np.repeat(px, n_offspring), np.repeat(py, n_offspring)])
    pts = centers + sigma * rng.standard_normal((total, 2))
    keep = window.contains(pts) if total else np.empty(0, bool)
    return PointPattern(pts[keep], window)
