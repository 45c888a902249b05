"""
Propagated wavepackets, the Gaussian parametrix and a discrete FIO.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft

from .decompose import GaussianMixture, separable_sum
from .errors import DomainError, GridError
from .oscillator import OscillatorSpec
from .riccati import RiccatiSolution

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-10
# Outer fraction of points per axis treated as the boundary band.
BOUNDARY_BAND = 1.0 / 16.0
EVALUATION_BLOCK = 256


@dataclass(frozen=True)
class GridSpec:
    """
    Periodic grid x_j = -L + j h, h = 2L / n, on [-L, L)^dim.

    Attributes:
        dim: Spatial dimension
        half_width: L
        points_per_dim: n, a power of two
    """

    dim: int
    half_width: float
    points_per_dim: int

    def __post_init__(self):
        n = self.points_per_dim
        if self.dim < 1:
            raise DomainError(f"dimension must be positive, got {self.dim}")
        if self.half_width <= 0.0:
            raise DomainError(f"half width must be positive, got {self.half_width}")
        if n < 2 or n & (n - 1):
            raise DomainError(f"points per dimension must be a power of two, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_dim

    @property
    def shape(self):
        return (self.points_per_dim,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points_per_dim)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * math.pi * fft.fftfreq(self.points_per_dim, d=self.spacing)

    def _radial(self, values: np.ndarray) -> np.ndarray:
        total = np.zeros(self.shape)
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = -1
            total = total + values.reshape(shape) ** 2
        return total

    def radius_squared(self) -> np.ndarray:
        """|x|^2 on the grid."""
        return self._radial(self.axis())

    def wavenumber_squared(self) -> np.ndarray:
        """|xi|^2 in FFT ordering."""
        return self._radial(self.wavenumbers())

    def norm(self, field: np.ndarray) -> float:
        return math.sqrt(float(np.sum(np.abs(field) ** 2)) * self.cell_volume)

    def boundary_mass(self, field: np.ndarray) -> float:
        """Fraction of the L2 mass lying in the outer band of the grid."""
        density = np.abs(field) ** 2
        total = float(np.sum(density))
        if total == 0.0:
            return 0.0
        band = max(1, int(self.points_per_dim * BOUNDARY_BAND))
        inside = np.zeros(self.points_per_dim, dtype=bool)
        inside[band:-band] = True
        mask = np.ones(self.shape, dtype=bool)
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = -1
            mask = mask & inside.reshape(shape)
        return float(np.sum(density[~mask])) / total

    @classmethod
    def sized_for(
        cls,
        mix: GaussianMixture,
        ric: RiccatiSolution,
        T: float,
        points_per_dim: int,
        support: float = 0.0,
    ) -> "GridSpec":
        """
        Grid with L >= max(max|a_n|, support) / min y2 + 8 / sqrt(min A) over [0, T].

        support is the per-axis extent of initial data that reaches beyond
        the packet centers, such as a step extension cut off at 10M.
        """
        t = ric.t_samples[ric.t_samples <= T + 1e-12]
        state = ric.at(t)
        spread = 2.0 * state.y2**2 / (1.0 + 16.0 * state.y3**2)
        reach = max(mix.max_center_norm(), support)
        half_width = reach / float(np.min(state.y2)) + 8.0 / math.sqrt(float(np.min(spread)))
        half_width /= 1.0 - 2.0 * BOUNDARY_BAND
        return cls(mix.dim, float(math.ceil(half_width)), points_per_dim)


@dataclass(frozen=True)
class PropagatedPacket:
    """Evolution of exp(-|x + center|^2) under the quadratic propagator."""

    center: np.ndarray
    riccati: RiccatiSolution

    def evaluate(self, t: float, x) -> np.ndarray:
        center = np.asarray(self.center, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float)
        state = self.riccati.at(t)
        dim = center.size
        gamma = self.riccati.gamma(t, dim)
        z = 1.0 - 4.0j * state.y3
        r2 = np.sum(x**2, axis=-1)
        w = np.sum((state.y2 * x + center) ** 2, axis=-1)
        return gamma * np.exp(1j * state.y1 * r2 - w / z)


def propagate_packet(p: PropagatedPacket, t: float, x) -> np.ndarray:
    """
    phi_n(t, x) = (a^2 / (1 - 4i y3))^{d/2} exp(i y1 |x|^2 - |y2 x + a_n|^2 / (1 - 4i y3)).

    Args:
        p: Packet
        t: Time within the Riccati horizon
        x: Points of shape (..., dim)

    Raises:
        HorizonError: If t is outside the horizon
    """
    return p.evaluate(t, x)


@dataclass(frozen=True)
class ParametrixField:
    mixture: GaussianMixture
    riccati: RiccatiSolution
    t: float
    grid: GridSpec
    values: np.ndarray


def _chirp(grid: GridSpec, y1: float) -> np.ndarray:
    return np.exp(1j * y1 * grid.radius_squared())


def parametrix(mix: GaussianMixture, ric: RiccatiSolution, t: float, grid: GridSpec) -> ParametrixField:
    """
    Sum of c_n phi_n(t, .) on the grid.

    Raises:
        DomainError: If the mixture and grid dimensions differ
        HorizonError: If t is outside the horizon
    """
    if mix.dim != grid.dim:
        raise DomainError(f"mixture dimension {mix.dim} does not match grid dimension {grid.dim}")
    state = ric.at(t)
    if len(mix) == 0:
        return ParametrixField(mix, ric, t, grid, np.zeros(grid.shape, dtype=complex))
    z = 1.0 - 4.0j * state.y3
    x = grid.axis()

    def factors(part):
        return [np.exp(-((state.y2 * x[None, :] + mix.centers[part, i, None]) ** 2) / z) for i in range(grid.dim)]

    values = separable_sum(mix.coeffs.astype(complex), factors, grid.shape, dtype=complex)
    values *= ric.gamma(t, grid.dim) * _chirp(grid, state.y1)
    return ParametrixField(mix, ric, t, grid, values)


def _evaluate_scaled(spectrum: np.ndarray, grid: GridSpec, scale: float) -> np.ndarray:
    # trigonometric interpolant of ifftn(spectrum) evaluated at scale * x along every axis
    n = grid.points_per_dim
    z = scale * grid.axis()
    outside = np.abs(z) >= grid.half_width
    xi = grid.wavenumbers()
    out = spectrum
    for axis in range(grid.dim):
        moved = np.moveaxis(out, axis, -1)
        result = np.empty(moved.shape, dtype=complex)
        for start in range(0, n, EVALUATION_BLOCK):
            rows = slice(start, min(start + EVALUATION_BLOCK, n))
            kernel = np.exp(1j * np.outer(z[rows] + grid.half_width, xi)) / n
            result[..., rows] = moved @ kernel.T
        result[..., outside] = 0.0
        out = np.moveaxis(result, -1, axis)
    return out


def fio_apply(
    u0: np.ndarray,
    ric: RiccatiSolution,
    t: float,
    grid: GridSpec,
    boundary_tol: float = BOUNDARY_TOL,
) -> np.ndarray:
    """
    u(t, x) = a^d e^{i y1 |x|^2} W(y2 x), where W = F^{-1}[e^{i y3 |xi|^2} F u0].

    The y2-scaled argument is evaluated with the band-limited interpolant
    of the discrete transform; points mapped outside the box are zero.

    Raises:
        GridError: If u0 or W carries mass in the boundary band
    """
    u0 = np.asarray(u0, dtype=complex)
    if u0.shape != grid.shape:
        raise DomainError(f"field shape {u0.shape} does not match grid {grid.shape}")
    if grid.boundary_mass(u0) > boundary_tol:
        raise GridError("initial field reaches the grid boundary", time=0.0)
    state = ric.at(t)
    spectrum = fft.fftn(u0) * np.exp(1j * state.y3 * grid.wavenumber_squared())
    intermediate = fft.ifftn(spectrum)
    mass = grid.boundary_mass(intermediate)
    if mass > boundary_tol:
        logger.warning(f"FIO intermediate field has boundary mass {mass:.3e} at t={t}")
        raise GridError(f"dispersed field reaches the grid boundary (mass fraction {mass:.3e})", time=t)
    values = _evaluate_scaled(spectrum, grid, float(state.y2))
    return state.a**grid.dim * _chirp(grid, state.y1) * values


def laplacian(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Spectral Laplacian."""
    return fft.ifftn(-grid.wavenumber_squared() * fft.fftn(field))


def pde_residual(
    previous: np.ndarray,
    current: np.ndarray,
    following: np.ndarray,
    osc: OscillatorSpec,
    grid: GridSpec,
    t: float,
    h: float,
) -> float:
    """
    ||d_t u + i(-kappa1 Lap + kappa2 |x|^2) u|| / ||u|| at time t.

    Uses the centered difference of the slices at t - h, t, t + h.
    """
    scale = grid.norm(current)
    if scale == 0.0:
        return 0.0
    dudt = (np.asarray(following) - np.asarray(previous)) / (2.0 * h)
    operator = -osc.kappa1(t) * laplacian(current, grid) + osc.kappa2(t) * grid.radius_squared() * current
    return grid.norm(dudt + 1j * operator) / scale


def slice_rows(values: np.ndarray, grid: GridSpec, index: Optional[int] = None):
    """CSV rows (x, re, im, abs2) along the first axis through the grid center."""
    x = grid.axis()
    line = values
    center = grid.points_per_dim // 2 if index is None else index
    while line.ndim > 1:
        line = line[..., center]
    return np.column_stack([x, line.real, line.imag, np.abs(line) ** 2]).tolist()
