"""
Split-step spectral reference solver for the time-dependent operator.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import fft
from scipy.integrate import trapezoid

from .decompose import GaussianMixture
from .errors import DomainError, GridError
from .observability import DomainSpec
from .oscillator import OscillatorSpec
from .propagate import BOUNDARY_TOL, GridSpec, parametrix
from .riccati import RiccatiSolution

logger = logging.getLogger(__name__)

MASS_DRIFT_TOL = 1e-6
STORED_SAMPLES = 64
COMPARISON_SLACK = 1e-4


@dataclass(frozen=True)
class ReferenceSolution:
    """
    Stored samples of a split-step run.

    Attributes:
        grid: Periodic grid
        t_samples: Stored times, starting at 0 and ending at T
        fields: Complex array of shape (len(t_samples), *grid.shape)
        mass_drift: max |‖u(t)‖ / ‖u0‖ - 1| over the stored samples
    """

    grid: GridSpec
    t_samples: np.ndarray
    fields: np.ndarray
    mass_drift: float

    @property
    def mass_conserved(self) -> bool:
        return self.mass_drift <= MASS_DRIFT_TOL

    def norms(self) -> np.ndarray:
        return np.array([self.grid.norm(field) for field in self.fields])


@dataclass(frozen=True)
class ParametrixComparison:
    error: float
    bound: float
    ok: bool
    t_samples: np.ndarray
    per_sample: np.ndarray

    def to_dict(self):
        return {"error": self.error, "bound": self.bound, "ok": self.ok}

    def rows(self) -> List[list]:
        """CSV rows (t, error)."""
        return np.column_stack([self.t_samples, self.per_sample]).tolist()


class SplitStepSolver:
    """
    Strang splitting for d_t u + i(-kappa1 Lap + kappa2 |x|^2) u = 0.

    Each step applies half a potential phase, the full kinetic phase in
    transform space and another half potential phase, with kappa1 and
    kappa2 frozen at the step midpoint.
    """

    def __init__(self, osc: OscillatorSpec, grid: GridSpec, boundary_tol: float = BOUNDARY_TOL):
        """
        Initialize solver.

        Args:
            osc: Operator coefficients
            grid: Periodic grid
            boundary_tol: Largest admissible boundary mass fraction
        """
        self.osc = osc
        self.grid = grid
        self.boundary_tol = boundary_tol
        self.radius_squared = grid.radius_squared()
        self.wavenumber_squared = grid.wavenumber_squared()

    def _guard(self, field: np.ndarray, t: float) -> None:
        mass = self.grid.boundary_mass(field)
        if mass > self.boundary_tol:
            logger.warning(f"Boundary mass {mass:.3e} at t={t:.6g} exceeds {self.boundary_tol:.1e}")
            raise GridError(f"solution reaches the grid boundary (mass fraction {mass:.3e})", time=t)

    def step(self, u: np.ndarray, t: float, dt: float) -> np.ndarray:
        mid = t + 0.5 * dt
        half_potential = np.exp(-0.5j * self.osc.kappa2(mid) * self.radius_squared * dt)
        kinetic = np.exp(-1j * self.osc.kappa1(mid) * self.wavenumber_squared * dt)
        u = half_potential * u
        u = fft.ifftn(kinetic * fft.fftn(u))
        return half_potential * u

    def solve(self, u0: np.ndarray, T: float, steps: int, save_every: Optional[int] = None) -> ReferenceSolution:
        """
        Advance u0 from 0 to T.

        Args:
            u0: Initial field on the grid
            T: Final time
            steps: Number of uniform steps
            save_every: Store every k-th step (default steps // 64); the final step is always stored

        Returns:
            ReferenceSolution

        Raises:
            DomainError: For a bad shape, T or step count
            GridError: If a stored sample carries boundary mass
        """
        u = np.asarray(u0, dtype=complex)
        if u.shape != self.grid.shape:
            raise DomainError(f"field shape {u.shape} does not match grid {self.grid.shape}")
        if T <= 0.0 or steps < 1:
            raise DomainError(f"need T > 0 and steps >= 1, got T={T}, steps={steps}")
        self.osc.validate_on(T)
        save_every = save_every or max(1, steps // STORED_SAMPLES)
        dt = T / steps

        self._guard(u, 0.0)
        initial_norm = self.grid.norm(u)
        times = [0.0]
        fields = [u.copy()]
        for k in range(steps):
            u = self.step(u, k * dt, dt)
            done = k + 1
            if done % save_every == 0 or done == steps:
                t = done * dt
                self._guard(u, t)
                times.append(t)
                fields.append(u.copy())

        stored = np.array(fields)
        if initial_norm == 0.0:
            drift = 0.0
        else:
            norms = np.array([self.grid.norm(field) for field in stored])
            drift = float(np.max(np.abs(norms / initial_norm - 1.0)))
        if drift > MASS_DRIFT_TOL:
            logger.warning(f"Mass drift {drift:.3e} exceeds {MASS_DRIFT_TOL:.0e}")
        logger.debug(f"Split-step run: {steps} steps to T={T}, {len(times)} stored samples, drift {drift:.2e}")
        return ReferenceSolution(self.grid, np.array(times), stored, drift)


def split_step_solve(
    osc: OscillatorSpec,
    u0: np.ndarray,
    T: float,
    steps: int,
    grid: GridSpec,
    save_every: Optional[int] = None,
    boundary_tol: float = BOUNDARY_TOL,
) -> ReferenceSolution:
    """Run SplitStepSolver(osc, grid).solve(u0, T, steps)."""
    return SplitStepSolver(osc, grid, boundary_tol).solve(u0, T, steps, save_every)


def l2_norm_spacetime(sol: ReferenceSolution, dom: DomainSpec) -> float:
    """
    ||u||_{L2((0, T) x omega)} with omega the grid outside the ball of radius diam/2.

    Raises:
        DomainError: If the hole does not fit inside the grid
    """
    grid = sol.grid
    radius = 0.5 * dom.diam_omega
    if radius >= grid.half_width:
        raise DomainError(f"hole of radius {radius} does not fit in a grid of half width {grid.half_width}")
    mask = grid.radius_squared() > radius**2 if radius > 0.0 else np.ones(grid.shape, dtype=bool)
    densities = np.array([np.sum(np.abs(field[mask]) ** 2) * grid.cell_volume for field in sol.fields])
    if sol.t_samples.size < 2:
        return 0.0
    return float(np.sqrt(trapezoid(densities, sol.t_samples)))


def compare_parametrix(
    sol: ReferenceSolution,
    mix: GaussianMixture,
    ric: RiccatiSolution,
    slack: float = COMPARISON_SLACK,
) -> ParametrixComparison:
    """
    Time-integrated L2 distance between the reference and the parametrix.

    The bound is (eta + (e^N N eps0)^d) T.

    Raises:
        HorizonError: If the stored times leave the Riccati horizon
    """
    errors = np.array(
        [
            sol.grid.norm(field - parametrix(mix, ric, float(t), sol.grid).values)
            for t, field in zip(sol.t_samples, sol.fields)
        ]
    )
    T = float(sol.t_samples[-1])
    error = float(trapezoid(errors, sol.t_samples)) if errors.size > 1 else 0.0
    bound = (mix.eta + mix.approximation_term()) * T
    ok = error <= bound + slack
    logger.info(f"Parametrix error {error:.3e} against bound {bound:.3e} (ok={ok})")
    return ParametrixComparison(error, bound, bool(ok), sol.t_samples, errors)
