"""
Time-dependent quadratic operators and their Hamiltonian trajectories.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import jv, jvp, yv, yvp

from .errors import DomainError, HorizonError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
ZERO_TOL = 1e-6
DEFAULT_SAMPLES = 2049
# Fraction of the horizon allowed per integrator step.
MAX_STEP_FRACTION = 1.0 / 256.0


class Preset(str, Enum):
    """Named coefficient families."""

    FREE = "free"
    HARMONIC = "harmonic"
    CALDIROLA_KANAI = "caldirola_kanai"
    POWER_LAW = "power_law"
    TABULATED = "tabulated"


PRESET_ALIASES = {"ck": Preset.CALDIROLA_KANAI}

REQUIRED_PARAMS = {
    Preset.FREE: (),
    Preset.HARMONIC: (),
    Preset.CALDIROLA_KANAI: ("a", "sigma"),
    Preset.POWER_LAW: ("a", "sigma", "b", "d"),
    Preset.TABULATED: (),
}


class Horizon(Enum):
    """Marker for a flow with no zero before the requested time."""

    UNBOUNDED = "unbounded"

    def __str__(self) -> str:
        return self.value


Coefficient = Callable[[Union[float, np.ndarray]], Union[float, np.ndarray]]


@dataclass(frozen=True)
class OscillatorSpec:
    """
    Coefficients of the operator -kappa1(t) Laplacian + kappa2(t) |x|^2.

    Attributes:
        preset: Coefficient family
        params: Named real parameters of the family
        kappa1_eval: t -> kappa1(t) > 0
        kappa2_eval: t -> kappa2(t) >= 0
        kappa1_dot_eval: t -> kappa1'(t)
        t_max: Largest time the coefficients are defined at
    """

    preset: Preset
    params: Mapping[str, float]
    kappa1_eval: Coefficient
    kappa2_eval: Coefficient
    kappa1_dot_eval: Coefficient
    t_max: float = math.inf

    def kappa1(self, t):
        return self.kappa1_eval(t)

    def kappa2(self, t):
        return self.kappa2_eval(t)

    def kappa1_dot(self, t):
        return self.kappa1_dot_eval(t)

    def validate_on(self, T: float, samples: int = 1025) -> None:
        """
        Check positivity of the coefficients on [0, T] by sampling.

        Raises:
            ParameterError: If kappa1 <= 0 or kappa2 < 0 somewhere, or T
                exceeds the range the coefficients are defined on
        """
        if T > self.t_max:
            raise ParameterError(
                f"{self.preset.value} coefficients are defined up to t={self.t_max}, requested T={T}"
            )
        t = np.linspace(0.0, T, samples)
        k1 = np.asarray(self.kappa1(t), dtype=float)
        k2 = np.asarray(self.kappa2(t), dtype=float)
        if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(k2))):
            raise ParameterError(f"non-finite coefficients for {self.preset.value} on [0, {T}]")
        if np.min(k1) <= 0.0:
            raise ParameterError(f"kappa1 must stay positive on [0, {T}], min={np.min(k1):.3e}")
        if np.min(k2) < 0.0:
            raise ParameterError(f"kappa2 must stay nonnegative on [0, {T}], min={np.min(k2):.3e}")


@dataclass(frozen=True)
class HamiltonianFlow:
    """
    Sampled trajectory (x, p) of the quadratic Hamiltonian from (1, 0).

    Attributes:
        t_samples: Uniform times on [0, min(T, T_D)]
        x: Position samples
        p: Momentum samples
        T_D: First zero of x, or Horizon.UNBOUNDED if none before T
        zero_tol: Threshold used to flag tangential touches
    """

    t_samples: np.ndarray
    x: np.ndarray
    p: np.ndarray
    T_D: Union[float, Horizon]
    zero_tol: float = ZERO_TOL

    @property
    def crossed(self) -> bool:
        return self.T_D is not Horizon.UNBOUNDED

    def effective_horizon(self, T: float) -> float:
        """Return min(T, T_D)."""
        return min(T, self.T_D) if self.crossed else T


def _constant(value: float) -> Coefficient:
    return lambda t: np.full(np.shape(t), value, dtype=float)[()]


def _check_params(preset: Preset, params: Mapping[str, float]) -> Dict[str, float]:
    values = {("d" if key == "d_offset" else key): float(val) for key, val in params.items()}
    for name in REQUIRED_PARAMS[preset]:
        if name not in values:
            raise ParameterError(f"preset '{preset.value}' requires parameter '{name}'")
        if not math.isfinite(values[name]) or values[name] <= 0.0:
            raise ParameterError(f"parameter '{name}' must be positive, got {values[name]}")
    return values


def _tabulated(table: Mapping[str, Sequence[float]]) -> Tuple[Coefficient, Coefficient, Coefficient, float]:
    try:
        t = np.asarray(table["t"], dtype=float)
        k1 = np.asarray(table["kappa1"], dtype=float)
        k2 = np.asarray(table["kappa2"], dtype=float)
    except KeyError as e:
        raise ParameterError(f"tabulated preset requires column {e}") from None
    if t.ndim != 1 or t.size < 4 or t.shape != k1.shape or t.shape != k2.shape:
        raise ParameterError("tabulated columns must be 1-d of equal length >= 4")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
        raise ParameterError("tabulated times must start at 0 and increase strictly")
    spline1 = CubicSpline(t, k1)
    spline2 = CubicSpline(t, k2)
    dspline1 = spline1.derivative()
    return (
        lambda s: spline1(s)[()],
        lambda s: spline2(s)[()],
        lambda s: dspline1(s)[()],
        float(t[-1]),
    )


def make_oscillator(
    preset: Union[str, Preset],
    params: Optional[Mapping[str, float]] = None,
    table: Optional[Mapping[str, Sequence[float]]] = None,
) -> OscillatorSpec:
    """
    Build the coefficient pair for a named preset.

    Args:
        preset: One of free, harmonic, caldirola_kanai (alias ck), power_law, tabulated
        params: a, sigma for caldirola_kanai; a, sigma, b, d for power_law
        table: Columns t, kappa1, kappa2 for the tabulated preset

    Returns:
        OscillatorSpec with vectorized coefficient callables

    Raises:
        ParameterError: Unknown preset, missing or nonpositive parameter
    """
    if isinstance(preset, str) and not isinstance(preset, Preset):
        key = preset.lower()
        if key in PRESET_ALIASES:
            preset = PRESET_ALIASES[key]
        else:
            try:
                preset = Preset(key)
            except ValueError:
                raise ParameterError(f"unknown oscillator preset '{preset}'") from None
    values = _check_params(preset, params or {})
    t_max = math.inf

    if preset is Preset.FREE:
        k1, k2, k1dot = _constant(1.0), _constant(0.0), _constant(0.0)
    elif preset is Preset.HARMONIC:
        k1, k2, k1dot = _constant(0.5), _constant(0.5), _constant(0.0)
    elif preset is Preset.CALDIROLA_KANAI:
        a, sigma = values["a"], values["sigma"]

        def k1(t):
            return 0.5 * np.exp(-2.0 * a * np.asarray(t, dtype=float))[()]

        def k2(t):
            return 0.5 * sigma**2 * np.exp(2.0 * a * np.asarray(t, dtype=float))[()]

        def k1dot(t):
            return -a * np.exp(-2.0 * a * np.asarray(t, dtype=float))[()]

    elif preset is Preset.POWER_LAW:
        a, sigma, b, d = values["a"], values["sigma"], values["b"], values["d"]

        def k1(t):
            return 0.5 * np.power(np.asarray(t, dtype=float) + d, -a)[()]

        def k2(t):
            return 0.5 * sigma**2 * np.power(np.asarray(t, dtype=float) + d, b)[()]

        def k1dot(t):
            return -0.5 * a * np.power(np.asarray(t, dtype=float) + d, -a - 1.0)[()]

    else:
        if table is None:
            raise ParameterError("tabulated preset requires a table")
        k1, k2, k1dot, t_max = _tabulated(table)

    logger.debug(f"Built {preset.value} oscillator with params {values}")
    return OscillatorSpec(preset, values, k1, k2, k1dot, t_max)


def central_derivative(values: np.ndarray, spacing: float) -> np.ndarray:
    """
    Fourth-order five-point derivative on a uniform mesh.

    Returns the derivative at interior indices 2..n-3 (length n-4).
    """
    return (values[:-4] - 8.0 * values[1:-3] + 8.0 * values[3:-1] - values[4:]) / (12.0 * spacing)


def hamiltonian_flow(
    osc: OscillatorSpec,
    T: float,
    tol: float = DEFAULT_TOL,
    zero_tol: float = ZERO_TOL,
    samples: int = DEFAULT_SAMPLES,
) -> HamiltonianFlow:
    """
    Integrate x' = 2 kappa1 p, p' = -2 kappa2 x from (1, 0) and locate T_D.

    The first downward zero of x is located by the integrator's event
    root-finder on its dense output. Samples are uniform on [0, min(T, T_D)].

    Args:
        osc: Operator coefficients
        T: Requested final time
        tol: Relative tolerance (absolute is tol * 1e-3)
        zero_tol: |x| below this without a sign change counts as a touch
        samples: Number of output samples

    Returns:
        HamiltonianFlow

    Raises:
        DomainError: If T <= 0
        HorizonError: If the integrator fails (step-size underflow)
    """
    if T <= 0.0:
        raise DomainError(f"T must be positive, got {T}")
    osc.validate_on(T)

    def rhs(t, state):
        x, p = state
        return [2.0 * osc.kappa1(t) * p, -2.0 * osc.kappa2(t) * x]

    def crossing(t, state):
        return state[0]

    crossing.terminal = True
    crossing.direction = -1

    sol = solve_ivp(
        rhs,
        (0.0, T),
        [1.0, 0.0],
        method="RK45",
        rtol=tol,
        atol=tol * 1e-3,
        max_step=T * MAX_STEP_FRACTION,
        dense_output=True,
        events=crossing,
    )
    if sol.status == -1:
        last = float(sol.t[-1])
        logger.warning(f"Flow integration failed at t={last:.6g}: {sol.message}")
        raise HorizonError(f"flow integration failed: {sol.message}", last_valid_time=last)

    if sol.t_events[0].size:
        T_D: Union[float, Horizon] = float(sol.t_events[0][0])
        end = T_D
        logger.info(f"Flow of {osc.preset.value} vanishes at T_D={T_D:.12g}")
    else:
        T_D = Horizon.UNBOUNDED
        end = T

    t = np.linspace(0.0, end, samples)
    x, p = sol.sol(t)

    if T_D is Horizon.UNBOUNDED:
        touching = np.flatnonzero(np.abs(x) < zero_tol)
        if touching.size:
            T_D = float(t[touching[0]])
            logger.warning(f"Flow touches zero without crossing at t={T_D:.6g}")
    else:
        x[-1] = 0.0

    return HamiltonianFlow(t_samples=t, x=x, p=p, T_D=T_D, zero_tol=zero_tol)


def flow_residual(flow: HamiltonianFlow, osc: OscillatorSpec) -> float:
    """Max of |x' - 2 kappa1 p| + |p' + 2 kappa2 x| over interior samples."""
    t = flow.t_samples
    if t.size < 5:
        return 0.0
    h = t[1] - t[0]
    inner = t[2:-2]
    dx = central_derivative(flow.x, h)
    dp = central_derivative(flow.p, h)
    res = np.abs(dx - 2.0 * osc.kappa1(inner) * flow.p[2:-2]) + np.abs(
        dp + 2.0 * osc.kappa2(inner) * flow.x[2:-2]
    )
    return float(np.max(res))


def _solve_basis(values0, slopes0):
    # coefficients C with sum C_k f_k(d) = 1, sum C_k f_k'(d) = 0
    matrix = np.array([values0, slopes0], dtype=complex)
    return np.linalg.solve(matrix, np.array([1.0, 0.0], dtype=complex))


def _power_law_flow(params: Mapping[str, float], t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a, sigma, b, d = params["a"], params["sigma"], params["b"], params["d"]
    s = t + d
    alpha = 0.5 * (1.0 - a)
    gamma = 1.0 + 0.5 * (b - a)

    if abs(gamma) > 1e-12:
        beta = sigma / abs(gamma)
        nu = abs(alpha / gamma)

        def basis(s_val):
            z = beta * np.power(s_val, gamma)
            dz = beta * gamma * np.power(s_val, gamma - 1.0)
            lead = np.power(s_val, alpha)
            dlead = alpha * np.power(s_val, alpha - 1.0)
            f = [lead * jv(nu, z), lead * yv(nu, z)]
            df = [dlead * jv(nu, z) + lead * jvp(nu, z) * dz, dlead * yv(nu, z) + lead * yvp(nu, z) * dz]
            return f, df

    else:
        disc = complex((a - 1.0) ** 2 - 4.0 * sigma**2)
        r1 = 0.5 * (-(a - 1.0) + np.sqrt(disc))
        r2 = 0.5 * (-(a - 1.0) - np.sqrt(disc))

        def basis(s_val):
            s_c = np.asarray(s_val, dtype=complex)
            if abs(r1 - r2) < 1e-12:
                log_s = np.log(s_c)
                f = [s_c**r1, s_c**r1 * log_s]
                df = [r1 * s_c ** (r1 - 1.0), s_c ** (r1 - 1.0) * (r1 * log_s + 1.0)]
            else:
                f = [s_c**r1, s_c**r2]
                df = [r1 * s_c ** (r1 - 1.0), r2 * s_c ** (r2 - 1.0)]
            return f, df

    f0, df0 = basis(np.float64(d))
    coeffs = _solve_basis([f0[0], f0[1]], [df0[0], df0[1]])
    f, df = basis(s)
    x = np.real(coeffs[0] * f[0] + coeffs[1] * f[1])
    dx = np.real(coeffs[0] * df[0] + coeffs[1] * df[1])
    return x, dx * np.power(s, a)


def closed_form_flow(osc: OscillatorSpec, t) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact (x, p) for presets that have one; used to verify integration.

    Raises:
        ParameterError: For tabulated coefficients
    """
    t = np.asarray(t, dtype=float)
    if osc.preset is Preset.FREE:
        return np.ones_like(t), np.zeros_like(t)
    if osc.preset is Preset.HARMONIC:
        return np.cos(t), -np.sin(t)
    if osc.preset is Preset.CALDIROLA_KANAI:
        a, sigma = osc.params["a"], osc.params["sigma"]
        disc = sigma**2 - a**2
        if disc > 0.0:
            lam = math.sqrt(disc)
            x = np.exp(-a * t) * (np.cos(lam * t) + (a / lam) * np.sin(lam * t))
            p = -np.exp(a * t) * (a**2 / lam + lam) * np.sin(lam * t)
        elif disc < 0.0:
            lam = math.sqrt(-disc)
            x = np.exp(-a * t) * (np.cosh(lam * t) + (a / lam) * np.sinh(lam * t))
            p = np.exp(a * t) * (lam - a**2 / lam) * np.sinh(lam * t)
        else:
            x = np.exp(-a * t) * (1.0 + a * t)
            p = -(a**2) * t * np.exp(a * t)
        return x, p
    if osc.preset is Preset.POWER_LAW:
        return _power_law_flow(osc.params, t)
    raise ParameterError(f"no closed form for preset '{osc.preset.value}'")
