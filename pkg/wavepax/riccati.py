"""
Phase coefficients (y1, y2, y3) and amplitude a of the quadratic propagator.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, HorizonError, InconsistentHorizonError, ParameterError
from .oscillator import (
    DEFAULT_SAMPLES,
    HamiltonianFlow,
    OscillatorSpec,
    Preset,
    central_derivative,
    closed_form_flow,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-11
BLOWUP_THRESHOLD = 1e8
HORIZON_MARGIN = 1e-3
# The flow position is treated as vanished below this value.
VANISHING_POSITION = 1e-8


class RiccatiState(NamedTuple):
    y1: Union[float, np.ndarray]
    y2: Union[float, np.ndarray]
    y3: Union[float, np.ndarray]
    a: Union[float, np.ndarray]


@dataclass(frozen=True)
class RiccatiSolution:
    """
    Sampled solution of

        y1' = -4 kappa1 y1^2 - kappa2,  y2' = -4 kappa1 y1 y2,
        y3' = -kappa1 y2^2,             a'  = -2 y1 kappa1 a,

    from (0, 1, 0, 1). ``y1`` is the linear-reduction value p / (2x);
    ``y1_direct`` is the Riccati equation integrated on its own.

    Attributes:
        t_samples: Uniform times on [0, horizon]
        y1, y2, y3, a: Samples of the phase coefficients and amplitude
        y1_direct: Directly integrated y1
        derivatives: Exact right-hand sides at the samples, shape (n, 4)
        horizon: Last valid time
    """

    t_samples: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    y3: np.ndarray
    a: np.ndarray
    y1_direct: np.ndarray
    derivatives: np.ndarray
    horizon: float
    _spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.column_stack([self.y1, self.y2, self.y3, self.a])
        object.__setattr__(self, "_spline", CubicHermiteSpline(self.t_samples, values, self.derivatives))

    def check_time(self, t) -> None:
        t_arr = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, self.horizon)
        if np.any(t_arr < -slack) or np.any(t_arr > self.horizon + slack):
            raise HorizonError(
                f"t={t} outside the valid horizon [0, {self.horizon:.12g}]",
                last_valid_time=self.horizon,
            )

    def at(self, t) -> RiccatiState:
        """
        Evaluate (y1, y2, y3, a) at t by cubic Hermite interpolation.

        Raises:
            HorizonError: If t lies outside [0, horizon]
        """
        self.check_time(t)
        t_arr = np.clip(np.asarray(t, dtype=float), 0.0, self.horizon)
        values = self._spline(t_arr)
        return RiccatiState(values[..., 0][()], values[..., 1][()], values[..., 2][()], values[..., 3][()])

    def gamma(self, t, dim: int = 1):
        """Complex prefactor (a^2 / (1 - 4i y3))^(d/2), principal branch."""
        state = self.at(t)
        # Re(1 - 4i y3) = 1, so the principal branch never meets its cut.
        return np.power(state.a, dim) * np.power(1.0 - 4.0j * state.y3, -0.5 * dim)

    def spread(self, t):
        """A(t) = 2 y2^2 / (1 + 16 y3^2)."""
        state = self.at(t)
        return 2.0 * state.y2**2 / (1.0 + 16.0 * state.y3**2)

    def rows(self):
        """CSV rows (t, y1, y2, y3, a)."""
        return np.column_stack([self.t_samples, self.y1, self.y2, self.y3, self.a]).tolist()


def _rhs_values(osc: OscillatorSpec, t, y1, y2, a) -> np.ndarray:
    k1 = osc.kappa1(t)
    k2 = osc.kappa2(t)
    return np.column_stack(
        [
            -4.0 * k1 * y1**2 - k2,
            -4.0 * k1 * y1 * y2,
            -k1 * y2**2,
            -2.0 * y1 * k1 * a,
        ]
    )


def solve_riccati(
    osc: OscillatorSpec,
    T: float,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
    blowup: float = BLOWUP_THRESHOLD,
) -> RiccatiSolution:
    """
    Integrate the phase system on [0, T].

    The flow (x, p) is carried along so that y1 = p / (2x) is available
    without quadratic blow-up; y2, y3 and a are driven by that value.

    Args:
        osc: Operator coefficients
        T: Final time, at most the flow horizon
        tol: Relative tolerance of the DOP853 integrator
        samples: Number of uniform output samples (>= 2)
        blowup: Threshold on |y1_direct| signalling the horizon

    Returns:
        RiccatiSolution on [0, T]

    Raises:
        DomainError: If T <= 0
        HorizonError: If y1 blows up, the flow vanishes, or the integrator fails
    """
    if T <= 0.0:
        raise DomainError(f"T must be positive, got {T}")
    osc.validate_on(T)

    def rhs(t, state):
        x, p, y1, y2, y3, amp = state
        k1 = osc.kappa1(t)
        k2 = osc.kappa2(t)
        y1_lin = p / (2.0 * x)
        return [
            2.0 * k1 * p,
            -2.0 * k2 * x,
            -4.0 * k1 * y1 * y1 - k2,
            -4.0 * k1 * y1_lin * y2,
            -k1 * y2 * y2,
            -2.0 * y1_lin * k1 * amp,
        ]

    def blows_up(t, state):
        return abs(state[2]) - blowup

    def vanishes(t, state):
        return state[0] - VANISHING_POSITION

    blows_up.terminal = True
    vanishes.terminal = True

    t_eval = np.linspace(0.0, T, max(samples, 2))
    sol = solve_ivp(
        rhs,
        (0.0, T),
        [1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
        t_eval=t_eval,
        events=(blows_up, vanishes),
    )
    if sol.status == -1:
        last = float(sol.t[-1]) if sol.t.size else 0.0
        logger.warning(f"Riccati integration failed near t={last:.6g}: {sol.message}")
        raise HorizonError(f"Riccati integration failed: {sol.message}", last_valid_time=last)
    if sol.status == 1:
        hits = [float(times[0]) for times in sol.t_events if times.size]
        last = min(hits)
        logger.warning(f"Riccati horizon reached at t={last:.9g} before T={T}")
        raise HorizonError(f"phase coefficients blow up at t={last:.9g} < T={T}", last_valid_time=last)

    x, p, y1_direct, y2, y3, amp = sol.y
    y1 = p / (2.0 * x)
    t = sol.t
    derivatives = _rhs_values(osc, t, y1, y2, amp)
    logger.debug(f"Solved Riccati system for {osc.preset.value} on [0, {T}] with {t.size} samples")
    return RiccatiSolution(
        t_samples=t,
        y1=y1,
        y2=y2,
        y3=y3,
        a=amp,
        y1_direct=y1_direct,
        derivatives=derivatives,
        horizon=float(T),
    )


def trimmed_horizon(flow: HamiltonianFlow, T: float, margin: float = HORIZON_MARGIN) -> float:
    """
    Largest time the phase coefficients are reported on: min(T, T_D - margin).

    Raises:
        HorizonError: If the trimmed interval is empty
    """
    if not flow.crossed:
        return T
    end = min(T, flow.T_D - margin)
    if end <= 0.0:
        raise HorizonError(f"T_D={flow.T_D:.6g} leaves no interval after margin {margin}", last_valid_time=0.0)
    if end < T:
        logger.info(f"Trimming horizon from T={T} to {end:.9g} (T_D={flow.T_D:.9g})")
    return end


def riccati_residual(sol: RiccatiSolution, osc: OscillatorSpec) -> float:
    """Max relative residual of the system at interior samples."""
    t = sol.t_samples
    if t.size < 5:
        return 0.0
    h = t[1] - t[0]
    expected = _rhs_values(osc, t, sol.y1, sol.y2, sol.a)[2:-2]
    worst = 0.0
    for column, series in enumerate((sol.y1, sol.y2, sol.y3, sol.a)):
        numeric = central_derivative(series, h)
        scale = 1.0 + np.abs(expected[:, column])
        worst = max(worst, float(np.max(np.abs(numeric - expected[:, column]) / scale)))
    return worst


def linear_reduction_check(osc: OscillatorSpec, sol: RiccatiSolution, tol: float = DEFAULT_TOL) -> float:
    """
    Compare the integrated y1 with v' / (4 kappa1 v), where
    v'' - (ln kappa1)' v' + 4 kappa1 kappa2 v = 0, v(0) = 1, v'(0) = 0.

    Returns:
        Max deviation over the samples

    Raises:
        InconsistentHorizonError: If v vanishes inside the horizon
    """

    def rhs(t, state):
        v, w = state
        k1 = osc.kappa1(t)
        return [w, osc.kappa1_dot(t) / k1 * w - 4.0 * k1 * osc.kappa2(t) * v]

    def vanishes(t, state):
        return state[0]

    vanishes.terminal = True

    T = float(sol.t_samples[-1])
    run = solve_ivp(
        rhs,
        (0.0, T),
        [1.0, 0.0],
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
        t_eval=sol.t_samples,
        events=vanishes,
    )
    if run.status != 0:
        last = float(run.t[-1]) if run.t.size else 0.0
        raise InconsistentHorizonError(
            f"linear reduction vanishes at t={last:.6g} inside horizon {sol.horizon:.6g}",
            last_valid_time=last,
        )
    v, w = run.y
    reduced = w / (4.0 * osc.kappa1(run.t) * v)
    return float(np.max(np.abs(sol.y1_direct - reduced)))


def gronwall_bounds_check(sol: RiccatiSolution, K0: float, K: float) -> bool:
    """True iff exp(-4 K0 K t) <= y2 <= exp(4 K0 K t) and y3 <= 0 at every sample."""
    t = sol.t_samples
    slack = 1e-10
    lower = np.exp(-4.0 * K0 * K * t) * (1.0 - slack)
    upper = np.exp(4.0 * K0 * K * t) * (1.0 + slack)
    return bool(np.all(sol.y2 >= lower) and np.all(sol.y2 <= upper) and np.all(sol.y3 <= slack))


def closed_form_riccati(osc: OscillatorSpec, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Exact (y1, y2, y3) for the free, harmonic and Caldirola-Kanai presets.

    Raises:
        ParameterError: For presets without an elementary closed form
    """
    t = np.asarray(t, dtype=float)
    if osc.preset is Preset.FREE:
        return np.zeros_like(t), np.ones_like(t), -t
    if osc.preset is Preset.HARMONIC:
        return -0.5 * np.tan(t), 1.0 / np.cos(t), -0.5 * np.tan(t)
    if osc.preset is Preset.CALDIROLA_KANAI:
        a, sigma = osc.params["a"], osc.params["sigma"]
        x, p = closed_form_flow(osc, t)
        disc = sigma**2 - a**2
        if disc > 0.0:
            lam = math.sqrt(disc)
            y3 = -np.sin(lam * t) / (2.0 * lam * np.cos(lam * t) + 2.0 * a * np.sin(lam * t))
        elif disc < 0.0:
            lam = math.sqrt(-disc)
            y3 = -np.sinh(lam * t) / (2.0 * a * np.sinh(lam * t) + 2.0 * lam * np.cosh(lam * t))
        else:
            y3 = -t / (2.0 * (1.0 + a * t))
        return p / (2.0 * x), 1.0 / x, y3
    raise ParameterError(f"no elementary closed form for preset '{osc.preset.value}'")
