"""
Constants and conditions of the approximate observability estimates.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import erf, erfc

from .decompose import GaussianMixture
from .errors import CertificateError, DomainError
from .riccati import RiccatiSolution

logger = logging.getLogger(__name__)

CERTIFICATE_SAMPLES = 2049
QUADRATURE_INTERVALS = 2048
SQRT_2E_OVER_PI = math.sqrt(2.0 * math.e / math.pi)


@dataclass(frozen=True)
class DomainSpec:
    """
    Omega is the ball of diameter diam_omega at the origin, observed on its complement.

    Attributes:
        diam_omega: Diameter of Omega (0 for an empty hole)
        R0: Radius of a ball containing Omega
        R: Half-width of a box containing that ball
        dim: Spatial dimension
    """

    diam_omega: float
    R0: float
    R: float
    dim: int = 1

    def __post_init__(self):
        if self.diam_omega < 0.0:
            raise DomainError(f"diameter must be nonnegative, got {self.diam_omega}")
        if not 0.5 * self.diam_omega <= self.R0 <= self.R:
            raise DomainError(f"need diam/2 <= R0 <= R, got {self.diam_omega}/2, {self.R0}, {self.R}")
        if self.dim < 1:
            raise DomainError(f"dimension must be positive, got {self.dim}")


class ReqCheck(NamedTuple):
    ok: bool
    margin: float
    eps_max: float
    raw_ok: bool


class R1Check(NamedTuple):
    ok: bool
    rhs_max: float


@dataclass(frozen=True)
class ObservabilityCertificate:
    T: float
    t_samples: np.ndarray
    A: np.ndarray
    eps: np.ndarray
    delta: np.ndarray
    C_T: float
    req: ReqCheck
    C_T_linfty: float
    R1: Optional[R1Check] = None
    linfty: Optional[bool] = None
    extra: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        report = {
            "T": self.T,
            "C_T": self.C_T,
            "C_T_linfty": self.C_T_linfty,
            "req": {
                "ok": self.req.ok,
                "margin": self.req.margin,
                "eps_max": self.req.eps_max,
                "raw_ok": self.req.raw_ok,
            },
            "R1": None if self.R1 is None else {"ok": self.R1.ok, "rhs_max": self.R1.rhs_max},
            "A_min": float(np.min(self.A)),
            "A_max": float(np.max(self.A)),
            "linfty": self.linfty,
        }
        report.update(self.extra)
        return report

    def rows(self) -> List[list]:
        """CSV rows (t, A, eps, delta)."""
        return np.column_stack([self.t_samples, self.A, self.eps, self.delta]).tolist()


def certificate_times(T: float, samples: int = CERTIFICATE_SAMPLES) -> np.ndarray:
    if T < 0.0:
        raise DomainError(f"T must be nonnegative, got {T}")
    if T == 0.0:
        return np.zeros(1)
    return np.linspace(0.0, T, samples)


def spread_A(ric: RiccatiSolution, t):
    """A(t) = 2 y2^2 / (1 + 16 y3^2)."""
    return ric.spread(t)


def gamma_modulus(ric: RiccatiSolution, t, dim: int = 1):
    return np.abs(ric.gamma(t, dim))


def erfc_lb(x, beta):
    """
    Chernoff-type lower bound sqrt(2e/pi) sqrt(beta - 1) / beta exp(-beta x^2) <= erfc(x).

    Raises:
        DomainError: If x < 0 or beta <= 1
    """
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(x < 0.0) or np.any(beta <= 1.0):
        raise DomainError("erfc lower bound needs x >= 0 and beta > 1")
    return (SQRT_2E_OVER_PI * np.sqrt(beta - 1.0) / beta * np.exp(-beta * x**2))[()]


def erfc_lb_displayed(x, beta):
    """
    sqrt(2e/pi) sqrt((beta - 1) / beta) exp(-beta x^2).

    Not a lower bound for erfc: it exceeds erfc(0.5) at beta = 2.
    """
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return (SQRT_2E_OVER_PI * np.sqrt((beta - 1.0) / beta) * np.exp(-beta * x**2))[()]


def epsilon_lower(ric: RiccatiSolution, t, R: float, dim: int = 1):
    """eps(t, R) = min{pi^((d-1)/4) e^(1/4) 2^(-3d/4) e^(-A R^2), (pi/8)^(d/4)}."""
    if R <= 0.0:
        raise DomainError(f"R must be positive, got {R}")
    A = ric.spread(t)
    decaying = math.pi ** ((dim - 1) / 4.0) * math.exp(0.25) * 2.0 ** (-0.75 * dim) * np.exp(-A * R**2)
    return np.minimum(decaying, (math.pi / 8.0) ** (dim / 4.0))[()]


def delta_lower(ric: RiccatiSolution, t, R0: float, dim: int = 1):
    """delta(t, R0) = e^(1/4) A^((d-1)/4) R0^((d-1)/2) 2^(-(d/4+1)) (4 pi)^(-1/4) e^(-A R0^2)."""
    if R0 < 1.0:
        raise DomainError(f"R0 must be at least 1, got {R0}")
    A = ric.spread(t)
    return (
        math.exp(0.25)
        * np.power(A, (dim - 1) / 4.0)
        * R0 ** ((dim - 1) / 2.0)
        * 2.0 ** (-(dim / 4.0 + 1.0))
        * (4.0 * math.pi) ** -0.25
        * np.exp(-A * R0**2)
    )[()]


def _constant_integral(ric: RiccatiSolution, dom: DomainSpec, T: float, intervals: int) -> float:
    t = np.linspace(0.0, T, intervals + 1)
    integrand = epsilon_lower(ric, t, dom.R, dom.dim) * delta_lower(ric, t, dom.R0, dom.dim)
    return float(trapezoid(integrand, t))


def observability_constant(
    ric: RiccatiSolution,
    dom: DomainSpec,
    T: float,
    intervals: int = QUADRATURE_INTERVALS,
) -> float:
    """
    C_T = (pi/2)^(d/2) sqrt(T) / integral_0^T eps(t, R) delta(t, R0) dt.

    Raises:
        DomainError: If T <= 0
        CertificateError: If the integral vanishes or is not finite
    """
    if T <= 0.0:
        raise DomainError(f"T must be positive, got {T}")
    integral = _constant_integral(ric, dom, T, intervals)
    if not math.isfinite(integral) or integral <= 0.0:
        raise CertificateError(f"observability integral is {integral}; no finite constant")
    return (math.pi / 2.0) ** (dom.dim / 2.0) * math.sqrt(T) / integral


def quadrature_ratio(ric: RiccatiSolution, dom: DomainSpec, T: float, intervals: int = 64) -> float:
    """Richardson ratio (I_n - I_2n) / (I_2n - I_4n) of the C_T integral."""
    coarse, middle, fine = (_constant_integral(ric, dom, T, k * intervals) for k in (1, 2, 4))
    return (coarse - middle) / (middle - fine)


def linfty_constant(T: float) -> float:
    """e / ((e - 1) T)."""
    if T <= 0.0:
        raise DomainError(f"T must be positive, got {T}")
    return math.e / ((math.e - 1.0) * T)


def _states(ric: RiccatiSolution, T: float, samples: int):
    t = certificate_times(T, samples)
    state = ric.at(t)
    return t, np.atleast_1d(state.y2), np.atleast_1d(state.y3)


def check_req(
    N: int,
    eps: float,
    ric: RiccatiSolution,
    dom: DomainSpec,
    T: float,
    samples: int = CERTIFICATE_SAMPLES,
) -> ReqCheck:
    """
    Evaluate eps N LHS(t) <= RHS(t) on [0, T], where

        LHS = sqrt(1+16 y3^2) / (2|y2|) exp((2 y2^2 R0^2 + 2|y2| N R0) / (1+16 y3^2))
              + sqrt(2 pi) (N+1) / |y2| exp(2 N^2 / (1+16 y3^2)),
        RHS = (1/2) integral_{r > R0} e^{-A r^2} dr.

    Returns:
        ReqCheck with the worst margin, the largest admissible eps and the
        comparison LHS <= RHS without the eps N factor
    """
    if N <= 2:
        raise DomainError(f"order must exceed 2, got {N}")
    if eps < 0.0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    _, y2, y3 = _states(ric, T, samples)
    R0 = dom.R0
    spread = 1.0 + 16.0 * y3**2
    abs_y2 = np.abs(y2)
    with np.errstate(over="ignore"):
        lhs = np.sqrt(spread) / (2.0 * abs_y2) * np.exp((2.0 * y2**2 * R0**2 + 2.0 * abs_y2 * N * R0) / spread)
        lhs = lhs + math.sqrt(2.0 * math.pi) * (N + 1) / abs_y2 * np.exp(2.0 * N**2 / spread)
    A = 2.0 * y2**2 / spread
    rhs = 0.25 * np.sqrt(math.pi / A) * erfc(np.sqrt(A) * R0)

    scaled = np.zeros_like(lhs) if eps == 0.0 else eps * N * lhs
    margin = float(np.min(rhs - scaled))
    eps_max = float(np.min(rhs / (N * lhs)))
    result = ReqCheck(ok=bool(margin >= 0.0), margin=margin, eps_max=eps_max, raw_ok=bool(np.all(lhs <= rhs)))
    logger.debug(f"Condition check N={N}, eps={eps:.3e}: ok={result.ok}, eps_max={eps_max:.3e}")
    return result


def check_R1(
    alphaN: float,
    R1: float,
    diam_omega: float,
    ric: RiccatiSolution,
    T: float,
    samples: int = CERTIFICATE_SAMPLES,
) -> R1Check:
    """
    Compare R1 with the maximum over [0, T] of

        sqrt((alpha^2 + 2 - 2 log sqrt(y2 / (1+16 y3^2))) / (4 y2^2 / (1+16 y3^2)))
        + alpha / y2 + diam / 2.

    A negative radicand contributes zero.

    Raises:
        DomainError: If alphaN < 0
        CertificateError: If the logarithm's argument is not positive
    """
    if alphaN < 0.0:
        raise DomainError(f"alpha_N must be nonnegative, got {alphaN}")
    _, y2, y3 = _states(ric, T, samples)
    spread = 1.0 + 16.0 * y3**2
    ratio = np.abs(y2) / spread
    if np.any(ratio <= 0.0):
        raise CertificateError("logarithm argument in the distance condition is not positive")
    radicand = (alphaN**2 + 2.0 - np.log(ratio)) / (4.0 * y2**2 / spread)
    rhs = np.sqrt(np.maximum(radicand, 0.0)) + alphaN / y2 + 0.5 * diam_omega
    rhs_max = float(np.max(rhs))
    return R1Check(ok=bool(R1 > rhs_max), rhs_max=rhs_max)


def counterexample_mass(delta_shift: float, ric: RiccatiSolution, t, R: float, dim: int = 1):
    """
    Mass in [R, inf)^d of the packet started from exp(-|x + delta|^2):
    (pi / (4A))^(d/2) |gamma|^2 erfc(sqrt(A) (delta / y2 + R))^d.
    """
    if delta_shift < 0.0:
        raise DomainError(f"shift must be nonnegative, got {delta_shift}")
    state = ric.at(t)
    A = 2.0 * state.y2**2 / (1.0 + 16.0 * state.y3**2)
    modulus_sq = np.abs(ric.gamma(t, dim)) ** 2
    return (
        (math.pi / (4.0 * A)) ** (dim / 2.0)
        * modulus_sq
        * erfc(np.sqrt(A) * (delta_shift / state.y2 + R)) ** dim
    )[()]


def packet_box_norms(mix: GaussianMixture, ric: RiccatiSolution, t: float, R: float) -> np.ndarray:
    """||phi_n(t, .)||_{L2([-R, R]^d)} for every packet, in closed form."""
    state = ric.at(t)
    A = 2.0 * state.y2**2 / (1.0 + 16.0 * state.y3**2)
    shifts = mix.centers / state.y2
    root = math.sqrt(A)
    per_axis = 0.5 * math.sqrt(math.pi / A) * (erf(root * (R + shifts)) - erf(root * (shifts - R)))
    modulus_sq = np.abs(ric.gamma(t, mix.dim)) ** 2
    return np.sqrt(modulus_sq * np.prod(per_axis, axis=1))


def lower_inner_check(mix: GaussianMixture, ric: RiccatiSolution, t: float, R: float) -> bool:
    """eps(t, R) sum|c_n| <= sum ||c_n phi_n(t, .)||_{L2([-R, R]^d)}."""
    left = epsilon_lower(ric, t, R, mix.dim) * float(np.sum(np.abs(mix.coeffs)))
    right = float(np.sum(np.abs(mix.coeffs) * packet_box_norms(mix, ric, t, R)))
    return bool(left <= right)


def linfty_eta(M: float, dx: float, dim: int = 1) -> float:
    """(2 e^(-M^2/4) + M dx)^d."""
    return (2.0 * math.exp(-0.25 * M**2) + M * dx) ** dim


def linfty_check(M: float, dx: float, dim: int, phi_l2: float) -> bool:
    """True iff (2 e^(-M^2/4) + M dx)^d < (e - 1) / (4e) ||phi||."""
    if M < 2.0:
        raise DomainError(f"M must be at least 2, got {M}")
    return linfty_eta(M, dx, dim) < (math.e - 1.0) / (4.0 * math.e) * phi_l2


def observability_inequality(u0_norm: float, observed_norm: float, C_T: float, eta: float, T: float) -> bool:
    """||u0|| - eta <= C_T (||u||_{L2((0,T) x omega)} + T eta)."""
    return u0_norm - eta <= C_T * (observed_norm + T * eta)


def certify(
    ric: RiccatiSolution,
    dom: DomainSpec,
    T: float,
    N: int,
    eps: float,
    alpha_N: Optional[float] = None,
    R1: Optional[float] = None,
    linfty: Optional[Tuple[float, float, float]] = None,
    samples: int = CERTIFICATE_SAMPLES,
) -> ObservabilityCertificate:
    """
    Assemble every constant and condition for a horizon T.

    Args:
        ric: Phase coefficients valid on [0, T]
        dom: Observation geometry
        T: Final time
        N: Mixture order
        eps: Mixture spacing
        alpha_N: Center spread; with R1 enables the distance condition
        R1: Largest center norm
        linfty: (M, dx, ||phi||) for a step-extension datum

    Raises:
        CertificateError: If a sampled eps or delta is not positive
    """
    t = certificate_times(T, samples)
    A = np.atleast_1d(spread_A(ric, t))
    eps_t = np.atleast_1d(epsilon_lower(ric, t, dom.R, dom.dim))
    delta_t = np.atleast_1d(delta_lower(ric, t, dom.R0, dom.dim))
    if np.any(eps_t <= 0.0) or np.any(delta_t <= 0.0):
        raise CertificateError("lower constants vanish on the sampled horizon")
    C_T = observability_constant(ric, dom, T)
    req = check_req(N, eps, ric, dom, T, samples)
    r1 = None
    if alpha_N is not None and R1 is not None:
        r1 = check_R1(alpha_N, R1, dom.diam_omega, ric, T, samples)
    linfty_ok = None
    if linfty is not None:
        M, dx, phi_l2 = linfty
        linfty_ok = linfty_check(M, dx, dom.dim, phi_l2)
    logger.info(f"Certificate on [0, {T}]: C_T={C_T:.6g}, condition ok={req.ok}, eps_max={req.eps_max:.3e}")
    return ObservabilityCertificate(
        T=T,
        t_samples=t,
        A=A,
        eps=eps_t,
        delta=delta_t,
        C_T=C_T,
        req=req,
        C_T_linfty=linfty_constant(T),
        R1=r1,
        linfty=linfty_ok,
    )
