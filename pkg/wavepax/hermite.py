"""
Hermite functions, Hermite coefficients and tail bounds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.special import gammaln, roots_hermite, zeta

from .errors import DomainError, IntegrabilityError

logger = logging.getLogger(__name__)

LETTERS = "abcdefghij"

# Evaluable functions take points of shape (..., dim) and return shape (...).
PointFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class HermiteCoeffs:
    """
    Coefficients d_n = <f e^{|x|^2/2}, h_n> in tensor layout.

    Attributes:
        N: Largest order per coordinate
        dim: Spatial dimension
        d: Array of shape (N+1,) * dim
    """

    N: int
    dim: int
    d: np.ndarray

    def truncated(self, N: int) -> "HermiteCoeffs":
        if N > self.N:
            raise DomainError(f"cannot truncate order {self.N} coefficients to order {N}")
        return HermiteCoeffs(N, self.dim, self.d[(slice(0, N + 1),) * self.dim].copy())

    def rows(self) -> List[list]:
        """CSV rows (index, d_n); multi-indices are joined with ':'."""
        rows = []
        for index in np.ndindex(*self.d.shape):
            rows.append([":".join(str(i) for i in index), float(self.d[index])])
        return rows


def hermite_polys(N: int, x) -> np.ndarray:
    """
    Orthonormal Hermite polynomials psi_n = h_n e^{x^2/2} for n = 0..N.

    Returns:
        Array of shape (N+1, *x.shape)
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((N + 1,) + x.shape)
    out[0] = math.pi**-0.25
    if N >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, N):
        out[n + 1] = x * math.sqrt(2.0 / (n + 1)) * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_functions(N: int, x) -> np.ndarray:
    """
    Hermite functions h_0..h_N by the normalized three-term recurrence.

    Returns:
        Array of shape (N+1, *x.shape)
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((N + 1,) + x.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * x**2)
    if N >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, N):
        out[n + 1] = x * math.sqrt(2.0 / (n + 1)) * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_fn(n: int, x):
    """Hermite function h_n(x)."""
    if n < 0:
        raise DomainError(f"order must be nonnegative, got {n}")
    return hermite_functions(n, x)[n][()]


def quadrature_nodes(N: int) -> int:
    return max(2 * N + 16, 64)


def _weighted_nodes(count: int):
    nodes, weights = roots_hermite(count)
    with np.errstate(divide="ignore"):
        return nodes, np.exp(np.log(weights) + nodes**2)


def mesh_points(axes: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _piecewise_coefficient(f: PointFunction, n: int, breakpoints: Sequence[float]) -> float:
    def integrand(x):
        return float(f(np.array([[x]]))[0]) * hermite_polys(n, x)[n]

    total = 0.0
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        value, _ = quad(integrand, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-12)
        total += value
    return total


def hermite_coeffs(
    f: PointFunction,
    N: int,
    dim: int = 1,
    breakpoints: Optional[Sequence[float]] = None,
) -> HermiteCoeffs:
    """
    Compute d_n = integral of f(x) e^{|x|^2/2} h_n(x) dx for every n with n_i <= N.

    Tensor Gauss-Hermite quadrature with quadrature_nodes(N) nodes per
    coordinate is used unless breakpoints are given, in which case f is
    taken to vanish outside [breakpoints[0], breakpoints[-1]] and each
    piece is integrated adaptively (dim 1 only).

    Raises:
        DomainError: Negative order, bad dimension, or breakpoints in dim > 1
        IntegrabilityError: If the quadrature sum is not finite
    """
    if N < 0 or dim < 1:
        raise DomainError(f"need N >= 0 and dim >= 1, got N={N}, dim={dim}")
    if breakpoints is not None:
        if dim != 1:
            raise DomainError("breakpoint quadrature is only available in dimension 1")
        d = np.array([_piecewise_coefficient(f, n, list(breakpoints)) for n in range(N + 1)])
    else:
        nodes, weights = _weighted_nodes(quadrature_nodes(N))
        psi = hermite_polys(N, nodes)
        values = np.asarray(f(mesh_points([nodes] * dim)), dtype=float)
        for _ in range(dim):
            values = values * weights.reshape((-1,) + (1,) * (dim - 1))
            values = np.tensordot(values, psi, axes=([0], [1]))
        d = values
    if not np.all(np.isfinite(d)):
        raise IntegrabilityError(f"non-finite Hermite coefficients up to order {N}")
    logger.debug(f"Computed Hermite coefficients of order {N} in dimension {dim}")
    return HermiteCoeffs(N, dim, np.asarray(d, dtype=float))


def normalization_factors(N: int) -> np.ndarray:
    """(-1)^n / sqrt(2^n n! sqrt(pi)) for n = 0..N."""
    n = np.arange(N + 1)
    magnitude = np.exp(-0.5 * (n * math.log(2.0) + gammaln(n + 1.0) + 0.5 * math.log(math.pi)))
    return np.where(n % 2 == 0, 1.0, -1.0) * magnitude


def b_from_d(coeffs: HermiteCoeffs) -> np.ndarray:
    """Apply b_n = d_n (-1)^n / sqrt(2^n n! sqrt(pi)) per coordinate."""
    factor = normalization_factors(coeffs.N)
    b = coeffs.d
    for axis in range(coeffs.dim):
        shape = [1] * coeffs.dim
        shape[axis] = -1
        b = b * factor.reshape(shape)
    return b


def truncation_tail(coeffs: HermiteCoeffs, N: int) -> float:
    """E_N: l2 norm of the coefficients with some index above N."""
    if N >= coeffs.N:
        return 0.0
    inside = np.zeros(coeffs.d.shape, dtype=bool)
    inside[(slice(0, N + 1),) * coeffs.dim] = True
    return float(np.sqrt(np.sum(coeffs.d[~inside] ** 2)))


def tail_factor(N: int) -> float:
    """Per-coordinate tail factor 10 / N^(1/4)."""
    return 10.0 / N**0.25


def tail_series(N: int) -> float:
    """Sum over n > N of (2(n+1))^(-3/2)."""
    return float(2.0**-1.5 * zeta(1.5, N + 2))


def ladder_factor(M: float) -> float:
    """
    Bound on ||(x + d/dx)^3 g||_{L^1(-M, M)} / ||g||_{H^3}.

    Uses (x+D)^3 = x^3 + 3x^2 D + 3x D^2 + D^3 + 3x + 3D and Cauchy-Schwarz.
    """
    return math.sqrt(2.0 * M) * ((1.0 + M) ** 3 + 3.0 * (1.0 + M))


def tail_bound(f_h3_norm: float, M: float, N: int, dim: int = 1) -> float:
    """
    Analytic bound on E_N for data supported in [-M, M]^dim.

    Args:
        f_h3_norm: Weighted H^3 norm of f e^{|x|^2/2}
        M: Support half-width (>= 1)
        N: Truncation order (> 2)
        dim: Dimension

    Raises:
        DomainError: If N <= 2 or M < 1
    """
    if N <= 2:
        raise DomainError(f"tail bound needs N > 2, got {N}")
    if M < 1.0:
        raise DomainError(f"tail bound needs M >= 1, got {M}")
    return (ladder_factor(M) * tail_factor(N)) ** dim * f_h3_norm


def weighted_h3_norm(f: PointFunction, M: float, points: int = 4097) -> float:
    """||f e^{x^2/2}||_{H^3(-M, M)} in dimension 1 by finite differences."""
    x = np.linspace(-M, M, points)
    g = np.asarray(f(x[:, None]), dtype=float) * np.exp(0.5 * x**2)
    total = 0.0
    for _ in range(4):
        total += trapezoid(g**2, x)
        g = np.gradient(g, x, edge_order=2)
    return math.sqrt(total)


def hermite_series(alphas, dim: int = 1) -> PointFunction:
    """
    Build f(x) = sum_n alpha_n prod_i h_{n_i}(x_i) e^{-x_i^2/2}.

    Every such f has vanishing tail beyond the order of alphas.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != dim:
        raise DomainError(f"coefficient array has {alphas.ndim} axes, expected {dim}")
    order = max(alphas.shape) - 1
    letters = LETTERS[:dim]
    subscripts = letters + "," + ",".join(f"{letter}..." for letter in letters) + "->..."

    def f(points):
        points = np.asarray(points, dtype=float)
        factors = []
        for axis in range(dim):
            x = points[..., axis]
            factors.append(hermite_functions(order, x)[: alphas.shape[axis]] * np.exp(-0.5 * x**2))
        return np.einsum(subscripts, alphas, *factors)

    return f
