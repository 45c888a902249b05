"""
Finite Gaussian mixtures: finite-difference coefficients, step-function extensions, class-A checks.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist
from scipy.special import comb, erfc

from .errors import ConsistencyError, DomainError
from .hermite import LETTERS, HermiteCoeffs, PointFunction, b_from_d, hermite_coeffs, mesh_points, truncation_tail

logger = logging.getLogger(__name__)

# Bound on packet-by-point products held in memory at once.
CHUNK_ENTRIES = 2**22
RESIDUAL_SLACK = 1e-8


def separable_sum(
    weights: np.ndarray,
    factor_fn: Callable[[slice], List[np.ndarray]],
    shape: Tuple[int, ...],
    dtype=float,
) -> np.ndarray:
    """
    Accumulate sum_k w_k prod_i F_i[k, x_i] on a tensor grid.

    Args:
        weights: Packet weights, shape (K,)
        factor_fn: Maps a packet slice to per-axis factors of shape (chunk, n_i)
        shape: Output shape (n_1, ..., n_d)
        dtype: Output dtype
    """
    dim = len(shape)
    out = np.zeros(shape, dtype=dtype)
    if weights.size == 0:
        return out
    subscripts = "k,k" + ",k".join(LETTERS[:dim]) + "->" + LETTERS[:dim]
    chunk = max(1, CHUNK_ENTRIES // max(shape))
    for start in range(0, weights.size, chunk):
        part = slice(start, min(start + chunk, weights.size))
        out += np.einsum(subscripts, weights[part], *factor_fn(part), optimize=True)
    return out


@dataclass(frozen=True)
class GaussianMixture:
    """
    sum_n c_n exp(-|x + a_n|^2).

    Attributes:
        dim: Spatial dimension
        N: Order of the construction
        eps0: Center spacing of a finite-difference mixture; 0 for explicit placement
        centers: Array of shape (K, dim)
        coeffs: Array of shape (K,)
        eta: Certified L2 residual against the source function
        tail: Hermite tail E_N of the source
    """

    dim: int
    N: int
    eps0: float
    centers: np.ndarray
    coeffs: np.ndarray
    eta: float = 0.0
    tail: float = 0.0

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float).reshape(-1, self.dim)
        coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if centers.shape[0] != coeffs.shape[0]:
            raise DomainError(f"{centers.shape[0]} centers but {coeffs.shape[0]} coefficients")
        if not 0.0 <= self.eps0 < 1.0:
            raise DomainError(f"eps0 must lie in [0, 1), got {self.eps0}")
        if self.eta < 0.0 or self.tail < 0.0:
            raise DomainError("eta and tail must be nonnegative")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "coeffs", coeffs)

    def __len__(self) -> int:
        return self.coeffs.size

    @property
    def all_positive(self) -> bool:
        return bool(np.all(self.coeffs > 0.0))

    def spread(self) -> float:
        """alpha_N = max_{n,m} |a_n - a_m|."""
        if len(self) < 2:
            return 0.0
        if self.dim == 1:
            return float(np.ptp(self.centers[:, 0]))
        points = self.centers
        if len(self) > 4096:
            try:
                points = points[ConvexHull(points).vertices]
            except (RuntimeError, ValueError):
                pass
        return float(np.max(pdist(points)))

    def max_center_norm(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.centers, axis=1)))

    def approximation_term(self) -> float:
        """(e^N N eps0)^d, the finite-difference part of the error bound."""
        if self.eps0 == 0.0:
            return 0.0
        return (math.exp(self.N) * self.N * self.eps0) ** self.dim

    def evaluate(self, points) -> np.ndarray:
        """Evaluate at points of shape (..., dim)."""
        points = np.asarray(points, dtype=float)
        flat = points.reshape(-1, self.dim)
        out = np.zeros(flat.shape[0])
        chunk = max(1, CHUNK_ENTRIES // max(1, flat.shape[0]))
        for start in range(0, len(self), chunk):
            part = slice(start, start + chunk)
            shifted = flat[None, :, :] + self.centers[part, None, :]
            out += self.coeffs[part] @ np.exp(-np.sum(shifted**2, axis=-1))
        return out.reshape(points.shape[:-1])

    def evaluate_on_axes(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate on the tensor grid spanned by one axis per coordinate."""
        axes = [np.asarray(axis, dtype=float) for axis in axes]

        def factors(part):
            return [np.exp(-((axis[None, :] + self.centers[part, i, None]) ** 2)) for i, axis in enumerate(axes)]

        return separable_sum(self.coeffs, factors, tuple(axis.size for axis in axes))

    def combined(self, other: "GaussianMixture") -> "GaussianMixture":
        """Superposition of two mixtures."""
        if other.dim != self.dim:
            raise DomainError(f"cannot combine dimensions {self.dim} and {other.dim}")
        return GaussianMixture(
            dim=self.dim,
            N=max(self.N, other.N),
            eps0=self.eps0 if self.eps0 == other.eps0 else 0.0,
            centers=np.vstack([self.centers, other.centers]),
            coeffs=np.concatenate([self.coeffs, other.coeffs]),
            eta=self.eta + other.eta,
            tail=self.tail + other.tail,
        )

    def scaled(self, factor: float) -> "GaussianMixture":
        return replace(self, coeffs=self.coeffs * factor, eta=self.eta * abs(factor), tail=self.tail * abs(factor))

    def to_dict(self) -> Dict:
        return {
            "dim": self.dim,
            "N": self.N,
            "eps0": self.eps0,
            "centers": self.centers.tolist(),
            "coeffs": self.coeffs.tolist(),
            "eta": self.eta,
            "tail": self.tail,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "GaussianMixture":
        return cls(
            dim=int(data["dim"]),
            N=int(data["N"]),
            eps0=float(data.get("eps0", 0.0)),
            centers=np.asarray(data["centers"], dtype=float),
            coeffs=np.asarray(data["coeffs"], dtype=float),
            eta=float(data.get("eta", 0.0)),
            tail=float(data.get("tail", 0.0)),
        )

    def rows(self) -> List[list]:
        """CSV rows: center coordinates followed by the coefficient."""
        return [list(center) + [coeff] for center, coeff in zip(self.centers.tolist(), self.coeffs.tolist())]


def finite_difference_matrix(N: int, eps0: float) -> np.ndarray:
    """T[n, k] = (-1)^(k-n) C(k, n) eps0^(-k) for k >= n, so that c = T b."""
    n = np.arange(N + 1)
    signs = np.where((n[None, :] - n[:, None]) % 2 == 0, 1.0, -1.0)
    return np.triu(signs * comb(n[None, :], n[:, None]) * eps0 ** (-n[None, :].astype(float)))


def gaussian_coeffs(coeffs: HermiteCoeffs, eps0: float, N: int) -> np.ndarray:
    """
    Mixture coefficients c_n from Hermite coefficients d_n.

    Replaces each derivative D^k e^{-x^2} in f = sum_k b_k D^k e^{-x^2} by the
    forward difference eps0^{-k} Delta^k, per coordinate.

    Returns:
        Array of shape (N+1,) * dim; c[n] multiplies exp(-|x + n eps0|^2)

    Raises:
        DomainError: eps0 outside (0, 1), N <= 2, or too few coefficients
    """
    if not 0.0 < eps0 < 1.0:
        raise DomainError(f"eps0 must lie in (0, 1), got {eps0}")
    if N <= 2:
        raise DomainError(f"order must exceed 2, got {N}")
    if coeffs.N < N:
        raise DomainError(f"need Hermite coefficients up to order {N}, have {coeffs.N}")
    b = b_from_d(coeffs.truncated(N))
    matrix = finite_difference_matrix(N, eps0)
    c = b
    for _ in range(coeffs.dim):
        c = np.tensordot(c, matrix, axes=([0], [1]))
    return c


def grid_axes(half_width: float, points: int, dim: int) -> List[np.ndarray]:
    return [np.linspace(-half_width, half_width, points)] * dim


def default_points(dim: int) -> int:
    return 4096 if dim == 1 else 256


def residual_l2(
    mix: GaussianMixture,
    f: PointFunction,
    half_width: float,
    points: Optional[int] = None,
) -> Tuple[float, float]:
    """
    L2 distance between f and the mixture on a uniform grid of [-L, L]^d.

    Returns:
        (residual, ||f||) by Riemann sums
    """
    points = points or default_points(mix.dim)
    axes = grid_axes(half_width, points, mix.dim)
    cell = (axes[0][1] - axes[0][0]) ** mix.dim
    target = np.asarray(f(mesh_points(axes)), dtype=float)
    diff = target - mix.evaluate_on_axes(axes)
    return math.sqrt(np.sum(diff**2) * cell), math.sqrt(np.sum(target**2) * cell)


def mixture_error_bound(N: int, eps0: float, dim: int, f_norm: float, tail: float) -> float:
    """(e^N N eps0)^d ||f|| + E_N."""
    return (math.exp(N) * N * eps0) ** dim * f_norm + tail


def decompose(
    f: PointFunction,
    N: int,
    eps0: float,
    dim: int = 1,
    tail_order: Optional[int] = None,
    points: Optional[int] = None,
) -> GaussianMixture:
    """
    Gaussian mixture with centers n eps0 approximating f.

    The residual is measured on [-(N eps0 + 8), N eps0 + 8]^d and must not
    exceed the finite-difference bound; eta records the measured residual.

    Args:
        f: Function of points (..., dim)
        N: Order (> 2)
        eps0: Center spacing in (0, 1)
        dim: Dimension
        tail_order: Order of the longer expansion used for E_N (default 2N + 8)
        points: Residual grid points per coordinate

    Raises:
        ConsistencyError: If the measured residual breaks the bound
    """
    if N <= 2:
        raise DomainError(f"order must exceed 2, got {N}")
    order = max(tail_order or 2 * N + 8, N)
    coeffs = hermite_coeffs(f, order, dim)
    tail = truncation_tail(coeffs, N)
    c = gaussian_coeffs(coeffs, eps0, N)

    index = np.indices(c.shape).reshape(dim, -1).T
    values = c.reshape(-1)
    keep = values != 0.0
    mixture = GaussianMixture(dim, N, eps0, index[keep] * eps0, values[keep], eta=0.0, tail=tail)

    residual, f_norm = residual_l2(mixture, f, N * eps0 + 8.0, points)
    bound = mixture_error_bound(N, eps0, dim, f_norm, tail)
    logger.info(f"Decomposed into {len(mixture)} packets: residual={residual:.3e}, bound={bound:.3e}, E_N={tail:.3e}")
    if residual > bound + RESIDUAL_SLACK:
        raise ConsistencyError(f"residual {residual:.6e} exceeds the finite-difference bound {bound:.6e}")
    return replace(mixture, eta=residual)


def _bump_ramp(r: np.ndarray, start: float, stop: float) -> np.ndarray:
    # C-infinity transition from 1 at start to 0 at stop
    s = np.clip((r - start) / (stop - start), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        rise = np.where(s > 0.0, np.exp(-1.0 / np.where(s > 0.0, s, 1.0)), 0.0)
        fall = np.where(s < 1.0, np.exp(-1.0 / np.where(s < 1.0, 1.0 - s, 1.0)), 0.0)
    return fall / (fall + rise)


def erf_profile(x, M: float) -> np.ndarray:
    """G(x) = (erf(x + M) - erf(x - M)) / 2, evaluated through erfc for accuracy."""
    r = np.abs(np.asarray(x, dtype=float))
    return 0.5 * (erfc(r - M) - erfc(r + M))


def step_profile(x, M: float) -> np.ndarray:
    """One coordinate of the step extension: 1 on |x| <= M/2, erf shoulders, cut off on [9M, 10M]."""
    r = np.abs(np.asarray(x, dtype=float))
    shoulder = _bump_ramp(r, 9.0 * M, 10.0 * M) * erf_profile(r, M) / erf_profile(0.5 * M, M)
    return np.where(r <= 0.5 * M, 1.0, shoulder)


def step_eta(sup_bound: float, M: float, dim: int) -> float:
    """L2 residual implied by a per-coordinate sup bound on [-10M, 10M]^d."""
    return ((1.0 + sup_bound) ** dim - 1.0) * (20.0 * M) ** (0.5 * dim)


def step_extension(
    M: float,
    dx: float,
    shift: Optional[Sequence[float]] = None,
    dim: int = 1,
) -> Tuple[PointFunction, GaussianMixture, float]:
    """
    Smooth extension of the box indicator and its Riemann-sum mixture.

    The mixture uses midpoint nodes y_n on [0, 2M] with weight dy/sqrt(pi)
    and centers M - y_n - shift, so each coordinate approximates the erf
    profile; its error against phi is at most 2 e^{-M^2/4} + 2 dx M.

    Returns:
        (phi, mixture, per-coordinate sup bound)

    Raises:
        DomainError: If M < 2 or dx outside (0, 1)
    """
    if M < 2.0:
        raise DomainError(f"step extension needs M >= 2, got {M}")
    if not 0.0 < dx < 1.0:
        raise DomainError(f"dx must lie in (0, 1), got {dx}")
    shift = np.zeros(dim) if shift is None else np.asarray(shift, dtype=float).reshape(dim)

    count = int(math.ceil(2.0 * M / dx))
    step = 2.0 * M / count
    nodes = (np.arange(count) + 0.5) * step

    axes_centers = [M - nodes - shift[i] for i in range(dim)]
    centers = mesh_points(axes_centers).reshape(-1, dim)
    weight = step / math.sqrt(math.pi)
    coeffs = np.full(centers.shape[0], weight**dim)

    sup_bound = 2.0 * math.exp(-0.25 * M**2) + 2.0 * dx * M
    mixture = GaussianMixture(
        dim=dim,
        N=count - 1,
        eps0=0.0,
        centers=centers,
        coeffs=coeffs,
        eta=step_eta(sup_bound, M, dim),
        tail=0.0,
    )

    def phi(points):
        points = np.asarray(points, dtype=float)
        out = np.ones(points.shape[:-1])
        for i in range(dim):
            out = out * step_profile(points[..., i] - shift[i], M)
        return out

    logger.debug(f"Step extension M={M}, dx={dx}: {len(mixture)} packets, sup bound {sup_bound:.4e}")
    return phi, mixture, sup_bound


def class_A_check(
    mix: GaussianMixture,
    f: PointFunction,
    eta: float,
    half_width: Optional[float] = None,
    points: Optional[int] = None,
) -> bool:
    """True iff every coefficient is positive and ||f - mixture|| <= eta."""
    if not mix.all_positive:
        return False
    half_width = half_width if half_width is not None else mix.max_center_norm() + 8.0
    residual, _ = residual_l2(mix, f, half_width, points)
    return residual <= eta + RESIDUAL_SLACK


def random_mixture(
    rng: np.random.Generator,
    packets: int,
    dim: int = 1,
    center_scale: float = 1.0,
) -> GaussianMixture:
    """Positive mixture with uniform centers in [-scale, scale]^d and weights in [0.1, 1]."""
    if packets < 1:
        raise DomainError(f"need at least one packet, got {packets}")
    centers = rng.uniform(-center_scale, center_scale, size=(packets, dim))
    coeffs = rng.uniform(0.1, 1.0, size=packets)
    return GaussianMixture(dim=dim, N=packets - 1, eps0=0.0, centers=centers, coeffs=coeffs)
