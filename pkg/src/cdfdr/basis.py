"""Shifted orthonormal Legendre polynomials on [0, 1] and the Brownian
bridge kernel.

``Leg_j(u) = sqrt(2j + 1) * P_j(2u - 1)``, evaluated with the three-term
recurrence on ``P_j``.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .specfun import DomainError

__all__ = [
    "LegendreBasis",
    "legendre_matrix",
    "legendre_eval",
    "legendre_vector",
    "gauss_legendre",
    "bb_kernel",
    "rkhs_reproduce_check",
]

DEFAULT_MAX_DEGREE = 10


def _check_unit(u, name="u"):
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any((arr < 0) | (arr > 1)):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def legendre_matrix(u, max_degree, include_constant=False):
    """Evaluate Leg_1..Leg_M (optionally Leg_0) at every point of ``u``.

    Returns an array of shape ``u.shape + (M,)`` (``M + 1`` columns with
    the constant).
    """
    if max_degree < 0:
        raise ValueError("max_degree must be nonnegative")
    arr = _check_unit(u)
    x = 2.0 * arr - 1.0
    cols = np.empty(arr.shape + (max_degree + 1,))
    p_prev = np.ones_like(x)
    cols[..., 0] = 1.0
    if max_degree >= 1:
        p_cur = x
        cols[..., 1] = np.sqrt(3.0) * p_cur
        for n in range(1, max_degree):
            p_next = ((2 * n + 1) * x * p_cur - n * p_prev) / (n + 1)
            p_prev, p_cur = p_cur, p_next
            cols[..., n + 1] = np.sqrt(2.0 * (n + 1) + 1.0) * p_cur
    return cols if include_constant else cols[..., 1:]


def legendre_eval(j, u):
    """Leg_j(u) for a single degree."""
    if j < 0:
        raise ValueError("degree must be nonnegative")
    res = legendre_matrix(u, j, include_constant=True)[..., j]
    return float(res) if np.ndim(res) == 0 else res


def legendre_vector(max_degree, u):
    """(Leg_1(u), ..., Leg_M(u)) for a scalar u."""
    if max_degree < 1:
        raise ValueError("max_degree must be positive")
    return legendre_matrix(float(u), max_degree)


def _legendre_and_derivative(n, x):
    p_prev, p_cur = np.ones_like(x), x.copy()
    for j in range(2, n + 1):
        p_prev, p_cur = p_cur, ((2 * j - 1) * x * p_cur - (j - 1) * p_prev) / j
    return p_cur, n * (x * p_cur - p_prev) / (x * x - 1.0)


@lru_cache(maxsize=None)
def _gauss_legendre_unit(n):
    # Newton on P_n from Chebyshev-like starts; weights 2 / ((1 - x^2) P_n'(x)^2).
    # numpy's leggauss weights drift to ~1e-11 relative error by n = 128.
    if n == 1:
        nodes, weights = np.array([0.5]), np.array([1.0])
    else:
        half = (n + 1) // 2
        x = np.cos(np.pi * (np.arange(1, half + 1) - 0.25) / (n + 0.5))
        for _ in range(100):
            p, dp = _legendre_and_derivative(n, x)
            step = p / dp
            x = x - step
            if np.max(np.abs(step)) < 1e-16:
                break
        _, dp = _legendre_and_derivative(n, x)
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        if n % 2:
            x[-1] = 0.0
            full_x = np.concatenate([-x, x[-2::-1]])
            full_w = np.concatenate([w, w[-2::-1]])
        else:
            full_x = np.concatenate([-x, x[::-1]])
            full_w = np.concatenate([w, w[::-1]])
        nodes, weights = 0.5 * (full_x + 1.0), 0.5 * full_w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gauss_legendre(n, lo=0.0, hi=1.0):
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    nodes, weights = _gauss_legendre_unit(int(n))
    width = hi - lo
    return lo + width * nodes, width * weights


@dataclass(frozen=True)
class LegendreBasis:
    """Orthonormal basis Leg_0..Leg_M on [0, 1] with cached quadrature."""

    max_degree: int = DEFAULT_MAX_DEGREE
    quadrature_points: int = 128
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.max_degree < 1:
            raise ValueError("max_degree must be positive")
        nodes, weights = gauss_legendre(self.quadrature_points)
        object.__setattr__(self, "_nodes", nodes)
        object.__setattr__(self, "_weights", weights)

    def __call__(self, u, include_constant=False):
        return legendre_matrix(u, self.max_degree, include_constant)

    def gram(self):
        """Quadrature of Leg_j * Leg_k for j, k in 0..M."""
        vals = legendre_matrix(self._nodes, self.max_degree, include_constant=True)
        return (vals * self._weights[:, None]).T @ vals

    def integrate(self, fn):
        """Integrate ``fn`` over [0, 1] with the cached rule."""
        return float(np.dot(self._weights, fn(self._nodes)))


def bb_kernel(u, v):
    """Brownian bridge covariance min(u, v) - u v."""
    ua = _check_unit(u)
    va = _check_unit(v, "v")
    res = np.minimum(ua, va) - ua * va
    return float(res) if np.ndim(res) == 0 else res


def rkhs_reproduce_check(u, test_fn, quadrature_points=64):
    """Inner product <K(u, .), phi> = int_0^1 d/dt K(u, t) phi'(t) dt.

    ``test_fn`` is a pair ``(phi, dphi)`` with phi(0) = phi(1) = 0. The
    integral is split at the kink t = u so each piece is smooth. For a
    function in the Brownian bridge RKHS the result equals phi(u).
    """
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie strictly inside (0, 1)")
    if quadrature_points < 1:
        raise ValueError("quadrature_points must be positive")
    phi, dphi = test_fn
    if abs(phi(0.0)) > 1e-12 or abs(phi(1.0)) > 1e-12:
        raise ValueError("test function must vanish at 0 and 1")
    t_lo, w_lo = gauss_legendre(quadrature_points, 0.0, u)
    t_hi, w_hi = gauss_legendre(quadrature_points, u, 1.0)
    # dK/dt is 1 - u left of the kink and -u right of it
    left = (1.0 - u) * np.dot(w_lo, dphi(t_lo))
    right = -u * np.dot(w_hi, dphi(t_hi))
    return float(left + right)
