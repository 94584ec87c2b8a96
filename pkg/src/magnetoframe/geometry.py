"""
Pointwise Riemannian tensor calculus on a single coordinate chart.

Every function broadcasts over leading axes: points of shape ``(..., n)``
give results of shape ``(..., n, ...)``.  Index conventions for the arrays
returned here:

    g[..., i, j]            metric components g_ij
    dg[..., k, i, j]        d_k g_ij
    d2g[..., m, k, i, j]    d_m d_k g_ij
    gamma[..., k, i, j]     Christoffel symbol Gamma^k_ij
    R[..., a, b, c, d]      R(e_c, e_d) e_b = R^a_bcd e_a

Curvature sign: R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
so that the round sphere has sectional curvature +1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePlaneError, DomainError, MetricError

DEFAULT_FD_STEP = 1e-5
DEFAULT_FD2_STEP = 1e-4
DEGENERATE_PLANE_RATIO = 1e-12


def _fd_steps(p, step):
    return step * (1.0 + np.abs(p))


class MetricChart:
    """A coordinate chart carrying a Riemannian metric.

    Parameters
    ----------
    metric : callable
        ``metric(p)`` with ``p`` of shape ``(..., dim)`` returning the
        symmetric matrix ``(..., dim, dim)``.  Must broadcast over leading axes.
    dmetric, d2metric : callable, optional
        Analytic first and second coordinate derivatives of the metric.  When
        absent they are replaced by central finite differences.
    bounds : sequence of (lo, hi), optional
        Coordinate box of the domain.
    contains : callable, optional
        Extra domain predicate ``contains(p) -> bool array``.
    orientation : {+1, -1}
        Sign of the volume form on the coordinate frame.
    fd_step : float
        Relative finite-difference step, ``h = fd_step * (1 + |x|)``.
    """

    def __init__(self, metric, dmetric=None, d2metric=None, *, bounds=None,
                 contains=None, orientation=1, fd_step=DEFAULT_FD_STEP,
                 fd2_step=DEFAULT_FD2_STEP, dim=3, name="custom"):
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self._metric = metric
        self._dmetric = dmetric
        self._d2metric = d2metric
        self.bounds = None if bounds is None else np.asarray(bounds, dtype=float)
        self.contains = contains
        self.orientation = orientation
        self.fd_step = fd_step
        self.fd2_step = fd2_step
        self.dim = dim
        self.name = name

    def __repr__(self):
        return (f"MetricChart(name={self.name!r}, dim={self.dim}, "
                f"orientation={self.orientation:+d}, mode={self.derivative_mode!r})")

    @property
    def derivative_mode(self):
        return "analytic" if self._dmetric is not None else "finite-difference"

    def with_orientation(self, orientation):
        """Same metric with the opposite (or given) orientation."""
        return MetricChart(self._metric, self._dmetric, self._d2metric,
                           bounds=self.bounds, contains=self.contains,
                           orientation=orientation, fd_step=self.fd_step,
                           fd2_step=self.fd2_step, dim=self.dim, name=self.name)

    def finite_difference(self):
        """Copy of this chart that ignores analytic derivatives."""
        return MetricChart(self._metric, bounds=self.bounds, contains=self.contains,
                           orientation=self.orientation, fd_step=self.fd_step,
                           fd2_step=self.fd2_step, dim=self.dim, name=self.name)

    # -- domain -----------------------------------------------------------

    def in_domain(self, p):
        p = np.asarray(p, dtype=float)
        ok = np.all(np.isfinite(p), axis=-1)
        if self.bounds is not None:
            ok &= np.all((p >= self.bounds[:, 0]) & (p <= self.bounds[:, 1]), axis=-1)
        if self.contains is not None:
            ok &= np.asarray(self.contains(p), dtype=bool)
        return ok

    def require(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            raise ValueError(f"expected points with {self.dim} coordinates, got shape {p.shape}")
        ok = self.in_domain(p)
        if not np.all(ok):
            bad = p[~ok] if p.ndim > 1 else p
            raise DomainError(f"point {np.atleast_2d(bad)[0]} outside the domain of chart {self.name!r}")
        return p

    # -- metric and derivatives ---------------------------------------------

    def metric(self, p, check=True):
        if not check:
            return np.asarray(self._metric(np.asarray(p, dtype=float)), dtype=float)
        p = self.require(p)
        g = np.asarray(self._metric(p), dtype=float)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise MetricError(f"metric of chart {self.name!r} is not positive definite "
                              f"near {np.atleast_2d(p)[0]}") from None
        return g

    def dmetric(self, p, check=True):
        p = self.require(p) if check else np.asarray(p, dtype=float)
        if self._dmetric is not None:
            return np.asarray(self._dmetric(p), dtype=float)
        return self._central(self._metric, p, self.fd_step)

    def d2metric(self, p, check=True):
        p = self.require(p) if check else np.asarray(p, dtype=float)
        if self._d2metric is not None:
            return np.asarray(self._d2metric(p), dtype=float)
        if self._dmetric is not None:
            return self._central(self._dmetric, p, self.fd_step)
        return self._central(lambda q: self._central(self._metric, q, self.fd2_step),
                             p, self.fd2_step)

    def _central(self, fn, p, step):
        h = _fd_steps(p, step)
        eye = np.eye(self.dim)
        shift = h[..., :, None] * eye  # (..., k, dim)
        plus = np.asarray(fn(p[..., None, :] + shift), dtype=float)
        minus = np.asarray(fn(p[..., None, :] - shift), dtype=float)
        extra = plus.ndim - p.ndim
        return (plus - minus) / (2.0 * h).reshape(h.shape + (1,) * extra)


@dataclass(frozen=True)
class TangentVector:
    point: np.ndarray
    components: np.ndarray

    def norm(self, chart):
        return norm(chart, self.point, self.components)


class VectorField:
    """A vector field given in chart components, with optional analytic Jacobian.

    ``jacobian(p)[..., k, i]`` is ``d_i X^k``.
    """

    def __init__(self, fn, jacobian=None, fd_step=DEFAULT_FD_STEP, name="field"):
        self._fn = fn
        self._jacobian = jacobian
        self.fd_step = fd_step
        self.name = name

    def __call__(self, p):
        return np.asarray(self._fn(np.asarray(p, dtype=float)), dtype=float)

    def jacobian(self, p):
        p = np.asarray(p, dtype=float)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(p), dtype=float)
        h = _fd_steps(p, self.fd_step)
        shift = h[..., :, None] * np.eye(p.shape[-1])
        d = (self(p[..., None, :] + shift) - self(p[..., None, :] - shift)) / (2.0 * h[..., None])
        return np.swapaxes(d, -1, -2)


def constant_field(components, name="constant"):
    c = np.asarray(components, dtype=float)

    def fn(p):
        return np.broadcast_to(c, np.shape(p)).copy()

    def jac(p):
        return np.zeros(np.shape(p)[:-1] + (c.size, c.size))

    return VectorField(fn, jac, name=name)


# -- algebra -----------------------------------------------------------------

def inner(chart, p, X, Y):
    g = chart.metric(p)
    return np.einsum("...ij,...i,...j->...", g, X, Y)


def norm(chart, p, X):
    return np.sqrt(np.maximum(inner(chart, p, X, X), 0.0))


def lower(chart, p, X):
    return np.einsum("...ij,...j->...i", chart.metric(p), X)


def orthonormal_frame(chart, p, first=None):
    """Gram-Schmidt frame at ``p``; columns of the last axis are frame vectors.

    Returned shape is ``(..., dim, dim)`` with frame vector ``a`` at ``[..., :, a]``.
    """
    p = np.asarray(p, dtype=float)
    g = chart.metric(p)
    n = chart.dim
    basis = np.broadcast_to(np.eye(n), g.shape).copy()
    if first is not None:
        # complete `first` with the coordinate vectors except its dominant axis
        f = np.broadcast_to(np.asarray(first, float), p.shape)
        others = np.array([[j for j in range(n) if j != d] for d in range(n)])
        idx = others[np.argmax(np.abs(f), axis=-1)]
        basis[..., :, 0] = f
        basis[..., :, 1:] = np.swapaxes(np.eye(n)[idx], -1, -2)
    frame = np.empty_like(basis)
    for a in range(n):
        v = basis[..., :, a].copy()
        for b in range(a):
            e = frame[..., :, b]
            v -= np.einsum("...ij,...i,...j->...", g, v, e)[..., None] * e
        frame[..., :, a] = v / np.sqrt(np.einsum("...ij,...i,...j->...", g, v, v))[..., None]
    return frame


def volume_form(chart, p, X, Y, Z):
    """Riemannian volume form, ``orientation * sqrt(det g) * det[X, Y, Z]``."""
    g = chart.metric(p)
    mat = np.stack(np.broadcast_arrays(X, Y, Z), axis=-1)
    return chart.orientation * np.sqrt(np.linalg.det(g)) * np.linalg.det(mat)


def _cross(X, Y):
    X, Y = np.broadcast_arrays(X, Y)
    out = np.empty(X.shape)
    out[..., 0] = X[..., 1] * Y[..., 2] - X[..., 2] * Y[..., 1]
    out[..., 1] = X[..., 2] * Y[..., 0] - X[..., 0] * Y[..., 2]
    out[..., 2] = X[..., 0] * Y[..., 1] - X[..., 1] * Y[..., 0]
    return out


_SMALL_BATCH = 16


def _det_inv3(g):
    """Determinant and inverse of symmetric 3x3 matrices.

    Cofactors for large batches; LAPACK is cheaper for a handful of matrices.
    """
    if g.size <= 9 * _SMALL_BATCH:
        return np.linalg.det(g), np.linalg.inv(g)
    a, b, c = g[..., 0, 0], g[..., 0, 1], g[..., 0, 2]
    d, e, f = g[..., 1, 1], g[..., 1, 2], g[..., 2, 2]
    A = d * f - e * e
    B = c * e - b * f
    C = b * e - c * d
    det = a * A + b * B + c * C
    inv = np.empty(g.shape)
    inv[..., 0, 0] = A
    inv[..., 0, 1] = inv[..., 1, 0] = B
    inv[..., 0, 2] = inv[..., 2, 0] = C
    inv[..., 1, 1] = a * f - c * c
    inv[..., 1, 2] = inv[..., 2, 1] = b * c - a * e
    inv[..., 2, 2] = a * d - b * b
    return det, inv / det[..., None, None]


def _vector_product(g, orientation, X, Y, det_inv=None):
    det, ginv = det_inv if det_inv is not None else _det_inv3(g)
    low = (orientation * np.sqrt(det))[..., None] * _cross(X, Y)
    return np.einsum("...kl,...l->...k", ginv, low)


def vector_product(chart, p, X, Y):
    """The vector X ^ Y defined by ``g(X ^ Y, Z) = Omega(X, Y, Z)`` for every Z."""
    if chart.dim != 3:
        raise ValueError("vector product needs a 3-dimensional chart")
    return _vector_product(chart.metric(p), chart.orientation, X, Y)


# -- connection --------------------------------------------------------------

def _first_kind(dg):
    # S[l, i, j] = d_i g_lj + d_j g_li - d_l g_ij
    return (np.einsum("...ilj->...lij", dg) + np.einsum("...jli->...lij", dg) - dg)


def _christoffel(ginv, dg):
    return 0.5 * np.einsum("...kl,...lij->...kij", ginv, _first_kind(dg))


def christoffel(chart, p):
    """Christoffel symbols ``Gamma^k_ij`` at ``p``."""
    ginv = np.linalg.inv(chart.metric(p))
    return _christoffel(ginv, chart.dmetric(p))


def christoffel_derivative(chart, p):
    """``d_m Gamma^k_ij`` at ``p`` as an array indexed ``[..., m, k, i, j]``."""
    g = chart.metric(p)
    dg = chart.dmetric(p)
    d2g = chart.d2metric(p)
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    S = _first_kind(dg)
    dS = (np.einsum("...milj->...mlij", d2g) + np.einsum("...mjli->...mlij", d2g) - d2g)
    return 0.5 * (np.einsum("...mkl,...lij->...mkij", dginv, S)
                  + np.einsum("...kl,...mlij->...mkij", ginv, dS))


def metric_compatibility_residual(chart, p):
    """Max-abs entry of ``nabla_k g_ij`` reconstructed from the Christoffel symbols."""
    g = chart.metric(p)
    dg = chart.dmetric(p)
    gamma = _christoffel(np.linalg.inv(g), dg)
    nabla_g = (dg - np.einsum("...lki,...lj->...kij", gamma, g)
               - np.einsum("...lkj,...il->...kij", gamma, g))
    return np.max(np.abs(nabla_g), axis=(-3, -2, -1))


def covariant_derivative(chart, field, p, v):
    """``nabla_v X`` at ``p`` for a vector field ``X`` (``VectorField`` or callable)."""
    if not isinstance(field, VectorField):
        field = VectorField(field)
    p = chart.require(p)
    X = field(p)
    J = field.jacobian(p)
    gamma = christoffel(chart, p)
    return np.einsum("...ki,...i->...k", J, v) + np.einsum("...kij,...i,...j->...k", gamma, v, X)


def covariant_derivative_along(chart, t, points, vectors):
    """``D X / dt`` along a sampled curve, second-order differencing in ``t``."""
    t = np.asarray(t, dtype=float)
    dx = np.gradient(points, t, axis=0, edge_order=2)
    dX = np.gradient(vectors, t, axis=0, edge_order=2)
    gamma = christoffel(chart, points)
    return dX + np.einsum("nkij,ni,nj->nk", gamma, dx, vectors)


# -- curvature ---------------------------------------------------------------

def _riemann_from(gamma, dgamma):
    return (np.einsum("...cadb->...abcd", dgamma) - np.einsum("...dacb->...abcd", dgamma)
            + np.einsum("...ace,...edb->...abcd", gamma, gamma)
            - np.einsum("...ade,...ecb->...abcd", gamma, gamma))


def riemann_tensor(chart, p):
    """Components ``R^a_bcd`` with ``R(e_c, e_d) e_b = R^a_bcd e_a``."""
    return _riemann_from(christoffel(chart, p), christoffel_derivative(chart, p))


def riemann(chart, p, X, Y, Z):
    """``R(X, Y) Z`` at ``p``."""
    return np.einsum("...abcd,...b,...c,...d->...a", riemann_tensor(chart, p), Z, X, Y)


def sectional_curvature(chart, p, X, Y):
    """Sectional curvature of the plane spanned by ``X`` and ``Y``.

    Raises ``DegeneratePlaneError`` when ``|X ^ Y|^2 < 1e-12 |X|^2 |Y|^2``.
    """
    g = chart.metric(p)
    xx = np.einsum("...ij,...i,...j->...", g, X, X)
    yy = np.einsum("...ij,...i,...j->...", g, Y, Y)
    xy = np.einsum("...ij,...i,...j->...", g, X, Y)
    area = xx * yy - xy ** 2
    if np.any(area < DEGENERATE_PLANE_RATIO * xx * yy) or np.any(xx * yy == 0):
        raise DegeneratePlaneError("vectors do not span a plane")
    RYY = riemann(chart, p, X, Y, Y)
    return np.einsum("...ij,...i,...j->...", g, RYY, X) / area


@dataclass(frozen=True)
class KillingResidual:
    lie_derivative: np.ndarray
    deficit: np.ndarray
    unit_deficit: np.ndarray


def killing_residual(chart, xi, p):
    """Lie derivative ``(L_xi g)_ij`` plus Killing and unit deficits."""
    p = chart.require(p)
    g = chart.metric(p)
    dg = chart.dmetric(p)
    X = xi(p)
    J = xi.jacobian(p)
    lie = (np.einsum("...k,...kij->...ij", X, dg)
           + np.einsum("...kj,...ki->...ij", g, J)
           + np.einsum("...ik,...kj->...ij", g, J))
    unit = np.abs(np.sqrt(np.einsum("...ij,...i,...j->...", g, X, X)) - 1.0)
    return KillingResidual(lie, np.max(np.abs(lie), axis=(-2, -1)), unit)
