"""
Horizontal/vertical calculus for a unit Killing field ``xi``.

The bundle curvature is the scalar ``tau`` with ``nabla_X xi = tau X ^ xi``;
O'Neill's integrability tensor on a horizontal ``X`` reduces to
``A_X xi = h(nabla_X xi)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePlaneError, InvariantError
from .geometry import MetricChart, _vector_product, christoffel, sectional_curvature

UNIT_TOL = 1e-8


@dataclass(frozen=True)
class HorizontalDecomposition:
    E: np.ndarray
    V: np.ndarray
    cos_theta: np.ndarray


@dataclass(frozen=True)
class BundleCurvatureSample:
    point: np.ndarray
    tau: np.ndarray
    residual: np.ndarray
    spread: np.ndarray


@dataclass(frozen=True)
class OneillCheck:
    K: np.ndarray
    A_norm_sq: np.ndarray
    tau_sq: np.ndarray


@dataclass(frozen=True)
class HorizontalAcceleration:
    """``h nabla_E E`` along a magnetic curve, computed two ways."""

    direct: np.ndarray
    oneill: np.ndarray
    extension_gap: float
    norm: float
    predicted_norm: float
    a_ev_normal: float
    tau: float
    theta0: float


def _dot(g, X, Y):
    return np.einsum("...ij,...i,...j->...", g, X, Y)


def nabla_xi(chart, xi, p):
    """The (1,1) tensor ``D[..., k, j]`` with ``(nabla_X xi)^k = D^k_j X^j``."""
    p = chart.require(p)
    return xi.jacobian(p) + np.einsum("...kjl,...l->...kj", christoffel(chart, p), xi(p))


def _require_unit(chart, xi, p, tol=UNIT_TOL):
    g = chart.metric(p)
    v = xi(p)
    deficit = np.abs(np.sqrt(_dot(g, v, v)) - 1.0)
    if np.any(deficit > tol):
        raise InvariantError(f"xi is not unit (deficit {np.max(deficit):.3g})")
    return g, v


def decompose(chart, xi, p, X, tol=UNIT_TOL):
    """Split ``X`` into horizontal ``E`` and vertical ``V = g(X, xi) xi``."""
    g, v = _require_unit(chart, xi, p, tol)
    c = _dot(g, X, v)
    V = c[..., None] * v
    return HorizontalDecomposition(X - V, V, c)


def horizontal_projection(chart, xi, p, X):
    g = chart.metric(p)
    v = xi(p)
    return X - _dot(g, X, v)[..., None] * v


def horizontal_frame(chart, xi, p):
    """Oriented orthonormal horizontal pair ``(e1, e2)`` with ``e2 = xi ^ e1``."""
    p = chart.require(p)
    g = chart.metric(p)
    v = xi(p)
    # start from the coordinate axis least aligned with xi
    cosines = np.abs(np.einsum("...ij,...j->...i", g, v)) / np.sqrt(np.diagonal(g, axis1=-2, axis2=-1))
    seed = np.eye(3)[np.argmin(cosines, axis=-1)]
    e1 = seed - _dot(g, seed, v)[..., None] * v
    e1 = e1 / np.sqrt(_dot(g, e1, e1))[..., None]
    e2 = _vector_product(g, chart.orientation, v, e1)
    return e1, e2


def bundle_curvature(chart, xi, p):
    """Least-squares ``tau`` from ``nabla_X xi = tau X ^ xi`` over a horizontal frame.

    ``spread`` is the gap between the two single-direction estimates; for a
    Killing field it vanishes identically, whether or not ``tau`` is constant.
    """
    p = chart.require(p)
    g = chart.metric(p)
    v = xi(p)
    D = nabla_xi(chart, xi, p)
    num = den = 0.0
    taus = []
    pairs = []
    for e in horizontal_frame(chart, xi, p):
        w = _vector_product(g, chart.orientation, e, v)
        n = np.einsum("...kj,...j->...k", D, e)
        a, b = _dot(g, n, w), _dot(g, w, w)
        num, den = num + a, den + b
        taus.append(a / b)
        pairs.append((n, w))
    tau = num / den
    resid = sum(_dot(g, n - tau[..., None] * w, n - tau[..., None] * w) for n, w in pairs)
    return BundleCurvatureSample(p, tau, np.sqrt(resid), np.abs(taus[0] - taus[1]))


def tau_along(chart, xi, p, X):
    """Single-direction estimate ``tau_X``; rejects ``X`` parallel to ``xi``."""
    g = chart.metric(p)
    w = _vector_product(g, chart.orientation, X, xi(p))
    ww = _dot(g, w, w)
    if np.any(ww < 1e-12 * _dot(g, X, X)):
        raise DegeneratePlaneError("X is parallel to xi")
    n = np.einsum("...kj,...j->...k", nabla_xi(chart, xi, p), X)
    return _dot(g, n, w) / ww


def fiber_geodesic_residual(chart, xi, p):
    """Norms ``(|v nabla_xi xi|, |h nabla_xi xi|)``; both vanish when fibers are geodesics."""
    g = chart.metric(p)
    v = xi(p)
    acc = np.einsum("...kj,...j->...k", nabla_xi(chart, xi, p), v)
    vert = _dot(g, acc, v)
    hor = acc - vert[..., None] * v
    return np.abs(vert), np.sqrt(np.maximum(_dot(g, hor, hor), 0.0))


def oneill_sectional_check(chart, xi, p, X, tol=1e-6):
    """``K(X, xi)``, ``|A_X xi|^2`` and ``tau^2`` for a horizontal unit ``X``."""
    g, v = _require_unit(chart, xi, p)
    if np.any(np.abs(_dot(g, X, X) - 1.0) > tol) or np.any(np.abs(_dot(g, X, v)) > tol):
        raise DegeneratePlaneError("X must be a horizontal unit vector")
    K = sectional_curvature(chart, p, X, v)
    A = np.einsum("...kj,...j->...k", nabla_xi(chart, xi, p), X)
    A = A - _dot(g, A, v)[..., None] * v
    tau = bundle_curvature(chart, xi, p).tau
    return OneillCheck(K, _dot(g, A, A), tau ** 2)


# -- adapted charts (xi = d/dz) ----------------------------------------------

def is_adapted(chart, xi, p, tol=1e-12):
    return bool(np.all(np.abs(xi(p) - np.array([0.0, 0.0, 1.0])) < tol))


def base_chart(chart):
    """Quotient metric on the ``(x, y)`` plane of a chart adapted to ``xi = d/dz``.

    ``h_ab = g_ab - g_a3 g_b3``; evaluated at ``z = 0`` since the metric is
    ``z``-independent for a Killing ``d/dz``.
    """

    def lift(q):
        q = np.asarray(q, dtype=float)
        return np.concatenate([q, np.zeros(q.shape[:-1] + (1,))], axis=-1)

    def metric(q):
        g = chart.metric(lift(q), check=False)
        eta = g[..., :2, 2]
        return g[..., :2, :2] - eta[..., :, None] * eta[..., None, :]

    def dmetric(q):
        p = lift(q)
        g = chart.metric(p, check=False)
        dg = chart.dmetric(p, check=False)[..., :2, :, :]
        eta = g[..., :2, 2]
        deta = dg[..., :2, 2]
        return (dg[..., :2, :2] - deta[..., :, None] * eta[..., None, None, :]
                - eta[..., None, :, None] * deta[..., None, :])

    bounds = None if chart.bounds is None else chart.bounds[:2]
    contains = None if chart.contains is None else (lambda q: chart.contains(lift(q)))
    return MetricChart(metric, dmetric, bounds=bounds, contains=contains,
                       orientation=chart.orientation, dim=2, name=f"{chart.name}/base")


def horizontal_acceleration(chart, xi, p, v, q=1.0, shear=1.0, step=1e-5):
    """``h nabla_E E`` at a magnetic-curve state ``(p, v)``, adapted charts only.

    ``predicted_norm`` is ``|sin(theta0) (1 - 2 tau cos(theta0))|``, valid for
    unit speed and unit charge.

    ``direct`` differentiates a basic extension of ``E`` (the horizontal lift of
    a linear extension of the projected velocity); ``oneill`` is
    ``h(nabla_X X) - 2 A_E V`` with ``nabla_X X = q X ^ xi``.  A second basic
    extension, sheared transversally by ``shear``, gives ``extension_gap``.
    """
    p = chart.require(np.asarray(p, dtype=float))
    v = np.asarray(v, dtype=float)
    if not is_adapted(chart, xi, p):
        raise ValueError("horizontal_acceleration needs a chart adapted to xi = d/dz")
    g = chart.metric(p)
    xv = xi(p)
    gamma = christoffel(chart, p)
    speed = np.sqrt(_dot(g, v, v))
    cos = _dot(g, v, xv) / speed
    sin = np.sqrt(max(1.0 - cos ** 2, 0.0))
    if sin < 1e-6:
        raise ValueError("velocity is parallel to xi; no horizontal part")

    cross = _vector_product(g, chart.orientation, v, xv)
    force = q * cross
    accel = force - np.einsum("kij,i,j->k", gamma, v, v)
    E = v - _dot(g, v, xv) * xv
    D = nabla_xi(chart, xi, p)

    def hproj(W):
        return W - _dot(g, W, xv) * xv

    A_EV = _dot(g, v, xv) * hproj(D @ E)
    oneill = hproj(force) - 2.0 * A_EV

    T = v[:2]
    T_perp = np.array([-T[1], T[0]])
    M1 = np.outer(accel[:2], T) / (T @ T)

    def direct_with(M):
        def E_field(x):
            w = T + (x[..., :2] - p[:2]) @ M.T
            gx = chart.metric(x, check=False)
            return np.concatenate([w, -(gx[..., 0, 2] * w[..., 0] + gx[..., 1, 2] * w[..., 1])[..., None]],
                                  axis=-1)

        E0 = E_field(p)
        h = step * (1.0 + np.max(np.abs(p)))
        dE = (E_field(p + h * E0) - E_field(p - h * E0)) / (2.0 * h)
        return hproj(dE + np.einsum("kij,i,j->k", gamma, E0, E0)), E0

    direct, E0 = direct_with(M1)
    other, _ = direct_with(M1 + shear * np.outer([0.7, -0.3], T_perp))
    gap = np.sqrt(_dot(g, direct - other, direct - other))

    tau = float(bundle_curvature(chart, xi, p).tau)
    N = cross / np.sqrt(_dot(g, cross, cross))
    return HorizontalAcceleration(
        direct=direct, oneill=oneill, extension_gap=float(gap),
        norm=float(np.sqrt(_dot(g, direct, direct))),
        predicted_norm=float(abs(sin * (1.0 - 2.0 * tau * cos))),
        a_ev_normal=float(_dot(g, A_EV, N)),
        tau=tau, theta0=float(np.arccos(np.clip(cos, -1.0, 1.0))))
