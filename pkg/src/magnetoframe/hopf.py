"""
Magnetic Hopf surfaces: the tube swept by flowing a magnetic curve along ``xi``.

The surface is parametrized on a grid ``F(t_i, s_j) = Phi_{s_j}(c(t_i))`` with
``Phi`` the flow of ``xi``.  Its mean curvature is computed from the first and
second fundamental forms of that parametrization, with second derivatives by
central differences on the grid and the unit normal along ``F_t ^ xi``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSurfaceError, DomainError
from .geometry import _christoffel, _det_inv3, _vector_product
from .magnetic import MagneticCurve, complex_structure
from .submersion import base_chart, bundle_curvature

MIN_SIN_THETA = 1e-6
MIN_GRID = 8
FLOW_STEP = 1e-2
DEFAULT_TOL_H = 1e-3


def _dot(g, X, Y):
    return np.einsum("...ij,...i,...j->...", g, X, Y)


def flow_along_xi(chart, xi, p, s, max_step=FLOW_STEP):
    """Time-``s`` flow of ``x' = xi(x)`` by RK4.

    ``p`` has shape ``(..., 3)``; ``s`` is a scalar or broadcasts against the
    leading axes of ``p``.
    """
    x = np.array(chart.require(np.asarray(p, dtype=float)), dtype=float)
    s = np.asarray(s, dtype=float)
    x, s = np.broadcast_arrays(x, s[..., None])
    x = x.copy()
    n = max(1, int(np.ceil(np.max(np.abs(s)) / max_step)))
    h = s / n
    for _ in range(n):
        k1 = xi(x)
        k2 = xi(x + 0.5 * h * k1)
        k3 = xi(x + 0.5 * h * k2)
        k4 = xi(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(chart.in_domain(x)):
            raise DomainError("xi-flow left the chart domain")
    return x


def flow_isometry_defect(chart, xi, p, w, s_values, eps=1e-6):
    """Largest relative change of ``|d Phi_s w|`` over ``s_values``.

    The pushed-forward vector is the central difference of the flow at
    ``p +- eps w``; a Killing ``xi`` keeps its length fixed.
    """
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    n0 = np.sqrt(_dot(chart.metric(p), w, w))
    worst = 0.0
    for s in np.atleast_1d(s_values):
        ends = flow_along_xi(chart, xi, np.stack([p + eps * w, p - eps * w]), s)
        pushed = (ends[0] - ends[1]) / (2.0 * eps)
        q = flow_along_xi(chart, xi, p, s)
        worst = max(worst, float(abs(np.sqrt(_dot(chart.metric(q), pushed, pushed)) - n0) / n0))
    return worst


@dataclass
class HopfSurface:
    """Grid samples of a magnetic Hopf surface; node ``[i, j]`` is ``(t[i], s[j])``."""

    t: np.ndarray
    s: np.ndarray
    points: np.ndarray
    tangent_t: np.ndarray
    tangent_s: np.ndarray
    normal: np.ndarray
    theta0: float
    source_curve: Optional[MagneticCurve] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.points.shape[:2]


def build_hopf_surface(chart, xi, curve, s_range=(0.0, 1.0), n_t=64, n_s=16, t_range=None):
    """Flow ``curve`` along ``xi`` over ``s_range`` on an ``n_t`` by ``n_s`` grid.

    ``t_range`` defaults to the whole integrated span of the curve.
    """
    if abs(np.sin(curve.theta0)) < MIN_SIN_THETA:
        raise DegenerateSurfaceError("curve is tangent to xi (theta0 = 0); the surface collapses to a fiber")
    if n_t < MIN_GRID or n_s < MIN_GRID:
        raise DegenerateSurfaceError(f"grid {n_t}x{n_s} is below the minimum {MIN_GRID}x{MIN_GRID}")
    if t_range is None:
        t_range = (float(curve.t[0]), float(curve.t[-1]))
    if t_range[1] == t_range[0] or s_range[1] == s_range[0]:
        raise DegenerateSurfaceError("empty parameter range")
    t = np.linspace(*t_range, n_t)
    s = np.linspace(*s_range, n_s)
    base = curve.at(t)
    points = flow_along_xi(chart, xi, np.repeat(base[:, None, :], n_s, axis=1), s[None, :])

    tangent_t = np.gradient(points, t, axis=0, edge_order=2)
    tangent_s = xi(points)
    g = chart.metric(points)
    cross = _vector_product(g, chart.orientation, tangent_t, tangent_s)
    normal = cross / np.sqrt(_dot(g, cross, cross))[..., None]
    return HopfSurface(t, s, points, tangent_t, tangent_s, normal, float(curve.theta0), curve)


@dataclass
class MeanCurvatureField:
    """Mean curvature at the interior grid nodes ``values[i, j] = H(t[i], s[j])``."""

    t: np.ndarray
    s: np.ndarray
    values: np.ndarray

    @property
    def summary(self):
        v = self.values
        return {"mean": float(np.mean(v)), "min": float(np.min(v)), "max": float(np.max(v)),
                "spread": float(np.max(v) - np.min(v)), "stddev": float(np.std(v))}

    @property
    def spread(self):
        return float(np.max(self.values) - np.min(self.values))

    @property
    def fiber_variation(self):
        """Largest spread of ``H`` along a single fiber (fixed ``t``)."""
        return float(np.max(np.max(self.values, axis=1) - np.min(self.values, axis=1)))


def mean_curvature_field(chart, surface, degenerate_ratio=1e-10):
    """``H = (e G - 2 f F + g E) / (2 (E G - F^2))`` at interior nodes.

    ``II_ab = g(d_a d_b F + Gamma(F_a, F_b), N)`` with second derivatives by
    second-order central differences and ``N`` the stored unit normal.
    """
    P = surface.points
    t, s = surface.t, surface.s
    ht, hs = np.diff(t), np.diff(s)
    if not (np.allclose(ht, ht[0]) and np.allclose(hs, hs[0])):
        raise ValueError("mean_curvature_field needs a uniform grid")
    ht, hs = ht[0], hs[0]

    inner = P[1:-1, 1:-1]
    Ft = surface.tangent_t[1:-1, 1:-1]
    Fs = surface.tangent_s[1:-1, 1:-1]
    N = surface.normal[1:-1, 1:-1]
    Ftt = (P[2:, 1:-1] - 2 * inner + P[:-2, 1:-1]) / ht ** 2
    Fss = (P[1:-1, 2:] - 2 * inner + P[1:-1, :-2]) / hs ** 2
    Fts = (P[2:, 2:] - P[2:, :-2] - P[:-2, 2:] + P[:-2, :-2]) / (4 * ht * hs)

    g = chart.metric(inner)
    gamma = _christoffel(_det_inv3(g)[1], chart.dmetric(inner))

    def second(Fab, A, B):
        cov = Fab + np.einsum("...kij,...i,...j->...k", gamma, A, B)
        return _dot(g, cov, N)

    E, F, G = _dot(g, Ft, Ft), _dot(g, Ft, Fs), _dot(g, Fs, Fs)
    e, f, gg = second(Ftt, Ft, Ft), second(Fts, Ft, Fs), second(Fss, Fs, Fs)
    det = E * G - F ** 2
    bad = det < degenerate_ratio * E * G
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise DegenerateSurfaceError(
            f"first fundamental form is degenerate at node ({i + 1}, {j + 1}); refine the grid", (i + 1, j + 1))
    H = (e * G - 2 * f * F + gg * E) / (2 * det)
    return MeanCurvatureField(t[1:-1], s[1:-1], H)


@dataclass(frozen=True)
class CMCVerdict:
    is_cmc: bool
    spread: float
    tol_H: float


def constancy_report(field, tol_H=DEFAULT_TOL_H):
    spread = abs(field.spread)
    return CMCVerdict(bool(spread < tol_H), spread, tol_H)


@dataclass(frozen=True)
class PredictedMeanCurvature:
    """Candidate closed forms for ``H`` on a Hopf surface over a magnetic curve.

    ``paper_form = sin(theta0) (1 - 2 tau cos(theta0)) / 2`` is half the
    curvature of the projected curve at its own speed ``sin(theta0)``;
    ``arclength_form = (1 - 2 tau cos(theta0)) / (2 sin(theta0))`` is the same
    curvature per unit arclength.
    """

    paper_form: float
    arclength_form: float


def predicted_mean_curvature(theta0, tau):
    sin = np.sin(theta0)
    if abs(sin) < MIN_SIN_THETA:
        raise ValueError("theta0 = 0: the surface is not defined")
    k = 1.0 - 2.0 * tau * np.cos(theta0)
    return PredictedMeanCurvature(float(sin * k / 2.0), float(k / (2.0 * sin)))


@dataclass(frozen=True)
class ClosedFormMatch:
    """Which closed form the numerical ``H`` reproduces, compared in absolute value."""

    matched: Optional[str]
    H_numeric: float
    paper_error: float
    arclength_error: float


def match_closed_form(field, theta0, tau, tol=2e-3):
    """Compare ``|H|`` with both closed forms; ``matched`` is None if neither is within ``tol``.

    When the two forms coincide (``theta0 = pi/2`` or ``H = 0``) the arclength
    reading is reported.
    """
    pred = predicted_mean_curvature(theta0, tau)
    H = field.summary["mean"]
    errs = {"paper_form": abs(abs(H) - abs(pred.paper_form)),
            "arclength_form": abs(abs(H) - abs(pred.arclength_form))}
    best = min(("arclength_form", "paper_form"), key=lambda k: errs[k])
    return ClosedFormMatch(best if errs[best] < tol else None, H,
                           errs["paper_form"], errs["arclength_form"])


def base_route_mean_curvature(chart, xi, curve):
    """Half the geodesic curvature per unit arclength of the projected curve.

    Cross-check only: requires a chart adapted to ``xi = d/dz``.  Returns one
    value per curve sample.  The base left normal lifts to ``-N``, so the sign
    is flipped to agree with ``mean_curvature_field``.
    """
    base = base_chart(chart)
    a = curve.points[:, :2]
    da = curve.velocities[:, :2]
    dda = np.gradient(da, curve.t, axis=0, edge_order=2)
    h = base.metric(a)
    gamma = _christoffel(np.linalg.inv(h), base.dmetric(a))
    acc = dda + np.einsum("nkij,ni,nj->nk", gamma, da, da)
    Jv = np.einsum("nkj,nj->nk", complex_structure(base, a), da)
    speed2 = _dot(h, da, da)
    n = Jv / np.sqrt(_dot(h, Jv, Jv))[:, None]
    return -_dot(h, acc, n) / speed2 / 2.0


def tau_at_start(chart, xi, curve):
    return float(bundle_curvature(chart, xi, curve.points[0]).tau)
