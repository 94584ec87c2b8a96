"""
Magnetic curves of the Killing magnetic field: ``nabla_c' c' = q c' ^ xi``.

Integration is classical fixed-step RK4 on the first-order system
``x' = v, v'^k = -Gamma^k_ij v^i v^j + q (v ^ xi)^k``, vectorised over a batch
of curves.  Conservation of speed and of ``g(c', xi)`` is audited after the
fact rather than enforced.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigError, DomainError, DriftError
from .geometry import _christoffel, _cross, _det_inv3, vector_product


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    step: float = 1e-3
    max_steps: int = 1_000_000
    drift_tolerance: float = 1e-6

    def __post_init__(self):
        if self.method != "rk4":
            raise ConfigError(f"integrator.method: only 'rk4' is supported, got {self.method!r}")
        if not self.step > 0:
            raise ConfigError("integrator.step must be > 0")
        if not self.drift_tolerance > 0:
            raise ConfigError("integrator.drift_tolerance must be > 0")
        if self.max_steps < 1:
            raise ConfigError("integrator.max_steps must be >= 1")


@dataclass
class MagneticCurve:
    """A sampled magnetic curve with its conserved-quantity log.

    ``xi_component`` is ``g(c', xi)``; ``exited`` marks a trajectory truncated
    at the chart boundary.
    """

    charge: float
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    speed: np.ndarray
    xi_component: np.ndarray
    theta0: float
    exited: bool = False
    _spline: Optional[CubicHermiteSpline] = field(default=None, repr=False, compare=False)

    @property
    def conserved_log(self):
        return np.column_stack([self.t, self.speed, self.xi_component])

    @property
    def cos_angle(self):
        return self.xi_component / self.speed

    @property
    def speed_drift(self):
        return float(np.max(np.abs(self.speed - self.speed[0])) / self.speed[0])

    @property
    def angle_drift(self):
        return float(np.max(np.abs(self.xi_component - self.xi_component[0])) / self.speed[0])

    def at(self, t):
        """Position at arbitrary times by cubic Hermite interpolation of the samples."""
        if self._spline is None:
            order = np.argsort(self.t)
            self._spline = CubicHermiteSpline(self.t[order], self.points[order],
                                              self.velocities[order], axis=0)
        return self._spline(t)


def lorentz_force(chart, xi, p, v):
    """``phi(v) = v ^ xi``, the force of the Killing magnetic field on unit charge."""
    return vector_product(chart, p, v, xi(p))


def _magnetic_acceleration(chart, xi, q):
    q = np.asarray(q, dtype=float)
    per_curve = q.ndim > 0

    def accel(x, v, idx=None):
        g = chart.metric(x, check=False)
        det, ginv = _det_inv3(g)
        # lowered Gamma_l(v, v) = d_i g_lj v^i v^j - d_l g_ij v^i v^j / 2
        M = np.einsum("...kij,...j->...ki", chart.dmetric(x, check=False), v)
        low = 0.5 * np.einsum("...li,...i->...l", M, v) - np.einsum("...il,...i->...l", M, v)
        qq = q[idx][..., None] if per_curve else q
        if np.any(qq != 0):
            # lowered v ^ xi is orientation * sqrt(det g) * (v x xi)
            low = low + (qq * chart.orientation) * np.sqrt(det)[..., None] * _cross(v, xi(x))
        return np.einsum("...kl,...l->...k", ginv, low)
    return accel


def _rk4(accel, in_domain, x0, v0, h, n_steps):
    """Fixed-step RK4 for ``x'' = accel(x, x', idx)`` on a batch.

    ``idx`` holds the batch indices of the curves still inside the domain.
    Returns sample arrays ``(n_steps + 1, N, d)`` and, per curve, the index of
    the last sample inside the domain.
    """
    N = x0.shape[0]
    xs = np.full((n_steps + 1,) + x0.shape, np.nan)
    vs = np.full_like(xs, np.nan)
    xs[0], vs[0] = x0, v0
    last = np.full(N, n_steps)
    idx = np.arange(N)
    x, v = x0.copy(), v0.copy()
    half, sixth = 0.5 * h, h / 6.0
    for n in range(n_steps):
        k1v = accel(x, v, idx)
        k2x = v + half * k1v
        k2v = accel(x + half * v, k2x, idx)
        k3x = v + half * k2v
        k3v = accel(x + half * k2x, k3x, idx)
        k4x = v + h * k3v
        k4v = accel(x + h * k3x, k4x, idx)
        xn = x + sixth * (v + 2 * k2x + 2 * k3x + k4x)
        vn = v + sixth * (k1v + 2 * k2v + 2 * k3v + k4v)
        ok = in_domain(xn) & np.all(np.isfinite(vn), axis=-1)
        if not ok.all():
            last[idx[~ok]] = n
            idx, xn, vn = idx[ok], xn[ok], vn[ok]
            if idx.size == 0:
                break
        xs[n + 1, idx], vs[n + 1, idx] = xn, vn
        x, v = xn, vn
    return xs, vs, last


def _step_count(t_end, cfg):
    n = max(1, int(np.ceil(abs(t_end) / cfg.step - 1e-9)))
    if n > cfg.max_steps:
        raise ConfigError(f"integration needs {n} steps, above integrator.max_steps={cfg.max_steps}")
    return n, t_end / n


def integrate_magnetic_curves(chart, xi, p0, v0, q=1.0, t_end=1.0, cfg=None, check_drift=True):
    """Integrate a batch of magnetic curves sharing a duration.

    ``p0`` and ``v0`` have shape ``(N, 3)``; ``q`` is a scalar or one charge
    per curve.  A negative ``t_end`` integrates
    backwards.  Curves leaving the domain are truncated with ``exited=True``.
    """
    cfg = cfg or IntegratorConfig()
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    p0, v0 = np.broadcast_arrays(p0, v0)
    chart.require(p0)
    if np.any(np.all(v0 == 0, axis=-1)):
        raise ValueError("initial velocity must be non-zero")
    q = np.asarray(q, dtype=float)
    charges = np.broadcast_to(q, (p0.shape[0],))
    n, h = _step_count(t_end, cfg)
    xs, vs, last = _rk4(_magnetic_acceleration(chart, xi, charges if q.ndim else q), chart.in_domain, p0.copy(), v0.copy(), h, n)
    t_all = h * np.arange(n + 1)

    curves = []
    for i in range(p0.shape[0]):
        m = last[i] + 1
        pts, vel = xs[:m, i], vs[:m, i]
        g = chart.metric(pts)
        speed = np.sqrt(np.einsum("nij,ni,nj->n", g, vel, vel))
        xc = np.einsum("nij,ni,nj->n", g, vel, xi(pts))
        theta0 = float(np.arccos(np.clip(xc[0] / speed[0], -1.0, 1.0)))
        curve = MagneticCurve(float(charges[i]), t_all[:m].copy(), pts.copy(), vel.copy(), speed, xc, theta0,
                              exited=bool(last[i] < n))
        if check_drift and max(curve.speed_drift, curve.angle_drift) > cfg.drift_tolerance:
            raise DriftError(f"conserved-quantity drift {max(curve.speed_drift, curve.angle_drift):.3g} "
                             f"exceeds {cfg.drift_tolerance:.3g}; reduce integrator.step", curve)
        curves.append(curve)
    return curves


def integrate_magnetic_curve(chart, xi, p0, v0, q=1.0, t_end=1.0, cfg=None, check_drift=True):
    """Integrate ``nabla_c' c' = q c' ^ xi`` from ``(p0, v0)``; ``q = 0`` gives a geodesic."""
    return integrate_magnetic_curves(chart, xi, np.asarray(p0)[None], np.asarray(v0)[None],
                                     q, t_end, cfg, check_drift)[0]


DRIFT_FLOOR = 1e-13
# finite-difference metric derivatives carry O(eps / h) noise that RK4 cannot remove
FD_DRIFT_FLOOR = 1e-9


@dataclass(frozen=True)
class ConservationOrder:
    """Worst speed and ``g(c', xi)`` drifts of a batch at ``step`` and ``step / 2``.

    A drift below ``floor`` at the coarse step is indistinguishable from
    rounding; its ratio is reported but not required to reach ``min_ratio``.
    """

    step: float
    coarse: tuple
    fine: tuple
    ratios: tuple
    resolved: tuple

    def passed(self, tolerance=1e-6, min_ratio=8.0):
        small = max(self.coarse) < tolerance and max(self.fine) < tolerance
        ordered = all(r >= min_ratio for r, ok in zip(self.ratios, self.resolved) if ok)
        return bool(small and ordered)


def conservation_order(chart, xi, p0, v0, q, t_end=1.0, step=1e-3, floor=None):
    """Drift of a batch of curves at two step sizes; ``q`` may differ per curve.

    ``floor`` defaults to ``DRIFT_FLOOR``, or ``FD_DRIFT_FLOOR`` for charts
    with finite-difference derivatives.
    """
    if floor is None:
        floor = DRIFT_FLOOR if chart.derivative_mode == "analytic" else FD_DRIFT_FLOOR
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    drifts = []
    for h in (step, step / 2):
        curves = integrate_magnetic_curves(chart, xi, p0, v0, q, t_end, IntegratorConfig(step=h),
                                           check_drift=False)
        drifts.append((max(c.speed_drift for c in curves), max(c.angle_drift for c in curves)))
    coarse, fine = drifts
    ratios = tuple(c / f if f > 0 else float("inf") for c, f in zip(coarse, fine))
    return ConservationOrder(step, coarse, fine, ratios, tuple(c > floor for c in coarse))


def initial_velocity(chart, xi, p, theta0, direction=None):
    """Unit velocity at angle ``theta0`` from ``xi``, horizontal part along ``direction``.

    ``direction`` defaults to the first vector of the oriented horizontal frame.
    """
    from .submersion import horizontal_frame, horizontal_projection
    p = np.asarray(p, dtype=float)
    g = chart.metric(p)
    if direction is None:
        e = horizontal_frame(chart, xi, p)[0]
    else:
        e = horizontal_projection(chart, xi, p, np.broadcast_to(direction, p.shape))
        e = e / np.sqrt(np.einsum("...ij,...i,...j->...", g, e, e))[..., None]
    th = np.asarray(theta0, dtype=float)[..., None]
    return np.cos(th) * xi(p) + np.sin(th) * e


@dataclass(frozen=True)
class ChargeScaling:
    """Deviations from ``c(a t)`` where ``c`` is the unit-charge curve of ``v0``.

    ``deviation``: curve of velocity ``a v0`` and charge ``a`` (field ``a F``).
    ``naive_deviation``: velocity ``a v0`` with unit charge.
    ``inverse_charge_deviation``: velocity ``a v0`` with charge ``1/a``.
    """

    a: float
    deviation: float
    naive_deviation: float
    inverse_charge_deviation: float


def charge_scaling_check(chart, xi, p0, v0, a, t_end=1.0, cfg=None):
    if a == 0:
        raise ValueError("scale factor a must be non-zero")
    cfg = cfg or IntegratorConfig()
    ref = integrate_magnetic_curve(chart, xi, p0, v0, 1.0, t_end, cfg, check_drift=False)
    n, h = _step_count(t_end, cfg)
    scaled_cfg = IntegratorConfig(step=abs(h / a), max_steps=cfg.max_steps,
                                  drift_tolerance=cfg.drift_tolerance)
    av0 = a * np.asarray(v0, dtype=float)

    def deviation(q):
        c = integrate_magnetic_curve(chart, xi, p0, av0, q, t_end / a, scaled_cfg, check_drift=False)
        if c.exited or ref.exited:
            raise DomainError("charge-scaling curves left the chart domain")
        m = min(len(c.t), len(ref.t))
        return float(np.max(np.linalg.norm(c.points[:m] - ref.points[:m], axis=-1)))

    return ChargeScaling(a, deviation(a), deviation(1.0), deviation(1.0 / a))


def magnetic_exponential(chart, xi, p, v, n_steps=64):
    """``Fexp_p(v) = gamma_{v/|v|}(|v|)`` for unit charge; ``p`` when ``v = 0``."""
    return _fexp_batch(chart, xi, p, np.atleast_2d(np.asarray(v, dtype=float)), n_steps)[0]


def _fexp_batch(chart, xi, p, V, n_steps=64):
    p = chart.require(np.asarray(p, dtype=float))
    g = chart.metric(p)
    s = np.sqrt(np.einsum("ij,ni,nj->n", g, V, V))
    out = np.broadcast_to(p, V.shape).copy()
    moving = s > 0
    if not moving.any():
        return out
    # one batch per distinct length keeps a shared step
    for length in np.unique(s[moving]):
        sel = np.flatnonzero(s == length)
        cfg = IntegratorConfig(step=length / n_steps)
        curves = integrate_magnetic_curves(chart, xi, np.broadcast_to(p, (sel.size, 3)),
                                           V[sel] / length, 1.0, length, cfg, check_drift=False)
        for i, c in zip(sel, curves):
            if c.exited:
                raise DomainError("magnetic exponential left the chart domain")
            out[i] = c.points[-1]
    return out


@dataclass(frozen=True)
class DfexpCheck:
    jacobian: np.ndarray
    deviation: float
    probe_scale: float


def dfexp_identity_check(chart, xi, p, probe_scale=1e-4):
    """One-sided finite-difference Jacobian of ``v -> Fexp_p(v)`` at ``v = 0``.

    ``deviation`` is the Frobenius norm of ``J - I``; it is first order in the
    probe scale.
    """
    p = np.asarray(p, dtype=float)
    probes = probe_scale * np.eye(3)
    J = ((_fexp_batch(chart, xi, p, probes) - p) / probe_scale).T
    return DfexpCheck(J, float(np.linalg.norm(J - np.eye(3))), probe_scale)


# -- two-dimensional circles ---------------------------------------------------

@dataclass
class BaseCurve:
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    exited: bool = False


def complex_structure(base, q):
    """``J`` with ``g(J X, Y) = Omega(X, Y)`` on a 2D chart, as matrices ``[..., k, j]``."""
    h = base.metric(q, check=False)
    eps = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return -base.orientation * np.sqrt(np.linalg.det(h))[..., None, None] * np.linalg.inv(h) @ eps


def _integrate_2d(base, p0, v0, accel, t_end, cfg):
    cfg = cfg or IntegratorConfig()
    p0 = base.require(np.atleast_2d(np.asarray(p0, dtype=float)))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    n, h = _step_count(t_end, cfg)
    xs, vs, last = _rk4(accel, base.in_domain, p0.copy(), v0.copy(), h, n)
    m = last[0] + 1
    return BaseCurve(h * np.arange(m), xs[:m, 0].copy(), vs[:m, 0].copy(), bool(last[0] < n))


def _base_gamma(base, x):
    return _christoffel(np.linalg.inv(base.metric(x, check=False)), base.dmetric(x, check=False))


def integrate_base_circle(base, p0, v0, kappa_g, t_end=1.0, cfg=None):
    """Integrate ``nabla_a' a' = kappa_g n`` with ``n`` the unit left normal.

    ``n`` satisfies ``g(a', n) = 0`` and ``Omega(a', n) > 0`` for the area form
    of ``base``.
    """
    def accel(x, v, idx=None):
        Jv = np.einsum("...kj,...j->...k", complex_structure(base, x), v)
        h = base.metric(x, check=False)
        n = Jv / np.sqrt(np.einsum("...ij,...i,...j->...", h, Jv, Jv))[..., None]
        return -np.einsum("...kij,...i,...j->...k", _base_gamma(base, x), v, v) + kappa_g * n

    return _integrate_2d(base, p0, v0, accel, t_end, cfg)


def kahler_field_strength(kappa_g, speed):
    """Coefficient ``c`` of the Kahler magnetic field ``F = c Omega`` reproducing circles.

    With ``phi = -c J`` the magnetic equation gives ``-c |a'| n``, so circles of
    ``nabla_a' a' = kappa_g n`` traversed at ``speed`` need ``c = -kappa_g / speed``.
    """
    return -kappa_g / speed


def integrate_kahler_magnetic(base, p0, v0, kappa_g, t_end=1.0, cfg=None):
    """The same circle as a magnetic curve of the Kahler field ``F = c Omega``."""
    h0 = base.metric(np.asarray(p0, dtype=float))
    speed = float(np.sqrt(np.asarray(v0) @ h0 @ np.asarray(v0)))
    c = kahler_field_strength(kappa_g, speed)

    def accel(x, v, idx=None):
        Jv = np.einsum("...kj,...j->...k", complex_structure(base, x), v)
        return -np.einsum("...kij,...i,...j->...k", _base_gamma(base, x), v, v) - c * Jv

    return _integrate_2d(base, p0, v0, accel, t_end, cfg)
