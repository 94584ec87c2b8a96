"""
Almost-contact and Sasakian structure checks for a unit Killing field.

The structure tensors are ``eta = g(., xi)`` and ``phi = -nabla xi``.  For
bundle curvature ``tau`` one has ``phi^2 = tau^2 (-I + eta (x) xi)``, so the
almost-contact identities hold exactly when ``tau^2 = 1``.  The curvature
criterion classifies a space as Sasakian when ``tau`` is a non-zero constant;
the stricter K-contact normalisation ``K(., xi) = 1`` is reported separately.
"""

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSurfaceError, DomainError
from .geometry import christoffel, killing_residual, sectional_curvature, volume_form
from .hopf import (DEFAULT_TOL_H, build_hopf_surface, constancy_report, match_closed_form,
                   mean_curvature_field)
from .magnetic import IntegratorConfig, initial_velocity, integrate_magnetic_curves
from .spaces import build_space, sample_grid
from .submersion import bundle_curvature, horizontal_frame, nabla_xi

KILLING_TOL = 1e-8
DEFAULT_TOL_TAU = 1e-6
DEFAULT_TOL_K = 1e-5
DEFAULT_THETA0 = (np.pi / 6, np.pi / 4, np.pi / 3, 5 * np.pi / 12, np.pi / 2)
DEFAULT_BASE_TICKS = (-0.5, 0.0, 0.5)


def _dot(g, X, Y):
    return np.einsum("...ij,...i,...j->...", g, X, Y)


def _apply(M, X):
    return np.einsum("...kj,...j->...k", M, X)


@dataclass(frozen=True)
class AlmostContactData:
    """``eta`` as covector components, ``phi[..., k, j]`` as an operator, and ``xi``."""

    point: np.ndarray
    eta: np.ndarray
    phi: np.ndarray
    xi: np.ndarray


def almost_contact_data(chart, xi, p):
    p = chart.require(np.asarray(p, dtype=float))
    v = xi(p)
    eta = np.einsum("...ij,...j->...i", chart.metric(p), v)
    return AlmostContactData(p, eta, -nabla_xi(chart, xi, p), v)


@dataclass(frozen=True)
class AlmostContactResiduals:
    """Residual norms of the almost-contact identities on an orthonormal frame.

    ``scale`` is the factor ``c`` in ``phi^2 = c (-I + eta (x) xi)``, which
    equals ``tau^2``.
    """

    phi_squared: float
    eta_xi: float
    metric: float
    phi_xi: float
    scale: float

    @property
    def max_residual(self):
        return max(self.phi_squared, self.eta_xi, self.metric, self.phi_xi)


def almost_contact_residuals(chart, xi, p):
    d = almost_contact_data(chart, xi, p)
    if d.point.ndim != 1:
        raise ValueError("almost_contact_residuals takes a single point")
    g = chart.metric(d.point)
    e1, e2 = horizontal_frame(chart, xi, d.point)
    frame = [d.xi, e1, e2]
    target = -np.eye(3) + np.outer(d.xi, d.eta)
    phi2 = d.phi @ d.phi
    r_phi2 = max(np.sqrt(_dot(g, (phi2 - target) @ e, (phi2 - target) @ e)) for e in frame)
    r_metric = max(abs(_dot(g, d.phi @ a, d.phi @ b) - _dot(g, a, b) + (d.eta @ a) * (d.eta @ b))
                   for a in frame for b in frame)
    phi_xi = d.phi @ d.xi
    scale = -0.5 * sum(_dot(g, phi2 @ e, e) for e in (e1, e2))
    return AlmostContactResiduals(float(r_phi2), float(abs(d.eta @ d.xi - 1.0)), float(r_metric),
                                  float(np.sqrt(_dot(g, phi_xi, phi_xi))), float(scale))


def _nabla_phi(chart, xi, p, X, Y):
    """``(nabla_X phi) Y`` with ``Y`` extended by constant components."""
    phi = lambda q: -nabla_xi(chart, xi, q)  # noqa: E731
    h = chart.fd_step * (1.0 + np.abs(p))
    shift = h[:, None] * np.eye(3)
    dphi = np.stack([(phi(p + shift[m]) - phi(p - shift[m])) / (2.0 * h[m]) for m in range(3)])
    gamma = christoffel(chart, p)
    P = phi(p)
    dX_phiY = np.einsum("m,mkj,j->k", X, dphi, Y) + np.einsum("kij,i,j->k", gamma, X, P @ Y)
    return dX_phiY - P @ np.einsum("kij,i,j->k", gamma, X, Y)


def sasaki_condition_residual(chart, xi, p, X, Y):
    """``|(nabla_X phi) Y - g(X, Y) xi + eta(Y) X|``, the ``phi`` derivative by central differences."""
    p = chart.require(np.asarray(p, dtype=float))
    g = chart.metric(p)
    v = xi(p)
    r = _nabla_phi(chart, xi, p, X, Y) - (_dot(g, X, Y) * v - _dot(g, Y, v) * X)
    return float(np.sqrt(_dot(g, r, r)))


def sasaki_scale_factor(chart, xi, p, X, Y):
    """Least-squares ``c`` with ``(nabla_X phi) Y = c (g(X, Y) xi - eta(Y) X)``; NaN if the target vanishes."""
    p = chart.require(np.asarray(p, dtype=float))
    g = chart.metric(p)
    v = xi(p)
    target = _dot(g, X, Y) * v - _dot(g, Y, v) * X
    tt = _dot(g, target, target)
    if tt < 1e-20:
        return float("nan")
    return float(_dot(g, _nabla_phi(chart, xi, p, X, Y), target) / tt)


@dataclass(frozen=True)
class FundamentalFormCheck:
    """``|g(X, phi Y) - Omega(xi, X, Y)|`` and the same with ``Omega`` negated."""

    residual: float
    flipped_residual: float
    lhs: float
    rhs: float

    @property
    def sign_flipped(self):
        return self.flipped_residual < self.residual


def fundamental_form_check(chart, xi, p, X, Y):
    p = chart.require(np.asarray(p, dtype=float))
    d = almost_contact_data(chart, xi, p)
    lhs = float(_dot(chart.metric(p), X, d.phi @ Y))
    rhs = float(volume_form(chart, p, d.xi, X, Y))
    return FundamentalFormCheck(abs(lhs - rhs), abs(lhs + rhs), lhs, rhs)


def killing_from_phi_residual(chart, xi, p, X, Y):
    """``|g(phi X, Y) + g(phi Y, X)|``: the Killing equation rebuilt from ``phi``."""
    d = almost_contact_data(chart, xi, p)
    g = chart.metric(d.point)
    return float(abs(_dot(g, _apply(d.phi, X), Y) + _dot(g, _apply(d.phi, Y), X)))


# -- classification ----------------------------------------------------------

@dataclass(frozen=True)
class SampleSpec:
    """Sample points: an ``grid^3`` lattice on ``[-extent, extent]^3`` plus ``random`` seeded draws."""

    grid: int = 3
    extent: float = 1.0
    random: int = 0
    seed: int = 0

    def points(self, chart):
        pts = sample_grid(chart, self.grid, self.extent)
        if self.random:
            rng = np.random.default_rng(self.seed)
            extra = rng.uniform(-self.extent, self.extent, size=(self.random, 3))
            pts = np.concatenate([pts, extra[chart.in_domain(extra)]])
        if len(pts) == 0:
            raise DomainError("no sample points inside the chart domain")
        return pts


@dataclass
class SasakiVerdict:
    unit_killing_residual: float
    tau_mean: float
    tau_spread: float
    tau_abs_mean: float
    K_xi_mean: float
    K_xi_spread: float
    sasakian_by_corollary: bool
    strict_k_contact: bool
    all_surfaces_cmc: Optional[bool] = None
    max_H_spread: Optional[float] = None
    unit_killing: bool = True
    domain: str = ""
    details: list = field(default_factory=list)


def classify_space(chart, xi, sample_spec=None, tol_tau=DEFAULT_TOL_TAU, tol_K=DEFAULT_TOL_K,
                   killing_tol=KILLING_TOL):
    """Sample ``tau`` and ``K(., xi)`` and apply the curvature criterion.

    Verdicts hold on the sampled points of the chart only.  If ``xi`` is not
    unit Killing within ``killing_tol`` both flags are false and only the
    residual is reported.
    """
    sample_spec = sample_spec or SampleSpec()
    pts = sample_spec.points(chart)
    domain = f"{len(pts)} points of chart {chart.name!r} in [-{sample_spec.extent}, {sample_spec.extent}]^3"
    res = killing_residual(chart, xi, pts)
    resid = float(max(np.max(res.deficit), np.max(res.unit_deficit)))
    if resid > killing_tol:
        nan = float("nan")
        return SasakiVerdict(resid, nan, nan, nan, nan, nan, False, False,
                             unit_killing=False, domain=domain)

    tau = bundle_curvature(chart, xi, pts).tau
    v = xi(pts)
    e1, e2 = horizontal_frame(chart, xi, pts)
    K = np.stack([sectional_curvature(chart, pts, e, v) for e in (e1, e2)], axis=-1)
    details = [{"point": p.tolist(), "tau": float(t), "K_xi": float(np.mean(k))}
               for p, t, k in zip(pts, tau, K)]
    tau_mean, tau_spread = float(np.mean(tau)), float(np.ptp(tau))
    K_mean, K_spread = float(np.mean(K)), float(np.ptp(K))
    return SasakiVerdict(
        unit_killing_residual=resid, tau_mean=tau_mean, tau_spread=tau_spread,
        tau_abs_mean=float(np.mean(np.abs(tau))), K_xi_mean=K_mean, K_xi_spread=K_spread,
        sasakian_by_corollary=bool(tau_spread < tol_tau and abs(tau_mean) > tol_tau),
        strict_k_contact=bool(abs(K_mean - 1.0) < tol_K and K_spread < tol_K),
        domain=domain, details=details)


# -- end-to-end pipeline -----------------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    t_end: float = 1.0
    n_t: int = 64
    n_s: int = 16
    s_range: tuple = (0.0, 1.0)
    tol_H: float = DEFAULT_TOL_H
    tol_tau: float = DEFAULT_TOL_TAU
    tol_K: float = DEFAULT_TOL_K
    max_refinements: int = 2
    samples: SampleSpec = field(default_factory=SampleSpec)


def default_base_points():
    """3x3 grid of base points at ``z = 0``."""
    return np.array([[x, y, 0.0] for x in DEFAULT_BASE_TICKS for y in DEFAULT_BASE_TICKS])


def implication_status(all_cmc, sasakian, tau_positive):
    """How one run bears on "all Hopf surfaces CMC implies Sasakian"."""
    if all_cmc and not sasakian:
        return "precondition_violated" if not tau_positive else "violated"
    if all_cmc and sasakian:
        return "confirmed"
    if sasakian:
        return "converse_violated"
    return "vacuous"


def _surface_record(chart, xi, curve, theta0, base_point, cfg):
    """Surface verdict, refining the ``t`` grid while the spread exceeds ``tol_H``.

    Each refinement doubles the ``t`` intervals so the old nodes are kept;
    ``discretization`` is the largest change of ``H`` on those shared nodes.
    """
    rec = {"theta0": float(theta0), "base_point": [float(c) for c in base_point]}
    n_t, prev, disc = cfg.n_t, None, None
    try:
        for level in range(cfg.max_refinements + 1):
            surf = build_hopf_surface(chart, xi, curve, cfg.s_range, n_t, cfg.n_s)
            H = mean_curvature_field(chart, surf)
            verdict = constancy_report(H, cfg.tol_H)
            if prev is not None:
                disc = float(np.max(np.abs(H.values[1::2] - prev.values)))
            if verdict.is_cmc or level == cfg.max_refinements:
                break
            prev, n_t = H, 2 * (n_t - 1) + 1
    except (DegenerateSurfaceError, DomainError) as exc:
        rec.update(error=str(exc), is_cmc=False)
        return rec
    tau0 = float(bundle_curvature(chart, xi, curve.points[0]).tau)
    match = match_closed_form(H, theta0, tau0)
    rec.update(H_mean=H.summary["mean"], H_spread=verdict.spread, is_cmc=verdict.is_cmc,
               fiber_variation=H.fiber_variation, tau_at_start=tau0, closed_form=match.matched,
               n_t=n_t, refinements=level, discretization=disc, truncated=bool(curve.exited))
    return rec


def theorem_pipeline(space_spec, theta0_list=None, base_points=None, cfg=None):
    """Hopf surfaces over normal magnetic curves plus the curvature classification.

    For every ``(base point, theta0)`` a unit-speed, unit-charge magnetic curve
    is integrated over ``[0, cfg.t_end]`` and its Hopf surface checked for
    constant mean curvature.  Failed surfaces are recorded with their error
    and count as non-CMC.
    """
    cfg = cfg or PipelineConfig()
    theta0_list = np.asarray(DEFAULT_THETA0 if theta0_list is None else theta0_list, dtype=float)
    if np.any(np.abs(np.sin(theta0_list)) < 1e-6):
        raise ValueError("theta0 list must exclude 0")
    base_points = default_base_points() if base_points is None else np.atleast_2d(base_points)
    chart, xi = build_space(space_spec)
    chart.require(base_points)

    P = np.repeat(base_points, len(theta0_list), axis=0)
    TH = np.tile(theta0_list, len(base_points))
    V = initial_velocity(chart, xi, P, TH)
    curves = integrate_magnetic_curves(chart, xi, P, V, 1.0, cfg.t_end, cfg.integrator)
    surfaces = [_surface_record(chart, xi, c, th, p, cfg) for c, th, p in zip(curves, TH, P)]

    verdict = classify_space(chart, xi, cfg.samples, cfg.tol_tau, cfg.tol_K)
    spreads = [r["H_spread"] for r in surfaces if "H_spread" in r]
    verdict.all_surfaces_cmc = bool(all(r["is_cmc"] for r in surfaces))
    verdict.max_H_spread = float(max(spreads)) if spreads else float("nan")
    tau_positive = bool(verdict.unit_killing and verdict.tau_mean > cfg.tol_tau)
    return {
        "space": asdict(space_spec),
        "domain": verdict.domain,
        "samples": len(verdict.details),
        "tau": {"mean": verdict.tau_mean, "spread": verdict.tau_spread, "abs_mean": verdict.tau_abs_mean},
        "K_xi": {"mean": verdict.K_xi_mean, "spread": verdict.K_xi_spread},
        "unit_killing_residual": verdict.unit_killing_residual,
        "surfaces": surfaces,
        "verdict": {
            "all_surfaces_cmc": verdict.all_surfaces_cmc,
            "sasakian_by_corollary": verdict.sasakian_by_corollary,
            "strict_k_contact": verdict.strict_k_contact,
            "tau_positive": tau_positive,
            "max_H_spread": verdict.max_H_spread,
            "implication": implication_status(verdict.all_surfaces_cmc, verdict.sasakian_by_corollary,
                                              tau_positive),
        },
    }
