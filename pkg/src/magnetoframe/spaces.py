"""
Concrete charts of 3-manifolds carrying a unit Killing field.

The constant bundle-curvature family M(tau, kappa) is realised over the base
plane with conformal factor ``lam = 1 / (1 + kappa (x^2 + y^2) / 4)``::

    g = lam^2 (dx^2 + dy^2) + (dz + tau lam (y dx - x dy))^2,   xi = d/dz

and the non-constant counterexample as ``dx^2 + dy^2 + (dz + A x y dx)^2``.
Metrics are written symbolically once and compiled (with their first and
second derivatives) into vectorised numpy functions.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import sympy as sp

from .errors import ConfigError, InvariantError
from .geometry import MetricChart, VectorField, killing_residual

X, Y, Z = sp.symbols("x y z", real=True)
COORDS = (X, Y, Z)

KINDS = ("euclidean", "heisenberg", "berger", "negbase", "product", "perturbed", "custom")
CONSTANT_TAU_KINDS = ("euclidean", "heisenberg", "berger", "negbase", "product")

NEGBASE_MARGIN = 0.1


@dataclass(frozen=True)
class SpaceSpec:
    kind: str
    kappa: float = 0.0
    tau: float = 0.0
    amplitude: float = 0.0
    half_width: float = 3.0
    z_half_width: float = 50.0
    orientation: int = 1
    derivative_mode: str = "analytic"
    metric: Optional[str] = None
    xi: Optional[str] = None

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"space.kind: unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "berger" and not self.kappa > 0:
            raise ConfigError("space.kappa: berger requires kappa > 0")
        if self.kind == "negbase" and not self.kappa < 0:
            raise ConfigError("space.kappa: negbase requires kappa < 0")
        if self.kind == "product" and self.tau != 0:
            raise ConfigError("space.tau: product requires tau = 0")
        if self.kind in ("euclidean",) and (self.tau != 0 or self.kappa != 0):
            raise ConfigError("space: euclidean has tau = kappa = 0")
        if self.kind == "heisenberg" and self.kappa != 0:
            raise ConfigError("space.kappa: heisenberg has kappa = 0")
        if self.kind == "custom" and not self.metric:
            raise ConfigError("space.metric: custom spaces need a metric expression")
        if self.orientation not in (1, -1):
            raise ConfigError("space.orientation must be +1 or -1")
        if self.derivative_mode not in ("analytic", "fd"):
            raise ConfigError("space.derivative_mode must be 'analytic' or 'fd'")
        if not (self.half_width > 0 and self.z_half_width > 0):
            raise ConfigError("space: domain half widths must be positive")
        return self

    @property
    def constant_tau(self):
        return self.kind in CONSTANT_TAU_KINDS

    @property
    def expected_tau(self):
        """Signed bundle curvature the chart should produce, or None."""
        if not self.constant_tau:
            return None
        return self.orientation * self.tau


@dataclass(frozen=True)
class SpaceInfo:
    name: str
    description: str
    parameters: dict = field(default_factory=dict)
    sasakian: Optional[bool] = None


_CATALOG = (
    SpaceInfo("euclidean", "flat R^3, xi = d/dz", {}, False),
    SpaceInfo("heisenberg", "Nil_3 = M(tau, 0)", {"tau": "real, != 0 for contact"}, True),
    SpaceInfo("berger", "local Berger sphere patch M(tau, kappa)", {"kappa": "> 0", "tau": "real"}, True),
    SpaceInfo("negbase", "M(tau, kappa) over a hyperbolic disk", {"kappa": "< 0", "tau": "real"}, True),
    SpaceInfo("product", "S^2 x R or H^2 x R, tau = 0", {"kappa": "real"}, False),
    SpaceInfo("perturbed", "dx^2 + dy^2 + (dz + A x y dx)^2, tau varies", {"amplitude": "real"}, False),
    SpaceInfo("custom", "user metric expression in x, y, z", {"metric": "3x3 sympy matrix", "xi": "3-vector"}, None),
)


def list_spaces():
    """Catalog descriptors in stable order."""
    return list(_CATALOG)


def default_specs():
    """One representative instance per non-custom catalog kind."""
    return {
        "euclidean": SpaceSpec("euclidean"),
        "heisenberg": SpaceSpec("heisenberg", tau=0.5),
        "berger": SpaceSpec("berger", kappa=4.0, tau=1.0),
        "negbase": SpaceSpec("negbase", kappa=-1.0, tau=0.5),
        "product": SpaceSpec("product", kappa=1.0),
        "perturbed": SpaceSpec("perturbed", amplitude=0.2),
    }


def _lambdify_array(exprs, shape):
    flat = [sp.sympify(e) for e in exprs]
    # constants are filled from a template; repeated expressions are computed once
    const_idx = [i for i, e in enumerate(flat) if not e.free_symbols]
    const_vals = np.array([float(flat[i]) for i in const_idx])
    var_idx = [i for i, e in enumerate(flat) if e.free_symbols]
    uniq = list(dict.fromkeys(flat[i] for i in var_idx))
    inverse = np.array([uniq.index(flat[i]) for i in var_idx], dtype=int)
    fn = sp.lambdify(COORDS, uniq, modules="numpy", cse=True)
    scalar_fn = sp.lambdify(COORDS, flat, modules="math", cse=True)

    def evaluate(p):
        p = np.asarray(p, dtype=float)
        lead = p.shape[:-1]
        if p.size == 3:
            return np.array(scalar_fn(*p.reshape(3).tolist()), dtype=float).reshape(lead + shape)
        out = np.empty(lead + (len(flat),))
        out[..., const_idx] = const_vals
        if uniq:
            vals = np.broadcast_arrays(*fn(p[..., 0], p[..., 1], p[..., 2]), p[..., 0])[:-1]
            out[..., var_idx] = np.stack(vals, axis=-1)[..., inverse]
        return out.reshape(lead + shape)

    return evaluate


def compile_metric(G):
    """Vectorised ``(g, dg, d2g)`` callables for a symbolic 3x3 metric."""
    G = sp.Matrix(G)
    g_exprs = [G[i, j] for i in range(3) for j in range(3)]
    dg_exprs = [sp.diff(G[i, j], COORDS[k]) for k in range(3) for i in range(3) for j in range(3)]
    d2g_exprs = [sp.diff(G[i, j], COORDS[k], COORDS[m])
                 for m in range(3) for k in range(3) for i in range(3) for j in range(3)]
    return (_lambdify_array(g_exprs, (3, 3)), _lambdify_array(dg_exprs, (3, 3, 3)),
            _lambdify_array(d2g_exprs, (3, 3, 3, 3)))


def compile_field(V):
    V = sp.Matrix(V)
    values = _lambdify_array(list(V), (3,))
    jac = _lambdify_array([sp.diff(V[k], COORDS[i]) for k in range(3) for i in range(3)], (3, 3))
    return values, jac


def symbolic_metric(spec):
    """Sympy matrix of the metric for a catalog spec."""
    kind = spec.kind
    if kind == "custom":
        try:
            return sp.Matrix(sp.sympify(spec.metric, locals={"x": X, "y": Y, "z": Z}))
        except (sp.SympifyError, TypeError, ValueError) as exc:
            raise ConfigError(f"space.metric: cannot parse {spec.metric!r}: {exc}") from None
    if kind == "perturbed":
        a = sp.Float(spec.amplitude) * X * Y
        eta = (a, 0, 1)
        base = sp.diag(1, 1, 0)
    else:
        kappa = sp.Float(spec.kappa)
        tau = sp.Float(spec.tau)
        lam = 1 / (1 + kappa * (X ** 2 + Y ** 2) / 4)
        eta = (tau * lam * Y, -tau * lam * X, 1)
        base = sp.diag(lam ** 2, lam ** 2, 0)
    eta = sp.Matrix(eta)
    return base + eta * eta.T


def build_space(spec, validate=True):
    """Build ``(chart, xi)`` for a space spec.

    With ``validate`` the unit-Killing property and, for constant-tau kinds,
    the extracted bundle curvature are checked on a small sample grid.
    """
    spec.validate()
    G = symbolic_metric(spec)
    if G.shape != (3, 3):
        raise ConfigError("space.metric: expected a 3x3 matrix")
    metric, dmetric, d2metric = compile_metric(G)

    hw, zw = spec.half_width, spec.z_half_width
    bounds = [(-hw, hw), (-hw, hw), (-zw, zw)]
    contains = None
    if spec.kind == "negbase" or (spec.kind == "product" and spec.kappa < 0):
        kappa = spec.kappa

        def contains(p):
            return 1.0 + kappa * (p[..., 0] ** 2 + p[..., 1] ** 2) / 4.0 > NEGBASE_MARGIN

    name = spec.kind
    chart = MetricChart(metric, dmetric, d2metric, bounds=bounds, contains=contains,
                        orientation=spec.orientation, name=name)
    if spec.derivative_mode == "fd":
        chart = chart.finite_difference()

    if spec.xi:
        try:
            V = sp.sympify(spec.xi, locals={"x": X, "y": Y, "z": Z})
        except (sp.SympifyError, TypeError) as exc:
            raise ConfigError(f"space.xi: cannot parse {spec.xi!r}: {exc}") from None
        values, jac = compile_field(V)
        xi = VectorField(values, jac if spec.derivative_mode == "analytic" else None, name="xi")
    else:
        xi = VectorField(lambda p: np.broadcast_to([0.0, 0.0, 1.0], np.shape(p)).copy(),
                         lambda p: np.zeros(np.shape(p)[:-1] + (3, 3)), name="xi")

    if validate:
        _validate(spec, chart, xi)
    return chart, xi


def sample_grid(chart, n=3, extent=1.0):
    """Regular ``n^3`` grid inside ``[-extent, extent]^3`` restricted to the domain."""
    ticks = np.linspace(-extent, extent, n)
    pts = np.stack(np.meshgrid(ticks, ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 3)
    return pts[chart.in_domain(pts)]


def _validate(spec, chart, xi):
    from .submersion import bundle_curvature

    pts = sample_grid(chart, 3, min(1.0, spec.half_width / 2))
    res = killing_residual(chart, xi, pts)
    if spec.kind == "custom":
        return
    if np.max(res.unit_deficit) > 1e-10:
        raise InvariantError(f"{spec.kind}: xi is not unit (deficit {np.max(res.unit_deficit):.3g})")
    if np.max(res.deficit) > 1e-8:
        raise InvariantError(f"{spec.kind}: xi is not Killing (residual {np.max(res.deficit):.3g})")
    if spec.constant_tau:
        tau = bundle_curvature(chart, xi, pts).tau
        err = np.max(np.abs(tau - spec.expected_tau))
        if err > 1e-6:
            raise InvariantError(f"{spec.kind}: extracted tau differs from {spec.expected_tau} by {err:.3g}")


def with_overrides(spec, **kwargs):
    """Copy of ``spec`` with the non-None keyword values replaced."""
    return replace(spec, **{k: v for k, v in kwargs.items() if v is not None})
