from dataclasses import replace

import numpy as np
import pytest

from magnetoframe.errors import DegenerateSurfaceError, DomainError
from magnetoframe.geometry import VectorField
from magnetoframe.hopf import (MeanCurvatureField, base_route_mean_curvature, build_hopf_surface, constancy_report,
                               flow_along_xi, flow_isometry_defect, match_closed_form, mean_curvature_field,
                               predicted_mean_curvature, tau_at_start)
from magnetoframe.magnetic import initial_velocity, integrate_magnetic_curve
from magnetoframe.spaces import SpaceSpec, build_space, default_specs


def surface_for(spec, theta0, p=(0.0, 0.0, 0.0), **kw):
    chart, xi = build_space(spec)
    p = np.asarray(p, dtype=float)
    c = integrate_magnetic_curve(chart, xi, p, initial_velocity(chart, xi, p, theta0))
    surf = build_hopf_surface(chart, xi, c, **kw)
    return chart, xi, c, surf, mean_curvature_field(chart, surf)


@pytest.mark.parametrize("theta0", [np.pi / 6, np.pi / 4, np.pi / 3, np.pi / 2])
def test_cylinder_mean_curvature(theta0):
    _, _, _, _, H = surface_for(SpaceSpec("euclidean"), theta0)
    # helix of horizontal radius sin(theta0) sweeps a round cylinder of that radius
    assert np.max(np.abs(np.abs(H.values) - 1 / (2 * np.sin(theta0)))) < 2e-3
    assert constancy_report(H, 1e-3).is_cmc


@pytest.mark.parametrize("spec, theta0", [(SpaceSpec("heisenberg", tau=0.5), np.pi / 3),
                                          (SpaceSpec("heisenberg", tau=-0.5), np.pi / 3),
                                          (SpaceSpec("berger", kappa=4.0, tau=1.0), np.pi / 4),
                                          (SpaceSpec("negbase", kappa=-1.0, tau=0.5), 1.0)],
                         ids=["nil", "nil-neg", "berger", "negbase"])
def test_signed_H_is_arclength_form(spec, theta0):
    chart, xi, c, _, H = surface_for(spec, theta0, p=(0.1, -0.1, 0.0), n_t=129)
    want = predicted_mean_curvature(theta0, tau_at_start(chart, xi, c)).arclength_form
    assert H.summary["mean"] == pytest.approx(want, abs=2e-3)
    assert match_closed_form(H, theta0, spec.expected_tau).matched == "arclength_form"


def test_base_route_agrees_with_surface():
    chart, xi, c, _, H = surface_for(SpaceSpec("heisenberg", tau=0.5), 1.1)
    route = base_route_mean_curvature(chart, xi, c)
    assert np.max(np.abs(route[2:-2] - H.summary["mean"])) < 1e-5


@pytest.mark.parametrize("spec, theta0", [(SpaceSpec("heisenberg", tau=0.75), float(np.arccos(2 / 3))),
                                          (SpaceSpec("berger", kappa=4.0, tau=1.0), np.pi / 3)],
                         ids=["nil", "berger"])
def test_minimal_case(spec, theta0):
    *_, H = surface_for(spec, theta0)
    assert np.max(np.abs(H.values)) < 1e-3


@pytest.mark.parametrize("theta0, tau, printed, arclength", [
    (np.pi / 2, 0.7, 0.5, 0.5),
    (np.pi / 4, 0.0, np.sqrt(2) / 4, np.sqrt(2) / 2),
    (np.pi / 3, 1.0, 0.0, 0.0),
    (np.pi / 6, 0.5, 0.25 * (1 - np.sqrt(3) / 2), (1 - np.sqrt(3) / 2)),
])
def test_predicted_forms(theta0, tau, printed, arclength):
    pred = predicted_mean_curvature(theta0, tau)
    assert pred.paper_form == pytest.approx(printed, abs=1e-14)
    assert pred.arclength_form == pytest.approx(arclength, abs=1e-14)


def test_predicted_rejects_vertical():
    with pytest.raises(ValueError):
        predicted_mean_curvature(0.0, 0.5)


def test_match_reports_none_when_far():
    field = MeanCurvatureField(np.arange(3.0), np.arange(3.0), np.full((3, 3), 5.0))
    m = match_closed_form(field, np.pi / 4, 0.0)
    assert m.matched is None and m.arclength_error > 1


def test_perturbed_surface_not_cmc_but_fiber_invariant():
    *_, H = surface_for(default_specs()["perturbed"], np.pi / 4, p=(0.5, 0.5, 0.0))
    assert H.spread > 1e-2
    assert H.fiber_variation < 1e-3


def test_surface_geometry():
    chart, xi, _, surf, _ = surface_for(SpaceSpec("berger", kappa=4.0, tau=1.0), 1.0, n_t=32, n_s=8)
    g = chart.metric(surf.points)
    dot = lambda a, b: np.einsum("...ij,...i,...j->...", g, a, b)  # noqa: E731
    assert surf.shape == (32, 8)
    assert np.allclose(surf.tangent_s, xi(surf.points))
    assert np.allclose(dot(surf.normal, surf.normal), 1.0, atol=1e-12)
    assert np.max(np.abs(dot(surf.normal, surf.tangent_s))) < 1e-12
    assert np.max(np.abs(dot(surf.normal, surf.tangent_t))) < 1e-12


def test_degenerate_inputs():
    chart, xi = build_space(SpaceSpec("heisenberg", tau=0.5))
    vertical = integrate_magnetic_curve(chart, xi, np.zeros(3), xi(np.zeros(3)))
    with pytest.raises(DegenerateSurfaceError):
        build_hopf_surface(chart, xi, vertical)
    c = integrate_magnetic_curve(chart, xi, np.zeros(3), initial_velocity(chart, xi, np.zeros(3), 1.0))
    with pytest.raises(DegenerateSurfaceError):
        build_hopf_surface(chart, xi, c, n_t=4)
    with pytest.raises(DegenerateSurfaceError):
        build_hopf_surface(chart, xi, c, s_range=(0.0, 0.0))


def test_degenerate_fundamental_form_reports_node():
    chart, xi, _, surf, _ = surface_for(SpaceSpec("heisenberg", tau=0.5), 1.0, n_t=16, n_s=8)
    collapsed = replace(surf, tangent_t=surf.tangent_s.copy())
    with pytest.raises(DegenerateSurfaceError) as info:
        mean_curvature_field(chart, collapsed)
    assert info.value.node == (1, 1)


def test_flow_along_xi_translates_fibers():
    chart, xi = build_space(SpaceSpec("heisenberg", tau=0.5))
    p = np.array([[0.1, 0.2, 0.0], [0.3, -0.1, 0.5]])
    out = flow_along_xi(chart, xi, p, 0.7)
    assert np.allclose(out, p + [0, 0, 0.7], atol=1e-14)
    with pytest.raises(DomainError):
        flow_along_xi(chart, xi, p, 100.0)


def test_flow_isometry():
    chart, xi = build_space(default_specs()["perturbed"])
    w = np.array([0.3, 1.0, -0.2])
    assert flow_isometry_defect(chart, xi, np.array([0.2, 0.1, 0.0]), w, [0.5, 1.0]) < 1e-8
    # a shear flow is not an isometry
    flat, _ = build_space(SpaceSpec("euclidean"))
    shear = VectorField(lambda p: np.stack([np.zeros(np.shape(p)[:-1]), np.zeros(np.shape(p)[:-1]),
                                            1.0 + np.asarray(p)[..., 0]], axis=-1))
    assert flow_isometry_defect(flat, shear, np.zeros(3), np.array([1.0, 0, 0]), [1.0]) > 0.1


def test_refinement_reduces_berger_spread():
    spec = SpaceSpec("berger", kappa=4.0, tau=1.0)
    spreads = [surface_for(spec, np.pi / 6, p=(0.5, 0.5, 0.0), n_t=n)[-1].spread for n in (64, 127)]
    assert spreads[1] < spreads[0] / 3


def test_constancy_verdict_monotone_in_tolerance():
    *_, H = surface_for(default_specs()["perturbed"], np.pi / 4, p=(0.5, 0.5, 0.0))
    verdicts = [constancy_report(H, t).is_cmc for t in np.logspace(0, -6, 13)]
    assert verdicts == sorted(verdicts, reverse=True)
