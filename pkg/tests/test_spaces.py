from dataclasses import replace

import numpy as np
import pytest

from magnetoframe.errors import ConfigError, DomainError
from magnetoframe.geometry import killing_residual
from magnetoframe.spaces import KINDS, SpaceSpec, build_space, default_specs, list_spaces, sample_grid
from magnetoframe.submersion import bundle_curvature


@pytest.mark.parametrize("spec", [
    SpaceSpec("unknown"),
    SpaceSpec("berger", kappa=0.0, tau=1.0),
    SpaceSpec("negbase", kappa=1.0),
    SpaceSpec("product", kappa=1.0, tau=0.3),
    SpaceSpec("euclidean", tau=0.1),
    SpaceSpec("heisenberg", kappa=1.0, tau=0.5),
    SpaceSpec("custom"),
    SpaceSpec("heisenberg", tau=0.5, orientation=2),
    SpaceSpec("heisenberg", tau=0.5, derivative_mode="symbolic"),
    SpaceSpec("heisenberg", tau=0.5, half_width=0.0),
], ids=lambda s: f"{s.kind}-{s.kappa}-{s.tau}-{s.orientation}-{s.derivative_mode}-{s.half_width}")
def test_invalid_specs_rejected(spec):
    with pytest.raises(ConfigError):
        build_space(spec)


def test_catalog_listing_is_stable():
    names = [s.name for s in list_spaces()]
    assert names == list(KINDS)
    assert set(default_specs()) == set(KINDS) - {"custom"}


@pytest.mark.parametrize("name", sorted(default_specs()))
def test_catalog_xi_is_unit_killing(name):
    chart, xi = build_space(default_specs()[name])
    pts = sample_grid(chart, 4, 0.8)
    res = killing_residual(chart, xi, pts)
    assert np.max(res.deficit) < 1e-12
    assert np.max(res.unit_deficit) < 1e-12


@pytest.mark.parametrize("tau, orientation", [(0.5, 1), (0.5, -1), (-0.3, 1), (1.2, -1)])
def test_extracted_tau_matches_parameter(tau, orientation):
    spec = SpaceSpec("berger", kappa=1.0, tau=tau, orientation=orientation)
    chart, xi = build_space(spec)
    t = bundle_curvature(chart, xi, sample_grid(chart, 3, 0.5)).tau
    assert np.allclose(t, orientation * tau, atol=1e-12)
    assert spec.expected_tau == orientation * tau


def test_perturbed_tau_varies():
    spec = default_specs()["perturbed"]
    chart, xi = build_space(spec)
    t = bundle_curvature(chart, xi, np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.0]])).tau
    assert spec.expected_tau is None
    assert abs(t[0] - t[1]) > 1e-2


def test_negbase_domain_excludes_disk_boundary():
    chart, _ = build_space(SpaceSpec("negbase", kappa=-1.0, tau=0.5))
    assert chart.in_domain(np.array([0.5, 0.5, 0.0]))
    assert not chart.in_domain(np.array([1.95, 0.0, 0.0]))
    with pytest.raises(DomainError):
        chart.require(np.array([0.0, 2.5, 0.0]))


def test_custom_metric_matches_catalog():
    # heisenberg with tau = 0.5 written out by hand
    metric = "[[1 + y**2/4, -x*y/4, y/2], [-x*y/4, 1 + x**2/4, -x/2], [y/2, -x/2, 1]]"
    custom, cxi = build_space(SpaceSpec("custom", metric=metric, xi="[0, 0, 1]"))
    ref, _ = build_space(default_specs()["heisenberg"])
    p = np.array([[0.3, -0.4, 0.2], [0.1, 0.2, 0.3]])
    assert np.allclose(custom.metric(p), ref.metric(p), atol=1e-14)
    assert np.allclose(custom.dmetric(p), ref.dmetric(p), atol=1e-14)
    assert np.allclose(cxi(p), [[0, 0, 1]] * 2)


def test_custom_metric_parse_error():
    with pytest.raises(ConfigError):
        build_space(SpaceSpec("custom", metric="[[1, 0, 0], [0, 1"))


def test_scalar_and_batched_evaluation_agree():
    chart, _ = build_space(default_specs()["berger"])
    P = np.array([[0.3, -0.4, 0.2], [0.1, 0.2, 0.3]])
    batch = chart.dmetric(P)
    for i, p in enumerate(P):
        assert np.allclose(chart.dmetric(p), batch[i], atol=1e-15)


def test_fd_spec_builds_fd_chart():
    chart, _ = build_space(replace(default_specs()["heisenberg"], derivative_mode="fd"))
    assert chart.derivative_mode == "finite-difference"
