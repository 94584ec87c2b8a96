import numpy as np
import pytest

from magnetoframe.errors import DomainError
from magnetoframe.geometry import VectorField
from magnetoframe.sasaki import (PipelineConfig, SampleSpec, almost_contact_data, almost_contact_residuals,
                                 classify_space, default_base_points, fundamental_form_check, implication_status,
                                 killing_from_phi_residual, sasaki_condition_residual, sasaki_scale_factor,
                                 theorem_pipeline)
from magnetoframe.spaces import SpaceSpec, build_space, default_specs

P = np.array([0.3, -0.2, 0.1])
X = np.array([0.7, -0.4, 0.2])
Y = np.array([-0.1, 0.9, 0.5])


@pytest.fixture(scope="module")
def unit_tau():
    # tau = -1 under the positive orientation
    return build_space(SpaceSpec("heisenberg", tau=-1.0))


def test_almost_contact_identities_hold_for_unit_tau(unit_tau):
    r = almost_contact_residuals(*unit_tau, P)
    assert r.max_residual < 1e-12
    assert r.scale == pytest.approx(1.0, abs=1e-12)


def test_almost_contact_scale_is_tau_squared():
    r = almost_contact_residuals(*build_space(SpaceSpec("heisenberg", tau=0.5)), P)
    assert r.scale == pytest.approx(0.25, abs=1e-12)
    assert r.phi_squared > 0.5


def test_almost_contact_fails_in_flat_space():
    r = almost_contact_residuals(*build_space(SpaceSpec("euclidean")), P)
    assert r.phi_squared == pytest.approx(1.0, abs=1e-12)
    assert r.eta_xi < 1e-14 and r.phi_xi < 1e-14


@pytest.mark.parametrize("name", sorted(default_specs()))
def test_eta_of_xi_and_phi_of_xi(name):
    d = almost_contact_data(*build_space(default_specs()[name]), P)
    assert d.eta @ d.xi == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(d.phi @ d.xi)) < 1e-12


@pytest.mark.parametrize("name", sorted(default_specs()))
def test_killing_rebuilt_from_phi(name):
    assert killing_from_phi_residual(*build_space(default_specs()[name]), P, X, Y) < 1e-12


def test_sasaki_condition(unit_tau):
    assert sasaki_condition_residual(*unit_tau, P, X, Y) < 1e-5
    flat = build_space(SpaceSpec("euclidean"))
    g = flat[0].metric(P)
    xi = flat[1](P)
    want = np.linalg.norm((X @ g @ Y) * xi - (Y @ g @ xi) * X)
    assert sasaki_condition_residual(*flat, P, X, Y) == pytest.approx(want, rel=1e-8)


def test_sasaki_scale_factor_is_consistent():
    chart, xi = build_space(SpaceSpec("heisenberg", tau=0.5))
    rng = np.random.default_rng(0)
    scales = [sasaki_scale_factor(chart, xi, p, a, b)
              for p, a, b in zip(rng.uniform(-0.5, 0.5, (5, 3)), rng.normal(size=(5, 3)), rng.normal(size=(5, 3)))]
    assert np.ptp(scales) < 1e-6
    assert sasaki_condition_residual(chart, xi, P, X, Y) > 1e-3


def test_fundamental_form(unit_tau):
    chart, xi = unit_tau
    r = fundamental_form_check(chart, xi, P, X, Y)
    assert r.residual < 1e-12 and not r.sign_flipped
    flipped = fundamental_form_check(chart.with_orientation(-1), xi, P, X, Y)
    assert flipped.sign_flipped and flipped.flipped_residual < 1e-12
    v = xi(P)
    z = fundamental_form_check(chart, xi, P, v, Y)
    assert abs(z.lhs) < 1e-12 and abs(z.rhs) < 1e-12


@pytest.mark.parametrize("spec, sasakian, strict", [
    (SpaceSpec("heisenberg", tau=0.5), True, False),
    (SpaceSpec("berger", kappa=4.0, tau=1.0), True, True),
    (SpaceSpec("negbase", kappa=-1.0, tau=0.5), True, False),
    (SpaceSpec("product", kappa=1.0), False, False),
    (SpaceSpec("perturbed", amplitude=0.2), False, False),
    (SpaceSpec("euclidean"), False, False),
], ids=lambda x: getattr(x, "kind", str(x)))
def test_classify_examples(spec, sasakian, strict):
    v = classify_space(*build_space(spec))
    assert v.sasakian_by_corollary is sasakian
    assert v.strict_k_contact is strict
    if sasakian:
        assert v.tau_spread < 1e-6 and abs(v.tau_mean) > 1e-6
    assert len(v.details) == 27


def test_classify_heisenberg_curvature_value():
    v = classify_space(*build_space(SpaceSpec("heisenberg", tau=0.5)))
    assert v.K_xi_mean == pytest.approx(0.25, abs=1e-10)
    assert v.tau_mean == pytest.approx(0.5, abs=1e-12)


def test_classify_short_circuits_on_non_killing_field():
    chart, _ = build_space(SpaceSpec("euclidean"))
    bad = VectorField(lambda p: np.stack([np.zeros(np.shape(p)[:-1]), np.zeros(np.shape(p)[:-1]),
                                          1.0 + 0.1 * np.asarray(p)[..., 0]], axis=-1))
    v = classify_space(chart, bad)
    assert not v.unit_killing and not v.sasakian_by_corollary and not v.strict_k_contact
    assert v.unit_killing_residual > 1e-3 and np.isnan(v.tau_mean)


def test_sample_spec_points():
    chart, _ = build_space(SpaceSpec("heisenberg", tau=0.5))
    pts = SampleSpec(grid=2, extent=0.5, random=4, seed=3).points(chart)
    assert pts.shape == (12, 3)
    assert np.array_equal(pts, SampleSpec(grid=2, extent=0.5, random=4, seed=3).points(chart))
    disk, _ = build_space(SpaceSpec("negbase", kappa=-1.0, tau=0.5))
    with pytest.raises(DomainError):
        SampleSpec(grid=2, extent=10.0).points(disk)


@pytest.mark.parametrize("all_cmc, sasakian, tau_positive, want", [
    (True, True, True, "confirmed"),
    (True, False, False, "precondition_violated"),
    (True, False, True, "violated"),
    (False, True, True, "converse_violated"),
    (False, False, True, "vacuous"),
])
def test_implication_status(all_cmc, sasakian, tau_positive, want):
    assert implication_status(all_cmc, sasakian, tau_positive) == want


SMALL = dict(theta0_list=[np.pi / 4, np.pi / 2], base_points=default_base_points()[[0, 4]])


def test_pipeline_euclidean_flags_precondition():
    r = theorem_pipeline(SpaceSpec("euclidean"), **SMALL)
    v = r["verdict"]
    assert v["all_surfaces_cmc"] and not v["sasakian_by_corollary"] and not v["tau_positive"]
    assert v["implication"] == "precondition_violated"
    assert len(r["surfaces"]) == 4


def test_pipeline_perturbed_is_vacuous():
    r = theorem_pipeline(SpaceSpec("perturbed", amplitude=0.2), theta0_list=[np.pi / 4],
                         base_points=np.array([[0.5, 0.5, 0.0]]))
    v = r["verdict"]
    assert not v["all_surfaces_cmc"] and not v["sasakian_by_corollary"]
    assert v["implication"] == "vacuous"
    assert r["surfaces"][0]["fiber_variation"] < 1e-3


def test_pipeline_records_surface_fields():
    r = theorem_pipeline(SpaceSpec("heisenberg", tau=0.5), **SMALL)
    rec = r["surfaces"][0]
    for key in ("theta0", "base_point", "H_spread", "is_cmc", "H_mean", "closed_form", "n_t", "refinements"):
        assert key in rec
    assert r["verdict"]["implication"] == "confirmed"
    assert set(r["tau"]) == {"mean", "spread", "abs_mean"}


def test_pipeline_keeps_failed_surfaces():
    # fibers flowed to s = 1 leave a slab of half width 0.5
    cfg = PipelineConfig(samples=SampleSpec(grid=2, extent=0.25))
    r = theorem_pipeline(SpaceSpec("euclidean", z_half_width=0.5), theta0_list=[np.pi / 2],
                         base_points=np.array([[0.0, 0.0, 0.0]]), cfg=cfg)
    rec = r["surfaces"][0]
    assert "error" in rec and rec["is_cmc"] is False
    assert not r["verdict"]["all_surfaces_cmc"]


def test_pipeline_rejects_vertical_angle():
    with pytest.raises(ValueError):
        theorem_pipeline(SpaceSpec("heisenberg", tau=0.5), theta0_list=[0.0])
