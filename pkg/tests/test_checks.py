import pytest

from magnetoframe.checks import registered_checks, run_checks
from magnetoframe.spaces import SpaceSpec, default_specs


def test_ids_unique_and_prefixed():
    ids = [cid for cid, _ in registered_checks()]
    assert len(ids) == len(set(ids))
    assert all(cid.split("-")[0] in {"GEO", "SPC", "SUB", "MAG", "HOPF", "SAS", "OUT"} for cid in ids)


@pytest.mark.parametrize("name", sorted(default_specs()))
def test_battery_passes_on_catalog(name):
    results = run_checks(default_specs()[name], n_points=8)
    failed = [(r.id, r.detail) for r in results if r.status == "fail"]
    assert not failed


def test_battery_in_fd_mode():
    results = run_checks(SpaceSpec("heisenberg", tau=0.5, derivative_mode="fd"), n_points=6,
                         only={"GEO-METRIC-COMPAT", "SPC-KILLING", "MAG-RK4-ORDER", "SAS-ETA-PHI-XI"})
    assert [r.status for r in results] == ["pass"] * 4


def test_only_filter_and_skips():
    results = run_checks(default_specs()["perturbed"], n_points=4, only={"MAG-PROJECTION-CIRCLE", "SPC-TAU-VARIES"})
    status = {r.id: r.status for r in results}
    assert status == {"SPC-TAU-VARIES": "pass", "MAG-PROJECTION-CIRCLE": "skipped"}
