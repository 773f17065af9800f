# file: tests/test_flow.py
import numpy as np
import pytest

from aacord.mechanics.expr import parse
from aacord.mechanics.flow import commutation_residual, completeness_probe, flow_map, flow_orbit, integrate, shoot
from aacord.mechanics.symplectic import FieldStack, hamiltonian_vector_field
from aacord.systems.catalog import CATALOG
from aacord.utils.config import FlowConfig
from aacord.utils.errors import EscapeError, StepLimitError

CFG = FlowConfig()
TIGHT = FlowConfig(rtol=1e-12, atol=1e-14)
EXPENSIVE = {"oscillator2d", "so3-momentum"}


def _field(text, n=1):
    return hamiltonian_vector_field(parse(text), n)


def test_oscillator_full_turn_returns():
    end = flow_map(_field("(p1^2 + q1^2)/2"), [2 * np.pi], [1.0, 0.0], TIGHT)
    np.testing.assert_allclose(end, [1.0, 0.0], atol=1e-9)


def test_free_particle_is_linear():
    for t in (0.5, 3.0, -2.0):
        np.testing.assert_allclose(flow_map(_field("p1^2/2"), [t], [0.0, 1.0], CFG), [t, 1.0], atol=1e-9)


def test_zero_time_is_identity():
    z0 = np.array([0.3, -1.2])
    end = flow_map(_field("p1^2/2 - cos(q1)"), [0.0], z0, CFG)
    assert np.array_equal(end, z0)


def test_flow_parameter_count_is_checked():
    with pytest.raises(ValueError):
        flow_map(_field("p1"), [1.0, 2.0], [0.0, 0.0], CFG)


def test_group_law(rng):
    field = _field("p1^2/2 - cos(q1)")
    for _ in range(100):
        z0 = rng.uniform(-1.0, 1.0, size=2)
        s, t = rng.uniform(-1.0, 1.0, size=2)
        composed = flow_map(field, [s], flow_map(field, [t], z0, CFG), CFG)
        direct = flow_map(field, [s + t], z0, CFG)
        np.testing.assert_allclose(composed, direct, atol=10 * 1e-8)


@pytest.mark.parametrize("name", [
    pytest.param(name, marks=pytest.mark.slow) if name in EXPENSIVE else name for name in CATALOG
])
def test_group_law_on_catalog_flows(catalog, name):
    system = catalog.system(name)
    flows = catalog.flows(name)
    cfg = system.tolerances.search.flow
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        z0 = system.reference_point + rng.uniform(-0.1, 0.1, size=2 * system.n)
        s, t = rng.uniform(-1.0, 1.0, size=(2, flows.m))
        composed = flow_map(flows, s, flow_map(flows, t, z0, cfg), cfg)
        direct = flow_map(flows, s + t, z0, cfg)
        worst = max(worst, float(np.linalg.norm(composed - direct) / max(1.0, np.linalg.norm(direct))))
    assert worst < 10 * 1e-8


def test_orbit_matches_flow_map():
    field = _field("(p1^2 + q1^2)/2")
    times = np.array([-1.0, 0.0, 0.5, 2.0])
    orbit = flow_orbit(field, [1.0], [1.0, 0.0], times, TIGHT)
    expected = np.stack([np.cos(times), -np.sin(times)], axis=1)
    np.testing.assert_allclose(orbit, expected, atol=1e-8)


def test_commuting_translations(rng):
    first, second = _field("p1^2/2", 2), _field("p2^2/2", 2)
    for z in rng.normal(size=(10, 4)):
        assert commutation_residual(first, second, z, 1.0, 1.0, CFG) < 1e-9


def test_same_flow_commutes():
    field = _field("(p1^2 + q1^2)/2")
    assert commutation_residual(field, field, [0.4, 0.2], 1.0, 1.0, CFG) < 1e-9


def test_noncommuting_pair_has_unit_residual():
    shift, drift = _field("q1"), _field("p1^2/2")
    residual = commutation_residual(shift, drift, [0.0, 0.0], 1.0, 1.0, CFG)
    assert residual == pytest.approx(1.0, abs=1e-8)


def test_commutation_over_catalog_fields(rng, catalog):
    for name in ("oscillator2d", "so3-momentum"):
        flows = catalog.flows(name)
        lo, hi = catalog.system(name).box_bounds
        for _ in range(100):
            z = rng.uniform(lo, hi)
            assert commutation_residual(flows.handles[0], flows.handles[1], z, 0.5, 0.5, CFG) < 1e-8


def test_completeness_probe_ok_for_bounded_and_linear_orbits():
    oscillator = completeness_probe(_field("(p1^2 + q1^2)/2"), [0.5, 0.5], 1e3, CFG)
    assert oscillator.ok
    free = completeness_probe(_field("p1"), [0.0, 1.0], 1e3, CFG)
    assert free.ok
    assert free.max_norm == pytest.approx(1e3, rel=1e-6)


def test_completeness_probe_reports_blow_up():
    report = completeness_probe(_field("p1*q1^2"), [1.0, 0.0], 10.0, CFG)
    assert report.status == "escape"
    assert report.escape_time == pytest.approx(1.0, rel=1e-2)
    assert report.steps > 0


def test_completeness_counts_steps_on_every_failure():
    backward = completeness_probe(_field("-p1*q1^2"), [1.0, 0.0], 10.0, CFG)
    assert backward.status == "escape"
    assert backward.escape_time == pytest.approx(-1.0, rel=1e-2)
    forward = integrate(FieldStack([_field("-p1*q1^2")]).combined([1.0]), [1.0, 0.0], 10.0, CFG)
    assert backward.steps > forward.steps
    exhausted = completeness_probe(_field("(p1^2 + q1^2)/2"), [1.0, 0.0], 1e3, FlowConfig(max_steps=10))
    assert exhausted.status == "step_limit"
    assert exhausted.steps == 10


def test_step_limit_is_enforced():
    with pytest.raises(StepLimitError):
        flow_map(_field("(p1^2 + q1^2)/2"), [1e3], [1.0, 0.0], FlowConfig(max_steps=10))


def test_escape_radius_is_enforced():
    with pytest.raises(EscapeError):
        flow_map(_field("p1"), [100.0], [0.0, 1.0], FlowConfig(escape_radius=10.0))


def test_shoot_recovers_flow_time():
    field = FieldStack([_field("(p1^2 + q1^2)/2")])
    target = np.array([np.cos(1.3), -np.sin(1.3)])
    s, residual, ok = shoot(field, [1.0], [1.0, 0.0], target, TIGHT, 1e-11)
    assert ok and residual < 1e-11
    assert s[0] == pytest.approx(1.3, abs=1e-9)
# end file
