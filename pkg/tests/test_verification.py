# file: tests/test_verification.py
import numpy as np
import pytest
from scipy.special import ellipk

from aacord.mechanics.expr import parse


def test_harmonic_blocks_are_canonical(verification_agent, chart_agent, catalog):
    chart = catalog.chart("harmonic1d")
    samples = chart_agent.sample_chart_points(chart, 4, seed=42)
    report = verification_agent.verify_canonical_blocks(chart, samples)
    record = report.check("canonical_blocks")
    assert record.passed
    assert record.details["darboux"] is True
    assert record.samples == 4


def test_chart_jacobian_of_the_oscillator(verification_agent, catalog):
    chart = catalog.chart("harmonic1d")
    z = np.array([0.0, -1.0])
    D = verification_agent.chart_jacobian(chart, z)
    # I = (q^2 + p^2)/2 and phi = atan2(-p, q)
    np.testing.assert_allclose(D, [[0.0, -1.0], [-1.0, 0.0]], atol=1e-6)


def test_harmonic_equations_of_motion(verification_agent, catalog, harmonic):
    chart = catalog.chart("harmonic1d")
    report = verification_agent.verify_equations_of_motion(chart, harmonic.hamiltonian_expr, [1.0, 0.0], 10.0)
    assert report.passed, [c.name for c in report.failures()]
    np.testing.assert_allclose(report.results["eom_slopes"], [1.0], rtol=1e-5)
    assert report.check("eom_conserved").max_residual < 1e-6


def test_pendulum_frequency_from_equations_of_motion(verification_agent, catalog):
    chart = catalog.chart("pendulum-libration")
    system = catalog.system("pendulum-libration")
    report = verification_agent.verify_equations_of_motion(chart, system.hamiltonian_expr,
                                                          system.reference_point, 10.0)
    assert report.passed
    expected = np.pi / (2.0 * ellipk(0.2))
    assert report.results["eom_slopes"][0] == pytest.approx(expected, rel=1e-4)


def test_hamiltonian_outside_the_actions_is_rejected(verification_agent, catalog):
    chart = catalog.chart("harmonic1d")
    report = verification_agent.verify_equations_of_motion(chart, parse("q1"), [1.0, 0.0], 1.0)
    assert not report.passed
    assert [c.name for c in report.checks] == ["eom_action_only"]


def test_frequency_duality(verification_agent, chart_agent, catalog):
    chart = catalog.chart("pendulum-libration")
    samples = chart_agent.sample_chart_points(chart, 3, seed=42)
    assert verification_agent.frequency_duality_check(chart, samples).passed


def test_anchor_offset_between_charts(verification_agent, chart_agent, catalog):
    chart = catalog.chart("harmonic1d")
    other = verification_agent.alternate_chart(chart, [0.7])
    assert other.provenance["alternate_of"] == chart.reference.tolist()
    samples = chart_agent.sample_chart_points(chart, 4, seed=42)
    report = verification_agent.anchor_offset_check(chart, other, samples)
    assert report.passed
    assert report.check("anchor_offset").details["base_mismatch"] < 1e-7


def test_e2_blocks_and_actions(verification_agent, chart_agent, catalog):
    chart = catalog.chart("e2-noncommutative")
    samples = chart_agent.sample_chart_points(chart, 2, seed=42)
    record = verification_agent.verify_canonical_blocks(chart, samples).check("canonical_blocks")
    assert record.passed
    assert record.details["darboux"] is False
    assert record.details["omega_ab_sigma_min"] > 0.1


@pytest.mark.slow
def test_e2_equations_of_motion_and_offsets(verification_agent, chart_agent, catalog, e2):
    chart = catalog.chart("e2-noncommutative")
    z0 = chart_agent.sample_chart_points(chart, 1, seed=3)[0]
    report = verification_agent.verify_equations_of_motion(chart, e2.hamiltonian_expr, z0, 2.0)
    assert report.passed, [c.name for c in report.failures()]
    # I = C, so dt/dtime = dC/dI = 1
    np.testing.assert_allclose(report.results["eom_slopes"], [1.0], rtol=1e-4)

    other = verification_agent.alternate_chart(chart, [0.3])
    samples = chart_agent.sample_chart_points(chart, 2, seed=42)
    assert verification_agent.anchor_offset_check(chart, other, samples).passed
# end file
