# file: tests/test_structure.py
import numpy as np
import pytest

from aacord.agents.structure_agent import ANCHOR_CORANK
from aacord.mechanics.symplectic import FieldStack, GradientField
from aacord.systems.catalog import E2_NONCOMMUTATIVE, load_catalog
from aacord.systems.models import CasimirSet, LieAlgebraSpec
from aacord.systems.spec_file import parse_spec_text

BROKEN_PAIR = """
[system]
name = broken-pair
n = 2

[integrals]
H1 = q1
H2 = p1*q1

[reference]
point = 1, 0, 0.5, 0
"""

ABELIAN_PAIR = """
[system]
name = abelian-pair
n = 2

[integrals]
H1 = (p1^2 + q1^2)/2
H2 = (p2^2 + q2^2)/2

[reference]
point = 1, 1, 0, 0
"""

E2_RAW = """
[system]
name = e2-raw
n = 2

[integrals]
H1 = p1
H2 = p2
H3 = q1*p2 - q2*p1

[casimirs]
C = H1^2 + H2^2

[reference]
point = 0, 0, 0.8, 0.8

[domain]
p1 = 0.2, 1.2
p2 = 0.2, 1.2
"""

SO3_ALGEBRA = {(1, 2, 3): 1.0, (2, 3, 1): 1.0, (3, 1, 2): 1.0}


def _e2_with_casimir(expression):
    return parse_spec_text(E2_NONCOMMUTATIVE.replace("C = H1^2 + H2^2", f"C = {expression}"))


def test_independence_at_regular_and_critical_points(structure_agent, harmonic):
    assert structure_agent.independence_check(harmonic, [[1.0, 0.0]]).passed
    failed = structure_agent.independence_check(harmonic, [[0.0, 0.0]])
    assert not failed.passed
    assert failed.checks[0].flagged


def test_independence_of_e2_triple(structure_agent, e2):
    report = structure_agent.independence_check(e2, [[0.0, 0.0, 1.0, 1.0]])
    assert report.passed
    assert report.checks[0].details["k"] == 3


def test_sampling_excludes_critical_points(structure_agent, harmonic):
    samples, excluded = structure_agent.sample_points(harmonic, 32, seed=42)
    assert len(samples) + excluded == 32
    again, _ = structure_agent.sample_points(harmonic, 32, seed=42)
    np.testing.assert_array_equal(np.array(samples), np.array(again))


def test_abelian_structure_matrix(structure_agent, rng):
    system = parse_spec_text(ABELIAN_PAIR)
    smat = structure_agent.structure_matrix(system)
    assert smat.abelian
    for z in rng.normal(size=(5, 4)):
        assert np.max(np.abs(smat(z))) == 0.0


def test_e2_structure_matrix(structure_agent, e2, rng):
    smat = structure_agent.structure_matrix(e2)
    assert not smat.abelian
    for z in rng.normal(size=(5, 4)):
        h1, h2 = z[2], z[3]
        expected = np.array([[0.0, 0.0, -h2], [0.0, 0.0, h1], [h2, -h1, 0.0]])
        np.testing.assert_allclose(smat(z), expected, atol=1e-14)
        assert smat.antisymmetry_residual(z) < 1e-14


def test_so3_structure_matrix_pattern(structure_agent, so3, rng):
    smat = structure_agent.structure_matrix(so3)
    L = GradientField(so3.integral_exprs[1:], so3.n)
    for z in rng.normal(size=(5, 6)):
        l1, l2, l3 = L.values(z)
        s = smat(z)
        np.testing.assert_allclose(s[0], 0.0, atol=1e-13)
        np.testing.assert_allclose(s[1:, 1:], [[0.0, l3, -l2], [-l3, 0.0, l1], [l2, -l1, 0.0]], atol=1e-12)


def test_fiber_constancy(structure_agent, e2):
    smat = structure_agent.structure_matrix(e2)
    flows = FieldStack.from_generators(CasimirSet.from_system(e2).pulled, e2.n)
    assert structure_agent.fiber_constancy_check(smat, e2, flows, 8).passed


def test_fiber_constancy_fails_for_broken_pair(structure_agent):
    system = parse_spec_text(BROKEN_PAIR)
    smat = structure_agent.structure_matrix(system)
    flows = FieldStack.from_generators(CasimirSet.from_system(system).pulled, system.n)
    report = structure_agent.fiber_constancy_check(smat, system, flows, 8)
    assert not report.passed
    assert report.checks[0].max_residual > 1e-3


def test_corank_examples(structure_agent, e2, so3):
    abelian = parse_spec_text(ABELIAN_PAIR)
    m, report = structure_agent.corank_check(structure_agent.structure_matrix(abelian), [abelian.reference_point])
    assert report.passed and m == 2

    samples, _ = structure_agent.sample_points(e2, 16, seed=42)
    m, report = structure_agent.corank_check(structure_agent.structure_matrix(e2), samples)
    assert report.passed and m == 1

    samples, _ = structure_agent.sample_points(so3, 16, seed=42)
    m, report = structure_agent.corank_check(structure_agent.structure_matrix(so3), samples)
    assert report.passed and m == 2


def test_corank_fails_where_angular_momentum_vanishes(structure_agent, so3):
    samples, _ = structure_agent.sample_points(so3, 8, seed=42)
    # q parallel to p: L = 0
    degenerate = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    _, report = structure_agent.corank_check(structure_agent.structure_matrix(so3), samples + [degenerate])
    record = report.check("corank")
    assert not record.passed
    assert record.anchor == ANCHOR_CORANK
    assert 4 in record.details["coranks"]


def test_corank_failure_names_the_integrability_condition(structure_agent, so3):
    degenerate = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    m, report = structure_agent.corank_check(structure_agent.structure_matrix(so3), [degenerate])
    failure = report.failures()[0]
    assert failure.name == "corank"
    assert failure.anchor.startswith("integrability (iii)")
    assert "constant corank" in failure.anchor
    assert failure.details["coranks"] == [4]
    assert failure.flagged == ["observed coranks [4], expected 2"]
    assert m == 2


def test_involution_check(structure_agent):
    system = parse_spec_text(ABELIAN_PAIR.replace("n = 2", "n = 2\nkind = pis"))
    report = structure_agent.involution_check(system, [system.reference_point, np.array([0.3, -0.2, 0.5, 1.0])])
    assert report.passed


def test_lie_poisson_bivector_examples(structure_agent, e2):
    so3 = LieAlgebraSpec.from_entries(3, SO3_ALGEBRA)
    np.testing.assert_array_equal(structure_agent.lie_poisson_bivector(so3, [0, 0, 1]),
                                  [[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    np.testing.assert_array_equal(structure_agent.lie_poisson_bivector(so3, [0, 0, 0]), np.zeros((3, 3)))
    w = structure_agent.lie_poisson_bivector(e2.lie_algebra, [1, 0, 0])
    assert np.count_nonzero(w) == 2
    assert w[1, 2] == -w[2, 1] != 0


def test_lie_algebra_identities():
    assert LieAlgebraSpec.from_entries(3, SO3_ALGEBRA).check_identities() == (0.0, 0.0)
    with pytest.raises(ValueError):
        LieAlgebraSpec.from_entries(3, {(1, 2, 3): 1.0, (2, 1, 3): 1.0})


def test_null_space_is_spanned_by_casimir_gradient(structure_agent, e2):
    smat = structure_agent.structure_matrix(e2)
    z = np.array([0.1, -0.3, 0.6, 0.8])
    kernel = structure_agent.null_space_basis(smat, z)
    assert kernel.shape == (3, 1)
    direction = np.array([0.6, 0.8, 0.0])
    assert abs(abs(kernel[:, 0] @ direction) - 1.0) < 1e-12


def test_casimir_verify_examples(structure_agent, e2, so3):
    samples, _ = structure_agent.sample_points(e2, 16, seed=42)
    report = structure_agent.casimir_verify(e2, CasimirSet.from_system(e2), samples)
    assert report.passed
    assert report.check("casimir_brackets").max_residual < 1e-10

    samples, _ = structure_agent.sample_points(so3, 16, seed=42)
    assert structure_agent.casimir_verify(so3, CasimirSet.from_system(so3), samples).passed


def test_wrong_casimir_fails(structure_agent):
    system = _e2_with_casimir("H3")
    samples, _ = structure_agent.sample_points(system, 16, seed=42)
    report = structure_agent.casimir_verify(system, CasimirSet.from_system(system), samples)
    assert not report.check("casimir_brackets").passed


def test_transverse_coordinates(structure_agent):
    abelian = parse_spec_text(ABELIAN_PAIR)
    cas = CasimirSet.from_system(abelian)
    assert structure_agent.transverse_coordinates(abelian, cas, [[0.5, 0.5]]) == []

    system = parse_spec_text(E2_RAW)
    cas = CasimirSet.from_system(system)
    samples, _ = structure_agent.sample_points(system, 16, seed=42)
    gradient = GradientField(system.integral_exprs, system.n)
    chosen = structure_agent.transverse_coordinates(system, cas, [gradient.values(z) for z in samples])
    assert len(chosen) == 2 and 2 in chosen
    coords = [system.integral_exprs[i] for i in chosen]
    assert structure_agent.transverse_rank_check(system, cas, coords, samples).passed


def test_coinduced_and_leaf_brackets(structure_agent, e2):
    samples, _ = structure_agent.sample_points(e2, 16, seed=42)
    assert structure_agent.coinduced_bracket_check(e2, samples).passed
    coords = [e2.pull_back(t.expr) for t in e2.transverse]
    report = structure_agent.leaf_bracket_check(e2, coords, samples)
    assert report.passed
    bracket = np.array(report.checks[0].details["bracket_at_first_sample"])
    assert abs(bracket[0, 1]) == pytest.approx(1.0)


@pytest.mark.parametrize("name, m, abelian", [
    ("harmonic1d", 1, True),
    ("oscillator2d", 2, True),
    ("e2-noncommutative", 1, False),
    ("so3-momentum", 2, False),
])
def test_run_all_on_catalog(structure_agent, name, m, abelian):
    system = load_catalog(name)
    samples, _ = structure_agent.sample_points(system, 32, seed=42)
    result = structure_agent.run_all(system, samples, seed=42)
    report = result["report"]
    assert report.passed, [c.name for c in report.failures()]
    assert report.results["m"] == m
    assert report.results["abelian"] is abelian
# end file
