# file: tests/test_spec_file.py
import pytest

from aacord.systems.catalog import CATALOG, catalog_names, load_catalog, resolve_system
from aacord.systems.spec_file import SpecFile, load_spec, parse_spec_text
from aacord.utils.errors import SpecError

PENDULUM = """
# pendulum below the separatrix
[system]
name = pendulum
n = 1

[integrals]
H = p1^2/2 - cos(q1)

[reference]
q1 = 0
p1 = 0.5

[domain]
q1 = -pi/2, pi/2
H = -0.9, -0.5

[tolerances]
tol_blocks = 1e-6
grid_size = 9
search.half_width = 20
"""


def test_sections_keep_line_numbers():
    spec = SpecFile(PENDULUM)
    assert [key for key, _, _ in spec.entries("integrals")] == ["H"]
    assert spec.entries("integrals")[0][2] == 8
    assert spec.section_lines["reference"] == 10


def test_parse_pendulum():
    system = parse_spec_text(PENDULUM)
    assert (system.name, system.n, system.k, system.m, system.kind) == ("pendulum", 1, 1, 1, "cis")
    assert system.reference == [0.0, 0.5]
    assert system.sampling_box[0] == pytest.approx((-1.5707963267948966, 1.5707963267948966))
    # p1 has no bound: unit interval around the reference
    assert system.sampling_box[1] == (-0.5, 1.5)
    assert system.domain == {"H": (-0.9, -0.5)}
    assert system.tolerances.tol_blocks == 1e-6
    assert system.tolerances.grid_size == 9
    assert system.tolerances.search.half_width == 20.0
    assert system.casimir_names == ["H"]
    assert system.base_names == ["H"]


@pytest.mark.parametrize("text, line, fragment", [
    ("[system]\nname = x\nn = 1\n[integrals]\nH = p1 +\n[reference]\npoint = 0, 1\n", 5, "offset"),
    ("[system]\nname = x\nn = one\n[integrals]\nH = p1\n", 3, "positive integer"),
    ("[sistem]\n", 1, "unknown section"),
    ("name = x\n", 1, "outside of any section"),
    ("[system]\nname = x\nname = y\n", 3, "duplicate key"),
    ("[system]\nname = x\nn = 1\ncolour = red\n[integrals]\nH = p1\n", 4, "unknown [system] key"),
    ("[system]\nname = x\nn = 1\n[integrals]\nH = p1\n[reference]\npoint = 0\n", 7, "needs 2 coordinates"),
    ("[system]\nname = x\nn = 1\n[integrals]\nH = p1\n[reference]\npoint = 0, 1\n[tolerances]\nbogus = 1\n",
     8, "unknown tolerance"),
    ("[system]\nname = x\nn = 1\n[integrals]\nH = p1\n[reference]\npoint = 0, 1\n[lie_algebra]\n1 1 = 2\n",
     9, "structure constant key"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(SpecError) as info:
        parse_spec_text(text)
    assert info.value.line == line
    assert fragment in str(info.value)


def test_k_equal_to_2n_is_rejected():
    text = "[system]\nname = x\nn = 1\n[integrals]\nH = p1\nG = q1\n[reference]\npoint = 0, 1\n"
    with pytest.raises(SpecError, match=r"k must satisfy n <= k < 2n \(got n=1, k=2\)"):
        parse_spec_text(text, source="two.spec")


def test_unknown_variable_in_integral():
    text = "[system]\nname = x\nn = 1\n[integrals]\nH = p1 + q2\n[reference]\npoint = 0, 1\n"
    with pytest.raises(SpecError, match="unknown variable 'q2' in integral H") as info:
        parse_spec_text(text)
    assert info.value.line == 5


def test_reference_outside_box_is_rejected():
    text = "[system]\nname = x\nn = 1\n[integrals]\nH = p1\n[reference]\npoint = 0, 1\n[domain]\np1 = 2, 3\n"
    with pytest.raises(SpecError, match="outside the sampling box") as info:
        parse_spec_text(text)
    assert info.value.line == 7


@pytest.mark.parametrize("tail, line, fragment", [
    ("[casimirs]\nH = p1\n", 9, "duplicate name 'H'"),
    ("[domain]\nG = 0, 1\n", 9, "unknown base coordinate 'G'"),
    ("[domain]\nH = 1, 0\n", 9, "empty domain interval"),
])
def test_model_errors_point_at_their_entry(tail, line, fragment):
    text = "[system]\nname = x\nn = 1\n[integrals]\nH = p1\n[reference]\npoint = 0, 1\n" + tail
    with pytest.raises(SpecError) as info:
        parse_spec_text(text)
    assert info.value.line == line
    assert fragment in str(info.value)


def test_missing_sections():
    with pytest.raises(SpecError, match="missing \\[integrals\\]"):
        parse_spec_text("[system]\nname = x\nn = 1\n")
    with pytest.raises(SpecError, match="missing \\[reference\\]"):
        parse_spec_text("[system]\nname = x\nn = 1\n[integrals]\nH = p1\n")


def test_partially_integrable_needs_transverse():
    text = "[system]\nname = x\nn = 2\nkind = pis\n[integrals]\nH = p1\n[reference]\npoint = 0, 0, 1, 0\n"
    with pytest.raises(SpecError, match="need a \\[transverse\\] section"):
        parse_spec_text(text)
    system = parse_spec_text(text + "[transverse]\nx1 = q2\nx2 = p2\n")
    assert (system.kind, system.m, system.base_names) == ("pis", 1, ["H", "x1", "x2"])


def test_load_spec_from_disk(tmp_path):
    path = tmp_path / "pendulum.spec"
    path.write_text(PENDULUM, encoding="utf-8")
    assert load_spec(str(path)).name == "pendulum"
    assert resolve_system(str(path), allow_files=True).name == "pendulum"
    with pytest.raises(SpecError, match="not a catalog system"):
        resolve_system(str(path))
    with pytest.raises(SpecError, match="cannot read"):
        load_spec(str(tmp_path / "missing.spec"))


def test_catalog_entries_all_parse():
    assert catalog_names() == list(CATALOG)
    for name in catalog_names():
        system = load_catalog(name)
        assert system.name == name
        assert system.m == 2 * system.n - system.k
    e2 = load_catalog("e2-noncommutative")
    assert e2.lie_algebra.check_identities() == (0.0, 0.0)
    assert e2.base_names == ["C", "phi", "ell"]


def test_unknown_target():
    with pytest.raises(SpecError, match="unknown catalog system"):
        load_catalog("kepler")
    with pytest.raises(SpecError, match="not a catalog system"):
        resolve_system("kepler")
    with pytest.raises(SpecError, match="neither a catalog system"):
        resolve_system("kepler", allow_files=True)
    assert resolve_system(PENDULUM).name == "pendulum"
# end file
