# file: aacord/systems/catalog.py
"""Built-in systems, written in the spec file format and read by the same parser."""
import os
from typing import Dict, List

from aacord.systems.models import SystemDef
from aacord.systems.spec_file import load_spec, parse_spec_text
from aacord.utils.errors import SpecError

HARMONIC_1D = """
[system]
name = harmonic1d
n = 1
description = harmonic oscillator, circles H = E

[integrals]
H = (p1^2 + q1^2)/2

[reference]
point = 1, 0

[domain]
q1 = -2, 2
p1 = -2, 2
H = 0.1, 2
"""

FREE_1D = """
[system]
name = free1d
n = 1
description = free particle H = p, fibers are lines

[integrals]
H = p1

[reference]
point = 0, 1

[domain]
q1 = -5, 5
p1 = 0.5, 2
H = 0.5, 2
"""

OSCILLATOR_2D = """
[system]
name = oscillator2d
n = 2
description = uncoupled oscillators with frequencies (1, 2)
hamiltonian = H1 + H2

[integrals]
H1 = (p1^2 + q1^2)/2
H2 = (p2^2 + 4*q2^2)/2

[reference]
point = 1, 0.5, 0, 0

[domain]
q1 = -1.2, 1.2
q2 = -0.6, 0.6
p1 = -1.2, 1.2
p2 = -1.2, 1.2
H1 = 0.3, 0.8
H2 = 0.3, 0.8

[tolerances]
grid_size = 6
search.half_width = 8
"""

PENDULUM_LIBRATION = """
[system]
name = pendulum-libration
n = 1
description = pendulum below the separatrix, H = p^2/2 - cos q

[integrals]
H = p1^2/2 - cos(q1)

[reference]
point = 0, 0.8944271909999159

[domain]
q1 = -1.5, 1.5
p1 = -1.3, 1.3
H = -0.9, -0.1
"""

E2_NONCOMMUTATIVE = """
[system]
name = e2-noncommutative
n = 2
description = momenta and angular momentum in the plane, brackets of the Euclidean algebra e(2)
hamiltonian = C

[integrals]
H1 = p1
H2 = p2
H3 = q1*p2 - q2*p1

[casimirs]
C = H1^2 + H2^2

[transverse]
phi = atan2(H2, H1)
ell = H3

[lie_algebra]
1 3 2 = -1
2 3 1 = 1

[reference]
point = 0, 0, 0.8, 0.8

[domain]
q1 = -1, 1
q2 = -1, 1
p1 = 0.2, 1.2
p2 = 0.2, 1.2
C = 0.5, 2
phi = pi/4 - 0.5, pi/4 + 0.5
ell = -1, 1
"""

SO3_MOMENTUM = """
[system]
name = so3-momentum
n = 3
description = free particle in space with its angular momentum, algebra R + so(3)
hamiltonian = E

[integrals]
H = (p1^2 + p2^2 + p3^2)/2
L1 = q2*p3 - q3*p2
L2 = q3*p1 - q1*p3
L3 = q1*p2 - q2*p1

[casimirs]
E = H
Lsq = L1^2 + L2^2 + L3^2

[transverse]
psi = atan2(L2, L1)
ell = L3

[lie_algebra]
2 3 4 = 1
3 4 2 = 1
4 2 3 = 1

[reference]
point = 1, 0, 0, 0, 0.7071067811865476, 0.7071067811865476

[domain]
q1 = 0.5, 1.5
q2 = -0.5, 0.5
q3 = -0.5, 0.5
p1 = -0.5, 0.5
p2 = 0.2, 1.2
p3 = 0.2, 1.2
E = 0.4, 0.6
Lsq = 0.8, 1.2
psi = -pi/2 - 0.3, -pi/2 + 0.3
ell = 0.6, 0.8

[tolerances]
grid_size = 6
search.half_width = 8
"""

CATALOG: Dict[str, str] = {
    "harmonic1d": HARMONIC_1D,
    "free1d": FREE_1D,
    "oscillator2d": OSCILLATOR_2D,
    "pendulum-libration": PENDULUM_LIBRATION,
    "e2-noncommutative": E2_NONCOMMUTATIVE,
    "so3-momentum": SO3_MOMENTUM,
}


def catalog_names() -> List[str]:
    return list(CATALOG)


def load_catalog(name: str) -> SystemDef:
    try:
        text = CATALOG[name]
    except KeyError:
        raise SpecError(f"unknown catalog system '{name}' (known: {', '.join(CATALOG)})") from None
    return parse_spec_text(text, source=f"catalog:{name}")


def resolve_system(target: str, allow_files: bool = False) -> SystemDef:
    """A catalog name or spec text; paths to spec files only with ``allow_files``.

    Only the command line resolves with ``allow_files``.
    """
    if target in CATALOG:
        return load_catalog(target)
    if "[system]" in target:
        return parse_spec_text(target, source="<request>")
    if not allow_files:
        preview = target if len(target) <= 60 else target[:57] + "..."
        raise SpecError(f"'{preview}' is not a catalog system and has no [system] section")
    if os.path.exists(target):
        return load_spec(target)
    raise SpecError(f"'{target}' is neither a catalog system nor a readable spec file")
# end file
