# file: aacord/systems/spec_file.py
"""Reader for system spec files.

A spec file is UTF-8 text made of ``[section]`` headers and ``key = value``
lines; ``#`` starts a comment. Sections:

``[system]``       name, n, kind (cis | pis), description, hamiltonian
``[integrals]``    name = expression in q1..qn, p1..pn
``[casimirs]``     name = expression in the integral names
``[transverse]``   name = expression in integral names and/or phase variables
``[lie_algebra]``  ``i j h = c`` sets c_ij^h (1-based), the partner c_ji^h is implied
``[reference]``    ``point = v1, v2, ...`` or one line per phase variable
``[domain]``       ``name = lo, hi``: phase variables bound the sampling box,
                   base coordinates (Casimirs, transverse names) the chart domain
``[tolerances]``   overrides, e.g. ``tol_blocks = 1e-6`` or ``search.half_width = 10``

Numbers may be constant expressions and may use ``pi``.
"""
import math
import re
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from aacord.mechanics.expr import parse
from aacord.mechanics.symplectic import phase_variables
from aacord.systems.models import EntryError, LieAlgebraSpec, NamedExpr, SystemDef
from aacord.utils.config import ToleranceConfig
from aacord.utils.errors import AacordError, SpecError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

SECTIONS = ("system", "integrals", "casimirs", "transverse", "lie_algebra", "reference", "domain", "tolerances")
SYSTEM_KEYS = ("name", "n", "kind", "description", "hamiltonian")
_INT = re.compile(r"^[+-]?\d+$")
_CONSTANTS = {"pi": math.pi}

Entry = Tuple[str, str, int]


class SpecFile:
    """Sections of a spec file as ordered ``(key, value, line)`` entries."""

    def __init__(self, text: str, source: str = "<spec>"):
        self.source = source
        self.sections: Dict[str, List[Entry]] = {}
        self.section_lines: Dict[str, int] = {}
        self._read(text)

    def _read(self, text: str) -> None:
        current: Optional[str] = None
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not line.endswith("]"):
                    raise SpecError(f"malformed section header {line!r}", number)
                current = line[1:-1].strip().lower()
                if current not in SECTIONS:
                    raise SpecError(f"unknown section [{current}]", number)
                if current in self.sections:
                    raise SpecError(f"section [{current}] appears twice", number)
                self.sections[current] = []
                self.section_lines[current] = number
                continue
            if current is None:
                raise SpecError("entry outside of any section", number)
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key or not value:
                raise SpecError(f"expected 'key = value', got {line!r}", number)
            if any(existing == key for existing, _, _ in self.sections[current]):
                raise SpecError(f"duplicate key '{key}' in [{current}]", number)
            self.sections[current].append((key, value, number))

    def entries(self, section: str) -> List[Entry]:
        return self.sections.get(section, [])

    def to_system(self) -> SystemDef:
        if "system" not in self.sections:
            raise SpecError(f"{self.source}: missing [system] section")
        if not self.entries("integrals"):
            raise SpecError(f"{self.source}: missing [integrals] section")
        header = self._system_header()
        n = header["n"]
        variables = phase_variables(n)
        integrals = [self._named(key, value, line) for key, value, line in self.entries("integrals")]
        casimirs = [self._named(key, value, line) for key, value, line in self.entries("casimirs")]
        transverse = [self._named(key, value, line) for key, value, line in self.entries("transverse")]
        reference = self._reference(variables)
        box, domain = self._domain(variables, reference)
        data = dict(
            name=header["name"],
            description=header.get("description", ""),
            kind=header.get("kind", "cis"),
            n=n,
            integrals=integrals,
            casimirs=casimirs,
            transverse=transverse,
            hamiltonian=header.get("hamiltonian"),
            lie_algebra=self._lie_algebra(len(integrals)),
            reference=reference,
            sampling_box=box,
            domain=domain,
            tolerances=self._tolerances(),
        )
        try:
            system = SystemDef(**data)
        except ValidationError as exc:
            first = exc.errors()[0]
            message = str(first.get("msg", exc)).removeprefix("Value error, ")
            cause = (first.get("ctx") or {}).get("error")
            raise SpecError(f"{self.source}: {message}", self._line_of(cause)) from exc
        except AacordError as exc:
            raise SpecError(f"{self.source}: {exc}", self.section_lines.get("system")) from exc
        logger.info(f"[Spec] loaded {system.name}: n={system.n}, k={system.k}, kind={system.kind}, m={system.m}")
        return system

    def _line_of(self, cause: object) -> Optional[int]:
        """Line of the entry a validation error points at; the [system] header otherwise."""
        fallback = self.section_lines.get("system")
        if not isinstance(cause, EntryError):
            return fallback
        if cause.line is not None:
            return cause.line
        if cause.section is None:
            return fallback
        keys = [cause.key] + (["point"] if cause.section == "reference" else [])
        for key in keys:
            for existing, _, line in self.entries(cause.section):
                if existing == key:
                    return line
        return self.section_lines.get(cause.section, fallback)

    # -- sections ----------------------------------------------------------------

    def _system_header(self) -> Dict[str, object]:
        header: Dict[str, object] = {}
        for key, value, line in self.entries("system"):
            if key not in SYSTEM_KEYS:
                raise SpecError(f"unknown [system] key '{key}'", line)
            if key == "n":
                if not _INT.match(value):
                    raise SpecError(f"n must be a positive integer, got {value!r}", line)
                header["n"] = int(value)
            elif key == "kind":
                if value.lower() not in ("cis", "pis"):
                    raise SpecError(f"kind must be 'cis' or 'pis', got {value!r}", line)
                header["kind"] = value.lower()
            elif key == "hamiltonian":
                self._check_expr(value, line)
                header["hamiltonian"] = value
            else:
                header[key] = value
        for required in ("name", "n"):
            if required not in header:
                raise SpecError(f"[system] needs '{required}'", self.section_lines["system"])
        if header["n"] < 1:
            raise SpecError("n must be a positive integer", self.section_lines["system"])
        return header

    def _named(self, key: str, value: str, line: int) -> NamedExpr:
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", key):
            raise SpecError(f"invalid name {key!r}", line)
        self._check_expr(value, line)
        return NamedExpr(name=key, source=value, line=line)

    @staticmethod
    def _check_expr(value: str, line: int) -> None:
        try:
            parse(value)
        except AacordError as exc:
            raise SpecError(str(exc), line) from exc

    def _lie_algebra(self, dimension: int) -> Optional[LieAlgebraSpec]:
        entries = self.entries("lie_algebra")
        if not entries:
            return None
        constants: Dict[Tuple[int, int, int], float] = {}
        for key, value, line in entries:
            parts = key.split()
            if len(parts) != 3 or not all(_INT.match(p) for p in parts):
                raise SpecError(f"structure constant key must be 'i j h', got {key!r}", line)
            constants[tuple(int(p) for p in parts)] = _number(value, line)
        try:
            return LieAlgebraSpec.from_entries(dimension, constants)
        except ValueError as exc:
            raise SpecError(str(exc), self.section_lines["lie_algebra"]) from exc

    def _reference(self, variables: Tuple[str, ...]) -> List[float]:
        entries = self.entries("reference")
        if not entries:
            raise SpecError(f"{self.source}: missing [reference] section")
        if len(entries) == 1 and entries[0][0] == "point":
            _, value, line = entries[0]
            values = _numbers(value, line)
            if len(values) != len(variables):
                raise SpecError(f"reference point needs {len(variables)} coordinates, got {len(values)}", line)
            return values
        point: Dict[str, float] = {}
        for key, value, line in entries:
            if key not in variables:
                raise SpecError(f"unknown variable '{key}' in [reference]", line)
            point[key] = _number(value, line)
        missing = [v for v in variables if v not in point]
        if missing:
            raise SpecError(f"[reference] misses {', '.join(missing)}", self.section_lines["reference"])
        return [point[v] for v in variables]

    def _domain(self, variables: Tuple[str, ...],
                reference: List[float]) -> Tuple[List[Tuple[float, float]], Dict[str, Tuple[float, float]]]:
        bounds: Dict[str, Tuple[float, float]] = {}
        domain: Dict[str, Tuple[float, float]] = {}
        for key, value, line in self.entries("domain"):
            values = _numbers(value, line)
            if len(values) != 2:
                raise SpecError(f"domain bound for '{key}' needs 'lo, hi'", line)
            target = bounds if key in variables else domain
            target[key] = (values[0], values[1])
        # unbounded phase variables get a unit interval around the reference
        box = [bounds.get(v, (ref - 1.0, ref + 1.0)) for v, ref in zip(variables, reference)]
        return box, domain

    def _tolerances(self) -> ToleranceConfig:
        overrides: Dict[str, object] = {}
        for key, value, line in self.entries("tolerances"):
            overrides[key] = int(value) if _INT.match(value) else _number(value, line)
        try:
            return ToleranceConfig().with_overrides(overrides)
        except KeyError as exc:
            raise SpecError(f"unknown tolerance {exc.args[0]!r}", self.section_lines["tolerances"]) from exc
        except ValidationError as exc:
            raise SpecError(f"invalid tolerance: {exc.errors()[0]['msg']}", self.section_lines["tolerances"]) from exc


def _split_top_level(text: str) -> List[str]:
    parts, depth, start = [], 0, 0
    for index, char in enumerate(text):
        if char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
        elif char == "," and depth == 0:
            parts.append(text[start:index])
            start = index + 1
    parts.append(text[start:])
    return [p.strip() for p in parts]


def _number(text: str, line: int) -> float:
    try:
        tree = parse(text)
        return tree.evaluate(_CONSTANTS)
    except AacordError as exc:
        raise SpecError(f"invalid number {text!r}: {exc}", line) from exc


def _numbers(text: str, line: int) -> List[float]:
    return [_number(part, line) for part in _split_top_level(text)]


def parse_spec_text(text: str, source: str = "<spec>") -> SystemDef:
    return SpecFile(text, source).to_system()


def load_spec(path: str) -> SystemDef:
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc.strerror}") from exc
    except UnicodeDecodeError as exc:
        raise SpecError(f"spec file {path} is not UTF-8") from exc
    return parse_spec_text(text, source=path)
# end file
