# file: aacord/systems/models.py
"""System definitions: integrals, Casimirs, Lie algebra data and tolerances."""
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from aacord.mechanics.expr import Expr, Var, compile_exprs, parse
from aacord.mechanics.symplectic import GradientField, phase_variables
from aacord.utils.config import ToleranceConfig

__all__ = ["EntryError", "NamedExpr", "LieAlgebraSpec", "SystemDef", "CasimirSet", "ToleranceConfig"]


class EntryError(ValueError):
    """Validation failure tied to a section entry, so readers can point at its line."""

    def __init__(self, message: str, section: Optional[str] = None, key: Optional[str] = None,
                 line: Optional[int] = None):
        super().__init__(message)
        self.section = section
        self.key = key
        self.line = line


class NamedExpr(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    source: str
    line: Optional[int] = None
    _expr: Expr = PrivateAttr()

    def model_post_init(self, __context) -> None:
        self._expr = parse(self.source)

    @property
    def expr(self) -> Expr:
        return self._expr


class LieAlgebraSpec(BaseModel):
    """Structure constants ``c[i][j][h]`` of ``{H_i, H_j} = c_ij^h H_h`` (0-based storage)."""
    model_config = ConfigDict(frozen=True)

    dimension: int = Field(ge=1)
    constants: List[List[List[float]]]

    @model_validator(mode="after")
    def _check_shape(self) -> "LieAlgebraSpec":
        if np.asarray(self.constants, dtype=float).shape != (self.dimension,) * 3:
            raise ValueError(f"structure constants must be a {self.dimension}^3 array")
        return self

    @classmethod
    def from_entries(cls, dimension: int, entries: Dict[Tuple[int, int, int], float]) -> "LieAlgebraSpec":
        """Build from 1-based ``(i, j, h) -> c_ij^h``; the antisymmetric partner is implied."""
        c = np.zeros((dimension,) * 3)
        given = np.zeros((dimension,) * 3, dtype=bool)
        for (i, j, h), value in entries.items():
            for index in (i, j, h):
                if not 1 <= index <= dimension:
                    raise ValueError(f"structure constant index {index} outside 1..{dimension}")
            a, b, r = i - 1, j - 1, h - 1
            if given[a, b, r] and c[a, b, r] != value:
                raise ValueError(f"conflicting values for c_{i}{j}^{h}")
            c[a, b, r] = value
            given[a, b, r] = True
            if given[b, a, r] and c[b, a, r] != -value:
                raise ValueError(f"c_{i}{j}^{h} and c_{j}{i}^{h} are not antisymmetric")
            c[b, a, r] = -value
            given[b, a, r] = True
        return cls(dimension=dimension, constants=c.tolist())

    @property
    def tensor(self) -> np.ndarray:
        return np.asarray(self.constants, dtype=float)

    def bivector(self, x: Sequence[float]) -> np.ndarray:
        """w^{ij}(x) = c_ij^h x_h."""
        return np.einsum("ijh,h->ij", self.tensor, np.asarray(x, dtype=float))

    def check_identities(self) -> Tuple[float, float]:
        """Return (antisymmetry residual, Jacobi residual); both vanish for a Lie algebra."""
        c = self.tensor
        antisym = float(np.max(np.abs(c + c.transpose(1, 0, 2)))) if c.size else 0.0
        # sum over cyclic (i, j, h) of c_ij^l c_lh^m
        term = np.einsum("ijl,lhm->ijhm", c, c)
        jacobi = term + term.transpose(1, 2, 0, 3) + term.transpose(2, 0, 1, 3)
        return antisym, float(np.max(np.abs(jacobi))) if jacobi.size else 0.0

    def rank(self, samples: int = 8, seed: int = 0, tol: float = 1e-10) -> int:
        """Generic rank of w(x) over random points."""
        rng = np.random.default_rng(seed)
        best = 0
        for _ in range(samples):
            sv = np.linalg.svd(self.bivector(rng.normal(size=self.dimension)), compute_uv=False)
            if sv.size and sv[0] > 0:
                best = max(best, int(np.sum(sv > tol * sv[0])))
        return best

    @property
    def corank(self) -> int:
        return self.dimension - self.rank()


class SystemDef(BaseModel):
    """A completely (cis) or partially (pis) integrable system on R^2n."""
    model_config = ConfigDict(frozen=True)

    name: str
    description: str = ""
    kind: Literal["cis", "pis"] = "cis"
    n: int = Field(ge=1)
    integrals: List[NamedExpr]
    casimirs: List[NamedExpr] = Field(default_factory=list)
    transverse: List[NamedExpr] = Field(default_factory=list)
    hamiltonian: Optional[str] = None
    lie_algebra: Optional[LieAlgebraSpec] = None
    reference: List[float]
    sampling_box: List[Tuple[float, float]]
    domain: Dict[str, Tuple[float, float]] = Field(default_factory=dict)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)

    _hamiltonian: Optional[Expr] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_system(self) -> "SystemDef":
        n, k = self.n, len(self.integrals)
        variables = set(phase_variables(n))
        if self.kind == "cis" and not n <= k < 2 * n:
            raise EntryError(f"k must satisfy n <= k < 2n (got n={n}, k={k})", "integrals")
        if self.kind == "pis" and not 1 <= k <= n:
            raise EntryError(f"functions in involution must number 1..n (got n={n}, m={k})", "integrals")

        names = [item.name for item in self.integrals]
        _unique(self.integrals + self.casimirs + self.transverse)
        for item in self.integrals:
            if item.name in variables:
                raise EntryError(f"integral name '{item.name}' clashes with a phase variable", "integrals",
                                 item.name, item.line)
        for item in self.integrals:
            _resolve(item, variables, "integral", "integrals")
        for item in self.casimirs:
            _resolve(item, set(names), "Casimir", "casimirs")
        for item in self.transverse:
            _resolve(item, set(names) | variables, "transverse coordinate", "transverse")

        m = self.m
        if self.transverse and len(self.transverse) != 2 * (n - m):
            raise EntryError(f"expected {2 * (n - m)} transverse coordinates, got {len(self.transverse)}",
                             "transverse")
        if self.kind == "pis" and m < n and not self.transverse:
            raise EntryError("partially integrable systems with m < n need a [transverse] section", "system", "kind")
        if self.lie_algebra is not None and self.lie_algebra.dimension != k:
            raise EntryError(f"lie algebra dimension {self.lie_algebra.dimension} != number of integrals {k}",
                             "lie_algebra")

        if len(self.reference) != 2 * n or not np.all(np.isfinite(self.reference)):
            raise EntryError(f"reference point must have {2 * n} finite coordinates", "reference")
        if len(self.sampling_box) != 2 * n:
            raise ValueError(f"sampling box must bound all {2 * n} phase variables")
        for (lo, hi), value, var in zip(self.sampling_box, self.reference, phase_variables(n)):
            if not lo < hi:
                raise EntryError(f"empty sampling interval for {var}", "domain", var)
            if not lo <= value <= hi:
                raise EntryError(f"reference {var}={value} lies outside the sampling box", "reference", var)
        base = set(self.base_names)
        for key, (lo, hi) in self.domain.items():
            if key not in base:
                raise EntryError(f"domain bound for unknown base coordinate '{key}'", "domain", key)
            if not lo < hi:
                raise EntryError(f"empty domain interval for {key}", "domain", key)

        if self.hamiltonian is not None:
            tree = parse(self.hamiltonian)
            allowed = set(names) | {c.name for c in self.casimirs} | variables
            unknown = sorted(tree.free_variables() - allowed)
            if unknown:
                raise EntryError(f"unknown variable '{unknown[0]}' in hamiltonian", "system", "hamiltonian")
        return self

    # -- sizes --------------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.integrals)

    @property
    def m(self) -> int:
        return self.k if self.kind == "pis" else 2 * self.n - self.k

    @property
    def abelian_declared(self) -> bool:
        return self.kind == "pis" or self.k == self.n

    @property
    def variables(self) -> Tuple[str, ...]:
        return phase_variables(self.n)

    # -- expressions ----------------------------------------------------------

    @property
    def integral_names(self) -> List[str]:
        return [item.name for item in self.integrals]

    @property
    def integral_exprs(self) -> List[Expr]:
        return [item.expr for item in self.integrals]

    def pull_back(self, e: Expr) -> Expr:
        """Compose an expression in integral names with H (Casimir names resolve too)."""
        mapping: Dict[str, Expr] = {item.name: item.expr for item in self.integrals}
        pulled = e.substitute({c.name: c.expr.substitute(mapping) for c in self.casimirs})
        return pulled.substitute(mapping)

    @property
    def casimir_names(self) -> List[str]:
        if self.casimirs:
            return [c.name for c in self.casimirs]
        if self.abelian_declared:
            return self.integral_names
        return []

    @property
    def casimir_base_exprs(self) -> List[Expr]:
        if self.casimirs:
            return [c.expr for c in self.casimirs]
        if self.abelian_declared:
            return [Var(name) for name in self.integral_names]
        return []

    @property
    def transverse_names(self) -> List[str]:
        return [t.name for t in self.transverse]

    @property
    def base_names(self) -> List[str]:
        if self.transverse:
            return self.casimir_names + self.transverse_names
        return self.casimir_names + [name for name in self.integral_names if name not in self.casimir_names]

    @property
    def hamiltonian_expr(self) -> Expr:
        """The Hamiltonian used for equations of motion (defaults to the first Casimir)."""
        if self._hamiltonian is None:
            if self.hamiltonian is not None:
                tree = parse(self.hamiltonian)
            elif self.casimir_base_exprs:
                tree = self.casimir_base_exprs[0]
            else:
                tree = self.integral_exprs[0]
            self._hamiltonian = self.pull_back(tree)
        return self._hamiltonian

    # -- boxes ----------------------------------------------------------------

    @property
    def reference_point(self) -> np.ndarray:
        return np.asarray(self.reference, dtype=float)

    @property
    def box_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        box = np.asarray(self.sampling_box, dtype=float)
        return box[:, 0], box[:, 1]

    def with_tolerances(self, overrides: Dict[str, object]) -> "SystemDef":
        if not overrides:
            return self
        return self.model_copy(update={"tolerances": self.tolerances.with_overrides(dict(overrides))})


class CasimirSet:
    """Casimirs C_lambda over the base coordinates and their pull-backs H*C."""

    def __init__(self, names: Sequence[str], base_exprs: Sequence[Expr], system: SystemDef):
        self.names = list(names)
        self.base_exprs = list(base_exprs)
        self.base_variables = system.integral_names
        self.pulled = [system.pull_back(e) for e in self.base_exprs]
        self.m = len(self.base_exprs)
        self._base_values = compile_exprs(self.base_exprs, self.base_variables)
        self._base_gradient = compile_exprs(
            [e.derivative(v) for e in self.base_exprs for v in self.base_variables], self.base_variables
        )
        self.phase_gradient = GradientField(self.pulled, system.n)

    @classmethod
    def from_system(cls, system: SystemDef) -> "CasimirSet":
        return cls(system.casimir_names, system.casimir_base_exprs, system)

    def base_values(self, x: Sequence[float]) -> np.ndarray:
        return self._base_values(list(x))

    def base_jacobian(self, x: Sequence[float]) -> np.ndarray:
        """The m x k Jacobian dC_lambda/dx_i at a base point."""
        return self._base_gradient(list(x)).reshape(self.m, len(self.base_variables))

    def values(self, z: Sequence[float]) -> np.ndarray:
        return self.phase_gradient.values(z)


def _unique(items: List[NamedExpr]) -> None:
    seen = set()
    for item in items:
        if item.name in seen:
            raise EntryError(f"duplicate name '{item.name}'", key=item.name, line=item.line)
        seen.add(item.name)


def _resolve(item: NamedExpr, allowed: set, what: str, section: str) -> None:
    unknown = sorted(item.expr.free_variables() - allowed)
    if unknown:
        raise EntryError(f"unknown variable '{unknown[0]}' in {what} {item.name}", section, item.name, item.line)
# end file
