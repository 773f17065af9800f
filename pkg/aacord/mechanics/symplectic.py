# file: aacord/mechanics/symplectic.py
"""Canonical symplectic structure on R^2n.

Phase points are ordered ``(q1..qn, p1..pn)``. The fixed conventions are

* ``Omega = sum_a dp_a ^ dq^a``, i.e. ``Omega(X, Y) = X_p . Y_q - X_q . Y_p``
* ``X_H = (dH/dp, -dH/dq)`` so that ``X_H _| Omega = -dH``
* ``{f, g} = sum_a df/dq^a dg/dp_a - df/dp_a dg/dq^a`` so that ``{q^a, p_a} = 1``
"""
from typing import List, Sequence, Tuple, Union

import numpy as np

from aacord.mechanics.expr import Expr, ZERO, add, compile_exprs, mul, neg, sub


def phase_variables(n: int) -> Tuple[str, ...]:
    return tuple(f"q{a}" for a in range(1, n + 1)) + tuple(f"p{a}" for a in range(1, n + 1))


class SymplecticStructure:
    """Constant canonical form and Liouville primitive ``theta = sum_a p_a dq^a``."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n
        self.variables = phase_variables(n)
        eye = np.eye(n)
        zero = np.zeros((n, n))
        # Omega(X, Y) = X^T omega Y
        self.omega = np.block([[zero, -eye], [eye, zero]])
        # X_H = poisson @ grad H and {f, g} = grad f^T poisson grad g
        self.poisson = np.block([[zero, eye], [-eye, zero]])

    def pair(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ self.omega @ y)

    def liouville_coefficients(self, z: np.ndarray) -> np.ndarray:
        """Components of theta at ``z``: p on the dq slots, zero on the dp slots."""
        z = np.asarray(z, dtype=float)
        return np.concatenate([z[self.n:], np.zeros(self.n)])

    def exterior_derivative_of_liouville(self) -> np.ndarray:
        """d(theta) as an antisymmetric matrix, from the constant coefficient rule."""
        n = self.n
        d_theta = np.zeros((2 * n, 2 * n))
        # theta_i = z_{n+i} on slot i, so d theta = sum_i dp_i ^ dq^i
        for i in range(n):
            d_theta[n + i, i] += 1.0
            d_theta[i, n + i] -= 1.0
        return d_theta

    def check(self) -> Tuple[float, float, float]:
        """Return (antisymmetry residual, smallest singular value, |d theta - Omega|)."""
        antisym = float(np.max(np.abs(self.omega + self.omega.T)))
        sigma_min = float(np.linalg.svd(self.omega, compute_uv=False)[-1])
        exact = float(np.max(np.abs(self.exterior_derivative_of_liouville() - self.omega)))
        return antisym, sigma_min, exact


class GradientField:
    """Compiled partial derivatives of several expressions: ``jacobian(z)`` is k x 2n."""

    def __init__(self, exprs: Sequence[Expr], n: int):
        self.exprs = tuple(exprs)
        self.n = n
        self.variables = phase_variables(n)
        self.partials: Tuple[Tuple[Expr, ...], ...] = tuple(
            tuple(e.derivative(v) for v in self.variables) for e in self.exprs
        )
        flat = [d for row in self.partials for d in row]
        self._values = compile_exprs(self.exprs, self.variables)
        self._jacobian = compile_exprs(flat, self.variables)
        self._shape = (len(self.exprs), 2 * n)

    def values(self, z: Sequence[float]) -> np.ndarray:
        return self._values(_as_list(z))

    def jacobian(self, z: Sequence[float]) -> np.ndarray:
        return self._jacobian(_as_list(z)).reshape(self._shape)


class VectorFieldHandle:
    """Hamiltonian vector field of one generating function, with cached partials."""

    def __init__(self, generator: Expr, n: int):
        self.generator = generator
        self.n = n
        self.gradient = GradientField([generator], n)
        partials = self.gradient.partials[0]
        self.partials = partials
        self.components: Tuple[Expr, ...] = tuple(partials[n:]) + tuple(neg(d) for d in partials[:n])
        self._poisson = SymplecticStructure(n).poisson

    def __call__(self, z: Sequence[float]) -> np.ndarray:
        return self._poisson @ self.gradient.jacobian(z)[0]


class FieldStack:
    """The m commuting vector fields ``v_lambda`` evaluated together.

    ``matrix(z)`` returns the m x 2n matrix whose rows are ``v_lambda(z)``.
    """

    def __init__(self, handles: Sequence[VectorFieldHandle]):
        if not handles:
            raise ValueError("a field stack needs at least one field")
        n = handles[0].n
        if any(h.n != n for h in handles):
            raise ValueError("fields live on different phase spaces")
        self.handles = tuple(handles)
        self.n = n
        self.m = len(handles)
        self.gradient = GradientField([h.generator for h in handles], n)
        self._poisson_t = SymplecticStructure(n).poisson.T

    @classmethod
    def from_generators(cls, generators: Sequence[Expr], n: int) -> "FieldStack":
        return cls([hamiltonian_vector_field(g, n) for g in generators])

    def matrix(self, z: Sequence[float]) -> np.ndarray:
        return self.gradient.jacobian(z) @ self._poisson_t

    def combined(self, s: Sequence[float]):
        """Right-hand side ``f(t, z) = sum_lambda s_lambda v_lambda(z)``."""
        weights = np.asarray(s, dtype=float)
        poisson_t = self._poisson_t
        jacobian = self.gradient.jacobian

        def rhs(t: float, z: np.ndarray) -> np.ndarray:
            return (weights @ jacobian(z)) @ poisson_t

        return rhs


FieldsLike = Union[FieldStack, VectorFieldHandle, Sequence[VectorFieldHandle]]


def as_field_stack(fields: FieldsLike) -> FieldStack:
    if isinstance(fields, FieldStack):
        return fields
    if isinstance(fields, VectorFieldHandle):
        return FieldStack([fields])
    return FieldStack(list(fields))


def _as_list(z: Sequence[float]) -> List[float]:
    if isinstance(z, np.ndarray):
        return z.tolist()
    return list(z)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def hamiltonian_vector_field(H: Expr, n: int) -> VectorFieldHandle:
    """X_H = (dH/dp) d/dq - (dH/dq) d/dp."""
    return VectorFieldHandle(H, n)


def poisson_bracket(f: Expr, g: Expr, n: int) -> Expr:
    """Symbolic {f, g} over the phase variables of R^2n."""
    out: Expr = ZERO
    for a in range(1, n + 1):
        q, p = f"q{a}", f"p{a}"
        out = add(out, sub(mul(f.derivative(q), g.derivative(p)), mul(f.derivative(p), g.derivative(q))))
    return out


def liouville_integrand(path_point: Sequence[float], velocity: Sequence[float]) -> float:
    """theta(z_dot) = sum_a p_a qdot^a."""
    z = np.asarray(path_point, dtype=float)
    v = np.asarray(velocity, dtype=float)
    if z.shape != v.shape or z.size % 2:
        raise ValueError("point and velocity must both have length 2n")
    n = z.size // 2
    return float(z[n:] @ v[:n])
# end file
