# file: aacord/agents/chart_agent.py
"""Generalized action-angle charts (I, x, t, phi) over a box in the base.

A chart is anchored on the affine section through the reference point spanned
by the directions Euclidean-orthogonal to the flow fields. Every fiber in the
domain meets the section in one anchor, found by Newton on the base map. Angles
are flow times of the action functions measured from that anchor, shifted by
the gauge E(I, x) that removes the dI ^ dI and dI ^ dx terms of the pulled-back
form, so that Omega = dI ^ dy' + Omega_AB dx ^ dx.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline, RegularGridInterpolator
from scipy.linalg import null_space
from scipy.stats import qmc

from aacord.agents.lattice_agent import LatticeAgent, PeriodLattice, adapted_inverse
from aacord.mechanics.expr import Expr
from aacord.mechanics.flow import flow_map, flow_orbit, integrate, shoot
from aacord.mechanics.symplectic import FieldStack, GradientField, SymplecticStructure, liouville_integrand
from aacord.systems.models import CasimirSet, SystemDef
from aacord.utils.errors import ChartError, ExprDomainError, FlowError, LatticeError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

ANCHOR_SECTION = "local section of the fiber bundle over the base"
ANCHOR_FIBER_TYPE = "fibers are toroidal cylinders R^(m-r) x T^r of one type over the domain"
ANCHOR_ACTIONS = "action coordinates are functions of the Casimir values"
ANCHOR_REACH = "fibers are connected orbits of the R^m action"
ANCHOR_DOMAIN = "chart domain"

TWO_PI = 2.0 * np.pi
# Newton on the base map converges quadratically to round-off
ANCHOR_TOL = 1e-13
ANCHOR_STALL_TOL = 1e-10
SHOOT_TOL = 1e-11
ACTION_RTOL = 1e-9
GAUSS_ORDER = 8
SCAN_POINTS = 16


@dataclass(frozen=True)
class ChartPoint:
    """Chart coordinates of one phase point; ``phi`` is reduced to [0, 2 pi)."""
    I: np.ndarray
    x: np.ndarray
    t: np.ndarray
    phi: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.I, self.x, self.t, self.phi])

    @classmethod
    def from_vector(cls, w: Sequence[float], m: int, r: int, dim_x: int) -> "ChartPoint":
        w = np.asarray(w, dtype=float)
        if w.shape != (m + dim_x + m,):
            raise ValueError(f"chart vector must have {2 * m + dim_x} entries, got {w.size}")
        return cls(
            I=w[:m].copy(),
            x=w[m:m + dim_x].copy(),
            t=w[m + dim_x:m + dim_x + m - r].copy(),
            phi=np.mod(w[m + dim_x + m - r:], TWO_PI),
        )

    def to_dict(self) -> Dict[str, List[float]]:
        return {"I": self.I.tolist(), "x": self.x.tolist(), "t": self.t.tolist(), "phi": self.phi.tolist()}


@dataclass(frozen=True)
class FiberFrame:
    """Everything the chart needs about one fiber: its anchor, periods and actions."""
    base: np.ndarray
    anchor: np.ndarray
    section_jacobian: np.ndarray
    section_coords: np.ndarray
    periods: np.ndarray
    actions: np.ndarray
    action_jacobian: np.ndarray


class _GridInterpolant:
    """Vector-valued cubic interpolation on a regular grid, one scalar interpolator per component."""

    def __init__(self, axes: Sequence[np.ndarray], values: np.ndarray):
        self._parts = [RegularGridInterpolator(axes, values[..., c], method="cubic")
                       for c in range(values.shape[-1])]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.stack([part(points) for part in self._parts], axis=-1)


class ActionTable:
    """Actions I(J) and period bases U(J) on a regular J grid, cubic interpolation."""

    def __init__(self, axes: Sequence[np.ndarray], actions: np.ndarray, periods: np.ndarray):
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        self.m = len(self.axes)
        self.actions = np.asarray(actions, dtype=float)
        self.periods = np.asarray(periods, dtype=float)
        self.r = self.periods.shape[self.m] if self.periods.ndim > self.m else 0
        self.lo = np.array([a[0] for a in self.axes])
        self.hi = np.array([a[-1] for a in self.axes])
        flat_periods = self.periods.reshape(self.actions.shape[:-1] + (self.r * self.m,))
        if self.m == 1:
            self._actions = CubicSpline(self.axes[0], self.actions, axis=0)
            self._slopes = self._actions.derivative()
            self._periods = CubicSpline(self.axes[0], flat_periods, axis=0) if self.r else None
        else:
            self._actions = _GridInterpolant(self.axes, self.actions)
            self._slopes = None
            self._periods = _GridInterpolant(self.axes, flat_periods) if self.r else None

    def contains(self, J: Sequence[float], slack: float = 1e-9) -> bool:
        J = np.asarray(J, dtype=float)
        width = self.hi - self.lo
        return bool(np.all(J >= self.lo - slack * width) and np.all(J <= self.hi + slack * width))

    def _require(self, J: Sequence[float]) -> np.ndarray:
        J = np.asarray(J, dtype=float)
        if not self.contains(J):
            raise ChartError(f"J={np.round(J, 9).tolist()} outside the action table "
                             f"[{self.lo.tolist()}, {self.hi.tolist()}]", anchor=ANCHOR_DOMAIN)
        return np.clip(J, self.lo, self.hi)

    def value(self, J: Sequence[float]) -> np.ndarray:
        J = self._require(J)
        if self.m == 1:
            return np.atleast_1d(self._actions(J[0]))
        return self._actions(J[None, :])[0]

    def jacobian(self, J: Sequence[float]) -> np.ndarray:
        """dI/dJ of the interpolant, m x m; central differences when m > 1."""
        J = self._require(J)
        if self.m == 1:
            return np.atleast_2d(self._slopes(J[0])).reshape(1, 1)
        out = np.empty((self.m, self.m))
        for k in range(self.m):
            step = 1e-4 * (self.hi[k] - self.lo[k])
            up, down = J.copy(), J.copy()
            up[k] = min(J[k] + step, self.hi[k])
            down[k] = max(J[k] - step, self.lo[k])
            out[:, k] = (self._actions(up[None, :])[0] - self._actions(down[None, :])[0]) / (up[k] - down[k])
        return out

    def period_basis(self, J: Sequence[float]) -> np.ndarray:
        J = self._require(J)
        if self._periods is None:
            return np.zeros((0, self.m))
        flat = self._periods(J[0]) if self.m == 1 else self._periods(J[None, :])[0]
        return np.asarray(flat).reshape(self.r, self.m)

    def invert(self, I: Sequence[float], max_iter: int = 50) -> np.ndarray:
        """J with I_table(J) = I, by Newton on the interpolant from the nearest node."""
        I = np.asarray(I, dtype=float)
        flat = self.actions.reshape(-1, self.m)
        nodes = np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1).reshape(-1, self.m)
        J = nodes[int(np.argmin(np.linalg.norm(flat - I, axis=1)))].copy()
        for _ in range(max_iter):
            miss = I - self.value(J)
            if np.linalg.norm(miss) <= 1e-13 * (1.0 + np.linalg.norm(I)):
                return J
            J = np.clip(J + np.linalg.solve(self.jacobian(J), miss), self.lo, self.hi)
        if np.linalg.norm(I - self.value(J)) <= 1e-9 * (1.0 + np.linalg.norm(I)):
            return J
        raise ChartError(f"actions {np.round(I, 9).tolist()} outside the action table", anchor=ANCHOR_DOMAIN)

    def to_dict(self) -> Dict[str, Any]:
        return {"axes": [a.tolist() for a in self.axes], "actions": self.actions.tolist(),
                "periods": self.periods.tolist()}


@dataclass
class Chart:
    """A built chart; treated as immutable once :meth:`ChartAgent.build_chart` returns it."""
    system: SystemDef
    casimirs: CasimirSet
    lattice: PeriodLattice
    adapted: np.ndarray
    complement: np.ndarray
    flows: FieldStack
    base_field: GradientField
    base_names: List[str]
    transverse_names: List[str]
    reference: np.ndarray
    reference_base: np.ndarray
    section_directions: np.ndarray
    domain_lo: np.ndarray
    domain_hi: np.ndarray
    table: Optional[ActionTable] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def m(self) -> int:
        return self.casimirs.m

    @property
    def r(self) -> int:
        return self.lattice.r

    @property
    def dim_x(self) -> int:
        return 2 * (self.n - self.m)

    @property
    def coordinate_names(self) -> List[str]:
        m, r = self.m, self.r
        return ([f"I{i + 1}" for i in range(m)] + list(self.transverse_names)
                + [f"t{a + 1}" for a in range(m - r)] + [f"phi{i + 1}" for i in range(r)])

    def base_values(self, z: Sequence[float]) -> np.ndarray:
        try:
            return self.base_field.values(z)
        except ExprDomainError as exc:
            raise ChartError(f"base coordinates undefined at {np.round(z, 9).tolist()}: {exc.message}",
                             anchor=ANCHOR_DOMAIN) from exc

    def in_domain(self, b: Sequence[float], slack: float = 1e-9) -> bool:
        b = np.asarray(b, dtype=float)
        width = self.domain_hi - self.domain_lo
        return bool(np.all(b >= self.domain_lo - slack * width) and np.all(b <= self.domain_hi + slack * width))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "system": self.system.name,
            "kind": self.system.kind,
            "n": self.n,
            "m": self.m,
            "r": self.r,
            "base_names": self.base_names,
            "coordinates": self.coordinate_names,
            "reference": self.reference.tolist(),
            "reference_base": self.reference_base.tolist(),
            "domain": {name: [float(lo), float(hi)]
                       for name, lo, hi in zip(self.base_names, self.domain_lo, self.domain_hi)},
            "lattice": self.lattice.to_dict(),
            "adapted_basis": self.adapted.tolist(),
            "action_table": self.table.to_dict() if self.table is not None else None,
            "provenance": self.provenance,
        }


def action_jacobian(complement: np.ndarray, periods: np.ndarray) -> np.ndarray:
    """dI/dJ: rows w_a^T for noncompact actions, u_i^T / 2 pi for compact ones."""
    return np.vstack([complement.T, np.asarray(periods, dtype=float) / TWO_PI])


class ChartAgent:
    """Builds generalized action-angle charts and evaluates them in both directions."""

    def __init__(self):
        self.lattice_agent = LatticeAgent()
        self._gauss = leggauss(GAUSS_ORDER)

    # -- section ------------------------------------------------------------------

    def solve_anchor(self, chart: Chart, b: Sequence[float],
                     guess: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Point of the section with base coordinates ``b``.

        Returns ``(anchor, d sigma / d b, section coordinates)``.
        """
        target = np.asarray(b, dtype=float)
        E = chart.section_directions
        a = np.zeros(E.shape[1]) if guess is None else np.asarray(guess, dtype=float).copy()
        tol = ANCHOR_TOL * (1.0 + np.linalg.norm(target))

        def miss(coords: np.ndarray) -> float:
            try:
                return float(np.linalg.norm(chart.base_field.values(chart.reference + E @ coords) - target))
            except ExprDomainError:
                return np.inf

        error = miss(a)
        for _ in range(50):
            z = chart.reference + E @ a
            if error <= tol:
                break
            try:
                G = chart.base_field.jacobian(z) @ E
                step = np.linalg.solve(G, target - chart.base_field.values(z))
            except (ExprDomainError, np.linalg.LinAlgError) as exc:
                raise ChartError(f"section Newton broke down at b={np.round(target, 9).tolist()}: {exc}",
                                 anchor=ANCHOR_SECTION) from exc
            damping = 1.0
            for _ in range(12):
                trial = a + damping * step
                trial_error = miss(trial)
                if trial_error < error:
                    break
                damping *= 0.5
            else:
                if error <= ANCHOR_STALL_TOL * (1.0 + np.linalg.norm(target)):
                    break
                raise ChartError(f"section Newton stalled at b={np.round(target, 9).tolist()} "
                                 f"(residual {error:.3e})", anchor=ANCHOR_SECTION)
            a, error = trial, trial_error
        else:
            if error > ANCHOR_STALL_TOL * (1.0 + np.linalg.norm(target)):
                raise ChartError(f"section Newton did not converge at b={np.round(target, 9).tolist()}",
                                 anchor=ANCHOR_SECTION)
        z = chart.reference + E @ a
        G = chart.base_field.jacobian(z) @ E
        return z, E @ np.linalg.inv(G), a

    def section_form(self, chart: Chart, b: Sequence[float], guess: Optional[np.ndarray] = None) -> np.ndarray:
        """beta = sigma^* Omega in the base coordinates (J, x)."""
        _, sigma_b, _ = self.solve_anchor(chart, b, guess)
        omega = SymplecticStructure(chart.n).omega
        return sigma_b.T @ omega @ sigma_b

    # -- actions ------------------------------------------------------------------

    def cycle_action(self, flows: FieldStack, period: Sequence[float], anchor: Sequence[float],
                     cfg, tol_return: float) -> float:
        """(1/2 pi) of the Liouville form integrated along tau -> Phi_{tau u}(anchor), tau in [0, 1]."""
        period = np.asarray(period, dtype=float)
        anchor = np.asarray(anchor, dtype=float)
        rhs = flows.combined(period)
        run = integrate(rhs, anchor, 1.0, cfg, dense=True)
        gap = float(np.linalg.norm(run.y - anchor))
        if gap > 10 * tol_return:
            raise ChartError(f"cycle {np.round(period, 9).tolist()} fails to close (gap {gap:.3e})",
                             anchor=ANCHOR_ACTIONS)
        nodes, weights = self._gauss

        def composite(panels: int) -> float:
            edges = np.linspace(0.0, 1.0, panels + 1)
            half = 0.5 * (edges[1] - edges[0])
            mids = 0.5 * (edges[:-1] + edges[1:])
            taus = (mids[:, None] + half * nodes[None, :]).ravel()
            points = run.solution(taus).T
            values = np.array([liouville_integrand(z, rhs(0.0, z)) for z in points])
            return float(half * np.sum(values.reshape(panels, -1) @ weights))

        previous = composite(4)
        panels = 8
        while True:
            current = composite(panels)
            if abs(current - previous) <= ACTION_RTOL * max(1.0, abs(current)):
                return current / TWO_PI
            if panels >= 4096:
                logger.warning(f"[Chart] action quadrature stopped at {panels} panels "
                               f"(change {abs(current - previous):.3e})")
                return current / TWO_PI
            previous, panels = current, 2 * panels

    def action_integral(self, sys: SystemDef, lat: PeriodLattice, z_fiber_anchor: Sequence[float], i: int) -> float:
        """Action of the i-th compact direction of ``lat`` on the fiber through the anchor."""
        if not 0 <= i < lat.r:
            raise ValueError(f"compact direction {i} out of range for a rank-{lat.r} lattice")
        cas = CasimirSet.from_system(sys)
        flows = FieldStack.from_generators(cas.pulled, sys.n)
        tol = sys.tolerances
        return self.cycle_action(flows, lat.basis[i], z_fiber_anchor, tol.chart_flow, tol.search.tol_return)

    def fiber_frame(self, chart: Chart, b: Sequence[float], seed_periods: Optional[np.ndarray] = None,
                    guess: Optional[np.ndarray] = None) -> FiberFrame:
        """Anchor, refined periods and exact actions of the fiber with base coordinates ``b``."""
        b = np.asarray(b, dtype=float)
        anchor, sigma_b, coords = self.solve_anchor(chart, b, guess)
        m, r = chart.m, chart.r
        J = b[:m]
        tol = chart.system.tolerances
        if r:
            seed = seed_periods if seed_periods is not None else chart.table.period_basis(J)
            try:
                periods, _ = self.lattice_agent.refine_basis(chart.flows, seed, anchor, tol.search, tol.chart_flow)
            except LatticeError as exc:
                raise ChartError(f"lattice rank varies across the domain: {exc.message}",
                                 anchor=ANCHOR_FIBER_TYPE) from exc
            compact = [self.cycle_action(chart.flows, u, anchor, tol.chart_flow, tol.search.tol_return)
                       for u in periods]
        else:
            periods, compact = np.zeros((0, m)), []
        actions = np.concatenate([chart.complement.T @ J, compact])
        return FiberFrame(
            base=b, anchor=anchor, section_jacobian=sigma_b, section_coords=coords, periods=periods,
            actions=actions, action_jacobian=action_jacobian(chart.complement, periods),
        )

    # -- construction -------------------------------------------------------------

    def build_chart(
        self,
        sys: SystemDef,
        cas: CasimirSet,
        lat: PeriodLattice,
        domain: Optional[Dict[str, Tuple[float, float]]] = None,
        transverse: Optional[Sequence[int]] = None,
        provenance: Optional[Dict[str, Any]] = None,
    ) -> Chart:
        logger.info(f"[Chart] building chart for {sys.name} (m={cas.m}, r={lat.r})")
        n, m = sys.n, cas.m
        if lat.m != m:
            raise ChartError(f"lattice lives in R^{lat.m} but there are {m} Casimirs", anchor=ANCHOR_FIBER_TYPE)
        coordinates, names = self._transverse(sys, transverse)
        base_field = GradientField(list(cas.pulled) + coordinates, n)
        flows = FieldStack.from_generators(cas.pulled, n)
        reference = sys.reference_point
        try:
            section = null_space(flows.matrix(reference))
            reference_base = base_field.values(reference)
        except ExprDomainError as exc:
            raise ChartError(f"reference point is singular: {exc.message}", anchor=ANCHOR_SECTION) from exc
        if section.shape[1] != 2 * n - m:
            raise ChartError("flow fields are dependent at the reference point", anchor=ANCHOR_SECTION)
        if np.linalg.norm(lat.anchor - reference) > 1e-9 * (1.0 + np.linalg.norm(reference)):
            logger.warning("[Chart] lattice was detected away from the reference point; continuing from it")

        inverse = adapted_inverse(lat.generators)
        complement = inverse[:, :m - lat.r]
        base_names = list(cas.names) + names
        lo, hi = self._domain_box(base_names, reference_base, dict(sys.domain, **(domain or {})))
        chart = Chart(
            system=sys, casimirs=cas, lattice=lat, adapted=np.linalg.inv(inverse), complement=complement,
            flows=flows, base_field=base_field, base_names=base_names, transverse_names=names,
            reference=reference, reference_base=reference_base, section_directions=section,
            domain_lo=lo, domain_hi=hi, provenance=dict(provenance or {}),
        )
        if not chart.in_domain(reference_base):
            raise ChartError(f"reference base point {np.round(reference_base, 9).tolist()} outside the domain box",
                             anchor=ANCHOR_DOMAIN)
        chart.table = self._action_table(chart, sys.tolerances.grid_size)
        chart.provenance.setdefault("section", {"dimension": int(section.shape[1])})
        chart.provenance["action_table"] = {"grid_size": sys.tolerances.grid_size,
                                            "nodes": int(np.prod(chart.table.actions.shape[:-1]))}
        logger.info(f"[Chart] chart ready: base {base_names}, domain {lo.tolist()} .. {hi.tolist()}")
        return chart

    def _transverse(self, sys: SystemDef, transverse: Optional[Sequence[int]]) -> Tuple[List[Expr], List[str]]:
        need = 2 * (sys.n - sys.m)
        if sys.transverse:
            return [sys.pull_back(t.expr) for t in sys.transverse], sys.transverse_names
        chosen = list(transverse or [])
        if len(chosen) != need:
            raise ChartError(f"chart needs {need} transverse coordinates, got {len(chosen)}", anchor=ANCHOR_SECTION)
        return [sys.integral_exprs[i] for i in chosen], [sys.integral_names[i] for i in chosen]

    @staticmethod
    def _domain_box(names: Sequence[str], center: np.ndarray,
                    bounds: Dict[str, Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = [], []
        for name, value in zip(names, center):
            if name in bounds:
                low, high = bounds[name]
            else:
                spread = 0.1 * (1.0 + abs(value))
                low, high = value - spread, value + spread
                logger.info(f"[Chart] no domain bounds for {name}; using [{low:.6g}, {high:.6g}]")
            lo.append(float(low))
            hi.append(float(high))
        return np.array(lo), np.array(hi)

    def _action_table(self, chart: Chart, grid_size: int) -> ActionTable:
        """Actions and period bases on the J grid at x = x0, continued outward from J0."""
        m, r = chart.m, chart.r
        axes = [np.linspace(chart.domain_lo[k], chart.domain_hi[k], grid_size) for k in range(m)]
        shape = (grid_size,) * m
        indices = list(np.ndindex(*shape))
        J0 = chart.reference_base[:m]
        width = chart.domain_hi[:m] - chart.domain_lo[:m]
        nodes = {idx: np.array([axes[k][idx[k]] for k in range(m)]) for idx in indices}
        indices.sort(key=lambda idx: float(np.linalg.norm((nodes[idx] - J0) / width)))

        x0 = chart.reference_base[m:]
        actions = np.zeros(shape + (m,))
        periods = np.zeros(shape + (r, m))
        done: Dict[Tuple[int, ...], FiberFrame] = {}
        for idx in indices:
            J = nodes[idx]
            if done:
                near = min(done, key=lambda other: float(np.linalg.norm((nodes[other] - J) / width)))
                seed, guess = done[near].periods, done[near].section_coords
            else:
                seed, guess = chart.lattice.basis, None
            frame = self.fiber_frame(chart, np.concatenate([J, x0]), seed_periods=seed, guess=guess)
            done[idx] = frame
            actions[idx] = frame.actions
            periods[idx] = frame.periods
        logger.info(f"[Chart] action table filled ({len(indices)} nodes)")

        dets = np.array([np.linalg.det(action_jacobian(chart.complement, done[idx].periods)) for idx in indices])
        if np.any(np.abs(dets) < 1e-12) or not (np.all(dets > 0) or np.all(dets < 0)):
            raise ChartError(f"action map is not monotone over the domain (dI/dJ determinants span "
                             f"[{dets.min():.3e}, {dets.max():.3e}])", anchor=ANCHOR_ACTIONS)
        return ActionTable(axes, actions, periods)

    # -- gauge --------------------------------------------------------------------

    def gauge(self, chart: Chart, b: Sequence[float], action_jac: np.ndarray) -> np.ndarray:
        """E(I, x) in I components: radial primitive of the I-I block at x0 minus the I-x path integral."""
        m = chart.m
        b = np.asarray(b, dtype=float)
        J, x = b[:m], b[m:]
        J0, x0 = chart.reference_base[:m], chart.reference_base[m:]
        nodes, weights = self._gauss
        taus, weights = 0.5 * (nodes + 1.0), 0.5 * weights
        total = np.zeros(m)
        dJ = J - J0
        if m > 1 and np.any(dJ):
            for tau, weight in zip(taus, weights):
                beta = self.section_form(chart, np.concatenate([J0 + tau * dJ, x0]))
                total += weight * tau * (dJ @ beta[:m, :m])
        dx = x - x0
        if dx.size and np.any(dx):
            for tau, weight in zip(taus, weights):
                beta = self.section_form(chart, np.concatenate([J, x0 + tau * dx]))
                total -= weight * (beta[:m, m:] @ dx)
        return np.linalg.solve(action_jac.T, total)

    # -- evaluation ---------------------------------------------------------------

    def chart_forward(self, chart: Chart, z: Sequence[float]) -> ChartPoint:
        z = np.asarray(z, dtype=float)
        m, r = chart.m, chart.r
        b = chart.base_values(z)
        if not chart.in_domain(b):
            raise ChartError(f"base point {np.round(b, 9).tolist()} outside the chart domain", anchor=ANCHOR_DOMAIN)
        frame = self.fiber_frame(chart, b)
        s = self._flow_times(chart, frame, z)
        y_tilde = np.linalg.solve(frame.action_jacobian.T, s)
        y = y_tilde - self.gauge(chart, b, frame.action_jacobian)
        return ChartPoint(I=frame.actions, x=b[m:].copy(), t=y[:m - r], phi=np.mod(y[m - r:], TWO_PI))

    def _flow_times(self, chart: Chart, frame: FiberFrame, z: np.ndarray) -> np.ndarray:
        """s with Phi_s(anchor) = z; multistart Gauss-Newton seeded by a scan over the torus."""
        cfg = chart.system.tolerances.chart_flow
        tol = SHOOT_TOL * (1.0 + np.linalg.norm(z))
        best_residual = np.inf
        for s0 in self._shooting_guesses(chart, frame, z):
            s, residual, ok = shoot(chart.flows, s0, frame.anchor, z, cfg, tol)
            if ok:
                return s
            best_residual = min(best_residual, residual)
        raise ChartError(f"point {np.round(z, 9).tolist()} not reached from its fiber anchor "
                         f"(best residual {best_residual:.3e})", anchor=ANCHOR_REACH)

    def _shooting_guesses(self, chart: Chart, frame: FiberFrame, z: np.ndarray, keep: int = 3) -> List[np.ndarray]:
        flows, m, r = chart.flows, chart.m, chart.r
        W = chart.complement
        if r == 0:
            s0, *_ = np.linalg.lstsq(flows.matrix(frame.anchor).T, z - frame.anchor, rcond=None)
            return [s0]
        per_axis = SCAN_POINTS if r <= 2 else 8
        fractions = np.arange(per_axis) / per_axis
        scan_cfg = chart.system.tolerances.search.coarse_flow
        points = {(): frame.anchor}
        for axis in range(r - 1, -1, -1):
            grown = {}
            for key, point in points.items():
                orbit = flow_orbit(flows, frame.periods[axis], point, fractions, scan_cfg)
                for index, position in enumerate(orbit):
                    grown[(index,) + key] = position
            points = grown
        scored = []
        for key, point in points.items():
            s = np.asarray(key, dtype=float) / per_axis @ frame.periods
            if m > r:
                columns = flows.matrix(point).T @ W
                t, *_ = np.linalg.lstsq(columns, z - point, rcond=None)
                s = s + W @ t
                residual = float(np.linalg.norm(point + columns @ t - z))
            else:
                residual = float(np.linalg.norm(point - z))
            scored.append((residual, s))
        scored.sort(key=lambda item: item[0])
        return [s for _, s in scored[:keep]]

    def chart_inverse(self, chart: Chart, w: ChartPoint) -> np.ndarray:
        m, r = chart.m, chart.r
        if w.I.shape != (m,) or w.x.shape != (chart.dim_x,) or w.t.shape != (m - r,) or w.phi.shape != (r,):
            raise ValueError("chart point does not match the chart dimensions")
        J, frame = self._solve_actions(chart, w.I, w.x)
        y_tilde = np.concatenate([w.t, w.phi]) + self.gauge(chart, frame.base, frame.action_jacobian)
        s = frame.action_jacobian.T @ y_tilde
        try:
            return flow_map(chart.flows, s, frame.anchor, chart.system.tolerances.chart_flow)
        except FlowError as exc:
            raise ChartError(f"inverse flow failed: {exc.message}", anchor=exc.anchor or ANCHOR_REACH) from exc

    def _solve_actions(self, chart: Chart, I: np.ndarray, x: np.ndarray) -> Tuple[np.ndarray, FiberFrame]:
        """J with exact fiber actions I(J) = I, started from the table inverse."""
        m = chart.m
        J = chart.table.invert(I)
        if not chart.in_domain(np.concatenate([J, x])):
            raise ChartError(f"transverse coordinates {np.round(x, 9).tolist()} outside the chart domain",
                             anchor=ANCHOR_DOMAIN)
        for _ in range(20):
            frame = self.fiber_frame(chart, np.concatenate([J, x]))
            miss = I - frame.actions
            if np.linalg.norm(miss) <= 1e-13 * (1.0 + np.linalg.norm(I)):
                return J, frame
            J = J + np.linalg.solve(frame.action_jacobian, miss)
        if np.linalg.norm(miss) <= 1e-10 * (1.0 + np.linalg.norm(I)):
            return J, frame
        raise ChartError(f"could not invert the actions {np.round(I, 9).tolist()} (miss {np.linalg.norm(miss):.3e})",
                         anchor=ANCHOR_ACTIONS)

    # -- frequencies --------------------------------------------------------------

    def frequency_matrix(self, chart: Chart, J: Sequence[float]) -> np.ndarray:
        """r x m block dI_i/dJ_k of the compact actions, from the interpolation table."""
        return chart.table.jacobian(J)[chart.m - chart.r:, :]

    def measured_frequency_matrix(self, chart: Chart, z: Sequence[float], delta: float = 1e-4) -> np.ndarray:
        """d y' / d s_lambda measured by flowing each v_lambda by +-delta; m x m, angle rows last."""
        z = np.asarray(z, dtype=float)
        m, r = chart.m, chart.r
        cfg = chart.system.tolerances.chart_flow
        out = np.empty((m, m))
        for lam in range(m):
            step = np.zeros(m)
            step[lam] = delta
            ahead = self.chart_forward(chart, flow_map(chart.flows, step, z, cfg)).as_vector()
            behind = self.chart_forward(chart, flow_map(chart.flows, -step, z, cfg)).as_vector()
            diff = ahead[-m:] - behind[-m:]
            diff[m - r:] = wrap_angle(diff[m - r:])
            out[:, lam] = diff / (2.0 * delta)
        return out

    # -- sampling -----------------------------------------------------------------

    def sample_chart_points(self, chart: Chart, count: int, seed: int, margin: float = 0.05,
                            t_range: float = 1.0) -> List[np.ndarray]:
        """Phase points from chart coordinates drawn in the shrunken domain box."""
        m, r = chart.m, chart.r
        width = chart.domain_hi - chart.domain_lo
        lo, hi = chart.domain_lo + margin * width, chart.domain_hi - margin * width
        dims = len(lo) + m
        unit = qmc.Halton(d=dims, scramble=True, seed=seed).random(count)
        points = []
        for row in unit:
            b = lo + row[:len(lo)] * (hi - lo)
            angles = row[len(lo):]
            I = chart.table.value(b[:m])
            w = ChartPoint(
                I=I,
                x=b[m:],
                t=t_range * (2.0 * angles[:m - r] - 1.0),
                phi=TWO_PI * angles[m - r:],
            )
            points.append(self.chart_inverse(chart, w))
        logger.info(f"[Chart] sampled {len(points)} chart points (seed {seed})")
        return points


def wrap_angle(values: np.ndarray) -> np.ndarray:
    """Representative in [-pi, pi)."""
    return np.mod(np.asarray(values, dtype=float) + np.pi, TWO_PI) - np.pi
# end file
