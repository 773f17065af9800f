# file: aacord/agents/verification_agent.py
import dataclasses
from typing import List, Optional, Sequence

import numpy as np

from aacord.agents.chart_agent import Chart, ChartAgent, wrap_angle
from aacord.mechanics.expr import Expr
from aacord.mechanics.flow import flow_map, flow_orbit
from aacord.mechanics.symplectic import FieldStack, SymplecticStructure
from aacord.reports import ResidualReport, single_check
from aacord.utils.errors import AacordError, ChartError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

ANCHOR_CANONICAL = "canonical form Omega = dI ^ dy' + Omega_AB dx ^ dx"
ANCHOR_CANONICAL_PIS = "canonical form Omega = dI ^ dy' + Omega_A dI ^ dx + Omega_AB dx ^ dx"
ANCHOR_EOM = "Hamiltonian depends on the action coordinates only"
ANCHOR_FREQUENCIES = "inverse frequency matrix is the derivative of the actions"
ANCHOR_TRANSITION = "bundle coordinates have identity transition functions"


class VerificationAgent:
    """Numerical certificates for a built chart."""

    def __init__(self, chart_agent: Optional[ChartAgent] = None):
        self.chart_agent = chart_agent or ChartAgent()

    def chart_jacobian(self, chart: Chart, z: Sequence[float], rel_step: float = 1e-5) -> np.ndarray:
        """d(chart coordinates)/dz by central differences; angle differences are wrapped."""
        z = np.asarray(z, dtype=float)
        size = z.size
        angles = slice(size - chart.r, size)
        out = np.empty((size, size))
        for j in range(size):
            h = rel_step * (1.0 + abs(z[j]))
            up, down = z.copy(), z.copy()
            up[j] += h
            down[j] -= h
            diff = (self.chart_agent.chart_forward(chart, up).as_vector()
                    - self.chart_agent.chart_forward(chart, down).as_vector())
            diff[angles] = wrap_angle(diff[angles])
            out[:, j] = diff / (2.0 * h)
        return out

    def verify_canonical_blocks(self, chart: Chart, samples: Sequence[Sequence[float]]) -> ResidualReport:
        logger.info(f"[Verify] canonical blocks on {len(samples)} samples")
        m, dim_x = chart.m, chart.dim_x
        I_ = slice(0, m)
        X_ = slice(m, m + dim_x)
        Y_ = slice(m + dim_x, 2 * m + dim_x)
        omega = SymplecticStructure(chart.n).omega
        blocks = {"I_y": 0.0, "y_y": 0.0, "y_x": 0.0, "I_I": 0.0, "I_x": 0.0}
        sigma_ab = np.inf
        flagged: List[str] = []
        used = 0
        for z in samples:
            try:
                D = self.chart_jacobian(chart, z)
            except AacordError as exc:
                flagged.append(f"chart evaluation failed near {np.round(z, 6).tolist()}: {exc}")
                continue
            sv = np.linalg.svd(D, compute_uv=False)
            if sv[-1] < 1e-10 * sv[0]:
                flagged.append(f"singular chart Jacobian at {np.round(z, 6).tolist()}")
                continue
            inverse = np.linalg.inv(D)
            pulled = inverse.T @ omega @ inverse
            blocks["I_y"] = max(blocks["I_y"], float(np.max(np.abs(pulled[I_, Y_] - np.eye(m)))))
            blocks["y_y"] = max(blocks["y_y"], float(np.max(np.abs(pulled[Y_, Y_]))))
            blocks["I_I"] = max(blocks["I_I"], float(np.max(np.abs(pulled[I_, I_]))))
            if dim_x:
                blocks["y_x"] = max(blocks["y_x"], float(np.max(np.abs(pulled[Y_, X_]))))
                blocks["I_x"] = max(blocks["I_x"], float(np.max(np.abs(pulled[I_, X_]))))
                sigma_ab = min(sigma_ab, float(np.linalg.svd(pulled[X_, X_], compute_uv=False)[-1]))
            used += 1

        pis = chart.system.kind == "pis"
        required = ["I_y", "y_y", "y_x", "I_I"] + ([] if pis else ["I_x"])
        worst = max(blocks[name] for name in required)
        tol = chart.system.tolerances.tol_blocks
        passed = used > 0 and worst < tol and (dim_x == 0 or sigma_ab > tol)
        return single_check(
            "canonical_blocks", ANCHOR_CANONICAL_PIS if pis else ANCHOR_CANONICAL, passed, worst, tol, used,
            details={"blocks": blocks, "required": required,
                     "omega_ab_sigma_min": sigma_ab if dim_x else None, "darboux": dim_x == 0},
            flagged=flagged,
        )

    # -- equations of motion ----------------------------------------------------

    def reduced_hamiltonian(self, chart: Chart, hamiltonian: Expr):
        """h(J) = H(sigma(J, x0)) as a callable."""
        evaluate = hamiltonian.compile(chart.system.variables)
        x0 = chart.reference_base[chart.m:]

        def h(J: np.ndarray) -> float:
            anchor, _, _ = self.chart_agent.solve_anchor(chart, np.concatenate([J, x0]))
            return float(evaluate(anchor.tolist()))

        return h

    def verify_equations_of_motion(self, chart: Chart, hamiltonian: Expr, z0: Sequence[float], T: float,
                                   dt: float = 0.1, regression_samples: int = 8, seed: int = 42) -> ResidualReport:
        logger.info(f"[Verify] equations of motion over [0, {T}] with step {dt}")
        tol = chart.system.tolerances
        m, r = chart.m, chart.r
        evaluate = hamiltonian.compile(chart.system.variables)
        h = self.reduced_hamiltonian(chart, hamiltonian)

        # H must agree with its value on the section at x0 over the same J
        probes = self.chart_agent.sample_chart_points(chart, regression_samples, seed)
        regression = 0.0
        for z in probes:
            J = chart.base_values(z)[:m]
            regression = max(regression, abs(float(evaluate(list(z))) - h(J)))
        action_only = single_check("eom_action_only", ANCHOR_EOM, regression < tol.tol_eom, regression,
                                   tol.tol_eom, len(probes), details={"regression_residual": regression})
        if not action_only.passed:
            logger.error(f"[Verify] hamiltonian is not a function of the actions (residual {regression:.3e})")
            return action_only

        times = np.arange(0.0, T + 0.5 * dt, dt)
        field = FieldStack.from_generators([hamiltonian], chart.n)
        orbit = flow_orbit(field, [1.0], z0, times, tol.chart_flow)
        coords = np.array([self.chart_agent.chart_forward(chart, z).as_vector() for z in orbit])
        dim_x = chart.dim_x
        drift_I = float(np.max(np.abs(coords[:, :m] - coords[0, :m])))
        drift_x = float(np.max(np.abs(coords[:, m:m + dim_x] - coords[0, m:m + dim_x]))) if dim_x else 0.0
        drift = max(drift_I, drift_x)
        conserved = single_check("eom_conserved", ANCHOR_EOM, drift < tol.tol_eom, drift, tol.tol_eom, len(times),
                                 details={"action_drift": drift_I, "transverse_drift": drift_x})

        angles = coords[:, m + dim_x:]
        angles[:, m - r:] = np.unwrap(angles[:, m - r:], axis=0)
        slopes = np.array([np.polyfit(times, angles[:, k], 1)[0] for k in range(m)])
        J0 = chart.base_values(z0)[:m]
        grad = np.empty(m)
        for k in range(m):
            step = 1e-5 * (1.0 + abs(J0[k]))
            up, down = J0.copy(), J0.copy()
            up[k] += step
            down[k] -= step
            grad[k] = (h(up) - h(down)) / (2.0 * step)
        predicted = np.linalg.solve(chart.table.jacobian(J0).T, grad)
        errors = np.abs(slopes - predicted) / np.maximum(np.abs(predicted), 1.0)
        worst = float(np.max(errors))
        slope_report = single_check(
            "eom_slopes", ANCHOR_EOM, worst < tol.tol_eom_slope, worst, tol.tol_eom_slope, len(times),
            details={"slopes": slopes, "predicted": predicted},
            results={"eom_slopes": slopes, "eom_predicted": predicted},
        )
        return action_only.merge(conserved, slope_report)

    # -- frequencies ------------------------------------------------------------

    def frequency_duality_check(self, chart: Chart, samples: Sequence[Sequence[float]],
                                tol: float = 1e-4) -> ResidualReport:
        """(measured d y'/d s) (dI/dJ)^T = identity; the compact rows are the inverse frequencies."""
        worst = 0.0
        flagged = []
        for z in samples:
            try:
                measured = self.chart_agent.measured_frequency_matrix(chart, z)
            except AacordError as exc:
                flagged.append(f"{np.round(z, 6).tolist()}: {exc}")
                continue
            J = chart.base_values(z)[:chart.m]
            product = measured @ chart.table.jacobian(J).T
            worst = max(worst, float(np.max(np.abs(product - np.eye(chart.m)))))
        return single_check("frequency_duality", ANCHOR_FREQUENCIES, not flagged and worst < tol, worst, tol,
                            len(samples), flagged=flagged)

    # -- transition functions ---------------------------------------------------

    def alternate_chart(self, chart: Chart, shift: Sequence[float]) -> Chart:
        """Same system and domain, anchored at Phi_shift(reference) on the reference fiber."""
        tol = chart.system.tolerances
        anchor = flow_map(chart.flows, shift, chart.reference, tol.chart_flow)
        system = chart.system.model_copy(update={"reference": anchor.tolist()})
        lat = chart.lattice
        if lat.r:
            basis, residuals = self.chart_agent.lattice_agent.refine_basis(
                chart.flows, lat.basis, anchor, tol.search, tol.chart_flow)
            lat = dataclasses.replace(lat, basis=basis, residuals=residuals, anchor=anchor)
        else:
            lat = dataclasses.replace(lat, anchor=anchor)
        domain = {name: (float(lo), float(hi))
                  for name, lo, hi in zip(chart.base_names, chart.domain_lo, chart.domain_hi)}
        transverse = [chart.system.integral_names.index(name) for name in chart.transverse_names] \
            if not chart.system.transverse else None
        return self.chart_agent.build_chart(system, chart.casimirs, lat, domain=domain, transverse=transverse,
                                            provenance={"alternate_of": chart.reference.tolist()})

    def anchor_offset_check(self, chart_a: Chart, chart_b: Chart, samples: Sequence[Sequence[float]],
                            per_fiber: int = 3, seed: int = 42, spread: float = 0.5) -> ResidualReport:
        """y'_a - y'_b is constant along every sampled fiber; actions and x agree."""
        rng = np.random.default_rng(seed)
        m, r = chart_a.m, chart_a.r
        cfg = chart_a.system.tolerances.chart_flow
        worst = 0.0
        worst_base = 0.0
        flagged = []
        for z in samples:
            try:
                offsets = []
                points = [np.asarray(z, dtype=float)] + [
                    flow_map(chart_a.flows, rng.uniform(-spread, spread, size=m), z, cfg) for _ in range(per_fiber)
                ]
                for point in points:
                    a = self.chart_agent.chart_forward(chart_a, point).as_vector()
                    b = self.chart_agent.chart_forward(chart_b, point).as_vector()
                    worst_base = max(worst_base, float(np.max(np.abs(a[:-m] - b[:-m]))))
                    offsets.append(a[-m:] - b[-m:])
            except ChartError as exc:
                flagged.append(f"{np.round(z, 6).tolist()}: {exc}")
                continue
            offsets = np.array(offsets)
            deviation = offsets - offsets[0]
            deviation[:, m - r:] = wrap_angle(deviation[:, m - r:])
            worst = max(worst, float(np.max(np.abs(deviation))))
        tol = 1e-6
        passed = not flagged and worst < tol and worst_base < tol
        return single_check(
            "anchor_offset", ANCHOR_TRANSITION, passed, max(worst, worst_base), tol, len(samples),
            details={"offset_spread": worst, "base_mismatch": worst_base}, flagged=flagged,
        )
# end file
