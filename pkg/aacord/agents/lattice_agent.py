# file: aacord/agents/lattice_agent.py
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.linalg import null_space

from aacord.mechanics.flow import commutation_residual, flow_map, flow_orbit, shoot
from aacord.mechanics.symplectic import FieldStack
from aacord.reports import ResidualReport, single_check
from aacord.utils.config import FlowConfig, SearchConfig
from aacord.utils.errors import LatticeError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

ANCHOR_ISOTROPY = "isotropy group of the R^m action is a lattice Z^r"
ANCHOR_FIBER_WIDE = "isotropy group is the same for all points of a fiber"
ANCHOR_CONTINUITY = "period lattice varies smoothly over the base"
ANCHOR_COMMUTING = "Hamiltonian vector fields of the Casimirs commute"

# relative tolerance of the integer-combination test used for dedup
INTEGER_TOL = 1e-6


@dataclass(frozen=True)
class PeriodLattice:
    """Isotropy lattice of one fiber, rows of ``basis`` are the generators u_i."""
    m: int
    basis: np.ndarray
    residuals: Tuple[float, ...]
    anchor: np.ndarray
    half_width: float
    grid_step: float
    low_confidence: bool = False
    coarse_hits: int = 0
    candidates: int = 0
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def r(self) -> int:
        return int(self.basis.shape[0])

    @property
    def generators(self) -> np.ndarray:
        """The m x r matrix with the basis vectors as columns."""
        return self.basis.T.reshape(self.m, self.r)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "r": self.r,
            "basis": self.basis.tolist(),
            "residuals": list(self.residuals),
            "anchor": self.anchor.tolist(),
            "low_confidence": self.low_confidence,
            "coarse_hits": self.coarse_hits,
            "candidates": self.candidates,
            "signature": list(cylinder_signature(self)),
        }


def cylinder_signature(lat: PeriodLattice) -> Tuple[int, int]:
    """(noncompact, compact) factors of the fiber R^{m-r} x T^r."""
    return lat.m - lat.r, lat.r


def gauss_reduce(vectors: Sequence[np.ndarray], tol: float) -> List[np.ndarray]:
    """Pairwise Gauss reduction; vectors that reduce to (near) zero are dropped.

    Works on dependent generating sets as well, so it doubles as a Euclid step
    for commensurate generators.
    """
    vecs = [np.asarray(v, dtype=float) for v in vectors if np.linalg.norm(v) > tol]
    max_it = 10000
    for _ in range(max_it):
        changed = False
        vecs.sort(key=lambda v: float(np.linalg.norm(v)))
        for i in range(len(vecs)):
            for j in range(len(vecs)):
                if i == j:
                    continue
                u, v = vecs[i], vecs[j]
                if np.dot(u, u) > np.dot(v, v):
                    continue
                mu = int(round(np.dot(u, v) / np.dot(u, u)))
                if mu == 0:
                    continue
                reduced = v - mu * u
                if np.linalg.norm(reduced) < np.linalg.norm(v) - tol:
                    vecs[j] = reduced
                    changed = True
        vecs = [v for v in vecs if np.linalg.norm(v) > tol]
        if not changed:
            return vecs
    raise LatticeError(f"Gauss reduction did not settle after {max_it} sweeps")


def normalize_basis(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Deterministic representative: leading component positive, ordered by leading index then length."""
    out = []
    for v in vectors:
        v = np.asarray(v, dtype=float)
        scale = np.max(np.abs(v))
        lead = int(np.argmax(np.abs(v) > 1e-8 * scale))
        if v[lead] < 0:
            v = -v
        out.append((lead, float(np.linalg.norm(v)), tuple(v), v))
    out.sort(key=lambda item: item[:3])
    if not out:
        return np.zeros((0, 0))
    return np.array([item[3] for item in out])


def in_integer_span(candidate: np.ndarray, generators: Sequence[np.ndarray]) -> bool:
    if not generators:
        return False
    B = np.array(generators)
    coeffs, *_ = np.linalg.lstsq(B.T, candidate, rcond=None)
    miss = np.linalg.norm(B.T @ np.round(coeffs) - candidate)
    return bool(miss <= INTEGER_TOL * max(1.0, float(np.linalg.norm(candidate))))


class LatticeAgent:
    """Detects period lattices of the R^m action and checks their invariants."""

    def __init__(self):
        pass

    def check_commuting(self, flows: FieldStack, z: np.ndarray, cfg: FlowConfig, tol: float) -> float:
        worst = 0.0
        for a in range(flows.m):
            for b in range(a + 1, flows.m):
                worst = max(worst, commutation_residual(flows.handles[a], flows.handles[b], z, 1.0, 1.0, cfg))
        if worst > tol:
            raise LatticeError(f"flows do not commute at the anchor (residual {worst:.3e})", anchor=ANCHOR_COMMUTING)
        return worst

    # -- refinement -------------------------------------------------------------

    def refine(self, flows: FieldStack, s0: np.ndarray, z: np.ndarray, cfg: SearchConfig,
               flow_cfg: Optional[FlowConfig] = None) -> Tuple[np.ndarray, float, bool]:
        """Gauss-Newton on F(s) = Phi_s(z) - z with Jacobian columns v_lambda(Phi_s z)."""
        return shoot(flows, s0, z, z, flow_cfg or cfg.flow, cfg.tol_return, cfg.newton_max_iter)

    def refine_basis(self, flows: FieldStack, seed_basis: np.ndarray, z: np.ndarray, cfg: SearchConfig,
                     flow_cfg: Optional[FlowConfig] = None) -> Tuple[np.ndarray, Tuple[float, ...]]:
        """Refine every generator of a nearby fiber's basis at ``z``; raises if one is lost."""
        refined, residuals = [], []
        for u in np.atleast_2d(seed_basis):
            if u.size == 0:
                continue
            s, residual, ok = self.refine(flows, u, z, cfg, flow_cfg)
            if not ok:
                raise LatticeError(
                    f"period {np.round(u, 6).tolist()} lost at {np.round(z, 6).tolist()} (residual {residual:.3e})",
                    anchor=ANCHOR_CONTINUITY,
                )
            refined.append(s)
            residuals.append(residual)
        basis = np.array(refined) if refined else np.zeros((0, flows.m))
        return basis, tuple(residuals)

    # -- detection --------------------------------------------------------------

    def _grid(self, cfg: SearchConfig) -> Tuple[np.ndarray, np.ndarray]:
        count = int(np.floor(cfg.half_width / cfg.grid_step + 1e-9))
        half = cfg.grid_step * np.arange(0, count + 1)
        full = np.concatenate([-half[:0:-1], half])
        return full, half

    def coarse_scan(self, flows: FieldStack, z: np.ndarray, cfg: SearchConfig) -> Tuple[np.ndarray, np.ndarray, float]:
        """Distances ||Phi_s z - z|| on the grid (last coordinate >= 0), axes ordered (s_1, ..., s_m)."""
        m = flows.m
        full, half = self._grid(cfg)
        axes = [full] * (m - 1) + [half]
        radius = cfg.eps_coarse * (1.0 + np.linalg.norm(z))
        radius += cfg.grid_step * np.sqrt(m) * np.linalg.norm(flows.matrix(z), 2) / 2.0
        # base points Phi_{(0, s_2, .., s_m)} z, built one axis at a time from the last
        bases = {(): z}
        for axis in range(m - 1, 0, -1):
            direction = np.eye(m)[axis]
            grown = {}
            for key, point in bases.items():
                orbit = flow_orbit(flows, direction, point, axes[axis], cfg.coarse_flow)
                for index, position in enumerate(orbit):
                    grown[(index,) + key] = position
            bases = grown
        shape = tuple(len(a) for a in axes)
        dist = np.full(shape, np.inf)
        e1 = np.eye(m)[0]
        for key, point in bases.items():
            orbit = flow_orbit(flows, e1, point, axes[0], cfg.coarse_flow)
            dist[(slice(None),) + key] = np.linalg.norm(orbit - z, axis=1)
        grids = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return dist, grids, float(radius)

    def detect_period_lattice(self, flows: FieldStack, z: Sequence[float], cfg: SearchConfig,
                              tol_commute: float = 1e-8) -> PeriodLattice:
        z = np.asarray(z, dtype=float)
        m = flows.m
        logger.info(f"[Lattice] detecting period lattice (m={m}, S={cfg.half_width}, h={cfg.grid_step})")
        if m > 1:
            self.check_commuting(flows, z, cfg.flow, tol_commute)

        dist, grids, radius = self.coarse_scan(flows, z, cfg)
        hits = dist < radius
        labels, count = ndimage.label(hits, structure=np.ones((3,) * m))
        seeds = []
        for label in range(1, count + 1):
            cells = np.argwhere(labels == label)
            best = cells[np.argmin(dist[tuple(cells.T)])]
            s = grids[tuple(best)]
            if np.linalg.norm(s) < 2 * cfg.grid_step:
                continue
            seeds.append(s)
        coarse_hits = int(hits.sum())
        logger.info(f"[Lattice] coarse scan: {coarse_hits} near-returns in {len(seeds)} nontrivial clusters "
                    f"(radius {radius:.3e})")

        seeds.sort(key=lambda s: float(np.linalg.norm(s)))
        refined: List[np.ndarray] = []
        failures = 0
        for s0 in seeds:
            s, residual, ok = self.refine(flows, s0, z, cfg)
            if not ok:
                failures += 1
                logger.warning(f"[Lattice] Newton refinement failed from {np.round(s0, 4).tolist()} "
                               f"(residual {residual:.3e})")
                continue
            if np.linalg.norm(s) < cfg.grid_step:
                continue
            refined.append(s)

        generators: List[np.ndarray] = []
        for s in sorted(refined, key=lambda v: float(np.linalg.norm(v))):
            if not in_integer_span(s, generators):
                generators.append(s)
        reduced = gauss_reduce(generators, tol=1e3 * cfg.tol_return)
        independent: List[np.ndarray] = []
        for v in reduced:
            trial = np.array(independent + [v])
            if np.linalg.svd(trial, compute_uv=False)[-1] > 1e-8:
                independent.append(v)

        basis, residuals = [], []
        for u in normalize_basis(independent):
            s, residual, ok = self.refine(flows, u, z, cfg)
            basis.append(s if ok else u)
            residuals.append(residual)
        low_confidence = (coarse_hits > 0 and seeds and not refined) or any(r >= cfg.tol_return for r in residuals)
        lattice = PeriodLattice(
            m=m,
            basis=np.array(basis) if basis else np.zeros((0, m)),
            residuals=tuple(residuals),
            anchor=z.copy(),
            half_width=cfg.half_width,
            grid_step=cfg.grid_step,
            low_confidence=bool(low_confidence),
            coarse_hits=coarse_hits,
            candidates=len(seeds),
            details={"newton_failures": failures, "minimality_guard": self._minimality_guard(refined, basis)},
        )
        logger.info(f"[Lattice] rank r={lattice.r}, basis={np.round(lattice.basis, 9).tolist()}")
        return lattice

    @staticmethod
    def _minimality_guard(refined: Sequence[np.ndarray], basis: Sequence[np.ndarray]) -> bool:
        """No refined return shorter than half the shortest generator."""
        if not basis:
            return True
        shortest = min(float(np.linalg.norm(u)) for u in basis)
        return all(np.linalg.norm(s) >= shortest / 2 for s in refined)

    # -- adapted basis ----------------------------------------------------------

    def adapt_basis(self, lat: PeriodLattice) -> np.ndarray:
        """T with T u_i = e_{m-r+i} and T w_a = e_a for an orthonormal complement w."""
        if lat.r == 0:
            raise LatticeError("adapted basis needs at least one period", anchor=ANCHOR_ISOTROPY)
        inverse = adapted_inverse(lat.generators)
        if np.linalg.svd(inverse, compute_uv=False)[-1] < 1e-12:
            raise LatticeError("lattice generators are rank deficient", anchor=ANCHOR_ISOTROPY)
        return np.linalg.inv(inverse)

    # -- invariants -------------------------------------------------------------

    def fiber_isotropy_check(self, lat: PeriodLattice, flows: FieldStack, n_points: int, cfg: SearchConfig,
                             seed: int = 42, spread: float = 1.0) -> ResidualReport:
        """Every generator also returns at other points of the same fiber."""
        rng = np.random.default_rng(seed)
        tol = 10 * cfg.tol_return
        worst = 0.0
        for _ in range(n_points):
            other = flow_map(flows, rng.uniform(-spread, spread, size=lat.m), lat.anchor, cfg.flow)
            for u in lat.basis:
                worst = max(worst, float(np.linalg.norm(flow_map(flows, u, other, cfg.flow) - other)))
        return single_check("fiber_isotropy", ANCHOR_FIBER_WIDE, worst < tol, worst, tol, n_points * lat.r)

    def integer_closure_check(self, lat: PeriodLattice, flows: FieldStack, cfg: SearchConfig,
                              bound: int = 3) -> ResidualReport:
        """Integer combinations with coefficients in [-bound, bound] return to the anchor."""
        tol = 10 * cfg.tol_return
        worst = 0.0
        count = 0
        for coeffs in product(range(-bound, bound + 1), repeat=lat.r):
            if not any(coeffs):
                continue
            s = np.asarray(coeffs, dtype=float) @ lat.basis
            worst = max(worst, float(np.linalg.norm(flow_map(flows, s, lat.anchor, cfg.flow) - lat.anchor)))
            count += 1
        return single_check("integer_closure", ANCHOR_ISOTROPY, worst < tol, worst, tol, count)

    def lattice_continuity_check(self, lat: PeriodLattice, flows: FieldStack, nearby: Sequence[np.ndarray],
                                 cfg: SearchConfig, max_change: float = 0.1) -> ResidualReport:
        """Rank constant and generators within ``max_change`` relative distance on nearby fibers."""
        worst = 0.0
        flagged = []
        ranks = {lat.r}
        for point in nearby:
            other = self.detect_period_lattice(flows, point, cfg)
            ranks.add(other.r)
            if other.r != lat.r:
                flagged.append(f"rank {other.r} at {np.round(point, 6).tolist()}")
                continue
            for u in lat.basis:
                # the nearest generator up to sign
                change = min(
                    min(np.linalg.norm(u - v), np.linalg.norm(u + v)) for v in other.basis
                ) / np.linalg.norm(u)
                worst = max(worst, float(change))
        passed = not flagged and worst < max_change
        return single_check(
            "lattice_continuity", ANCHOR_CONTINUITY, passed, worst, max_change, len(nearby),
            details={"ranks": sorted(ranks)}, flagged=flagged,
        )


def adapted_inverse(generators: np.ndarray) -> np.ndarray:
    """T^{-1} = [W | U]: orthonormal complement columns (leading entry positive) then the generators."""
    U = np.asarray(generators, dtype=float)
    m = U.shape[0]
    if U.shape[1] == 0:
        return np.eye(m)
    W = null_space(U.T) if U.shape[1] < m else np.zeros((m, 0))
    for a in range(W.shape[1]):
        column = W[:, a]
        lead = int(np.argmax(np.abs(column) > 1e-12))
        if column[lead] < 0:
            W[:, a] = -column
    return np.hstack([W, U])
# end file
