# file: aacord/agents/structure_agent.py
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space, subspace_angles
from scipy.stats import qmc

from aacord.mechanics.expr import Expr, compile_exprs
from aacord.mechanics.flow import flow_map
from aacord.mechanics.symplectic import FieldStack, GradientField, phase_variables, poisson_bracket
from aacord.reports import ResidualReport, single_check
from aacord.systems.models import CasimirSet, LieAlgebraSpec, SystemDef
from aacord.utils.errors import AacordError, ExprDomainError, FlowError, HypothesisError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

# conditions of noncommutative integrability
ANCHOR_INDEPENDENCE = "integrability (i): independent integrals, dH_1 ^ ... ^ dH_k nowhere vanishes"
ANCHOR_FIBER = "integrability (ii): {H_i, H_j} = s_ij(H), constant on fibers"
ANCHOR_CORANK = "integrability (iii): constant corank m = 2n - k"
ANCHOR_INVOLUTION = "functions in involution"
ANCHOR_CASIMIR = "pulled-back Casimirs H*C commute with every integral"
ANCHOR_TRANSVERSE = "transverse coordinates complete the Casimirs"
ANCHOR_LIE_POISSON = "coinduced bracket equals the Lie-Poisson bivector"
ANCHOR_LEAF = "transverse coordinates are Darboux on symplectic leaves"


class StructureMatrixField:
    """The k x k matrix of brackets {H_i, H_j} as expressions, with a compiled evaluator."""

    def __init__(self, entries: Sequence[Sequence[Expr]], n: int, tol: float, abelian: bool):
        self.entries = [list(row) for row in entries]
        self.k = len(self.entries)
        self.n = n
        self.tol = tol
        self.abelian = abelian
        flat = [e for row in self.entries for e in row]
        self._evaluate = compile_exprs(flat, phase_variables(n))

    def __call__(self, z: Sequence[float]) -> np.ndarray:
        return self._evaluate(np.asarray(z, dtype=float).tolist()).reshape(self.k, self.k)

    def antisymmetry_residual(self, z: Sequence[float]) -> float:
        s = self(z)
        return float(np.max(np.abs(s + s.T))) if s.size else 0.0


class StructureAgent:
    """Certificates for the integrability hypotheses of a system definition."""

    def __init__(self):
        pass

    # -- sampling -------------------------------------------------------------

    def sample_points(self, sys: SystemDef, count: int, seed: int) -> Tuple[List[np.ndarray], int]:
        """Scrambled Halton points in the sampling box, minus points where independence fails.

        Returns the kept points and the number excluded.
        """
        lo, hi = sys.box_bounds
        sampler = qmc.Halton(d=2 * sys.n, scramble=True, seed=seed)
        raw = qmc.scale(sampler.random(count), lo, hi)
        gradient = GradientField(sys.integral_exprs, sys.n)
        kept, excluded = [], 0
        for z in raw:
            try:
                sv = np.linalg.svd(gradient.jacobian(z), compute_uv=False)
            except ExprDomainError:
                excluded += 1
                continue
            if sv[-1] > sys.tolerances.tol_rank:
                kept.append(z)
            else:
                excluded += 1
        if excluded:
            logger.info(f"[Structure] excluded {excluded} singular sample point(s) outside the regular set")
        return kept, excluded

    # -- certificates -----------------------------------------------------------

    def independence_check(self, sys: SystemDef, samples: Sequence[Sequence[float]]) -> ResidualReport:
        logger.info(f"[Structure] independence check on {len(samples)} samples")
        if not samples:
            raise ValueError("independence check needs at least one sample")
        gradient = GradientField(sys.integral_exprs, sys.n)
        tol = sys.tolerances.tol_rank
        worst = np.inf
        flagged = []
        for z in samples:
            try:
                sv = np.linalg.svd(gradient.jacobian(z), compute_uv=False)
            except ExprDomainError as exc:
                flagged.append(f"{_fmt(z)}: {exc.message}")
                continue
            sigma_k = float(sv[sys.k - 1])
            if sigma_k <= tol:
                flagged.append(f"{_fmt(z)}: sigma_k={sigma_k:.3e}")
            worst = min(worst, sigma_k)
        passed = not flagged and worst > tol
        return single_check(
            "independence", ANCHOR_INDEPENDENCE, passed, worst, tol, len(samples),
            details={"min_sigma_k": worst, "k": sys.k}, flagged=flagged,
        )

    def structure_matrix(self, sys: SystemDef, samples: Optional[Sequence[Sequence[float]]] = None) -> StructureMatrixField:
        exprs = sys.integral_exprs
        entries = [[poisson_bracket(f, g, sys.n) for g in exprs] for f in exprs]
        tol = sys.tolerances.tol_involution
        points = list(samples) if samples else [sys.reference_point]
        smat = StructureMatrixField(entries, sys.n, sys.tolerances.tol_corank, abelian=False)
        smat.abelian = all(float(np.max(np.abs(smat(z)))) <= tol for z in points)
        logger.info(f"[Structure] structure matrix built (k={sys.k}, abelian={smat.abelian})")
        return smat

    def fiber_constancy_check(
        self,
        smat: StructureMatrixField,
        sys: SystemDef,
        flows: FieldStack,
        n_points: int,
        seed: int = 42,
        scale: float = 1.0,
    ) -> ResidualReport:
        """Transport the reference point along the fiber flows and compare brackets."""
        logger.info(f"[Structure] fiber constancy along {n_points} transported points")
        rng = np.random.default_rng(seed)
        cfg = sys.tolerances.flow
        z0 = sys.reference_point
        s0 = smat(z0)
        worst = 0.0
        flagged = []
        for _ in range(n_points):
            s = rng.uniform(-scale, scale, size=flows.m)
            try:
                z = flow_map(flows, s, z0, cfg)
                worst = max(worst, float(np.max(np.abs(smat(z) - s0))))
            except (FlowError, ExprDomainError) as exc:
                flagged.append(f"s={_fmt(s)}: {exc.message}")
        tol = sys.tolerances.tol_fiber
        return single_check(
            "fiber_constancy", ANCHOR_FIBER, not flagged and worst <= tol, worst, tol, n_points,
            flagged=flagged,
        )

    def corank_check(self, smat: StructureMatrixField, samples: Sequence[Sequence[float]],
                     expected: Optional[int] = None) -> Tuple[int, ResidualReport]:
        """Corank of s at every sample; passes iff it equals ``expected`` (2n - k by default) everywhere."""
        logger.info(f"[Structure] corank check on {len(samples)} samples")
        if not samples:
            raise ValueError("corank check needs at least one sample")
        k = smat.k
        if expected is None:
            expected = 2 * smat.n - k
        coranks = []
        margin = np.inf
        for z in samples:
            sv = np.linalg.svd(smat(z), compute_uv=False)
            sigma_max = float(sv[0]) if sv.size else 0.0
            if sigma_max <= np.finfo(float).tiny:
                coranks.append(k)
                continue
            threshold = smat.tol * sigma_max
            corank = int(np.sum(sv < threshold))
            coranks.append(corank)
            kept = sv[sv >= threshold]
            if kept.size:
                margin = min(margin, float(kept[-1] / sigma_max))
        observed = sorted(set(coranks))
        passed = observed == [expected]
        m = coranks[0] if passed else expected
        flagged = [] if passed else [f"observed coranks {observed}, expected {expected}"]
        report = single_check(
            "corank", ANCHOR_CORANK, passed, None if passed else float(max(abs(c - expected) for c in coranks)),
            smat.tol, len(samples),
            details={"coranks": observed, "expected": expected, "min_relative_sigma": margin},
            flagged=flagged, results={"m": m},
        )
        return m, report

    def involution_check(self, sys: SystemDef, samples: Sequence[Sequence[float]]) -> ResidualReport:
        smat = self.structure_matrix(sys, samples)
        worst = max(float(np.max(np.abs(smat(z)))) for z in samples)
        tol = sys.tolerances.tol_involution
        return single_check("involution", ANCHOR_INVOLUTION, worst <= tol, worst, tol, len(samples))

    def lie_poisson_bivector(self, alg: LieAlgebraSpec, x: Sequence[float]) -> np.ndarray:
        return alg.bivector(x)

    def null_space_basis(self, smat: StructureMatrixField, z: Sequence[float]) -> np.ndarray:
        """Orthonormal basis (columns) of ker s(z); diagnostic only."""
        s = smat(z)
        sigma_max = np.linalg.norm(s, 2)
        if sigma_max == 0.0:
            return np.eye(smat.k)
        return null_space(s, rcond=smat.tol)

    def casimir_verify(self, sys: SystemDef, cas: CasimirSet, samples: Sequence[Sequence[float]]) -> ResidualReport:
        logger.info(f"[Structure] verifying {cas.m} Casimir(s) on {len(samples)} samples")
        if cas.m != sys.m:
            raise HypothesisError(
                f"expected m = 2n - k = {sys.m} Casimirs, got {cas.m}", anchor=ANCHOR_CASIMIR
            )
        tol = sys.tolerances.tol_casimir
        brackets = [poisson_bracket(c, h, sys.n) for c in cas.pulled for h in sys.integral_exprs]
        evaluate = compile_exprs(brackets, sys.variables)
        integrals = GradientField(sys.integral_exprs, sys.n)
        smat = self.structure_matrix(sys)
        worst = 0.0
        worst_angle = 0.0
        min_sigma = np.inf
        flagged = []
        for z in samples:
            residual = float(np.max(np.abs(evaluate(list(z))))) if brackets else 0.0
            worst = max(worst, residual)
            x = integrals.values(z)
            jac = cas.base_jacobian(x)
            sv = np.linalg.svd(jac, compute_uv=False)
            min_sigma = min(min_sigma, float(sv[-1]) if sv.size else np.inf)
            if sv.size and sv[-1] <= sys.tolerances.tol_rank:
                flagged.append(f"{_fmt(z)}: Casimir differentials rank-deficient (sigma_m={sv[-1]:.3e})")
            kernel = self.null_space_basis(smat, z)
            if kernel.shape[1] == cas.m:
                angle = float(np.max(subspace_angles(kernel, jac.T)))
            else:
                angle = float(np.pi / 2)
            worst_angle = max(worst_angle, angle)
        passed = worst <= tol and not flagged
        report = single_check(
            "casimir_brackets", ANCHOR_CASIMIR, passed, worst, tol, len(samples),
            details={"names": cas.names, "min_sigma_m": min_sigma}, flagged=flagged,
        )
        angle_report = single_check(
            "casimir_null_space", ANCHOR_CASIMIR, worst_angle < 1e-6, worst_angle, 1e-6, len(samples),
            details={"angle_radians": worst_angle},
        )
        return report.merge(angle_report)

    def transverse_coordinates(self, sys: SystemDef, cas: CasimirSet,
                               base_samples: Sequence[Sequence[float]]) -> List[int]:
        """Greedy pivoted choice of 2(n - m) integrals completing dC to rank k on every base sample."""
        need = 2 * (sys.n - sys.m)
        if need == 0:
            return []
        k = sys.k
        jacobians = [cas.base_jacobian(x) for x in base_samples]
        chosen: List[int] = []
        for _ in range(need):
            best, best_score = None, 0.0
            for index in range(k):
                if index in chosen:
                    continue
                rows = np.eye(k)[chosen + [index]]
                score = min(
                    float(np.linalg.svd(np.vstack([jac, rows]), compute_uv=False)[-1]) for jac in jacobians
                )
                if score > best_score:
                    best, best_score = index, score
            if best is None or best_score <= sys.tolerances.tol_rank:
                raise HypothesisError(
                    "no subset of integrals completes the Casimirs on the sampled base points; shrink the domain",
                    anchor=ANCHOR_TRANSVERSE,
                )
            chosen.append(best)
        logger.info(f"[Structure] transverse coordinates: {[sys.integral_names[i] for i in chosen]}")
        return sorted(chosen)

    def transverse_rank_check(self, sys: SystemDef, cas: CasimirSet, coordinates: Sequence[Expr],
                              samples: Sequence[Sequence[float]]) -> ResidualReport:
        """(J, x) must be independent on phase space: rank 2n - m at every sample."""
        gradient = GradientField(list(cas.pulled) + list(coordinates), sys.n)
        need = cas.m + len(coordinates)
        worst = np.inf
        flagged = []
        for z in samples:
            try:
                sv = np.linalg.svd(gradient.jacobian(z), compute_uv=False)
            except ExprDomainError as exc:
                flagged.append(f"{_fmt(z)}: {exc.message}")
                continue
            worst = min(worst, float(sv[need - 1]))
        tol = sys.tolerances.tol_rank
        return single_check(
            "transverse_rank", ANCHOR_TRANSVERSE, not flagged and worst > tol, worst, tol, len(samples),
            details={"rank_required": need}, flagged=flagged,
        )

    def coinduced_bracket_check(self, sys: SystemDef, samples: Sequence[Sequence[float]]) -> ResidualReport:
        alg = sys.lie_algebra
        if alg is None:
            raise HypothesisError("system declares no Lie algebra", anchor=ANCHOR_LIE_POISSON)
        smat = self.structure_matrix(sys)
        integrals = GradientField(sys.integral_exprs, sys.n)
        worst = 0.0
        ranks = set()
        for z in samples:
            x = integrals.values(z)
            w = alg.bivector(x)
            worst = max(worst, float(np.max(np.abs(smat(z) - w))))
            sv = np.linalg.svd(w, compute_uv=False)
            ranks.add(int(np.sum(sv > sys.tolerances.tol_corank * sv[0])) if sv[0] > 0 else 0)
        antisym, jacobi = alg.check_identities()
        expected_rank = 2 * (sys.n - sys.m)
        tol = sys.tolerances.tol_involution
        passed = worst <= tol and antisym == 0.0 and jacobi <= 1e-12 and ranks == {expected_rank}
        return single_check(
            "coinduced_bracket", ANCHOR_LIE_POISSON, passed, max(worst, jacobi), tol, len(samples),
            details={"antisymmetry": antisym, "jacobi": jacobi, "ranks": sorted(ranks),
                     "expected_rank": expected_rank},
        )

    def leaf_bracket_check(self, sys: SystemDef, coordinates: Sequence[Expr],
                           samples: Sequence[Sequence[float]]) -> ResidualReport:
        """Coinduced brackets {x^A, x^B} and their spread over the samples."""
        brackets = [poisson_bracket(a, b, sys.n) for a in coordinates for b in coordinates]
        size = len(coordinates)
        if not brackets:
            return single_check("leaf_brackets", ANCHOR_LEAF, True, 0.0, sys.tolerances.tol_casimir, 0)
        evaluate = compile_exprs(brackets, sys.variables)
        values = np.array([evaluate(list(z)).reshape(size, size) for z in samples])
        spread = float(np.max(values.max(axis=0) - values.min(axis=0)))
        tol = sys.tolerances.tol_casimir
        return single_check(
            "leaf_brackets", ANCHOR_LEAF, spread <= tol, spread, tol, len(samples),
            details={"bracket_at_first_sample": values[0]},
        )

    def run_all(self, sys: SystemDef, samples: Sequence[np.ndarray], seed: int) -> Dict[str, Any]:
        """Every structure certificate the system's kind calls for."""
        logger.info(f"Running structure checks for {sys.name}")
        points = [sys.reference_point] + list(samples)
        report = self.independence_check(sys, points)
        smat = self.structure_matrix(sys, points)
        result: Dict[str, Any] = {"smat": smat, "casimirs": None, "transverse": []}
        if sys.kind == "pis":
            report = report.merge(self.involution_check(sys, points))
            m = sys.m
        else:
            m, corank_report = self.corank_check(smat, points)
            report = report.merge(corank_report)
        cas = CasimirSet.from_system(sys)
        result["casimirs"] = cas
        flows = FieldStack.from_generators(cas.pulled, sys.n) if cas.m else None
        if flows is not None:
            report = report.merge(self.fiber_constancy_check(smat, sys, flows, min(len(samples), 16) or 4, seed))
        if sys.kind == "cis":
            try:
                report = report.merge(self.casimir_verify(sys, cas, points))
            except AacordError as exc:
                report = report.merge(single_check("casimir_brackets", ANCHOR_CASIMIR, False, None,
                                                   sys.tolerances.tol_casimir, 0, flagged=[str(exc)]))
            if sys.lie_algebra is not None:
                report = report.merge(self.coinduced_bracket_check(sys, points))
        if report.passed and 2 * (sys.n - m) > 0:
            if sys.transverse:
                coords = [sys.pull_back(t.expr) for t in sys.transverse]
                report = report.merge(self.leaf_bracket_check(sys, coords, points))
            else:
                gradient = GradientField(sys.integral_exprs, sys.n)
                base = [gradient.values(z) for z in points]
                try:
                    result["transverse"] = self.transverse_coordinates(sys, cas, base)
                except HypothesisError as exc:
                    report = report.merge(single_check("transverse_rank", ANCHOR_TRANSVERSE, False, None,
                                                       sys.tolerances.tol_rank, len(points), flagged=[str(exc)]))
                    result["report"] = report
                    return result
                coords = [sys.integral_exprs[i] for i in result["transverse"]]
            report = report.merge(self.transverse_rank_check(sys, cas, coords, points))
        report.results.update({"m": m, "abelian": smat.abelian, "k": sys.k, "n": sys.n})
        result["report"] = report
        return result


def _fmt(values: Sequence[float]) -> str:
    return "(" + ", ".join(f"{float(v):.6g}" for v in values) + ")"
# end file
