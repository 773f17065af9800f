# file: aacord/graph/workflow.py
from typing import Any, Dict, List, Optional, TypedDict

import numpy as np
import pandas as pd
from langgraph.graph import END, StateGraph

from aacord.agents.chart_agent import ChartAgent
from aacord.agents.lattice_agent import LatticeAgent
from aacord.agents.structure_agent import StructureAgent
from aacord.agents.verification_agent import VerificationAgent
from aacord.mechanics.expr import parse
from aacord.mechanics.flow import completeness_probe, flow_orbit
from aacord.mechanics.symplectic import FieldStack
from aacord.reports import Hypothesis, ResidualReport, single_check
from aacord.systems.catalog import resolve_system
from aacord.utils.config import Config
from aacord.utils.errors import AacordError, SpecError
from aacord.utils.logger import setup_logger

logger = setup_logger(__name__)

STAGES = {
    "validate": ["load", "validate"],
    "topology": ["load", "validate", "topology"],
    "chart": ["load", "validate", "topology", "chart"],
    "verify": ["load", "validate", "topology", "chart", "verify"],
    "trace": ["load", "validate", "topology", "chart", "trace"],
}

ANCHOR_COMPLETE = "complete vector fields"

ASSUMED = [
    ANCHOR_COMPLETE,
    "fibers are connected and mutually diffeomorphic",
    "base is simply connected",
    "H^2 of the base with integer coefficients vanishes",
]


class PipelineState(TypedDict, total=False):
    command: str
    target: str
    allow_files: bool
    seed: int
    point: Optional[List[float]]
    overrides: Dict[str, Any]
    hamiltonian: Optional[str]
    t_max: float
    dt: float
    anchor_offset: bool
    system: Any  # SystemDef
    structure: Dict[str, Any]
    lattice: Any  # PeriodLattice
    chart: Any  # Chart
    samples: List[Any]
    sample_table: Any  # pandas DataFrame
    trace: Any  # pandas DataFrame
    report: ResidualReport
    failed: bool


# Initialize Agents
structure_agent = StructureAgent()
lattice_agent = LatticeAgent()
chart_agent = ChartAgent()
verification_agent = VerificationAgent(chart_agent)


# Define Nodes
async def node_load(state: PipelineState):
    logger.info(f"--- Node: Load {state['target'][:40]!r} ---")
    system = resolve_system(state["target"], allow_files=state.get("allow_files", False))
    try:
        system = system.with_tolerances(state.get("overrides") or {})
    except KeyError as exc:
        raise SpecError(f"unknown tolerance {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise SpecError(f"invalid tolerance override: {exc}") from exc
    report = ResidualReport(
        command=state["command"],
        system=system.name,
        seed=state["seed"],
        tolerances=system.tolerances.model_dump(),
        hypotheses=[Hypothesis(name=name, status="assumed") for name in ASSUMED],
        validity={"sampling_box": dict(zip(system.variables, system.sampling_box)), "domain": system.domain},
        results={"n": system.n, "k": system.k, "kind": system.kind},
    )
    return {"system": system, "report": report, "failed": False}


async def node_validate(state: PipelineState):
    logger.info("--- Node: Validate structure ---")
    system = state["system"]
    samples, excluded = structure_agent.sample_points(system, system.tolerances.samples, state["seed"])
    if not samples:
        raise SpecError("no regular sample points in the sampling box")
    structure = structure_agent.run_all(system, samples, state["seed"])
    report = state["report"].merge(structure["report"])
    report.results["excluded_samples"] = excluded
    report.results["casimirs"] = structure["casimirs"].names if structure["casimirs"] is not None else []
    report.results["transverse"] = ([system.integral_names[i] for i in structure["transverse"]]
                                    or system.transverse_names)
    structure["samples"] = samples
    return {"structure": structure, "report": report, "failed": not report.passed}


async def node_topology(state: PipelineState):
    logger.info("--- Node: Topology ---")
    system = state["system"]
    tol = system.tolerances
    cas = state["structure"]["casimirs"]
    flows = FieldStack.from_generators(cas.pulled, system.n)
    point = np.asarray(state.get("point") or system.reference, dtype=float)
    if point.shape != (2 * system.n,):
        raise SpecError(f"--point needs {2 * system.n} coordinates")

    probes = []
    for z in [point] + list(state["structure"]["samples"][:2]):
        for handle in flows.handles:
            probes.append(completeness_probe(handle, z, tol.probe_time, tol.search.coarse_flow))
    probe_ok = all(p.ok for p in probes)
    report = state["report"].merge(single_check(
        "completeness_probe", ANCHOR_COMPLETE, probe_ok, None, tol.probe_time, len(probes),
        details={"statuses": [p.status for p in probes]},
        flagged=[p.message for p in probes if not p.ok],
    ))
    report.hypotheses = [
        Hypothesis(name=ANCHOR_COMPLETE, status="probed", evidence={"window": tol.probe_time,
                   "probes": [p.model_dump() for p in probes]}) if h.name == ANCHOR_COMPLETE else h
        for h in report.hypotheses
    ]
    if not probe_ok:
        return {"report": report, "failed": True}

    lat = lattice_agent.detect_period_lattice(flows, point, tol.search, tol.tol_commute)
    report.results["lattice"] = lat.to_dict()
    report.validity["lattice_search_box"] = {"half_width": tol.search.half_width, "grid_step": tol.search.grid_step}
    checks = []
    if lat.r:
        checks.append(lattice_agent.fiber_isotropy_check(lat, flows, 4, tol.search, seed=state["seed"]))
        checks.append(lattice_agent.integer_closure_check(lat, flows, tol.search, bound=2))
    rng = np.random.default_rng(state["seed"])
    nearby = []
    for _ in range(2):
        direction = rng.normal(size=point.size)
        nearby.append(point + 1e-2 * (1.0 + np.linalg.norm(point)) * direction / np.linalg.norm(direction))
    checks.append(lattice_agent.lattice_continuity_check(lat, flows, nearby, tol.search))
    report = report.merge(*checks)
    if lat.low_confidence:
        report.results["lattice_warning"] = "Newton refinement failed on every coarse candidate; rank is low-confidence"
    return {"lattice": lat, "report": report, "failed": not report.passed}


async def node_chart(state: PipelineState):
    logger.info("--- Node: Chart ---")
    system = state["system"]
    tol = system.tolerances
    cas = state["structure"]["casimirs"]
    lat = state["lattice"]
    if np.linalg.norm(lat.anchor - system.reference_point) > 0:
        flows = FieldStack.from_generators(cas.pulled, system.n)
        lat = lattice_agent.detect_period_lattice(flows, system.reference_point, tol.search, tol.tol_commute)
    report = state["report"]
    provenance = {
        "certificates": {c.name: c.passed for c in report.checks},
        "hypotheses": [h.model_dump() for h in report.hypotheses],
    }
    chart = chart_agent.build_chart(system, cas, lat, transverse=state["structure"]["transverse"],
                                    provenance=provenance)
    samples = chart_agent.sample_chart_points(chart, tol.roundtrip_samples, state["seed"])
    rows = []
    worst = 0.0
    for z in samples:
        w = chart_agent.chart_forward(chart, z)
        back = chart_agent.chart_inverse(chart, w)
        worst = max(worst, float(np.linalg.norm(back - z)))
        rows.append(list(z) + list(w.as_vector()))
    table = pd.DataFrame(rows, columns=list(system.variables) + chart.coordinate_names)
    summary = chart.to_dict()
    summary.pop("provenance")
    report = report.merge(single_check(
        "chart_roundtrip", "chart inverse undoes the chart", worst < tol.tol_roundtrip, worst,
        tol.tol_roundtrip, len(samples), results={"chart": summary},
    ))
    return {"chart": chart, "samples": samples, "sample_table": table, "report": report,
            "failed": not report.passed}


async def node_verify(state: PipelineState):
    logger.info("--- Node: Verify chart ---")
    system = state["system"]
    tol = system.tolerances
    chart = state["chart"]
    samples = state["samples"]
    checks = [verification_agent.verify_canonical_blocks(chart, samples[:tol.block_samples])]
    hamiltonian = _hamiltonian(state)
    checks.append(verification_agent.verify_equations_of_motion(
        chart, hamiltonian, system.reference_point, state.get("t_max") or 2 * np.pi, state.get("dt") or 0.25,
        seed=state["seed"],
    ))
    if chart.r:
        checks.append(verification_agent.frequency_duality_check(chart, samples[:2]))
    if state.get("anchor_offset"):
        shift = np.full(chart.m, 0.3)
        other = verification_agent.alternate_chart(chart, shift)
        checks.append(verification_agent.anchor_offset_check(chart, other, samples[:3], seed=state["seed"]))
    report = state["report"].merge(*checks)
    return {"report": report, "failed": not report.passed}


async def node_trace(state: PipelineState):
    logger.info("--- Node: Trace ---")
    system = state["system"]
    chart = state["chart"]
    hamiltonian = _hamiltonian(state)
    t_max = state.get("t_max") or 2 * np.pi
    dt = state.get("dt") or 0.1
    if t_max <= 0 or dt <= 0:
        raise SpecError("--t-max and --dt must be positive")
    z0 = np.asarray(state.get("point") or system.reference, dtype=float)
    times = np.arange(0.0, t_max + 0.5 * dt, dt)
    orbit = flow_orbit(FieldStack.from_generators([hamiltonian], system.n), [1.0], z0, times,
                       system.tolerances.chart_flow)
    rows = [[t] + list(z) + list(chart_agent.chart_forward(chart, z).as_vector()) for t, z in zip(times, orbit)]
    trace = pd.DataFrame(rows, columns=["t"] + list(system.variables) + chart.coordinate_names)
    report = state["report"].model_copy(deep=True)
    report.results["trace"] = {"hamiltonian": hamiltonian.pretty(), "points": len(times), "t_max": t_max, "dt": dt}
    return {"trace": trace, "report": report}


def _hamiltonian(state: PipelineState):
    system = state["system"]
    if state.get("hamiltonian"):
        try:
            tree = parse(state["hamiltonian"])
        except AacordError as exc:
            raise SpecError(f"invalid --hamiltonian: {exc}") from exc
        allowed = set(system.variables) | set(system.integral_names) | {c.name for c in system.casimirs}
        unknown = sorted(tree.free_variables() - allowed)
        if unknown:
            raise SpecError(f"unknown variable '{unknown[0]}' in --hamiltonian")
        return system.pull_back(tree)
    return system.hamiltonian_expr


NODES = {
    "load": node_load,
    "validate": node_validate,
    "topology": node_topology,
    "chart": node_chart,
    "verify": node_verify,
    "trace": node_trace,
}


def _route(next_stage: str):
    def route(state: PipelineState) -> str:
        return END if state.get("failed") else next_stage
    return route


def build_workflow(command: str):
    """Compile the graph running the stages of ``command``, stopping at the first failing one."""
    if command not in STAGES:
        raise SpecError(f"unknown command '{command}'")
    stages = STAGES[command]
    workflow = StateGraph(PipelineState)
    for stage in stages:
        workflow.add_node(stage, NODES[stage])
    workflow.set_entry_point(stages[0])
    for current, following in zip(stages, stages[1:]):
        workflow.add_conditional_edges(current, _route(following), {following: following, END: END})
    workflow.add_edge(stages[-1], END)
    return workflow.compile()


_COMPILED: Dict[str, Any] = {}


async def run_pipeline(
    command: str,
    target: str,
    seed: int = Config.SEED,
    point: Optional[List[float]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    hamiltonian: Optional[str] = None,
    t_max: Optional[float] = None,
    dt: Optional[float] = None,
    anchor_offset: bool = False,
    allow_files: bool = False,
) -> PipelineState:
    if command not in _COMPILED:
        _COMPILED[command] = build_workflow(command)
    logger.info(f"Starting {command} for {target[:40]!r} (seed {seed})")
    initial: PipelineState = {
        "command": command,
        "target": target,
        "allow_files": allow_files,
        "seed": seed,
        "point": point,
        "overrides": overrides or {},
        "hamiltonian": hamiltonian,
        "t_max": t_max,
        "dt": dt,
        "anchor_offset": anchor_offset,
        "failed": False,
    }
    final = await _COMPILED[command].ainvoke(initial)
    status = "passed" if final["report"].passed else "FAILED"
    logger.info(f"Finished {command}: {status}")
    return final
# end file
