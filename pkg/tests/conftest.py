# file: tests/conftest.py
from typing import Dict

import numpy as np
import pytest

from aacord.agents.chart_agent import Chart, ChartAgent
from aacord.agents.lattice_agent import LatticeAgent, PeriodLattice
from aacord.agents.structure_agent import StructureAgent
from aacord.agents.verification_agent import VerificationAgent
from aacord.mechanics.symplectic import FieldStack
from aacord.systems.catalog import load_catalog
from aacord.systems.models import CasimirSet, SystemDef


class CatalogCharts:
    """Lattices and charts of catalog systems, built once per test session."""

    def __init__(self, chart_agent: ChartAgent):
        self.chart_agent = chart_agent
        self.lattice_agent = LatticeAgent()
        self._lattices: Dict[str, PeriodLattice] = {}
        self._charts: Dict[str, Chart] = {}

    def system(self, name: str) -> SystemDef:
        return load_catalog(name)

    def flows(self, name: str) -> FieldStack:
        system = self.system(name)
        return FieldStack.from_generators(CasimirSet.from_system(system).pulled, system.n)

    def lattice(self, name: str) -> PeriodLattice:
        if name not in self._lattices:
            system = self.system(name)
            tol = system.tolerances
            self._lattices[name] = self.lattice_agent.detect_period_lattice(
                self.flows(name), system.reference_point, tol.search, tol.tol_commute)
        return self._lattices[name]

    def chart(self, name: str) -> Chart:
        if name not in self._charts:
            system = self.system(name)
            self._charts[name] = self.chart_agent.build_chart(system, CasimirSet.from_system(system),
                                                              self.lattice(name))
        return self._charts[name]


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def structure_agent():
    return StructureAgent()


@pytest.fixture(scope="session")
def lattice_agent():
    return LatticeAgent()


@pytest.fixture(scope="session")
def chart_agent():
    return ChartAgent()


@pytest.fixture(scope="session")
def verification_agent(chart_agent):
    return VerificationAgent(chart_agent)


@pytest.fixture(scope="session")
def catalog(chart_agent):
    return CatalogCharts(chart_agent)


@pytest.fixture
def harmonic():
    return load_catalog("harmonic1d")


@pytest.fixture
def e2():
    return load_catalog("e2-noncommutative")


@pytest.fixture
def so3():
    return load_catalog("so3-momentum")
# end file
