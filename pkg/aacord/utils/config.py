# file: aacord/utils/config.py
"""Runtime configuration: environment defaults plus validated numeric knobs."""
import os
from typing import Any, Dict

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator

load_dotenv()


class Config:
    VERSION = "1.0.0"
    SEED = int(os.getenv("AACORD_SEED", "42"))
    LOG_LEVEL = os.getenv("AACORD_LOG_LEVEL", "INFO").upper()
    OUT_DIR = os.getenv("AACORD_OUT_DIR", "out")
    SAMPLES = int(os.getenv("AACORD_SAMPLES", "64"))
    API_HOST = os.getenv("AACORD_API_HOST", "0.0.0.0")
    API_PORT = int(os.getenv("AACORD_API_PORT", "8000"))


class FlowConfig(BaseModel):
    """Integrator settings for the R^m action."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    rtol: float = Field(1e-10, gt=0)
    atol: float = Field(1e-12, gt=0)
    max_steps: int = Field(1_000_000, gt=0)
    escape_radius: float = Field(1e6, gt=1)


class SearchConfig(BaseModel):
    """Close-return search settings for period lattices."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    half_width: float = Field(50.0, gt=0)
    grid_step: float = Field(0.1, gt=0)
    eps_coarse: float = Field(1e-2, gt=0)
    newton_max_iter: int = Field(50, gt=0)
    tol_return: float = Field(1e-9, gt=0)
    flow: FlowConfig = FlowConfig()
    # looser integration is enough to locate candidates
    coarse_flow: FlowConfig = FlowConfig(rtol=1e-7, atol=1e-9)

    @model_validator(mode="after")
    def _check_bounds(self) -> "SearchConfig":
        if self.grid_step >= self.half_width:
            raise ValueError("grid_step must be smaller than half_width")
        if self.eps_coarse <= self.tol_return:
            raise ValueError("eps_coarse must exceed tol_return")
        return self


class ToleranceConfig(BaseModel):
    """All certificate thresholds of one run."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    tol_rank: float = Field(1e-8, gt=0)
    tol_involution: float = Field(1e-10, gt=0)
    tol_corank: float = Field(1e-8, gt=0)
    tol_fiber: float = Field(1e-8, gt=0)
    tol_casimir: float = Field(1e-8, gt=0)
    tol_commute: float = Field(1e-8, gt=0)
    tol_blocks: float = Field(1e-5, gt=0)
    tol_eom: float = Field(1e-6, gt=0)
    tol_eom_slope: float = Field(1e-4, gt=0)
    tol_roundtrip: float = Field(1e-7, gt=0)
    samples: int = Field(default_factory=lambda: Config.SAMPLES, gt=0)
    roundtrip_samples: int = Field(16, gt=0)
    block_samples: int = Field(4, gt=0)
    grid_size: int = Field(17, ge=4)
    probe_time: float = Field(100.0, gt=0)
    flow: FlowConfig = FlowConfig()
    # chart coordinates are differentiated numerically, so the chart flows run tighter
    chart_flow: FlowConfig = FlowConfig(rtol=1e-12, atol=1e-14)
    search: SearchConfig = SearchConfig()

    def with_overrides(self, overrides: Dict[str, Any]) -> "ToleranceConfig":
        """Return a copy with flat overrides applied.

        Keys are field names of this model, or ``flow.<name>``,
        ``chart_flow.<name>``, ``search.<name>`` for the nested configs.
        """
        data = self.model_dump()
        for key, value in overrides.items():
            section, _, name = key.partition(".")
            if name:
                if section not in ("flow", "chart_flow", "search"):
                    raise KeyError(key)
                data[section][name] = value
            else:
                if section not in data:
                    raise KeyError(key)
                data[section] = value
        return ToleranceConfig.model_validate(data)
# end file
