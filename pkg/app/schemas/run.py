"""
Run configuration file schema.

A run config is the JSON (or YAML) file handed to the CLI. It may carry a
generator section, a protocol section, an injection sweep section, a
threshold grid and input/output paths; unknown keys are rejected.
"""

from pydantic import Field

from app.schemas.cohort import IngestOptions
from app.schemas.common import StrictModel
from app.schemas.community import ThresholdGrid
from app.schemas.protocol import InjectionConfig, ProtocolConfig
from app.schemas.synth import GeneratorConfig


class RunConfig(StrictModel):
    """Union of everything a CLI command may read from a config file."""

    seed: int | None = Field(default=None, ge=0, description="Master seed for every section")
    threads: int | None = Field(default=None, ge=0, description="Parallel workers (0 = all)")
    cohort_path: str | None = Field(default=None, description="Input cohort CSV")
    out: str | None = Field(default=None, description="Output path or directory")
    ingest: IngestOptions = Field(default_factory=IngestOptions)
    generator: GeneratorConfig | None = None
    protocol: ProtocolConfig | None = None
    injection: InjectionConfig | None = None
    grid: ThresholdGrid | None = None
