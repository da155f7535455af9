# src/schemas/manifest.py
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """Written beside every CLI output; `argv` is enough to replay the run."""
    subcommand: str
    argv: List[str]
    resolved_config: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    tool_version: str
    build_id: str
    started_at: str
    wall_clock_seconds: float = 0.0
