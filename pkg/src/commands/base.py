# src/commands/base.py
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional


@dataclass
class CommandResult:
    """What a handler produced; the dispatcher turns it into a RunManifest."""
    primary_output: Path
    outputs: Dict[str, str] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    resolved_config: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
