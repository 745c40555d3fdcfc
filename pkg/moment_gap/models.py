"""
This module defines the data models shared across components.

Classes:
    RunConfig: Parameters of one command invocation plus the active settings.
    Provenance: The provenance block written next to every result.

Types:
    ReadOnlyArray: numpy array field that is frozen on validation.
"""

from datetime import datetime, timezone
from typing import Annotated, Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator

from moment_gap import __version__
from moment_gap.config.settings import Settings


def _freeze(value: Any) -> np.ndarray:
    array = np.asarray(value)
    if array.dtype == object:
        raise ValueError("expected a numeric array")
    array.flags.writeable = False
    return array


ReadOnlyArray = Annotated[
    np.ndarray,
    PlainValidator(_freeze),
    PlainSerializer(lambda array: array.tolist(), when_used="json"),
]


class Provenance(BaseModel):
    """
    Provenance of a command run.

    Attributes:
        command (str): The subcommand that produced the result.
        parameters (Dict[str, Any]): The command parameters after defaults.
        version (str): The package version.
        seed (Optional[int]): The master seed, when the run is stochastic.
        settings (Dict[str, Any]): Snapshot of the active settings.
        created_at (str): UTC timestamp in ISO-8601 form.
    """

    model_config = ConfigDict(frozen=True)

    command: str
    parameters: Dict[str, Any]
    version: str
    seed: Optional[int] = None
    settings: Dict[str, Any]
    created_at: str


class RunConfig(BaseModel):
    """
    One invocation of a subcommand.

    Attributes:
        command (str): The subcommand name.
        parameters (Dict[str, Any]): Bound command parameters.
        settings (Settings): Settings after environment and file overlay.
    """

    model_config = ConfigDict(frozen=True)

    command: str
    parameters: Dict[str, Any]
    settings: Settings

    @property
    def seed(self) -> Optional[int]:
        seed = self.parameters.get("seed")
        return int(seed) if seed is not None else None

    def provenance(self) -> Provenance:
        parameters = {
            key: value if isinstance(value, (int, float, bool, str, type(None))) else str(value)
            for key, value in self.parameters.items()
        }
        return Provenance(
            command=self.command,
            parameters=parameters,
            version=__version__,
            seed=self.seed,
            settings=self.settings.model_dump(),
            created_at=datetime.now(timezone.utc).isoformat(),
        )
