"""
This module provides access to gate-set files.

Gate sets are JSON documents of the form
``{"name": str, "symmetric": bool, "gates": [{"weight": float, "matrix": [[[re, im] x4] x4]}]}``.
Built-in sets ship inside the package and are addressed by name.

Classes:
    GateSetRepository: Reads gate-set files from disk or from the package data.
"""

from importlib import resources
from pathlib import Path
from typing import Dict, List

import numpy as np
import orjson
from pydantic import ValidationError

from moment_gap.exceptions import GateSetError
from .model import GateSetFile

BUILTIN_GATE_SETS: Dict[str, str] = {"clifford-t": "clifford_t.json"}


class GateSetRepository:
    def builtin_names(self) -> List[str]:
        return sorted(BUILTIN_GATE_SETS)

    def _read_bytes(self, source: str) -> bytes:
        if source in BUILTIN_GATE_SETS:
            resource = resources.files("moment_gap.data.gate_sets").joinpath(BUILTIN_GATE_SETS[source])
            return resource.read_bytes()
        try:
            return Path(source).read_bytes()
        except OSError as exc:
            raise GateSetError(f"cannot read gate-set file {source}: {exc}") from exc

    def read(self, source: str) -> GateSetFile:
        """
        Parse a gate-set file.

        Parameters:
        source (str): A built-in set name or a path to a JSON file.

        Returns:
        GateSetFile: The validated document.

        Raises:
        GateSetError: If the file is unreadable, not JSON, or does not match the schema.
        """
        try:
            return GateSetFile.model_validate(orjson.loads(self._read_bytes(source)))
        except orjson.JSONDecodeError as exc:
            raise GateSetError(f"gate-set file {source} is not valid JSON: {exc}") from exc
        except ValidationError as exc:
            raise GateSetError(f"gate-set file {source} does not match the schema: {exc}") from exc

    @staticmethod
    def matrices(document: GateSetFile) -> np.ndarray:
        stack = []
        for index, entry in enumerate(document.gates):
            matrix = np.array([[complex(re, im) for re, im in row] for row in entry.matrix])
            if matrix.shape != (4, 4):
                raise GateSetError(f"gate {index} of {document.name!r} is {matrix.shape}, expected 4x4")
            stack.append(matrix)
        return np.stack(stack)

    @staticmethod
    def weights(document: GateSetFile) -> np.ndarray:
        return np.array([entry.weight for entry in document.gates])
