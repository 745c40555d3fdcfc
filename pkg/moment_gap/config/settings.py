"""
Runtime settings.

Settings come from ``MOMENT_GAP_*`` environment variables (a ``.env`` file is
honoured) and may be overlaid by a YAML file given with ``--config``.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from moment_gap.exceptions import ConfigurationError

load_dotenv()

logger = logging.getLogger(__name__)

ENV_PREFIX = "MOMENT_GAP_"


class Settings(BaseModel):
    """
    Caps, solver knobs and sampling parameters.

    Attributes:
        dimension_cap (int): Largest admissible symmetric-sector dimension.
        dense_threshold (int): Sector dimension up to which the dense eigensolver is used.
        local_entry_cap (int): Largest number of entries of a dense local moment matrix.
        max_qubit_order (int): Largest t for dense single-qubit permutation kets.
        max_pair_order (int): Largest t for dense qubit-pair permutation kets.
        brute_force_cap (int): Largest full moment-space dimension for the brute-force oracle.
        eigsh_max_iterations (int): Iteration budget of one Lanczos attempt.
        eigsh_attempts (int): Lanczos attempts before giving up.
        eigsh_ncv (int): Krylov dimension of the first attempt, doubled on retry.
        mc_chunk_size (int): Circuit replicas simulated per vectorized chunk.
        mc_workers (int): Concurrent chunks in flight.
        fit_confidence (float): Confidence level of the fitted decay-rate interval.
        log_level (str): Root logging level.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    dimension_cap: int = Field(200_000, gt=0)
    dense_threshold: int = Field(4000, gt=0)
    local_entry_cap: int = Field(1 << 24, gt=0)
    max_qubit_order: int = Field(5, ge=1)
    max_pair_order: int = Field(4, ge=1)
    brute_force_cap: int = Field(4096, gt=0)
    eigsh_max_iterations: int = Field(20_000, gt=0)
    eigsh_attempts: int = Field(3, ge=1)
    eigsh_ncv: int = Field(32, ge=4)
    mc_chunk_size: int = Field(2048, gt=0)
    mc_workers: int = Field(4, gt=0)
    fit_confidence: float = Field(0.99, gt=0.0, lt=1.0)
    log_level: str = "INFO"


def _build(values: Dict[str, Any], source: str) -> Settings:
    try:
        return Settings(**values)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid settings from {source}: {exc}") from exc


def settings_from_env(environ: Optional[Dict[str, str]] = None) -> Settings:
    """
    Read settings from ``MOMENT_GAP_*`` variables.

    Parameters:
    environ (Optional[Dict[str, str]]): Mapping to read instead of ``os.environ``.

    Returns:
    Settings: Defaults overridden by every variable that is set.
    """
    environ = os.environ if environ is None else environ
    values = {
        name: environ[ENV_PREFIX + name.upper()]
        for name in Settings.model_fields
        if ENV_PREFIX + name.upper() in environ
    }
    return _build(values, "environment")


def load_overlay(path: Path) -> Dict[str, Any]:
    """
    Load a YAML configuration overlay.

    Parameters:
    path (Path): The YAML file.

    Returns:
    Dict[str, Any]: Setting names mapped to values.

    Raises:
    ConfigurationError: If the file is unreadable or is not a mapping.
    """
    try:
        content = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigurationError(f"cannot read configuration file {path}: {exc}") from exc
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigurationError(f"configuration file {path} must contain a mapping")
    return content


_current: Optional[Settings] = None


def get_settings() -> Settings:
    global _current
    if _current is None:
        _current = settings_from_env()
    return _current


def configure(overlay: Optional[Dict[str, Any]] = None) -> Settings:
    """
    Rebuild the active settings from the environment plus an overlay.

    Parameters:
    overlay (Optional[Dict[str, Any]]): Field values taking precedence over the environment.

    Returns:
    Settings: The new active settings.
    """
    global _current
    base = settings_from_env().model_dump()
    base.update(overlay or {})
    _current = _build(base, "configuration overlay")
    logger.debug("active settings: %s", _current.model_dump())
    return _current


def reset_settings() -> None:
    global _current
    _current = None
