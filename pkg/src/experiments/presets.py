#!/usr/bin/env python3
"""
Preset Manager

Named experiment configs shipped in ``presets/`` (or the directory named by
``NNPHD_PRESETS``), with JSON/YAML import and export.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

try:
    import yaml
    YAML_AVAILABLE = True
except ImportError:
    YAML_AVAILABLE = False

from src.errors import ConfigError
from src.experiments.config import BatchConfig, ExperimentConfig, parse_config, read_config_file

logger = logging.getLogger(__name__)

PRESETS_ENV = 'NNPHD_PRESETS'
PRESET_SUFFIXES = ('.json', '.yaml', '.yml')


def default_presets_dir() -> Path:
    override = os.environ.get(PRESETS_ENV)
    if override:
        return Path(override)
    return Path(__file__).resolve().parents[2] / 'presets'


class PresetManager:
    """Looks up, imports and exports named experiment configs."""

    def __init__(self, presets_dir: Optional[Union[str, Path]] = None):
        """
        Args:
            presets_dir: Directory holding presets. Defaults to ``$NNPHD_PRESETS``
                or the repository's ``presets/`` directory.
        """
        self.presets_dir = Path(presets_dir) if presets_dir is not None else default_presets_dir()

    def get_preset_path(self, name: str) -> Optional[Path]:
        """Path of the preset called ``name``, or None."""
        safe_name = "".join(c for c in name if c.isalnum() or c in ('-', '_')).strip()
        for suffix in PRESET_SUFFIXES:
            path = self.presets_dir / f"{safe_name}{suffix}"
            if path.is_file():
                return path
        return None

    def list_presets(self) -> List[str]:
        if not self.presets_dir.is_dir():
            return []
        return sorted({p.stem for p in self.presets_dir.iterdir() if p.suffix.lower() in PRESET_SUFFIXES})

    def describe(self, name: str) -> str:
        data = self.read(name)
        if 'batch' in data:
            return f"batch of {len(data['batch'])} experiments"
        system = data.get('system')
        system = system.get('name') if isinstance(system, dict) else system
        return f"{data.get('experiment', 'sweep')} on {system}"

    def read(self, name: str) -> Dict[str, Any]:
        path = self.get_preset_path(name)
        if path is None:
            raise ConfigError(f"Unknown preset '{name}'", known=self.list_presets())
        return read_config_file(path)

    def load(self, name: str) -> Union[ExperimentConfig, BatchConfig]:
        try:
            return parse_config(self.read(name))
        except ConfigError as e:
            raise e.annotate(preset=name)

    def resolve(self, ref: Union[str, Path]) -> Union[ExperimentConfig, BatchConfig]:
        """
        Load ``ref`` as a file path if it exists, otherwise as a preset name.

        Raises:
            ConfigError: neither a readable config file nor a known preset
        """
        path = Path(ref)
        if path.is_file():
            logger.debug("Loading config file %s", path)
            return parse_config(read_config_file(path))
        logger.debug("Loading preset %s", ref)
        return self.load(str(ref))

    def export_preset(self, name: str, export_path: Union[str, Path], format: str = 'json') -> Path:
        """
        Write a preset to ``export_path`` as JSON or YAML.

        Raises:
            ConfigError: unknown preset, or YAML requested without PyYAML
        """
        data = self.read(name)
        export_path = Path(export_path)
        export_path.parent.mkdir(parents=True, exist_ok=True)
        if format.lower() == 'yaml':
            if not YAML_AVAILABLE:
                raise ConfigError("PyYAML is required for YAML export")
            with open(export_path, 'w', encoding='utf-8') as f:
                yaml.safe_dump(data, f, default_flow_style=False, sort_keys=False)
        else:
            with open(export_path, 'w', encoding='utf-8') as f:
                json.dump(data, f, indent=2)
        return export_path

    def import_preset(self, import_path: Union[str, Path], name: Optional[str] = None) -> str:
        """
        Validate a config file and store it as a JSON preset.

        Returns:
            The stored preset name
        """
        import_path = Path(import_path)
        data = read_config_file(import_path)
        parse_config(data)
        name = name or import_path.stem
        self.presets_dir.mkdir(parents=True, exist_ok=True)
        with open(self.presets_dir / f"{name}.json", 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2)
        logger.info("Imported preset %s from %s", name, import_path)
        return name
