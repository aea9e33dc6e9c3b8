#!/usr/bin/env python3
"""
Parameter Snapshot Store

Keeps per-λ parameter snapshots of a sweep on disk: one binary ParamVector
file per branch and an ``index.json`` mapping snapshot ids to files and
layouts.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

from src.networks.params import ParamVector

logger = logging.getLogger(__name__)


class SnapshotStore:
    """Saves and restores ParamVector snapshots under one directory."""

    def __init__(self, directory: Union[str, Path]):
        """
        Args:
            directory: Snapshot directory; created when missing
        """
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.index_file = self.directory / 'index.json'

    @staticmethod
    def snapshot_id(lam: float, branch: str) -> str:
        return f"lambda={lam:.6g}/{branch}"

    def save(self, lam: float, branch: str, params: ParamVector) -> str:
        """Write a snapshot and register it in the index; returns its id."""
        snapshot = self.snapshot_id(lam, branch)
        filename = f"lambda_{lam:.6g}_{branch}.bin"
        params.save(self.directory / filename)

        index = self._load_index()
        index[snapshot] = {
            'lambda': lam,
            'branch': branch,
            'file': filename,
            'layout': params.layout_dict(),
        }
        self._save_index(index)
        logger.debug("Saved snapshot %s (%d values)", snapshot, len(params))
        return snapshot

    def load(self, snapshot: str) -> ParamVector:
        """
        Raises:
            KeyError: unknown snapshot id
        """
        entry = self._load_index()[snapshot]
        layout = ParamVector.layout_from_dict(entry['layout'])
        return ParamVector.load(self.directory / entry['file'], layout)

    def list_snapshots(self, lam: Optional[float] = None) -> List[str]:
        index = self._load_index()
        return sorted(k for k, v in index.items() if lam is None or v['lambda'] == lam)

    def clear(self):
        for entry in self._load_index().values():
            path = self.directory / entry['file']
            if path.exists():
                path.unlink()
        if self.index_file.exists():
            self.index_file.unlink()

    def _load_index(self) -> Dict:
        if not self.index_file.exists():
            return {}
        with open(self.index_file, 'r', encoding='utf-8') as f:
            return json.load(f)

    def _save_index(self, index: Dict):
        with open(self.index_file, 'w', encoding='utf-8') as f:
            json.dump(index, f, indent=2, sort_keys=True)
