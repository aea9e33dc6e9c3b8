#!/usr/bin/env python3
"""
Parameter Vectors

Flat float64 parameter storage with named segments. A ParamVector is the
unit of optimizer updates and of on-disk snapshots.

Binary format: 16-byte header (magic ``NNPH``, version u32, length u64),
then ``length`` little-endian IEEE-754 doubles.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch

MAGIC = b'NNPH'
FORMAT_VERSION = 1
HEADER = struct.Struct('<4sIQ')

Segment = Tuple[str, Tuple[int, ...]]


def _segment_size(shape: Tuple[int, ...]) -> int:
    return int(np.prod(shape)) if shape else 1


@dataclass(frozen=True)
class ParamVector:
    """
    Flat parameters plus their layout.

    Args:
        values: 1-D float64 tensor
        layout: (name, shape) segments in storage order
    """
    values: torch.Tensor
    layout: Tuple[Segment, ...]

    def __post_init__(self):
        values = self.values
        if not isinstance(values, torch.Tensor):
            values = torch.as_tensor(np.asarray(values, dtype=np.float64))
        if values.dtype != torch.float64 or values.ndim != 1:
            raise ValueError("ParamVector values must be a 1-D float64 tensor")
        layout = tuple((str(name), tuple(int(d) for d in shape)) for name, shape in self.layout)
        total = sum(_segment_size(shape) for _, shape in layout)
        if total != values.shape[0]:
            raise ValueError(f"Layout covers {total} entries but vector has {values.shape[0]}")
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'layout', layout)

    def __len__(self) -> int:
        return self.values.shape[0]

    def offsets(self) -> Dict[str, Tuple[int, int]]:
        result, start = {}, 0
        for name, shape in self.layout:
            size = _segment_size(shape)
            result[name] = (start, start + size)
            start += size
        return result

    def segment(self, name: str) -> torch.Tensor:
        """View of a named segment, reshaped to its layout shape."""
        start, stop = self.offsets()[name]
        shape = dict(self.layout)[name]
        return self.values[start:stop].reshape(shape)

    def segments(self) -> List[torch.Tensor]:
        return [self.segment(name) for name, _ in self.layout]

    def with_values(self, values: torch.Tensor) -> 'ParamVector':
        return ParamVector(values, self.layout)

    def detached(self) -> 'ParamVector':
        return ParamVector(self.values.detach().clone(), self.layout)

    def tracked(self) -> 'ParamVector':
        """Copy whose values require grad, for a fresh training graph."""
        return ParamVector(self.values.detach().clone().requires_grad_(True), self.layout)

    def numpy(self) -> np.ndarray:
        return self.values.detach().cpu().numpy().copy()

    def layout_dict(self) -> List[dict]:
        return [{'name': name, 'shape': list(shape)} for name, shape in self.layout]

    @staticmethod
    def layout_from_dict(data: Sequence[dict]) -> Tuple[Segment, ...]:
        return tuple((entry['name'], tuple(entry['shape'])) for entry in data)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = self.numpy().astype('<f8').tobytes()
        with open(path, 'wb') as f:
            f.write(HEADER.pack(MAGIC, FORMAT_VERSION, len(self)))
            f.write(payload)
        return path

    @classmethod
    def load(cls, path: Union[str, Path], layout: Optional[Sequence[Segment]] = None) -> 'ParamVector':
        """
        Read a vector written by ``save``.

        Without a layout the result has a single segment named ``values``.
        """
        with open(path, 'rb') as f:
            header = f.read(HEADER.size)
            if len(header) != HEADER.size:
                raise ValueError(f"{path}: truncated header")
            magic, version, length = HEADER.unpack(header)
            if magic != MAGIC:
                raise ValueError(f"{path}: bad magic {magic!r}")
            if version != FORMAT_VERSION:
                raise ValueError(f"{path}: unsupported version {version}")
            payload = f.read()
        if len(payload) != 8 * length:
            raise ValueError(f"{path}: expected {length} values, found {len(payload) // 8}")
        values = torch.from_numpy(np.frombuffer(payload, dtype='<f8').astype(np.float64))
        return cls(values, tuple(layout) if layout is not None else (('values', (length,)),))
