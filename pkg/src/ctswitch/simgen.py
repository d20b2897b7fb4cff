"""Piecewise context tree sources: consecutive segments, each with its own
model and leaf parameters.

Spec files are JSON::

    {
      "alphabet_size": 2,
      "pad_symbol": 0,
      "segments": [
        {"length": 100,
         "model": {"max_depth": 1, "leaves": ["0", "1"]},
         "theta": {"0": [0.3, 0.7], "1": [0.9, 0.1]}}
      ]
    }

Contexts are written most recent symbol first, comma separated; ``""`` is
the root.  Each segment starts from a context padded with ``pad_symbol``.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from importlib import resources
from itertools import accumulate
from pathlib import Path
from typing import Any

import numpy as np

from .ctm import (
    ContextTreeModel,
    ThetaParams,
    context_key,
    entropy_rate,
    padded_context,
    parse_context_key,
)

# numpy's Philox is the 4x64, 10-round counter-based generator
RNG_ALGORITHM = "philox4x64-10"
DEFAULT_SPEC = "three_segments.json"


@dataclass(frozen=True)
class Segment:
    length: int
    model: ContextTreeModel
    theta: ThetaParams


@dataclass(frozen=True)
class SegmentedSourceSpec:
    alphabet_size: int
    segments: tuple[Segment, ...]
    pad_symbol: int = 0

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("a source spec needs at least one segment")
        if not 0 <= self.pad_symbol < self.alphabet_size:
            raise ValueError(f"pad symbol {self.pad_symbol} outside alphabet")
        for j, seg in enumerate(self.segments):
            if seg.length < 1:
                raise ValueError(f"segment {j} has length {seg.length}")
            if seg.model.alphabet_size != self.alphabet_size:
                raise ValueError(f"segment {j} model alphabet does not match the source alphabet")
            seg.theta.validate(seg.model)

    @property
    def length(self) -> int:
        return sum(seg.length for seg in self.segments)

    @property
    def change_points(self) -> list[int]:
        """1-based start time of every segment."""
        return [1 + sum(s.length for s in self.segments[:j]) for j in range(len(self.segments))]

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> SegmentedSourceSpec:
        rng = doc.get("rng", RNG_ALGORITHM)
        if rng != RNG_ALGORITHM:
            raise ValueError(f"unsupported rng {rng!r}; this build generates with {RNG_ALGORITHM}")
        A = int(doc["alphabet_size"])
        segments = []
        for seg in doc["segments"]:
            m = seg["model"]
            model = ContextTreeModel(A, int(m["max_depth"]), frozenset(parse_context_key(k) for k in m["leaves"]))
            theta = ThetaParams({parse_context_key(k): tuple(float(p) for p in v) for k, v in seg["theta"].items()})
            segments.append(Segment(int(seg["length"]), model, theta))
        return cls(A, tuple(segments), int(doc.get("pad_symbol", 0)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "alphabet_size": self.alphabet_size,
            "pad_symbol": self.pad_symbol,
            "rng": RNG_ALGORITHM,
            "segments": [
                {
                    "length": seg.length,
                    "model": {
                        "max_depth": seg.model.max_depth,
                        "leaves": sorted(context_key(s) for s in seg.model.leaves),
                    },
                    "theta": {context_key(s): list(seg.theta[s]) for s in sorted(seg.model.leaves)},
                }
                for seg in self.segments
            ],
        }


def load_spec(path: str | Path | None = None) -> SegmentedSourceSpec:
    """Load a spec file; ``None`` gives the bundled three-segment source."""
    if path is None:
        text = resources.files("ctswitch.data").joinpath(DEFAULT_SPEC).read_text()
    else:
        text = Path(path).read_text()
    return SegmentedSourceSpec.from_dict(json.loads(text))


def generate(spec: SegmentedSourceSpec, seed: int) -> np.ndarray:
    """Draw one sequence; a pure function of (spec, seed)."""
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(spec.length)
    out = np.empty(spec.length, dtype=np.int64)
    top = spec.alphabet_size - 1
    pos = 0
    for seg in spec.segments:
        cdf = {s: list(accumulate(p)) for s, p in seg.theta.items()}
        m = seg.model
        if m.depth == 0:
            out[pos : pos + seg.length] = np.minimum(np.searchsorted(cdf[()], u[pos : pos + seg.length], side="right"), top)
        else:
            hist: list[int] = []
            for k in range(seg.length):
                leaf = m.leaf_for(padded_context(hist, m.depth, spec.pad_symbol))
                x = min(bisect_right(cdf[leaf], u[pos + k]), top)
                hist.append(x)
                out[pos + k] = x
        pos += seg.length
    return out


def per_symbol_entropy(spec: SegmentedSourceSpec) -> np.ndarray:
    """Entropy rate (bits) of the segment generating each position."""
    return np.concatenate([np.full(seg.length, entropy_rate(seg.model, seg.theta)) for seg in spec.segments])
