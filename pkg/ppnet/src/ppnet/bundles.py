"""Reading and writing the `.mtpp.jsonl` interchange format.

This package talks to the point-process engine exclusively through its file
formats: dataset bundles are read from JSON Lines (header, then per-entry
model/meta records followed by sequence records), and inferred jump-decay
intensity parameters are written back as ``piecewise`` records the engine's
``forecast --piecewise`` command consumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BUNDLE_VERSION = "fimpp-bundle/1"


@dataclass
class Sequence:
    """One event sequence: times, integer marks, observation horizon."""

    times: np.ndarray
    marks: np.ndarray
    horizon: float

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.marks = np.asarray(self.marks, dtype=np.int64)

    def __len__(self) -> int:
        return self.times.size

    def truncated(self, n: int) -> "Sequence":
        if n >= len(self):
            return self
        return Sequence(self.times[:n], self.marks[:n], float(self.times[n - 1]))


@dataclass
class ProcessEntry:
    """Sequences simulated from one underlying process."""

    sequences: list[Sequence]
    mark_count: int
    model: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def read_bundle(path) -> list[ProcessEntry]:
    """Parse a dataset bundle into per-process entries."""
    path = Path(path)
    entries: list[ProcessEntry] = []
    with path.open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("version") != BUNDLE_VERSION:
            raise ValueError(f"{path.name}: unsupported bundle version")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "model" in obj:
                model = obj["model"]
                entries.append(ProcessEntry([], int(model["mark_count"]), model,
                                            obj.get("meta", {})))
            elif "piecewise" in obj:
                k = len(obj["piecewise"]["mu"])
                entries.append(ProcessEntry([], k, obj["piecewise"], obj.get("meta", {})))
            elif "seq" in obj:
                rec = obj["seq"]
                entries[-1].sequences.append(
                    Sequence(rec["t"], rec["k"], float(rec["horizon"])))
            else:
                raise ValueError(f"{path.name}: unrecognized record {sorted(obj)}")
    return entries


def write_piecewise_bundle(records, path) -> None:
    """Write (params, history) pairs as a piecewise bundle for the engine.

    ``records`` yields dicts with keys ``mu``, ``alpha``, ``beta`` (per-mark
    lists), ``t_last``, and ``history`` (a :class:`Sequence`).
    """
    path = Path(path)

    def dumps(obj):
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    with path.open("w", encoding="utf-8") as fh:
        fh.write(dumps({"version": BUNDLE_VERSION, "seed": 0,
                        "configs": ["piecewise"], "discarded": 0}) + "\n")
        for rec in records:
            fh.write(dumps({"piecewise": {
                "mu": list(map(float, rec["mu"])),
                "alpha": list(map(float, rec["alpha"])),
                "beta": list(map(float, rec["beta"])),
                "t_last": float(rec["t_last"]),
            }}) + "\n")
            hist = rec["history"]
            fh.write(dumps({"seq": {"t": hist.times.tolist(),
                                    "k": hist.marks.tolist(),
                                    "horizon": float(hist.horizon)}}) + "\n")


def max_inter_event_gap(sequences: list[Sequence]) -> float:
    """Largest inter-event time (with t_0 = 0), the normalization unit."""
    best = 0.0
    for seq in sequences:
        if len(seq):
            best = max(best, float(np.diff(seq.times, prepend=0.0).max()))
    if best <= 0.0:
        raise ValueError("no events to normalize by")
    return best
