import json
import subprocess
import sys

import numpy as np
import pytest

from ppnet import Sequence

POISSON_RATE = 0.8
HAWKES_PARAMS = (0.3, 0.5, 1.0)  # c0, alpha, beta (branching ratio 0.5)


def run_engine(*argv) -> subprocess.CompletedProcess:
    """Invoke the point-process engine CLI (the interface this package consumes)."""
    return subprocess.run([sys.executable, "-m", "mtpp", *argv],
                          capture_output=True, text=True)


def _simulate_bundle(tmp_path, model: dict, name: str, sequences: int,
                     events: int, seed: int):
    mpath = tmp_path / f"{name}-model.json"
    mpath.write_text(json.dumps(model))
    out = tmp_path / f"{name}.mtpp.jsonl"
    proc = run_engine("simulate", "--model", str(mpath), "--events", str(events),
                      "--sequences", str(sequences), "--seed", str(seed),
                      "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="session")
def poisson_bundle(tmp_path_factory):
    model = {"mark_count": 1, "bases": [{"type": "constant", "c0": POISSON_RATE}],
             "kernels": [[{"type": "zero"}]], "prefactors": [[0]]}
    return _simulate_bundle(tmp_path_factory.mktemp("data"), model, "poisson",
                            sequences=30, events=60, seed=5)


@pytest.fixture(scope="session")
def hawkes_bundle(tmp_path_factory):
    c0, alpha, beta = HAWKES_PARAMS
    model = {"mark_count": 1, "bases": [{"type": "constant", "c0": c0}],
             "kernels": [[{"type": "exp_decay", "alpha": alpha, "beta": beta}]],
             "prefactors": [[1]]}
    return _simulate_bundle(tmp_path_factory.mktemp("data"), model, "hawkes",
                            sequences=30, events=60, seed=9)


def random_sequence(rng, n: int, mark_count: int, span: float = 10.0) -> Sequence:
    times = np.sort(rng.uniform(0.0, span, size=n))
    while n and len(np.unique(times)) < n:
        times = np.sort(rng.uniform(0.0, span, size=n))
    marks = rng.integers(0, mark_count, size=n)
    return Sequence(times, marks, span)
