from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from tracseq.dataset import Dataset, Sample, make_synthetic
from tracseq.model import ModelSpec
from tracseq.trainer import Checkpoint, CheckpointStore


@dataclass
class StoredGradModel:
    """Mock model whose per-sample gradient is a stored vector per (checkpoint, sample).

    Parameters are used only to identify the checkpoint: ``params[0]`` holds
    the checkpoint index.
    """

    grads: dict[tuple[int, str], np.ndarray]
    dim: int

    def sample_grads(self, params, samples):
        i = int(params[0])
        return np.array([self.grads.get((i, s.id), np.zeros(self.dim)) for s in samples])


def mock_store(etas, times, final_time=None, dim=1) -> CheckpointStore:
    spec = ModelSpec("logistic", 1, 2)
    ckpts = [
        Checkpoint(i, step=t, t=t, eta=eta, params=np.full(dim, float(i)))
        for i, (eta, t) in enumerate(zip(etas, times))
    ]
    return CheckpointStore("mock", spec, ckpts, final_time if final_time is not None else times[-1])


def sample(id_, x=(0.0,), label=0, t=0, user="u", **kw) -> Sample:
    return Sample(id_, user, t, x, label, **kw)


def random_store(spec: ModelSpec, k: int, rng: np.random.Generator, scale=0.5) -> CheckpointStore:
    ckpts = []
    step = 0
    for i in range(k):
        step += int(rng.integers(1, 6))
        params = scale * rng.standard_normal(spec.num_params)
        ckpts.append(Checkpoint(i, step, step, float(rng.uniform(0.01, 1.0)), params))
    return CheckpointStore("rand", spec, ckpts, step)


def random_dataset(n, feature_dim, num_classes, rng, prefix="s", t_max=20) -> Dataset:
    samples = [
        Sample(f"{prefix}{i:04d}", f"u{i % 7}", int(rng.integers(0, t_max)),
               rng.standard_normal(feature_dim), int(rng.integers(num_classes)))
        for i in range(n)
    ]
    return Dataset(samples, num_classes, feature_dim, "random")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_small():
    return make_synthetic(n_users=20, steps_per_user=5, feature_dim=4, noise_rate=0.1, seed=3)


# ---------------------------------------------------------------------------
# Acceptance summary: one line per criterion at the end of the run.

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "ran": False})
    if report.when == "call":
        entry["ran"] = True
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        status = "PASS" if entry["ok"] and entry["ran"] else "FAIL"
        tr.write_line(f"criterion {number:2d}  {status}  {entry['title']}")
