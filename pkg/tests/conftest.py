import os
from pathlib import Path

import pytest

from mramsim import _pykernel, kernel

MNIST_CANDIDATES = [
    os.environ.get("MRAMSIM_DATA_DIR"),
    "data/mnist",
    "/root/data/mnist",
]


def _mnist_dir():
    for cand in filter(None, MNIST_CANDIDATES):
        base = Path(cand) / "train-images-idx3-ubyte"
        if base.exists() or base.with_name(base.name + ".gz").exists():
            return Path(cand)
    return None


@pytest.fixture(scope="session")
def mnist_dir():
    d = _mnist_dir()
    if d is None:
        pytest.skip("MNIST IDX files not found; set MRAMSIM_DATA_DIR")
    return d


BACKENDS = ["python"] + (["cython"] if kernel.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available solver backend."""
    if request.param == "python":
        monkeypatch.setattr(kernel, "solve_chain", _pykernel.solve_chain)
    return request.param


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
