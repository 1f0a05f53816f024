import os
import sys

import numpy as np
import pytest

from certmark.basewm import ReferenceDecoder, SpreadSpectrumConfig, embed
from certmark.core import ImageTensor, Watermark
from certmark.harness.synthetic import synthetic_images

STUB = [sys.executable, "-m", "certmark.basewm.stub"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_images():
    return synthetic_images(6, seed=99, size=32)


@pytest.fixture(scope="session")
def wt16():
    return Watermark.random(16, 2)


@pytest.fixture(scope="session")
def decoder16():
    return ReferenceDecoder.for_image(0, 16, (1, 32, 32))


@pytest.fixture(scope="session")
def embedded16(small_images, wt16, decoder16):
    cfg = SpreadSpectrumConfig(0.3, 0)
    return [embed(x, wt16, cfg, decoder16.bank) for x in small_images]


def mid_gray(shape=(1, 32, 32)) -> ImageTensor:
    return ImageTensor(np.full(shape, 0.5))


@pytest.fixture
def stub_cmd():
    return list(STUB)


def pytest_configure(config):
    os.environ.setdefault("PYTHONHASHSEED", "0")


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; returns ``ok``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
