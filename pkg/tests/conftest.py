import time

import numpy as np
import pytest

from fohybrid.data import SplitSpec, generate_synthetic, split
from fohybrid.hybrid import GPOptions, fit_hybrid
from fohybrid.physics import PhysicsConfig
from fohybrid.point import OperatingPoint

NOMINAL = OperatingPoint(
    cf_in=0.01, cd_in=1.0, uf_in=0.15, ud_in=0.15, A=2e-12,
    eps_psl=0.6, tau=2.0, t_psl=100e-6, L_x=0.1, t_c=2e-3,
)


@pytest.fixture
def nominal():
    return NOMINAL


@pytest.fixture(scope="session")
def pipeline():
    """Default synthetic run: 2974 rows, 120 train, GP fitted with defaults."""
    t0 = time.perf_counter()
    cfg = PhysicsConfig()
    data = generate_synthetic(2974, seed=0, physics_cfg=cfg)
    train, test = split(data, SplitSpec(n_train=120, seed=0))
    model = fit_hybrid(train, cfg, GPOptions())
    return {
        "data": data, "train": train, "test": test, "model": model,
        "physics_cfg": cfg, "elapsed": time.perf_counter() - t0,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record(number, name, ok, detail=""):
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
