import sys
from functools import lru_cache
from pathlib import Path

import pytest

from nestlab.circuit import build_round_schedule
from nestlab.lattice import build_layout
from nestlab.nest import build_nest, import_nest

DATA = Path(__file__).parent / "data"


def read_block(name: str) -> str:
    return (DATA / name).read_text()


@lru_cache(maxsize=None)
def schedule_for(d: int, boundary: str, idle_noise: bool = True):
    return build_round_schedule(build_layout(d, boundary), idle_noise=idle_noise)


@lru_cache(maxsize=None)
def nest_for(d: int, boundary: str, sector: str = "X", rounds: int = 7, p: float = 0.04, closed: bool = False):
    return build_nest(schedule_for(d, boundary), rounds, p, sector, closed=closed, strict=d > 2 or boundary == "planar")


@pytest.fixture(scope="session")
def planar_text():
    return read_block("nest_planar_d3.txt")


@pytest.fixture(scope="session")
def cyclic_text():
    return read_block("nest_cyclic_d3.txt")


@pytest.fixture(scope="session")
def planar_ref(planar_text):
    return import_nest(planar_text)


@pytest.fixture(scope="session")
def cyclic_ref(cyclic_text):
    return import_nest(cyclic_text)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
