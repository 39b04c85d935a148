from __future__ import annotations

import random
import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from semfed.registry import FixedClock
from semfed.workspace import boot_workspace

FIXTURES = Path(str(resources.files("semfed"))) / "fixtures"
CORE_WORKSPACE = FIXTURES / "core" / "workspace.json"
Q2_WORKSPACE = FIXTURES / "q2" / "workspace.json"

BOOT_TS = "2018-01-21T14:33:08"


def boot_core(clock=None):
    return boot_workspace(CORE_WORKSPACE, clock=clock or FixedClock(BOOT_TS))


def boot_q2(clock=None):
    return boot_workspace(Q2_WORKSPACE, clock=clock or FixedClock(BOOT_TS))


@pytest.fixture()
def core():
    return boot_core()


@pytest.fixture()
def q2ws():
    return boot_q2()


@pytest.fixture()
def rng():
    return random.Random(20180121)
