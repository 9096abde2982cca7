import os
from pathlib import Path

import pytest

from mpdptw.instance_model import Couple, Fleet, Instance, Node

ROOT = Path(__file__).resolve().parent.parent
LRC1_NAMES = [f"lrc10{i}" for i in range(1, 9)]

# filled by tests/test_acceptance.py, printed once at the end of the session
ACCEPTANCE: dict[str, tuple[str, str]] = {}


def record(criterion: str, status: str, detail: str) -> None:
    ACCEPTANCE[criterion] = (status, detail)


def lrc1_dir() -> Path | None:
    """Directory holding the Li & Lim LRC1 files, if the user supplied them."""
    env = os.environ.get("MPDPTW_LRC1_DIR")
    for cand in ([Path(env)] if env else []) + [ROOT / "data" / "lrc1"]:
        if cand.is_dir() and lrc1_files(cand):
            return cand
    return None


def lrc1_files(folder: Path) -> dict[str, Path]:
    found = {}
    for p in folder.iterdir():
        stem = p.stem.lower()
        if stem in LRC1_NAMES and p.suffix.lower() == ".txt":
            found[stem] = p
    return found


def make_t1(e_p1: float = 0.0, l_c1: float = 100.0, capacity: float = 10, vehicles: int = 1,
            capacities=None) -> Instance:
    """Depot (0,0), supplier (0,3) q=5, customer (4,3) q=-5; unit speed and cost."""
    nodes = (
        Node(0, 0.0, 0.0, 0, 0.0, 1000.0, 0.0),
        Node(1, 0.0, 3.0, 5, e_p1, 100.0, 0.0),
        Node(2, 4.0, 3.0, -5, 0.0, l_c1, 0.0),
    )
    if capacities is None:
        fleet = Fleet.homogeneous(vehicles, capacity)
    else:
        fleet = Fleet(tuple(capacities), (1.0,) * len(capacities), (1.0,) * len(capacities))
    return Instance(nodes, (Couple(1, 2),), fleet, "T1")


@pytest.fixture
def t1():
    return make_t1()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split("-")[0]), k)):
        status, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {detail}")
