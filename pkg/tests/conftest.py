import numpy as np
import pytest

from nltim import build_network


@pytest.fixture
def chain():
    # a influences b with weight 1
    return build_network(["a", "b"], [("b", "a", 1.0)])


@pytest.fixture
def diamond():
    return build_network(
        ["v", "u1", "u2", "w"],
        [("v", "u1", 0.5), ("v", "u2", 0.5), ("u1", "w", 0.5), ("u2", "w", 0.5)],
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fork():
    # v listens to u1 and u2 with weight 0.5 each; u1, u2 only feed the void node
    return build_network(["v", "u1", "u2"], [("v", "u1", 0.5), ("v", "u2", 0.5)])


def hub_network(m):
    leaves = [f"l{i}" for i in range(m)]
    return build_network(["h"] + leaves, [(x, "h", 1.0) for x in leaves])


ACCEPTANCE: list[str] = []


def record(name: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
