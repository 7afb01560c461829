import numpy as np
import pytest

from biastomo import _backend
from biastomo.experiments import fig2_plan, fig2_state
from biastomo.povm import build_elements, transfer_from_elements
from biastomo.simulate import ExperimentPlan


@pytest.fixture(scope="session")
def fig2():
    settings, policy = fig2_plan()
    elements = build_elements(settings, policy)
    return {
        "settings": settings,
        "policy": policy,
        "elements": elements,
        "tf": transfer_from_elements(elements),
        "truth": fig2_state(),
        "plan": ExperimentPlan(settings, policy, 42),
    }


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request):
    return request.param


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    x = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = x @ x.conj().T
    return m / np.trace(m).real


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
