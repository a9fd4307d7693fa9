import pytest
from hypothesis import HealthCheck, settings, strategies as st

from drooploss import InverterParams, complete_graph, path_graph, random_connected_graph

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


@pytest.fixture
def unit_params():
    return InverterParams(k_p=1.0, k_q=1.0, tau_p=1.0, tau_q=1.0, shunt_b=0.0, alpha=0.2)


positive = st.floats(min_value=0.2, max_value=5.0, allow_nan=False)


@st.composite
def uniform_params(draw, alpha=None):
    a = draw(st.floats(min_value=0.01, max_value=0.5)) if alpha is None else alpha
    return InverterParams(
        k_p=draw(positive), k_q=draw(positive), tau_p=draw(positive), tau_q=draw(positive),
        shunt_b=draw(st.floats(min_value=0.0, max_value=1.0)), alpha=a,
    )


@st.composite
def connected_graphs(draw, max_n=12, alpha=0.2):
    n = draw(st.integers(min_value=2, max_value=max_n))
    kind = draw(st.sampled_from(["random", "complete", "path"]))
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    if kind == "complete":
        return complete_graph(n, alpha=alpha, b_range=(0.5, 3.25), seed=seed)
    if kind == "path":
        return path_graph(n, alpha=alpha, b_range=(0.5, 3.25), seed=seed)
    p = draw(st.floats(min_value=0.1, max_value=1.0))
    return random_connected_graph(n, p, alpha=alpha, seed=seed)
