import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tvgsr.graph import LaplacianSpec, build_knn_graph, laplacian

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_laplacian(n, seed, k=3, kind="symmetric_normalized"):
    rng = np.random.default_rng(seed)
    g = build_knn_graph(rng.uniform(0, 10, size=(n, 2)), k)
    return laplacian(g, LaplacianSpec(kind))


def random_psd(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    return B @ B.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (status, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, ok, detail, status=None):
    status = status or ("PASS" if ok else "FAIL")
    ACCEPTANCE[number] = (status, detail)
    print(f"criterion {number:>2}: {status}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
