import numpy as np
import pytest

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def random_matrix(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_hermitian(rng, d):
    a = random_matrix(rng, d)
    return 0.5 * (a + a.conj().T)


def random_unitary(rng, d):
    q, r = np.linalg.qr(random_matrix(rng, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, d, rank=None):
    a = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    m = a @ a.conj().T
    m = m / np.trace(m).real
    return 0.5 * (m + m.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance report ------------------------------------------------------

_CRITERIA: dict[str, tuple[int, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    key = item.nodeid
    if rep.failed:
        _CRITERIA[key] = (num, title, "FAIL")
    elif rep.when == "call" and key not in _CRITERIA:
        _CRITERIA[key] = (num, title, "PASS")
    elif rep.skipped:
        _CRITERIA[key] = (num, title, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    merged: dict[int, tuple[str, str]] = {}
    for num, title, status in _CRITERIA.values():
        prev = merged.get(num, (title, "PASS"))[1]
        worst = "FAIL" if "FAIL" in (prev, status) else ("SKIP" if "SKIP" in (prev, status) else "PASS")
        merged[num] = (title, worst)
    terminalreporter.section("acceptance criteria")
    for num in sorted(merged):
        title, status = merged[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {title}")
