import csv
from functools import lru_cache

import numpy as np
import pytest

from dqho.chain import ChainParams, chain_spectral_density
from dqho.response import compute_u_fourier


def read_table(path):
    """Columns of a ``#``-commented CSV as a dict of string lists."""
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    return {k: [r[k] for r in rows] for k in rows[0]}


def column(table, name):
    return np.array([float(v) for v in table[name]])


@lru_cache(maxsize=None)
def chain_response(kappa_b, kappa, omega_r2, t_max, dt=0.05):
    p = ChainParams(kappa_b, kappa, float(np.sqrt(omega_r2)))
    spec = chain_spectral_density(p)
    times = np.arange(int(round(t_max / dt)) + 1) * dt
    return p, spec, compute_u_fourier(spec, p.omega, times)


@pytest.fixture(scope="session")
def ref_chain():
    """Chain parameters without poles: kappa=1/2, kappa_b=0.6, omega_r^2=1."""
    return chain_response(0.6, 0.5, 1.0, 60.0)


# acceptance criteria: one PASS/FAIL line per criterion in the terminal summary
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" and not report.failed:
        return
    number, title = mark.args
    ok, _ = _CRITERIA.get(number, (True, title))
    _CRITERIA[number] = (ok and not report.failed, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
