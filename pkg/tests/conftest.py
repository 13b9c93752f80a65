import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def unit_samples(n, seed=0):
    return np.random.default_rng(seed).uniform(0.0, 1.0, n)


@pytest.fixture(scope="session")
def table1_report():
    from spatial_cvm.critical_values import verify_table1
    return verify_table1()


def read_table(path):
    import csv
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_desk(out_dir, n_jobs):
    import contextlib
    import io
    import re
    import time
    from spatial_cvm.cli import main
    buf = io.StringIO()
    start = time.perf_counter()
    with contextlib.redirect_stdout(buf):
        code = main(["all", "--scale", "desk", "--out", str(out_dir), "--n-jobs", str(n_jobs)])
    seconds = time.perf_counter() - start
    per_table = {m.group(1): float(m.group(2))
                 for m in re.finditer(r"^(\w+): \d+ rows in ([\d.]+)s", buf.getvalue(), re.M)}
    return {"dir": out_dir, "code": code, "seconds": seconds, "tables": per_table}


@pytest.fixture(scope="session")
def desk_results(tmp_path_factory):
    """One desk-scale run of every experiment, shared across test modules."""
    return run_desk(tmp_path_factory.mktemp("desk_serial"), n_jobs=1)


@pytest.fixture(scope="session")
def desk_tables(desk_results):
    names = ("size", "power", "weaker", "bandwidth", "comparison", "comparison_dcov")
    return {n: read_table(desk_results["dir"] / f"{n}.csv") for n in names}


def rate(rows, **match):
    for row in rows:
        if all(row[k] == str(v) for k, v in match.items()):
            return float(row["rate"])
    raise KeyError(match)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


HEAVY_FIXTURES = {"table1_report", "desk_results", "desk_tables"}


def pytest_collection_modifyitems(items):
    for item in items:
        if HEAVY_FIXTURES & set(getattr(item, "fixturenames", ())):
            item.add_marker(pytest.mark.slow)
