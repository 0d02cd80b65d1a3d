from importlib.resources import files

import pytest

from tmscatter.formats import load_bundle, load_plan

DATA = files("tmscatter") / "data"
REGIMES = ("O", "II", "III", "IV", "V")


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def coupled():
    """Flat synthetic nine-port bundle with load-to-load coupling (M=36, H=25)."""
    return load_bundle(DATA / "monopole_array.json")


@pytest.fixture(scope="session")
def uncoupled():
    return load_bundle(DATA / "monopole_array_uncoupled.json")


@pytest.fixture(scope="session")
def plans():
    return {r: load_plan(DATA / f"regime_{r}.toml") for r in REGIMES}


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
