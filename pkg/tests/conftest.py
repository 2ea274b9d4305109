from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from iqcf.cfrac import Coefficient, Scripted, expand
from iqcf.covering import AdmissibleParams
from iqcf.numerics import parse_complex
from iqcf.ring_ideals import Elem, Ring

settings.register_profile(
    "default",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

TABLE1_SCRIPT = (
    ((-2, 0), 1),
    ((1, 0), 1),
    ((-1, 1), 1),
    ((0, 1), 2),
    ((1, 1), 2),
    ((2, 0), 2),
    ((2, -1), 2),
    ((1, 1), 1),
    ((-2, 2), 1),
    ((1, 0), 1),
)


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    mp.setenv("IQCF_CACHE", str(tmp_path_factory.mktemp("cache") / "params.json"))
    yield
    mp.undo()


@pytest.fixture(scope="session")
def r23():
    return Ring(-23)


@pytest.fixture(scope="session")
def p23(r23):
    return AdmissibleParams.exact(r23, [Elem(1, 0), Elem(2, 0)], Fraction(8, 9))


@pytest.fixture(scope="session")
def z_table1():
    return parse_complex("-1.26+0.48i", 23)


@pytest.fixture(scope="session")
def script1():
    return Scripted(tuple(Coefficient(Elem(*a), Elem(b, 0)) for a, b in TABLE1_SCRIPT))


@pytest.fixture(scope="session")
def run1(r23, p23, z_table1, script1):
    return expand(r23, z_table1, 10, p23, script1)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def record_acceptance(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.append((number, title, ok, detail))
    print(f"acceptance {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{number}. {'PASS' if ok else 'FAIL'}  {title}: {detail}")
