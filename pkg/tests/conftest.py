import pytest
from hypothesis import settings
from hypothesis import strategies as st

from cckp.model import ProblemInstance

settings.register_profile("cckp", deadline=None)
settings.load_profile("cckp")


def make_instance(K=2, m=3, a=1.0, d=1.0, c=1.0, B=4.0, alpha=0.5, profits=None):
    if profits is None:
        profits = [[1.0] * m for _ in range(K)]
    elif not isinstance(profits[0], (list, tuple)):
        profits = [list(profits) for _ in range(K)]
    return ProblemInstance(K, m, a, d, c, B, alpha, profits)


@pytest.fixture
def small_instance():
    return make_instance()


@st.composite
def instances(draw, max_groups=4, max_size=4):
    K = draw(st.integers(1, max_groups))
    m = draw(st.integers(1, max_size))
    reals = st.floats(0.05, 5.0, allow_nan=False, allow_infinity=False)
    a, d, c = draw(reals), draw(reals), draw(reals)
    B = draw(st.floats(0.1, 2.0 * K * m * a + 1.0))
    alpha = draw(st.floats(0.01, 0.99))
    profits = draw(st.lists(
        # Nonzero profits stay well above underflow so scaling them is lossless.
        st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 100)), min_size=m, max_size=m),
        min_size=K, max_size=K))
    return ProblemInstance(K, m, a, d, c, B, alpha, profits)


@st.composite
def instance_and_bits(draw, **kw):
    inst = draw(instances(**kw))
    bits = draw(st.lists(st.integers(0, 1), min_size=inst.n, max_size=inst.n))
    return inst, bits


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
