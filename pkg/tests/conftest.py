import random
from fractions import Fraction

import pytest

from carnot.lie import abelian, free_nilpotent, heisenberg


@pytest.fixture(scope="session")
def h1():
    return heisenberg(1)


@pytest.fixture(scope="session")
def f23():
    return free_nilpotent(2, 3)


@pytest.fixture(scope="session")
def r2():
    return abelian(2)


def rand_rational(rng, bound=9):
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def rand_point(rng, dim, bound=9):
    return tuple(rand_rational(rng, bound) for _ in range(dim))


@pytest.fixture
def rng():
    return random.Random(20261016)


# one (number, verdict, title, seconds, note) row per acceptance criterion
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, verdict, title, seconds, note in sorted(ACCEPTANCE):
        line = f"{verdict} criterion {num:>2}: {title} ({seconds:.2f} s)"
        terminalreporter.write_line(line + (f" -- {note}" if note else ""))
