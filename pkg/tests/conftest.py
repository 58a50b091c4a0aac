import pytest

from evoplat.env import load_level
from evoplat.levels import bundled_level


def flat_level(width=14, flag_col=11, height=7, time=100):
    """Flat ground, start at column 1, flag on the ground row."""
    rows = ["." * width for _ in range(height - 2)]
    ground = ["."] * width
    ground[1] = "M"
    ground[flag_col] = "F"
    rows.append("".join(ground))
    rows.append("#" * width)
    return load_level(f"time={time}\n" + "\n".join(rows) + "\n", source="<flat>")


@pytest.fixture(scope="session")
def w1l1():
    return bundled_level("w1l1")


@pytest.fixture(scope="session")
def w1l2():
    return bundled_level("w1l2")


@pytest.fixture(scope="session")
def tiny():
    return bundled_level("tiny")


@pytest.fixture
def flat():
    return flat_level()
