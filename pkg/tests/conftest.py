import pytest

from gradedinv import CompositionOperator, SmoothFn, parse
from gradedinv.tameness import build_generator

from util import FULL, SMALL

CUBIC = "eta + eta^3"


@pytest.fixture(scope="session")
def cubic_op_small():
    return CompositionOperator(parse(CUBIC), SMALL)


@pytest.fixture(scope="session")
def cubic_op_full():
    return CompositionOperator(parse(CUBIC), FULL)


@pytest.fixture(scope="session")
def cubic_family_small(cubic_op_small):
    return build_generator(cubic_op_small, SmoothFn.zero(SMALL), l0=2, N=6)


@pytest.fixture(scope="session")
def cubic_family_full(cubic_op_full):
    return build_generator(cubic_op_full, SmoothFn.zero(FULL), l0=2, N=6)
