import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from model import FamilySpec  # noqa: E402
from reports import reports  # noqa: E402


@pytest.fixture(autouse=True)
def quiet_reports():
    reports.quiet = True
    reports.reset()
    yield
    reports.quiet = False


@pytest.fixture
def rademacher_1x16():
    return FamilySpec("rademacher", 16, 1)


@pytest.fixture
def gaussian_2x30():
    return FamilySpec("gaussian", 30, 2)


@pytest.fixture
def scaled_1x16():
    return FamilySpec("martingale_scaled", 16, 1)
