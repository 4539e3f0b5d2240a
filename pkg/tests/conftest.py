import pathlib

import numpy as np
import pytest

from fracsos.cli import load_problem
from fracsos.extract import solve_program

ROOT = pathlib.Path(__file__).resolve().parent.parent
PROBLEMS = ROOT / "problems"

EX1_VALUE = 0.0558
EX1_XBAR = np.array([-0.3820, 0.0])
EX2_VALUE = 1.4907  # = sqrt(20)/3 to four digits
EX2_XBAR = np.array([1.0, 1.0])


@pytest.fixture(scope="session")
def ex1_path():
    return str(PROBLEMS / "ex1.json")


@pytest.fixture(scope="session")
def ex2_path():
    return str(PROBLEMS / "ex2.json")


@pytest.fixture(scope="session")
def ex1(ex1_path):
    return load_problem(ex1_path)


@pytest.fixture(scope="session")
def ex2(ex2_path):
    return load_problem(ex2_path)


@pytest.fixture(scope="session")
def ex1_report(ex1):
    return solve_program(ex1, reduce_support=True)


@pytest.fixture(scope="session")
def ex2_report(ex2):
    return solve_program(ex2)
