import pathlib

import pytest

from mibvp.monotone import run
from mibvp.problems import build_problem, example1, example2

PROBLEMS_DIR = pathlib.Path(__file__).resolve().parent.parent / "problems"


@pytest.fixture(scope="session")
def problems_dir():
    return PROBLEMS_DIR


@pytest.fixture(scope="session")
def ex1_config():
    return example1()


@pytest.fixture(scope="session")
def ex2_config():
    return example2()


@pytest.fixture(scope="session")
def ex1_problem(ex1_config):
    return build_problem(ex1_config)


@pytest.fixture(scope="session")
def ex2_problem(ex2_config):
    return build_problem(ex2_config)


@pytest.fixture(scope="session")
def trace_ex1(ex1_problem):
    return run(ex1_problem, 0.49, max_iter=300, tol=1e-8, grid_n=501)


@pytest.fixture(scope="session")
def trace_ex2(ex2_problem):
    return run(ex2_problem, -2.0, max_iter=1500, tol=1e-8, grid_n=501)
