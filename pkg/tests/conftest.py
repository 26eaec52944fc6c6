import os

import pytest

import schematrans as st
from schematrans import dsl

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def read_fixture(name: str) -> str:
    with open(fixture_path(name), "r", encoding="utf-8") as fh:
        return fh.read()


def read_golden(name: str) -> str:
    with open(os.path.join(GOLDEN, name), "r", encoding="utf-8") as fh:
        return fh.read()


def load_schema(name: str):
    return dsl.parse_schema(read_fixture(name))


def load_plan(schema_name: str, plan_name: str):
    schema = load_schema(schema_name)
    return st.compose_plan(schema, dsl.parse_plan(read_fixture(plan_name)))


@pytest.fixture(scope="session")
def vertical_plan():
    return load_plan("vertical_s.schema", "vertical.plan")


@pytest.fixture(scope="session")
def horizontal_plan():
    return load_plan("horizontal_t.schema", "horizontal.plan")


@pytest.fixture(scope="session")
def composed_plan():
    return load_plan("vertical_s.schema", "composed.plan")


@pytest.fixture(scope="session")
def minioid_plan():
    return load_plan("minioid.schema", "minioid.plan")


@pytest.fixture(scope="session")
def worked_plan():
    return load_plan("worked.schema", "worked.plan")


@pytest.fixture(scope="session")
def worked_instance(worked_plan):
    return dsl.parse_instance(read_fixture("worked_source.inst"), worked_plan.source)
