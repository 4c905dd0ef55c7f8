"""Shared fixtures for the test suite."""

import os

import pytest

TESTS_DIR = os.path.dirname(os.path.abspath(__file__))
REPO_ROOT = os.path.dirname(TESTS_DIR)
FIXTURES_DIR = os.path.join(TESTS_DIR, "fixtures")


@pytest.fixture(scope="session")
def mlp_fixture_path() -> str:
    """Committed weights file for the trained two-hidden-layer classifier."""
    path = os.path.join(FIXTURES_DIR, "mlp_8x8_2class.txt")
    assert os.path.exists(path), f"missing committed fixture {path}"
    return path
