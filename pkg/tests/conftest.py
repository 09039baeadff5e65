"""Shared fixtures for the slow experiment sweeps.

The polygon development sweep takes tens of seconds, so it is computed once
per session and shared between the experiment regression tests and the
acceptance suite. The cheaper sweeps are cached the same way for symmetry.
"""

import pytest

from asl.experiments import benoist_hulin, collar_limit, neck_pinch, polygon_count


@pytest.fixture(scope="session")
def benoist_report():
    return benoist_hulin()


@pytest.fixture(scope="session")
def collar_report():
    return collar_limit()


@pytest.fixture(scope="session")
def neck_report():
    return neck_pinch()


@pytest.fixture(scope="session")
def polygon_report():
    return polygon_count()
