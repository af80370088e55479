"""Shared fixtures for the harness test suite."""

from __future__ import annotations

from pathlib import Path

import pytest

from synthdata import make_synthetic_manifest


@pytest.fixture(scope="session")
def synthetic_manifest(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("synthetic")
    return make_synthetic_manifest(root)
