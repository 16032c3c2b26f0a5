"""Shared pytest configuration and fixtures for all tests."""

import os
import tempfile
from pathlib import Path

import pytest

# Set test config file BEFORE any bveff modules are imported
# This ensures CONFIG_FILE in config.py uses the test path
_test_config_dir = Path(tempfile.mkdtemp(prefix="bveff_test_"))
os.environ["BVEFF_CONFIG_FILE"] = str(_test_config_dir / ".bveffconfig_test")


@pytest.fixture(autouse=True)
def _isolated_caps(monkeypatch):
    """Tests never inherit a loop cap from the surrounding shell."""
    monkeypatch.delenv("BV_MAX_LOOPS", raising=False)
