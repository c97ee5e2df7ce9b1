"""Smoke-test entry point; exits 77 (ctest skip) when pytest is absent."""

import sys
from pathlib import Path

try:
    import pytest
except ImportError:
    print("pytest not installed, skipping python smoke tests")
    sys.exit(77)

sys.exit(pytest.main(["-q", str(Path(__file__).resolve().parent)]))
