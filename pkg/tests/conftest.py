"""
Pytest configuration and shared fixtures for the sharing scheme tests.
"""

import random
import sys
from pathlib import Path

import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.corefield import validate_prime  # noqa: E402


@pytest.fixture
def p13():
    """The small prime of the hand-checked examples."""
    return validate_prime(13)


@pytest.fixture
def p64():
    """Largest 64-bit prime, 2^64 - 59."""
    return validate_prime(2 ** 64 - 59)


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def demo_config(tmp_path):
    """The p = 13 demo: one secret (2) shared by participants 1 and 2."""
    path = tmp_path / "demo.json"
    path.write_text(
        '{"secrets": [2], "access_structure": [[[1, 2]]], "participants": 2, '
        '"prime": 13, "hash": "sha256", "mode": "hash"}'
    )
    return path
