import os
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from eql import _pykernels, kernels

try:
    from eql import _ckernels
except ImportError:
    _ckernels = None

needs_compiled = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def levenshtein(a: str, b: str) -> int:
    """Textbook full-matrix recurrence."""
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[-1][-1]


@given(st.text(max_size=15), st.text(max_size=15))
def test_edit_distance_oracle(a, b):
    assert kernels.edit_distance(a, b) == _pykernels.edit_distance(a, b) == levenshtein(a, b)


@needs_compiled
@given(st.text(max_size=15), st.text(max_size=15))
def test_compiled_edit_distance(a, b):
    assert _ckernels.edit_distance(a, b) == levenshtein(a, b)


@needs_compiled
def test_compiled_is_default():
    assert kernels.BACKEND == "cython"


def test_fallback_switch():
    env = dict(os.environ, EQL_PURE_PYTHON="1")
    proc = subprocess.run([sys.executable, "-c", "from eql import kernels; print(kernels.BACKEND)"],
                          capture_output=True, text=True, env=env)
    assert proc.stdout.strip() == "python"


def test_astral_characters():
    assert kernels.edit_distance("𝔸b", "𝔸c") == 1
    assert kernels.match_atoms(bytes([kernels.ONE]), "_", "𝔸")
