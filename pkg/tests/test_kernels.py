import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_lcs
from todsumkit import _kernels

arrays = st.lists(st.integers(0, 4), max_size=10).map(lambda x: np.asarray(x, dtype=np.int64))

backends = [("numpy", _kernels.lcs_length_numpy, _kernels.clipped_overlap_numpy)]
if _kernels.HAS_NUMBA:
    backends.append(("numba", _kernels.lcs_length_numba, _kernels.clipped_overlap_numba))


@pytest.mark.parametrize("name,lcs,_", backends)
@given(a=arrays, b=arrays)
def test_lcs_backends(name, lcs, _, a, b):
    assert int(lcs(a, b)) == brute_lcs(a.tolist(), b.tolist())


@pytest.mark.parametrize("name,_,overlap", backends)
@given(a=arrays, b=arrays)
def test_overlap_backends(name, _, overlap, a, b):
    want = sum(min(a.tolist().count(v), b.tolist().count(v)) for v in set(a.tolist()))
    assert int(overlap(a, b)) == want


@pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not installed")
def test_backends_agree_on_long_inputs():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.integers(0, 50, rng.integers(0, 300))
        b = rng.integers(0, 50, rng.integers(0, 300))
        assert _kernels.lcs_length_numpy(a, b) == _kernels.lcs_length_numba(a, b)
        assert _kernels.clipped_overlap_numpy(a, b) == _kernels.clipped_overlap_numba(a, b)


@pytest.mark.parametrize("flag,want", [("numpy", "numpy"), ("", "numba" if _kernels.HAS_NUMBA else "numpy")])
def test_env_flag_selects_backend(flag, want):
    env = {**os.environ, "TODSUMKIT_KERNELS": flag}
    out = subprocess.run([sys.executable, "-c", "from todsumkit import _kernels; print(_kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == want
