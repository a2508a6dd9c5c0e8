import os
import subprocess
import sys

import numpy as np
import pytest

from matchillum import _kernels_py, kernels, synth

try:
    from matchillum import _kernels
except ImportError:  # extension not built
    _kernels = None


def _inputs(g, n_c=19, p=4, n_t=40):
    C = g.random((31, n_c))
    C[:, 5] = C[:, 3]  # a dependent pair makes some subsets singular
    T = g.random((31, n_t))
    combos = synth._subsets(n_c, p)
    Linv, valid = synth._factor(C, combos)
    return np.ascontiguousarray(C.T @ T), np.einsum("ln,ln->n", T, T), combos, Linv, valid


@pytest.mark.skipif(_kernels is None, reason="compiled kernel not built")
@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_backends_agree(p):
    args = _inputs(np.random.default_rng(p), p=p)
    i1, r1 = _kernels.subset_residuals_best(*args, 1e-12)
    i2, r2 = _kernels_py.subset_residuals_best(*args, 1e-12)
    assert np.array_equal(i1, i2)
    assert np.allclose(r1, r2, rtol=1e-10, atol=1e-14)


def test_singular_subsets_skipped():
    _, _, combos, _, valid = _inputs(np.random.default_rng(0))
    bad = [(3 in c and 5 in c) for c in combos.tolist()]
    assert np.array_equal(valid == 0, bad)


def test_ties_go_to_first_subset():
    C = np.eye(31)[:, :6]
    t = np.zeros(31)
    t[0] = 1.0
    f = synth.fit_combination(t, C, size=2)
    assert f.indices == (0, 1)


def test_backend_selection_env():
    env = dict(os.environ, MATCHILLUM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from matchillum import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("python", "cython")
