import os
import subprocess
import sys

import numpy as np
import pytest

from clusterwalk._kernels import BACKENDS, get_kernel


def _random_problem(rng, n_modes=40, n_terms=200):
    rows = rng.integers(0, n_modes, n_terms).astype(np.int64)
    cols = rng.integers(0, n_modes, n_terms).astype(np.int64)
    amps = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    targets = rng.integers(-1, n_modes, (n_modes, 4)).astype(np.int64)
    coefs = rng.normal(size=(n_modes, 4)) + 1j * rng.normal(size=(n_modes, 4))
    return rows, cols, amps, targets, coefs, n_modes


def _reference(rows, cols, amps, targets, coefs, n):
    acc = {}
    for r, c, a in zip(rows, cols, amps):
        for i in range(4):
            if targets[r, i] < 0:
                continue
            for j in range(4):
                if targets[c, j] < 0:
                    continue
                k = int(targets[r, i] * n + targets[c, j])
                acc[k] = acc.get(k, 0) + a * coefs[r, i] * coefs[c, j]
    keys = np.array(sorted(acc), dtype=np.int64)
    return keys, np.array([acc[k] for k in keys])


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_kernel_matches_reference(name):
    rng = np.random.default_rng(3)
    prob = _random_problem(rng)
    keys, vals = get_kernel(name)(*prob)
    rk, rv = _reference(*prob)
    assert np.array_equal(keys, rk)
    assert np.allclose(vals, rv, atol=1e-12)


def test_backends_bitwise_equal():
    rng = np.random.default_rng(11)
    prob = _random_problem(rng, n_terms=500)
    outs = [get_kernel(n)(*prob) for n in sorted(BACKENDS)]
    for k, v in outs[1:]:
        assert np.array_equal(k, outs[0][0])
        assert np.array_equal(v, outs[0][1])


def test_empty_input():
    for name in BACKENDS:
        keys, vals = get_kernel(name)(
            np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, complex),
            np.zeros((2, 4), np.int64), np.zeros((2, 4), complex), 2,
        )
        assert keys.size == 0 and vals.size == 0


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_kernel("fortran")


def test_env_forces_python_fallback():
    code = "from clusterwalk import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, CLUSTERWALK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
