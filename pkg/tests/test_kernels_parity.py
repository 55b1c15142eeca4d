import os
import subprocess
import sys

import numpy as np
import pytest

from stabledetect import _kernels_py as py
from stabledetect import stable
from stabledetect.stable import density_table

cy = pytest.importorskip("stabledetect._kernels")


@pytest.mark.parametrize("alpha,beta", [(0.5, 0.0), (0.5, 1.0), (0.9, 0.4), (1.5, -0.6), (0.3, 0.7)])
def test_pdf_standard(alpha, beta):
    x = np.concatenate([-np.logspace(3, -3, 25), [0.0], np.logspace(-3, 3, 25)])
    a, fa = cy.pdf_standard(x, alpha, beta, 1e-10)
    b, fb = py.pdf_standard(x, alpha, beta, 1e-10)
    assert fa == fb == 0
    np.testing.assert_allclose(a, b, rtol=1e-7, atol=1e-10)


@pytest.mark.parametrize("alpha,beta", [(0.5, 1.0), (0.9, 0.0), (1.5, -1.0)])
def test_cms_transform(alpha, beta, rng):
    v = rng.uniform(-np.pi / 2, np.pi / 2, 1000)
    w = rng.standard_exponential(1000)
    np.testing.assert_allclose(cy.cms_transform(v, w, alpha, beta), py.cms_transform(v, w, alpha, beta),
                               rtol=1e-12)


def test_row_power_means(rng):
    y = rng.standard_cauchy((200, 13))
    powers = np.array([0.001, 0.1, 0.2])
    signed = np.array([0, 1, 1], dtype=np.uint8)
    np.testing.assert_allclose(cy.row_power_means(y, powers, signed),
                               py.row_power_means(y, powers, signed), rtol=1e-12, atol=1e-14)


def test_table_llr(rng):
    t1, t0 = density_table(0.5, 0.4, 1e-8, 0.05), density_table(0.5, 0.0, 1e-8, 0.05)
    y = rng.standard_cauchy((300, 10)) ** 3
    args = (2.0, t1.x0, t1.u0, t1.step, t1.log_values, t1.tail_slope,
            1.0, t0.x0, t0.u0, t0.step, t0.log_values, t0.tail_slope)
    np.testing.assert_allclose(cy.table_llr(y, *args), py.table_llr(y, *args), rtol=1e-10, atol=1e-10)


def test_pure_python_fallback_selected():
    env = dict(os.environ, STABLEDETECT_PURE_PYTHON="1")
    code = ("from stabledetect import kernels, stable;"
            "print(kernels.BACKEND, float(stable.pdf(stable.StableParams(0.5, 1.0), 1.0)))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "python"
    assert float(out[1]) == pytest.approx(float(stable.pdf(stable.StableParams(0.5, 1.0), 1.0)),
                                          rel=1e-7)
