"""Backend selection for the hot loops.

The compiled ``_kernels`` extension is used when importable; otherwise, or when
the ``STABLEDETECT_PURE_PYTHON`` environment variable is set, the numpy/scipy
implementations in ``_kernels_py`` are used. Both expose the same functions.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("STABLEDETECT_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"


def pdf_standard(x, alpha, beta, tol):
    return _impl.pdf_standard(np.ascontiguousarray(x, dtype=np.float64), float(alpha),
                              float(beta), float(tol))


def cms_transform(v, w, alpha, beta):
    return _impl.cms_transform(np.ascontiguousarray(v, dtype=np.float64),
                               np.ascontiguousarray(w, dtype=np.float64),
                               float(alpha), float(beta))


def row_power_means(y, powers, signed):
    return _impl.row_power_means(np.ascontiguousarray(y, dtype=np.float64),
                                 np.ascontiguousarray(powers, dtype=np.float64),
                                 np.ascontiguousarray(signed, dtype=np.uint8))


def table_llr(y, table1, sigma1, table0, sigma0):
    t1, t0 = table1, table0
    return _impl.table_llr(np.ascontiguousarray(y, dtype=np.float64),
                           float(sigma1), t1.x0, t1.u0, t1.step, t1.log_values, t1.tail_slope,
                           float(sigma0), t0.x0, t0.u0, t0.step, t0.log_values, t0.tail_slope)


def table_logpdf(y, table, sigma):
    y = np.asarray(y, dtype=np.float64)
    out = _kernels_py._table_logpdf(y.ravel(), float(sigma), table.x0, table.u0, table.step,
                                    table.log_values, table.tail_slope)
    return out.reshape(y.shape)
