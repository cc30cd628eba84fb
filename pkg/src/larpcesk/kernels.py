"""Hot numeric kernels with a numba path and a pure-numpy path.

``gaussian_correlation_matrix`` and ``lindley_waits`` dispatch to the
numba implementation when :data:`larpcesk._accel.USE_NUMBA` is true.
The ``*_numpy`` and ``*_numba`` variants are public so that callers (and
the benchmark in ``benchmarks/``) can pin a path explicitly.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


def gaussian_correlation_matrix_numpy(x1, x2, theta):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d2 = (x1[:, None, :] - x2[None, :, :]) ** 2
    return np.exp(-(d2 @ theta))


@njit
def gaussian_correlation_matrix_numba(x1, x2, theta):
    n1, m = x1.shape
    n2 = x2.shape[0]
    out = np.empty((n1, n2))
    for i in range(n1):
        for j in range(n2):
            s = 0.0
            for d in range(m):
                diff = x1[i, d] - x2[j, d]
                s += theta[d] * diff * diff
            out[i, j] = np.exp(-s)
    return out


def gaussian_correlation_matrix(x1, x2, theta):
    """Anisotropic Gaussian correlation ``exp(-sum_d theta_d (x1_d - x2_d)^2)``.

    Parameters
    ----------
    x1 : ndarray, shape (n1, M)
    x2 : ndarray, shape (n2, M)
    theta : ndarray, shape (M,)

    Returns
    -------
    ndarray, shape (n1, n2)
    """
    if USE_NUMBA:
        return gaussian_correlation_matrix_numba(
            np.ascontiguousarray(x1, dtype=np.float64),
            np.ascontiguousarray(x2, dtype=np.float64),
            np.ascontiguousarray(theta, dtype=np.float64),
        )
    return gaussian_correlation_matrix_numpy(x1, x2, theta)


def lindley_waits_numpy(interarrivals, services, w0=0.0):
    # W_n = U_n - min(-w0, min_{1<=j<=n} U_j), U_n = sum_{i<n} (S_i - A_{i+1})
    services = np.asarray(services, dtype=float)
    interarrivals = np.asarray(interarrivals, dtype=float)
    n = services.shape[0]
    u = np.empty(n)
    u[0] = 0.0
    if n > 1:
        np.cumsum(services[:-1] - interarrivals[1:], out=u[1:])
    floor = u.copy()
    floor[0] = -w0
    return u - np.minimum.accumulate(floor)


@njit
def lindley_waits_numba(interarrivals, services, w0=0.0):
    n = services.shape[0]
    w = np.empty(n)
    w[0] = w0
    for i in range(1, n):
        nxt = w[i - 1] + services[i - 1] - interarrivals[i]
        w[i] = nxt if nxt > 0.0 else 0.0
    return w


def lindley_waits(interarrivals, services, w0=0.0):
    """Queue delays of successive FIFO customers by the Lindley recursion.

    ``interarrivals[i]`` is the gap between customer ``i - 1`` and ``i``
    (the first entry is ignored); ``services[i]`` is customer ``i``'s
    service time; ``w0`` is the delay of customer 0.
    """
    if USE_NUMBA:
        return lindley_waits_numba(
            np.ascontiguousarray(interarrivals, dtype=np.float64),
            np.ascontiguousarray(services, dtype=np.float64),
            float(w0),
        )
    return lindley_waits_numpy(interarrivals, services, w0)
