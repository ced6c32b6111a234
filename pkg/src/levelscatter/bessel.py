"""Integer-order Bessel functions J_n, Y_n and H_n^(1) for real positive argument.

J_n is computed by Miller's downward recurrence normalized with the
identity J_0 + 2 * sum_k J_2k = 1.  Y_0 and Y_1 follow from their Neumann
series in the J_2k, and higher Y_n come from the (stable) upward
recurrence.  Only scalar arguments are supported; callers loop.
"""
from __future__ import annotations

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
_BIG = 1e250


def _miller_start(nmax: int, z: float) -> int:
    top = max(nmax, z, 1.0)
    m = int(top + 40 + 6 * math.sqrt(top))
    return m + (m % 2)


def bessel_j(nmax: int, z: float) -> np.ndarray:
    """Return ``[J_0(z), ..., J_nmax(z)]`` for ``z > 0``."""
    if z <= 0:
        raise ValueError(f"argument must be positive, got {z}")
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    m = _miller_start(nmax, z)
    vals = np.zeros(m + 2)
    vals[m + 1] = 0.0
    vals[m] = 1e-300
    for n in range(m, 0, -1):
        vals[n - 1] = (2.0 * n / z) * vals[n] - vals[n + 1]
        if abs(vals[n - 1]) > _BIG:
            vals[n - 1 :] /= _BIG
    norm = vals[0] + 2.0 * vals[2 : m + 1 : 2].sum()
    return vals[: nmax + 1] / norm


def _j_table(z: float, nmax: int) -> np.ndarray:
    # J up to an order where the Neumann series terms are negligible
    return bessel_j(max(nmax, _miller_start(1, z) - 20), z)


def bessel_y(nmax: int, z: float) -> np.ndarray:
    """Return ``[Y_0(z), ..., Y_nmax(z)]`` for ``z > 0``."""
    if z <= 0:
        raise ValueError(f"argument must be positive, got {z}")
    jt = _j_table(z, nmax + 1)
    return _y_from_j(jt, nmax, z)


def _y_from_j(jt: np.ndarray, nmax: int, z: float) -> np.ndarray:
    kmax = (len(jt) - 2) // 2
    k = np.arange(1, kmax + 1)
    sign = (-1.0) ** k
    lg = math.log(z / 2.0) + EULER_GAMMA
    y0 = (2.0 / math.pi) * (lg * jt[0] - 2.0 * np.sum(sign * jt[2 * k] / k))
    # Y_1 = -Y_0', differentiating the series term by term
    y1 = (2.0 / math.pi) * (
        lg * jt[1] - jt[0] / z + np.sum(sign * (jt[2 * k - 1] - jt[2 * k + 1]) / k)
    )
    out = np.empty(nmax + 1)
    out[0] = y0
    if nmax >= 1:
        out[1] = y1
    for n in range(1, nmax):
        out[n + 1] = (2.0 * n / z) * out[n] - out[n - 1]
    return out


def bessel_jy(nmax: int, z: float) -> tuple[np.ndarray, np.ndarray]:
    """Both ``J_n(z)`` and ``Y_n(z)`` for ``n = 0..nmax`` from one recurrence."""
    if z <= 0:
        raise ValueError(f"argument must be positive, got {z}")
    jt = _j_table(z, nmax + 1)
    return jt[: nmax + 1].copy(), _y_from_j(jt, nmax, z)


def hankel1(nmax: int, z: float) -> np.ndarray:
    """``H_n^(1)(z) = J_n(z) + i Y_n(z)`` for ``n = 0..nmax``."""
    j, y = bessel_jy(nmax, z)
    return j + 1j * y


def derivative(values: np.ndarray) -> np.ndarray:
    """Derivatives of a cylinder-function table ``C_0..C_{N}``.

    Uses ``C_n' = (C_{n-1} - C_{n+1}) / 2`` and ``C_0' = -C_1``; the last
    entry is dropped since ``C_{N+1}`` is unknown.
    """
    c = np.asarray(values)
    out = np.empty(len(c) - 1, dtype=c.dtype)
    out[0] = -c[1]
    out[1:] = 0.5 * (c[:-2] - c[2:])
    return out


def hankel_log_derivatives(nmax: int, z: float) -> np.ndarray:
    """``rho_n(z) = H_n^(1)'(z) / H_n^(1)(z)`` for ``n = 0..nmax``."""
    if z <= 0:
        raise ValueError(f"argument must be positive, got {z}")
    h = hankel1(nmax + 1, z)
    n = np.arange(nmax + 1)
    rho = np.empty(nmax + 1, dtype=complex)
    rho[0] = -h[1] / h[0]
    # H_n' = H_{n-1} - (n/z) H_n
    rho[1:] = h[:-2][: nmax] / h[1 : nmax + 1] - n[1:] / z
    return rho


def hankel_log_derivative(n: int, z: float) -> complex:
    """``H_|n|^(1)'(z) / H_|n|^(1)(z)``; negative orders share the ratio."""
    return complex(hankel_log_derivatives(abs(int(n)), z)[abs(int(n))])
