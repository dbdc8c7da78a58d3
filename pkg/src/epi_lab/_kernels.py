"""Hot numeric kernels: grid convolutions and slice integrals.

Every kernel has two implementations, a numba ``@njit`` one and a pure-numpy
one.  The backend is chosen once at import time from the environment variable
``EPI_LAB_BACKEND`` (``numba``, ``numpy``, or ``auto``; default ``auto`` picks
numba when it is importable).  Both paths produce the same values up to
floating-point rounding; ``benchmarks/benchmark_kernels.py`` compares them.

All loops either have independent outputs per grid point (safe to
parallelize) or run in a fixed serial order, so results are deterministic
for a given backend.
"""

from __future__ import annotations

import os

import numpy as np


def _pick_backend() -> str:
    choice = os.environ.get("EPI_LAB_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        try:
            import numba  # noqa: F401
        except ImportError:
            return "numpy"
        return "numba"
    if choice not in ("numba", "numpy"):
        raise ValueError(
            f"EPI_LAB_BACKEND must be 'numba', 'numpy' or 'auto', got {choice!r}"
        )
    return choice


BACKEND = _pick_backend()
USING_NUMBA = BACKEND == "numba"


def backend_name() -> str:
    """Active kernel backend, recorded in report provenance."""
    return BACKEND


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def convolve_axis0_numpy(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Discrete convolution of each column of ``p`` along axis 0.

    ``w`` is an odd-length kernel centered at its midpoint; values outside
    the array are treated as zero.
    """
    n0 = p.shape[0]
    k0 = (len(w) - 1) // 2
    out = np.zeros_like(p)
    for k in range(len(w)):
        s = k0 - k
        if s >= 0:
            if s < n0:
                out[: n0 - s] += w[k] * p[s:]
        else:
            if -s < n0:
                out[-s:] += w[k] * p[: n0 + s]
    return out


def shear_convolve_numpy(
    p: np.ndarray, w: np.ndarray, tks: np.ndarray, aks: np.ndarray
) -> np.ndarray:
    """Convolution along an oblique direction with linear y-interpolation.

    Kernel tap ``k`` contributes ``w[k] * p[i - (k - k0), j - shift_k]``
    where the fractional y-shift ``shift_k = tks[k] + aks[k]`` is split into
    its floor and fractional part; the fraction is realized by linear
    interpolation between the two neighbouring columns.
    """
    n0, n1 = p.shape
    k0 = (len(w) - 1) // 2
    out = np.zeros_like(p)
    for k in range(len(w)):
        q = k - k0
        if abs(q) >= n0:
            continue
        for t, coeff in ((int(tks[k]), (1.0 - aks[k]) * w[k]),
                         (int(tks[k]) + 1, aks[k] * w[k])):
            if coeff == 0.0 or abs(t) >= n1:
                continue
            i0, i1 = max(0, q), min(n0, n0 + q)
            j0, j1 = max(0, t), min(n1, n1 + t)
            out[i0:i1, j0:j1] += coeff * p[i0 - q : i1 - q, j0 - t : j1 - t]
    return out


def slice_reduce_numpy(
    F: np.ndarray, wx: np.ndarray, rw: float, rx: float, nw: int
) -> np.ndarray:
    """Weighted integrals of ``F`` along the anti-diagonal slices y = w - x.

    ``out[m] = sum_i wx[i] * F(i, m*rw - i*rx)`` with linear interpolation in
    the second index and zero outside the grid.  ``rw`` and ``rx`` are the
    output and x spacings in units of the y spacing; when both are 1 the
    slices hit grid points exactly and no interpolation error is incurred.
    """
    nx, ny = F.shape
    ii = np.arange(nx)
    out = np.zeros(nw)
    for m in range(nw):
        ypos = m * rw - ii * rx
        mm = np.floor(ypos).astype(np.int64)
        phi = ypos - mm
        v = np.zeros(nx)
        ok0 = (mm >= 0) & (mm < ny)
        v[ok0] = (1.0 - phi[ok0]) * F[ii[ok0], mm[ok0]]
        ok1 = (mm + 1 >= 0) & (mm + 1 < ny) & (phi > 0.0)
        v[ok1] += phi[ok1] * F[ii[ok1], mm[ok1] + 1]
        out[m] = np.dot(wx, v)
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if USING_NUMBA:
    import numba
    from numba import njit, prange

    if os.environ.get("EPI_LAB_THREADS"):
        numba.set_num_threads(
            max(1, min(int(os.environ["EPI_LAB_THREADS"]),
                       numba.config.NUMBA_NUM_THREADS))
        )

    @njit(cache=True, parallel=True)
    def _convolve_axis0_numba(p, w):  # pragma: no cover - exercised via wrapper
        n0, n1 = p.shape
        nk = w.shape[0]
        k0 = (nk - 1) // 2
        out = np.zeros_like(p)
        for i in prange(n0):
            for k in range(nk):
                s = i + k0 - k
                if s < 0 or s >= n0:
                    continue
                wk = w[k]
                for j in range(n1):
                    out[i, j] += wk * p[s, j]
        return out

    @njit(cache=True, parallel=True)
    def _shear_convolve_numba(p, w, tks, aks):  # pragma: no cover
        n0, n1 = p.shape
        nk = w.shape[0]
        k0 = (nk - 1) // 2
        out = np.zeros_like(p)
        for i in prange(n0):
            for k in range(nk):
                src = i - (k - k0)
                if src < 0 or src >= n0:
                    continue
                t = int(tks[k])
                c0 = (1.0 - aks[k]) * w[k]
                c1 = aks[k] * w[k]
                jlo = t if t > 0 else 0
                jhi = n1 + t if t < 0 else n1
                for j in range(jlo, jhi):
                    out[i, j] += c0 * p[src, j - t]
                if c1 != 0.0:
                    t1 = t + 1
                    jlo = t1 if t1 > 0 else 0
                    jhi = n1 + t1 if t1 < 0 else n1
                    for j in range(jlo, jhi):
                        out[i, j] += c1 * p[src, j - t1]
        return out

    @njit(cache=True, parallel=True)
    def _slice_reduce_numba(F, wx, rw, rx, nw):  # pragma: no cover
        nx, ny = F.shape
        out = np.zeros(nw)
        for m in prange(nw):
            acc = 0.0
            for i in range(nx):
                ypos = m * rw - i * rx
                mm = int(np.floor(ypos))
                phi = ypos - mm
                v = 0.0
                if 0 <= mm < ny:
                    v += (1.0 - phi) * F[i, mm]
                if phi > 0.0 and 0 <= mm + 1 < ny:
                    v += phi * F[i, mm + 1]
                acc += wx[i] * v
            out[m] = acc
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def convolve_axis0(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    p = np.ascontiguousarray(p, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if USING_NUMBA:
        return _convolve_axis0_numba(p, w)
    return convolve_axis0_numpy(p, w)


def convolve_axis1(p: np.ndarray, w: np.ndarray) -> np.ndarray:
    return convolve_axis0(np.ascontiguousarray(p.T), w).T.copy()


def shear_convolve(
    p: np.ndarray, w: np.ndarray, shifts: np.ndarray
) -> np.ndarray:
    """Oblique-direction convolution; ``shifts[k]`` is the fractional
    y-index shift of kernel tap ``k``."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    tks = np.floor(shifts).astype(np.int64)
    aks = np.asarray(shifts, dtype=np.float64) - tks
    if USING_NUMBA:
        return _shear_convolve_numba(p, w, tks, aks)
    return shear_convolve_numpy(p, w, tks, aks)


def slice_reduce(
    F: np.ndarray, wx: np.ndarray, rw: float, rx: float, nw: int
) -> np.ndarray:
    F = np.ascontiguousarray(F, dtype=np.float64)
    wx = np.ascontiguousarray(wx, dtype=np.float64)
    if USING_NUMBA:
        return _slice_reduce_numba(F, wx, float(rw), float(rx), nw)
    return slice_reduce_numpy(F, wx, float(rw), float(rx), nw)
