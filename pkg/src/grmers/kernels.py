"""Hot numerical kernels with a numba fast path and a pure-numpy fallback.

The three loops that dominate synthesis and evaluation runtime live here:

* frequency-response sweeps (one complex linear solve per grid point),
* pointwise chordal-distance sweeps for the gap metric,
* the fixed-step RK4 integration loop.

Backend selection happens once at import: if numba is importable and the
environment variable ``GRMERS_DISABLE_NUMBA`` is unset (or falsy), the
public names bind to jit-compiled versions; otherwise to the numpy
implementations. Both implementations are always importable for
side-by-side benchmarking (see ``benchmarks/bench_kernels.py``).
"""

import os

import numpy as np

_DISABLE_FLAG = os.environ.get("GRMERS_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _DISABLE_FLAG in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by GRMERS_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        # Identity decorator so the numba-path functions stay importable.
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# ---------------------------------------------------------------------------
# numpy implementations (vectorized where batching pays off)
# ---------------------------------------------------------------------------


def freq_response_grid_numpy(A, B, C, D, w):
    """Stacked frequency response C (jw I - A)^-1 B + D.

    Returns an array of shape (len(w), p, m), complex128.
    """
    n = A.shape[0]
    w = np.asarray(w, dtype=np.float64)
    eye = np.eye(n, dtype=np.complex128)
    M = (1j * w)[:, None, None] * eye - A[None, :, :]
    X = np.linalg.solve(M, np.broadcast_to(B, (w.size, *B.shape)))
    return C @ X + D


def sigma_max_grid_numpy(resp):
    """Largest singular value at every grid point of a stacked response."""
    if resp.shape[0] == 0:
        return np.zeros(0)
    return np.linalg.svd(resp, compute_uv=False)[..., 0]


def chordal_grid_numpy(R1, R2):
    """Pointwise chordal distance between two stacked responses.

    At each grid point computes
    sigma_max((I + G2 G2*)^-1/2 (G1 - G2) (I + G1* G1)^-1/2)
    through QR factors of the graph symbols, which has the same singular
    values and avoids explicit matrix square roots.
    """
    nw, p, m = R1.shape
    eye_m = np.broadcast_to(np.eye(m, dtype=np.complex128), (nw, m, m))
    eye_p = np.broadcast_to(np.eye(p, dtype=np.complex128), (nw, p, p))
    T1 = np.concatenate([R1, eye_m], axis=1)          # (nw, p+m, m)
    T2 = np.concatenate([R2.conj().transpose(0, 2, 1), eye_p], axis=1)
    U1 = np.linalg.qr(T1)[1]                          # R-factor, I + G1*G1 = U1^H U1
    U2 = np.linalg.qr(T2)[1]                          # I + G2 G2^H = U2^H U2
    X = np.linalg.solve(U2.conj().transpose(0, 2, 1), R1 - R2)
    Y = np.linalg.solve(
        U1.conj().transpose(0, 2, 1), X.conj().transpose(0, 2, 1)
    ).conj().transpose(0, 2, 1)
    return np.linalg.svd(Y, compute_uv=False)[..., 0].real


def rk4_lti_numpy(A, B, U, x0, h):
    """Fixed-step RK4 for x' = A x + B u with zero-order-hold input.

    U has one row per step (held constant over that step). Returns the
    state trajectory with U.shape[0] + 1 rows, starting at x0.
    """
    nsteps = U.shape[0]
    n = x0.size
    X = np.empty((nsteps + 1, n))
    x = x0.astype(np.float64).copy()
    X[0] = x
    for k in range(nsteps):
        bu = B @ U[k]
        k1 = A @ x + bu
        k2 = A @ (x + 0.5 * h * k1) + bu
        k3 = A @ (x + 0.5 * h * k2) + bu
        k4 = A @ (x + h * k3) + bu
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X[k + 1] = x
    return X


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------


@njit(cache=True)
def _freq_response_grid_nb(A, B, C, D, w):  # pragma: no cover - jitted
    nw = w.shape[0]
    n = A.shape[0]
    p = C.shape[0]
    m = B.shape[1]
    out = np.empty((nw, p, m), dtype=np.complex128)
    for k in range(nw):
        M = -A.astype(np.complex128)
        jw = 1j * w[k]
        for i in range(n):
            M[i, i] += jw
        X = np.linalg.solve(M, B.astype(np.complex128))
        out[k] = C.astype(np.complex128) @ X + D.astype(np.complex128)
    return out


@njit(cache=True)
def _sigma_max_grid_nb(resp):  # pragma: no cover - jitted
    nw = resp.shape[0]
    out = np.empty(nw)
    for k in range(nw):
        out[k] = np.linalg.svd(resp[k])[1][0]
    return out


@njit(cache=True)
def _chordal_grid_nb(R1, R2):  # pragma: no cover - jitted
    nw, p, m = R1.shape
    out = np.empty(nw)
    eye_m = np.eye(m, dtype=np.complex128)
    eye_p = np.eye(p, dtype=np.complex128)
    for k in range(nw):
        G1 = R1[k]
        G2 = R2[k]
        T1 = np.concatenate((G1, eye_m), axis=0)
        T2 = np.concatenate((np.conj(G2.T), eye_p), axis=0)
        U1 = np.linalg.qr(T1)[1]
        U2 = np.linalg.qr(T2)[1]
        X = np.linalg.solve(np.conj(U2.T), G1 - G2)
        Y = np.conj(np.linalg.solve(np.conj(U1.T), np.conj(X.T)).T)
        out[k] = np.linalg.svd(Y)[1][0]
    return out


@njit(cache=True)
def _rk4_lti_nb(A, B, U, x0, h):  # pragma: no cover - jitted
    nsteps = U.shape[0]
    n = x0.shape[0]
    X = np.empty((nsteps + 1, n))
    x = x0.copy()
    X[0] = x
    for k in range(nsteps):
        bu = B @ U[k]
        k1 = A @ x + bu
        k2 = A @ (x + 0.5 * h * k1) + bu
        k3 = A @ (x + 0.5 * h * k2) + bu
        k4 = A @ (x + h * k3) + bu
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X[k + 1] = x
    return X


def _freq_response_grid_numba(A, B, C, D, w):
    return _freq_response_grid_nb(
        np.ascontiguousarray(A, dtype=np.float64),
        np.ascontiguousarray(B, dtype=np.float64),
        np.ascontiguousarray(C, dtype=np.float64),
        np.ascontiguousarray(D, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
    )


def _chordal_grid_numba(R1, R2):
    return _chordal_grid_nb(
        np.ascontiguousarray(R1, dtype=np.complex128),
        np.ascontiguousarray(R2, dtype=np.complex128),
    )


def _sigma_max_grid_numba(resp):
    return _sigma_max_grid_nb(np.ascontiguousarray(resp, dtype=np.complex128))


def _rk4_lti_numba(A, B, U, x0, h):
    return _rk4_lti_nb(
        np.ascontiguousarray(A, dtype=np.float64),
        np.ascontiguousarray(B, dtype=np.float64),
        np.ascontiguousarray(U, dtype=np.float64),
        np.ascontiguousarray(x0, dtype=np.float64),
        float(h),
    )


if HAS_NUMBA:
    freq_response_grid = _freq_response_grid_numba
    sigma_max_grid = _sigma_max_grid_numba
    chordal_grid = _chordal_grid_numba
    rk4_lti = _rk4_lti_numba
    _BACKEND = "numba"
else:
    freq_response_grid = freq_response_grid_numpy
    sigma_max_grid = sigma_max_grid_numpy
    chordal_grid = chordal_grid_numpy
    rk4_lti = rk4_lti_numpy
    _BACKEND = "numpy"


def active_backend():
    """Name of the kernel backend selected at import ('numba' or 'numpy')."""
    return _BACKEND
