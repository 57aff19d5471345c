"""System norms: H-infinity by Hamiltonian bisection, plus grid scans.

hinf_norm implements the standard bisection on gamma where each
candidate is tested by checking the associated Hamiltonian matrix for
purely imaginary eigenvalues; the returned value is the feasible upper
end of the bracket, so it never undercuts the true norm by more than
the relative tolerance. grid_norm is the cheap lower-bound companion
used both as a bisection seed and as an independent oracle in tests.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .errors import DomainError, NumericError
from .statespace import build_error_system
from .linalg import is_hurwitz

__all__ = [
    "NormResult",
    "make_log_grid",
    "grid_norm",
    "hinf_norm",
    "worst_case_gain_matrix",
]


@dataclass(frozen=True)
class NormResult:
    """A norm value with the frequency that (approximately) attains it
    and the method that produced it ('bisection' or 'grid')."""

    value: float
    peak_frequency: float
    method: str


def make_log_grid(lo=1e-3, hi=1e3, n_points=512):
    """Logarithmic frequency grid, the package-wide default sweep."""
    if not (lo > 0 and hi > lo and n_points >= 2):
        raise ValueError("grid needs 0 < lo < hi and n_points >= 2")
    return np.logspace(np.log10(lo), np.log10(hi), n_points)


def _dynamics_grid(model, base=None):
    """Default grid enriched with the pole frequencies of the model."""
    grid = make_log_grid() if base is None else np.asarray(base, dtype=np.float64)
    poles = model.poles()
    extra = np.concatenate([np.abs(poles.imag), np.abs(poles)])
    extra = extra[extra > 0.0]
    return np.unique(np.concatenate([[0.0], grid, extra]))


def _sigma_at(model, w):
    resp = kernels.freq_response_grid(
        model.A, model.B, model.C, model.D, np.atleast_1d(float(w))
    )
    return float(np.linalg.svd(resp[0], compute_uv=False)[0])


def _golden_refine(model, w_lo, w_hi, iters=60):
    """Golden-section maximization of sigma_max over [w_lo, w_hi]."""
    phi = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = float(w_lo), float(w_hi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = _sigma_at(model, c), _sigma_at(model, d)
    for _ in range(iters):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = _sigma_at(model, d)
        else:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = _sigma_at(model, c)
        if b - a <= 1e-12 * max(1.0, b):
            break
    if fc >= fd:
        return c, fc
    return d, fd


def grid_norm(model, grid=None, refine=False):
    """Largest sigma_max(G(jw)) over a frequency grid (a lower bound on
    the H-infinity norm). With refine=True a golden-section pass sharpens
    the peak between the neighbouring grid points."""
    w = _dynamics_grid(model, grid)
    resp = kernels.freq_response_grid(model.A, model.B, model.C, model.D, w)
    sig = kernels.sigma_max_grid(resp)
    k = int(np.argmax(sig))
    w_peak, val = float(w[k]), float(sig[k])
    if refine and 0 < k < w.size - 1:
        w_ref, val_ref = _golden_refine(model, w[k - 1], w[k + 1])
        if val_ref > val:
            w_peak, val = w_ref, val_ref
    return NormResult(value=val, peak_frequency=w_peak, method="grid")


def hinf_norm(model, rel_tol=1e-6):
    """H-infinity norm of a stable model by Hamiltonian bisection.

    Raises DomainError if A is not Hurwitz. The result satisfies
    value >= true norm >= value * (1 - rel_tol) and value >= any grid
    lower bound.
    """
    A, B, C, D = model.A, model.B, model.C, model.D
    if not is_hurwitz(A):
        raise DomainError("hinf_norm requires a Hurwitz A matrix")

    sigma_d = float(np.linalg.svd(D, compute_uv=False)[0]) if D.size else 0.0

    seed = grid_norm(model, refine=True)
    glb = max(seed.value, sigma_d)
    peak_w = seed.peak_frequency if seed.value >= sigma_d else np.inf

    if glb == 0.0:
        # C (sI - A)^-1 B identically zero and D = 0.
        return NormResult(value=0.0, peak_frequency=0.0, method="bisection")

    def infeasible(gamma):
        m = B.shape[1]
        R = gamma * gamma * np.eye(m) - D.T @ D
        try:
            R_chol = scipy.linalg.cholesky(R, lower=True)
        except scipy.linalg.LinAlgError:
            return True
        Ri = scipy.linalg.cho_solve((R_chol, True), np.eye(m))
        Abar = A + B @ Ri @ D.T @ C
        H = np.block(
            [
                [Abar, B @ Ri @ B.T],
                [-C.T @ (np.eye(C.shape[0]) + D @ Ri @ D.T) @ C, -Abar.T],
            ]
        )
        eigs = np.linalg.eigvals(H)
        tol = 1e-8 * max(1.0, float(np.max(np.abs(H))))
        return bool(np.any(np.abs(eigs.real) <= tol))

    lo = glb
    hi = max(2.0 * glb, glb * (1.0 + 1e-3))
    expansions = 0
    while infeasible(hi):
        hi *= 2.0
        expansions += 1
        if expansions > 80:
            raise NumericError("H-infinity bisection failed to bracket the norm")

    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if infeasible(mid):
            lo = mid
        else:
            hi = mid

    return NormResult(value=float(hi), peak_frequency=float(peak_w), method="bisection")


def worst_case_gain_matrix(plant_set, gains):
    """N x N table of error-system H-infinity norms.

    Entry (i, l) is the norm of the error dynamics when the estimator
    designed for plant l (gain gains[l]) observes plant i. A gain that
    fails to stabilize its own error dynamics makes its whole column
    +inf instead of raising.
    """
    N = plant_set.n_plants
    if len(gains) != N:
        raise DomainError(f"expected {N} gains, got {len(gains)}")
    table = np.full((N, N), np.inf)
    for l in range(N):
        A_err = plant_set.A_list[l] - gains[l] @ plant_set.C
        if not is_hurwitz(A_err):
            continue
        for i in range(N):
            err = build_error_system(plant_set, i, l, gains[l])
            table[i, l] = hinf_norm(err.model).value
    return table
