"""Normalized right coprime factorization and the nu-gap metric.

The gap value is the supremum over frequency of the pointwise chordal
distance between the two responses, provided the winding condition
holds: det(I + P2~ P1) must be nonzero along the axis and its winding
number must cancel the difference in unstable-pole counts. When the
condition fails the distance is 1 by definition. Pole counts come from
the realization's eigenvalues (no minimal-realization pass), and
systems with poles within 1e-7 of the imaginary axis are rejected
rather than perturbed.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError
from .linalg import solve_care
from .norms import make_log_grid
from .statespace import StateSpaceModel

__all__ = ["CoprimeFactors", "GapResult", "normalized_rcf", "nu_gap", "max_gap"]

AXIS_POLE_TOL = 1e-7


@dataclass(frozen=True)
class CoprimeFactors:
    """Right factorization P = N M^-1 with [N; M] normalized on the axis."""

    N: StateSpaceModel
    M: StateSpaceModel
    feedback_gain: np.ndarray


def _check_axis_poles(model, who):
    poles = model.poles()
    bad = np.abs(poles.real) <= AXIS_POLE_TOL * np.maximum(1.0, np.abs(poles))
    if np.any(bad):
        raise DomainError(
            f"{who} has a pole within {AXIS_POLE_TOL:g} of the imaginary axis"
        )
    return poles


def normalized_rcf(model):
    """Normalized right coprime factorization via the filter-type CARE.

    Returns factors N, M (both stable, sharing the state matrix A + B F)
    with N~ N + M~ M = I on the imaginary axis and P = N M^-1.
    """
    A, B, C, D = model.A, model.B, model.C, model.D
    m = B.shape[1]
    r = C.shape[0]
    S = np.eye(m) + D.T @ D
    R = np.eye(r) + D @ D.T
    S_inv = np.linalg.inv(S)
    A_bar = A - B @ S_inv @ D.T @ C
    X = solve_care(A_bar, B, C.T @ np.linalg.inv(R) @ C, S)
    F = -S_inv @ (B.T @ X + D.T @ C)
    # Symmetric inverse square root of S.
    evals, evecs = np.linalg.eigh(S)
    S_isqrt = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
    A_cl = A + B @ F
    N = StateSpaceModel(A_cl, B @ S_isqrt, C + D @ F, D @ S_isqrt)
    M = StateSpaceModel(A_cl, B @ S_isqrt, F, S_isqrt)
    return CoprimeFactors(N=N, M=M, feedback_gain=F)


@dataclass(frozen=True)
class GapResult:
    """nu-gap value in [0, 1], whether the winding condition held, and
    the frequency where the chordal distance peaked."""

    value: float
    winding_condition_met: bool
    peak_frequency: float


def _sweep_frequencies(p1, p2, grid):
    base = make_log_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    poles = np.concatenate([p1, p2])
    extra = np.concatenate([np.abs(poles.imag), np.abs(poles)])
    extra = extra[extra > 0.0]
    hi = max(float(base.max()), 1.0)
    top = max(hi * 10.0, 200.0 * float(np.max(np.abs(poles))) if poles.size else hi)
    tail = np.logspace(np.log10(hi), np.log10(top), 33)[1:]
    w = np.unique(np.concatenate([[0.0], base, extra, tail]))
    return w


def _chordal_at(model1, model2, w):
    R1 = kernels.freq_response_grid(
        model1.A, model1.B, model1.C, model1.D, np.atleast_1d(w)
    )
    R2 = kernels.freq_response_grid(
        model2.A, model2.B, model2.C, model2.D, np.atleast_1d(w)
    )
    return float(kernels.chordal_grid(R1, R2)[0])


def _refine_peak(model1, model2, w_lo, w_hi, iters=60):
    phi = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = float(w_lo), float(w_hi)
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc = _chordal_at(model1, model2, c)
    fd = _chordal_at(model1, model2, d)
    for _ in range(iters):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = _chordal_at(model1, model2, d)
        else:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = _chordal_at(model1, model2, c)
        if b - a <= 1e-12 * max(1.0, b):
            break
    return (c, fc) if fc >= fd else (d, fd)


def nu_gap(model1, model2, grid=None, refine=True):
    """nu-gap between two (possibly unstable) real LTI models.

    Both models must have the same input/output dimensions and no poles
    within 1e-7 of the imaginary axis. The default sweep is the
    package-wide 512-point log grid enriched with both models' pole
    frequencies and a high-frequency tail; the peak is sharpened by a
    golden-section pass.
    """
    if (model1.n_outputs, model1.n_inputs) != (model2.n_outputs, model2.n_inputs):
        raise DimensionError("nu_gap requires matching input/output dimensions")
    p1 = _check_axis_poles(model1, "first model")
    p2 = _check_axis_poles(model2, "second model")
    eta1 = int(np.sum(p1.real > 0.0))
    eta2 = int(np.sum(p2.real > 0.0))

    w = _sweep_frequencies(p1, p2, grid)
    R1 = kernels.freq_response_grid(model1.A, model1.B, model1.C, model1.D, w)
    R2 = kernels.freq_response_grid(model2.A, model2.B, model2.C, model2.D, w)

    kappa = kernels.chordal_grid(R1, R2)
    k = int(np.argmax(kappa))
    w_peak, value = float(w[k]), float(kappa[k])
    if refine and 0 < k < w.size - 1:
        w_ref, v_ref = _refine_peak(model1, model2, w[k - 1], w[k + 1])
        if v_ref > value:
            w_peak, value = w_ref, v_ref
    value = min(value, 1.0)

    # Winding condition on det(I + P2~ P1) along the mirrored axis.
    m = model1.n_inputs
    prod = np.conj(R2.transpose(0, 2, 1)) @ R1
    det = np.linalg.det(np.eye(m) + prod)
    det_scale = float(np.max(np.abs(det)))
    if det_scale == 0.0 or float(np.min(np.abs(det))) <= 1e-8 * det_scale:
        return GapResult(value=1.0, winding_condition_met=False, peak_frequency=w_peak)
    # w[0] == 0; negative frequencies contribute the conjugate path.
    full = np.concatenate([np.conj(det[:0:-1]), det])
    phase = np.unwrap(np.angle(full))
    wno = (phase[-1] - phase[0]) / (2.0 * np.pi)
    winding_ok = abs(wno + eta1 - eta2) < 0.25
    if not winding_ok:
        return GapResult(value=1.0, winding_condition_met=False, peak_frequency=w_peak)
    return GapResult(value=value, winding_condition_met=True, peak_frequency=w_peak)


def max_gap(models, j, grid=None):
    """Largest nu-gap between models[j] and every member of the family
    (the j-th term contributes zero)."""
    if not 0 <= j < len(models):
        raise DimensionError(f"index j={j} outside family of {len(models)}")
    worst = 0.0
    for i, model in enumerate(models):
        if i == j:
            continue
        worst = max(worst, nu_gap(models[j], model, grid=grid).value)
    return worst
