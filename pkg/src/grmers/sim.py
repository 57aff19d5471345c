"""Closed-loop simulation and estimator comparison.

Each builder wires one estimator architecture around a true plant and a
certainty-equivalence state-feedback controller. The controller never
sees the plant state directly: it acts on a reconstruction assembled
from the measured outputs and the estimated performance outputs, so
estimation quality feeds straight into loop behavior. The assembled
loop is a single LTI system driven by the reference doublet and the
measurement noise; one fixed-step integration produces the true and
estimated performance outputs for scoring.
"""

from dataclasses import dataclass

import numpy as np
import scipy.signal

from . import kernels
from .errors import DimensionError, SimulationError, ValidationError
from .linalg import is_hurwitz, spectral_abscissa
from .lmi import synth_hinf_filter
from .statespace import (
    StateSpaceModel,
    augment_plant,
    augment_plant_set,
    frequency_response,
    invert_bank,
    realize_bank,
)

__all__ = [
    "SimulationScenario",
    "ClosedLoop",
    "SimResult",
    "design_state_feedback",
    "build_hinf_loop",
    "build_mers_loop",
    "build_grmers_loop",
    "simulate",
    "nrmse",
    "rms_gain_estimate",
    "compare_estimators",
    "improvement_summary",
]

# State magnitude beyond which an integration is declared divergent.
DIVERGENCE_LIMIT = 1e9

MIN_DAMPING = 0.4


@dataclass(frozen=True)
class SimulationScenario:
    """Shared excitation settings for one comparison run.

    The reference is a doublet of the given amplitude on every input
    channel: +amplitude for one width starting at doublet_start, then
    -amplitude for one width. Measurement noise is zero-mean Gaussian,
    independent per channel and step, with the given RMS value.
    """

    t_final: float = 20.0
    dt: float = 1e-3
    doublet_amplitude: float = 0.1
    doublet_start: float = 1.0
    doublet_width: float = 1.0
    noise_rms: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.t_final <= 0.0 or self.dt <= 0.0:
            raise ValidationError("t_final and dt must be positive")
        if self.t_final <= self.doublet_start:
            raise ValidationError("doublet must start before t_final")
        if self.doublet_width <= 0.0:
            raise ValidationError("doublet_width must be positive")
        if self.noise_rms < 0.0:
            raise ValidationError("noise_rms must be nonnegative")

    @property
    def n_steps(self):
        return int(round(self.t_final / self.dt))

    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def reference(self, n_channels):
        """Doublet reference, one row per integration step."""
        t = np.arange(self.n_steps) * self.dt
        r = np.zeros(self.n_steps)
        up = (t >= self.doublet_start) & (t < self.doublet_start + self.doublet_width)
        dn = (t >= self.doublet_start + self.doublet_width) & (
            t < self.doublet_start + 2 * self.doublet_width
        )
        r[up] = self.doublet_amplitude
        r[dn] = -self.doublet_amplitude
        return np.tile(r[:, None], (1, n_channels))

    def noise(self, n_channels, rng=None):
        """Measurement-noise samples, one row per step."""
        if rng is None:
            rng = np.random.default_rng(self.seed)
        if self.noise_rms == 0.0:
            return np.zeros((self.n_steps, n_channels))
        return rng.normal(0.0, self.noise_rms, size=(self.n_steps, n_channels))


@dataclass(frozen=True)
class ClosedLoop:
    """Assembled loop: inputs [reference; noise], outputs [z; z_hat]."""

    model: StateSpaceModel
    n_ref: int
    n_noise: int
    label: str = ""

    def __post_init__(self):
        if self.model.n_inputs != self.n_ref + self.n_noise:
            raise DimensionError("closed-loop input partition does not match B")
        if self.model.n_outputs % 2 != 0:
            raise DimensionError("closed-loop outputs must stack z over z_hat")

    @property
    def n_performance(self):
        return self.model.n_outputs // 2


@dataclass(frozen=True)
class SimResult:
    """Trajectories from one closed-loop run (rows are time samples)."""

    t: np.ndarray
    z: np.ndarray
    z_hat: np.ndarray
    label: str = ""

    def nrmse(self):
        return nrmse(self.z, self.z_hat)


def _feedback_targets(poles, min_damping=MIN_DAMPING):
    """Closed-loop pole targets from the mirror-and-scale rule.

    Poles in the closed right half-plane are reflected into the left
    half-plane with magnitudes doubled (floored at 0.5 so slow poles do
    not stay slow); complex targets whose damping falls below
    min_damping are rotated to that damping at constant magnitude;
    coincident targets are spread deterministically so the placement
    problem stays well posed.
    """
    targets = []
    for lam in poles:
        if lam.real >= 0.0:
            if abs(lam) < 1e-12:
                lam_t = complex(-1.0, 0.0)
            else:
                scale = 2.0 * max(1.0, 0.5 / abs(lam))
                lam_t = complex(-scale * lam.real, scale * lam.imag)
        else:
            lam_t = complex(lam.real, lam.imag)
        if abs(lam_t.imag) > 1e-12:
            zeta = -lam_t.real / abs(lam_t)
            if zeta < min_damping:
                mag = abs(lam_t)
                s = np.sign(lam_t.imag)
                lam_t = complex(
                    -min_damping * mag,
                    s * mag * np.sqrt(1.0 - min_damping**2),
                )
        targets.append(lam_t)
    # Spread exact collisions; real shifts keep conjugate symmetry.
    out = []
    for lam_t in targets:
        k = 0
        cand = lam_t
        while any(
            abs(cand - o) < 1e-9 * max(1.0, abs(cand))
            and np.sign(cand.imag) == np.sign(o.imag)
            for o in out
        ):
            k += 1
            cand = complex(lam_t.real * (1.0 + 0.1 * k), lam_t.imag)
        out.append(cand)
    return np.asarray(out)


def design_state_feedback(A, B, min_damping=MIN_DAMPING):
    """Stabilizing state-feedback gain K (u = -K x) by pole placement.

    Open-loop poles in the closed right half-plane are reflected and
    their magnitudes doubled (a lone scalar pole at +a lands at -2a);
    already-stable poles are kept, except that complex targets are
    granted at least the minimum damping ratio.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    targets = _feedback_targets(np.linalg.eigvals(A), min_damping)
    try:
        placed = scipy.signal.place_poles(A, B, targets)
    except ValueError as exc:
        raise SimulationError(f"pole placement failed: {exc}") from exc
    K = placed.gain_matrix
    if not is_hurwitz(A - B @ K):
        raise SimulationError("state-feedback design failed to stabilize")
    return K


def _reconstruction(C, C_z):
    """Left inverse of [C; C_z]: the controller's state reconstruction
    from measured and estimated outputs. Requires the stack to have
    full column rank."""
    stack = np.vstack([C, C_z])
    if np.linalg.matrix_rank(stack) < stack.shape[1]:
        raise SimulationError(
            "[C; C_z] is column-rank deficient; the feedback state "
            "cannot be reconstructed from y and z_hat"
        )
    T = np.linalg.pinv(stack)
    r = C.shape[0]
    return T[:, :r], T[:, r:]


def build_hinf_loop(A_model, B, C, C_z, L_f, K, A_true=None, label="hinf"):
    """Loop with a single-plant observer.

    The filter integrates A_model with gain L_f; the physical plant
    runs A_true (defaults to the model, i.e. the matched case). The
    controller acts on the reconstruction from y and the filter's
    performance estimate.
    """
    A_model = np.asarray(A_model, dtype=float)
    A_true = A_model if A_true is None else np.asarray(A_true, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    C_z = np.asarray(C_z, dtype=float)
    L_f = np.asarray(L_f, dtype=float)
    K = np.asarray(K, dtype=float)
    n, m = B.shape
    r = C.shape[0]
    q = C_z.shape[0]
    T_y, T_z = _reconstruction(C, C_z)
    P_x = K @ T_y @ C
    P_f = K @ T_z @ C_z
    P_v = K @ T_y
    Z = np.zeros
    A_cl = np.block(
        [
            [A_true - B @ P_x, -B @ P_f],
            [L_f @ C - B @ P_x, A_model - L_f @ C - B @ P_f],
        ]
    )
    B_cl = np.block(
        [
            [B, -B @ P_v],
            [B, L_f - B @ P_v],
        ]
    )
    C_cl = np.block(
        [
            [C_z, Z((q, n))],
            [Z((q, n)), C_z],
        ]
    )
    model = StateSpaceModel(A_cl, B_cl, C_cl)
    return ClosedLoop(model=model, n_ref=m, n_noise=r, label=label)


def _is_identity_bank(bank):
    return all(
        s.b1 == 1.0 and s.b0 == 1.0 and s.a0 == 1.0 for s in bank.sections
    )


def _estimator_pieces(plant_set, mers_result):
    """Estimator-side realizations shared by the family estimator
    loops: the base model augmented with the estimator banks, the gain,
    the inverse input bank, the output bank, and the selector that
    extracts the plant block of the estimator state."""
    j = mers_result.j
    if j < 0 or mers_result.gain is None:
        raise SimulationError("synthesis result carries no usable gain")
    aug = augment_plant_set(
        plant_set, pre=mers_result.pre_bank, post=mers_result.post_bank
    )
    n_post = mers_result.post_bank.n_channels
    n_pre = mers_result.pre_bank.n_channels
    n_mid = plant_set.n_states
    L = np.asarray(mers_result.gain, dtype=float)
    if L.shape[0] == n_mid and n_mid != aug.n_states:
        # Gain synthesized on the bare family; embedding it is exact
        # only when the banks are pure pass-throughs.
        if not (_is_identity_bank(mers_result.pre_bank)
                and _is_identity_bank(mers_result.post_bank)):
            raise SimulationError(
                "gain dimension matches the bare family but the banks "
                "are not pass-throughs"
            )
        L = np.vstack(
            [np.zeros((n_post, L.shape[1])), L, np.zeros((n_pre, L.shape[1]))]
        )
    elif L.shape[0] != aug.n_states:
        raise SimulationError(
            f"gain has {L.shape[0]} rows; expected {aug.n_states} "
            f"(augmented) or {n_mid} (bare)"
        )
    g_iv = invert_bank(mers_result.pre_bank)
    g_w = realize_bank(mers_result.post_bank)
    return aug, L, g_iv, g_w


def build_mers_loop(plant_set, i, mers_result, K, A_true=None, label="mers"):
    """Loop with the shared family estimator observing plant i.

    The estimator integrates the base model (plant j with the
    estimator-side banks), fed by the commanded input through the
    inverse input bank and corrected from the measured output through
    the output bank. The controller acts on the reconstruction from y
    and the estimator's performance estimate; A_true overrides the
    physical system matrix for perturbation studies.
    """
    aug, L, g_iv, g_w = _estimator_pieces(plant_set, mers_result)
    A_i = plant_set.A_list[i] if A_true is None else np.asarray(A_true, dtype=float)
    B, C = plant_set.B, plant_set.C
    C_z = plant_set.C_z
    A_j = aug.A_list[mers_result.j]
    B_j, C_j, Cz_j = aug.B, aug.C, aug.C_z
    n, m = B.shape
    r = C.shape[0]
    q = C_z.shape[0]
    n_iv, n_e, n_w = g_iv.n_states, A_j.shape[0], g_w.n_states
    K = np.asarray(K, dtype=float)
    if K.shape != (m, n):
        raise DimensionError(f"K shape {K.shape} does not match ({m}, {n})")

    T_y, T_z = _reconstruction(C, C_z)
    P_x = K @ T_y @ C            # u response to the physical state
    P_e = K @ T_z @ Cz_j         # u response to the estimator state
    P_v = K @ T_y                # u response to measurement noise
    Z = np.zeros
    A_cl = np.block(
        [
            [A_i - B @ P_x, Z((n, n_iv)), -B @ P_e, Z((n, n_w))],
            [-g_iv.B @ P_x, g_iv.A, -g_iv.B @ P_e, Z((n_iv, n_w))],
            [
                L @ g_w.D @ C - B_j @ g_iv.D @ P_x,
                B_j @ g_iv.C,
                A_j - L @ C_j - B_j @ g_iv.D @ P_e,
                L @ g_w.C,
            ],
            [g_w.B @ C, Z((n_w, n_iv)), Z((n_w, n_e)), g_w.A],
        ]
    )
    B_cl = np.block(
        [
            [B, -B @ P_v],
            [g_iv.B, -g_iv.B @ P_v],
            [B_j @ g_iv.D, L @ g_w.D - B_j @ g_iv.D @ P_v],
            [Z((n_w, m)), g_w.B],
        ]
    )
    C_cl = np.block(
        [
            [C_z, Z((q, n_iv + n_e + n_w))],
            [Z((q, n + n_iv)), Cz_j, Z((q, n_w))],
        ]
    )
    model = StateSpaceModel(A_cl, B_cl, C_cl)
    return ClosedLoop(model=model, n_ref=m, n_noise=r, label=label)


def build_grmers_loop(plant_set, i, grc_result, mers_result, K,
                      A_true=None, label="grmers"):
    """Loop with the gap-reduced family estimator observing plant i.

    The plant-side compensators are implemented in the loop: the
    commanded input passes through w_in before the plant and the
    measured output through w_ot before the estimator. mers_result must
    come from synthesis on the compensated family. K stabilizes the
    compensated plant and acts on [w_ot states; reconstructed plant
    state; w_in states], the first and last read directly from the
    compensator hardware.
    """
    comp = augment_plant_set(
        plant_set, pre=grc_result.w_in, post=grc_result.w_ot
    )
    aug, L, g_iv, g_w = _estimator_pieces(comp, mers_result)

    g_in = realize_bank(grc_result.w_in)
    g_ot = realize_bank(grc_result.w_ot)
    A_i = plant_set.A_list[i] if A_true is None else np.asarray(A_true, dtype=float)
    B, C, C_z = plant_set.B, plant_set.C, plant_set.C_z
    A_j = aug.A_list[mers_result.j]
    B_j, C_j, Cz_j = aug.B, aug.C, aug.C_z
    n = plant_set.n_states
    m_plant = plant_set.n_inputs
    r_plant = plant_set.n_measured
    q = C_z.shape[0]
    n_in, n_ot, n_iv, n_e, n_w = (
        g_in.n_states,
        g_ot.n_states,
        g_iv.n_states,
        A_j.shape[0],
        g_w.n_states,
    )
    K = np.asarray(K, dtype=float)
    if K.shape != (m_plant, comp.n_states):
        raise DimensionError(
            f"K shape {K.shape} does not match ({m_plant}, {comp.n_states})"
        )
    # Compensated-plant state order is [w_ot | plant | w_in].
    K_ot = K[:, :n_ot]
    K_x = K[:, n_ot : n_ot + n]
    K_in = K[:, n_ot + n :]

    T_y, T_z = _reconstruction(C, C_z)
    P_x = K_x @ T_y @ C
    P_e = K_x @ T_z @ Cz_j
    P_v = K_x @ T_y
    Z = np.zeros
    A_cl = np.block(
        [
            [
                A_i - B @ g_in.D @ P_x,
                B @ g_in.C - B @ g_in.D @ K_in,
                -B @ g_in.D @ K_ot,
                Z((n, n_iv)),
                -B @ g_in.D @ P_e,
                Z((n, n_w)),
            ],
            [
                -g_in.B @ P_x,
                g_in.A - g_in.B @ K_in,
                -g_in.B @ K_ot,
                Z((n_in, n_iv)),
                -g_in.B @ P_e,
                Z((n_in, n_w)),
            ],
            [g_ot.B @ C, Z((n_ot, n_in)), g_ot.A, Z((n_ot, n_iv + n_e + n_w))],
            [
                -g_iv.B @ P_x,
                -g_iv.B @ K_in,
                -g_iv.B @ K_ot,
                g_iv.A,
                -g_iv.B @ P_e,
                Z((n_iv, n_w)),
            ],
            [
                L @ g_w.D @ g_ot.D @ C - B_j @ g_iv.D @ P_x,
                -B_j @ g_iv.D @ K_in,
                L @ g_w.D @ g_ot.C - B_j @ g_iv.D @ K_ot,
                B_j @ g_iv.C,
                A_j - L @ C_j - B_j @ g_iv.D @ P_e,
                L @ g_w.C,
            ],
            [
                g_w.B @ g_ot.D @ C,
                Z((n_w, n_in)),
                g_w.B @ g_ot.C,
                Z((n_w, n_iv + n_e)),
                g_w.A,
            ],
        ]
    )
    B_cl = np.block(
        [
            [B @ g_in.D, -B @ g_in.D @ P_v],
            [g_in.B, -g_in.B @ P_v],
            [Z((n_ot, m_plant)), g_ot.B],
            [g_iv.B, -g_iv.B @ P_v],
            [B_j @ g_iv.D, L @ g_w.D @ g_ot.D - B_j @ g_iv.D @ P_v],
            [Z((n_w, m_plant)), g_w.B @ g_ot.D],
        ]
    )
    C_cl = np.block(
        [
            [C_z, Z((q, n_in + n_ot + n_iv + n_e + n_w))],
            [Z((q, n + n_in + n_ot + n_iv)), Cz_j, Z((q, n_w))],
        ]
    )
    model = StateSpaceModel(A_cl, B_cl, C_cl)
    return ClosedLoop(model=model, n_ref=m_plant, n_noise=r_plant, label=label)


def simulate(loop, scenario, noise=None, check_stability=True):
    """Integrate a closed loop over the scenario.

    Parameters
    ----------
    loop : ClosedLoop
    scenario : SimulationScenario
    noise : ndarray, optional
        Pre-drawn noise samples (n_steps x n_noise); drawn from the
        scenario seed when omitted. Passing the same array to several
        loops scores them against identical noise.
    check_stability : bool
        Reject unstable loops up front instead of integrating them.

    Returns
    -------
    SimResult

    Raises
    ------
    SimulationError
        If the loop is unstable or the trajectory diverges.
    """
    if check_stability and not is_hurwitz(loop.model.A):
        raise SimulationError(
            f"closed loop '{loop.label}' is unstable "
            f"(abscissa {spectral_abscissa(loop.model.A):.3g})"
        )
    ref = scenario.reference(loop.n_ref)
    if noise is None:
        noise = scenario.noise(loop.n_noise)
    if noise.shape != (scenario.n_steps, loop.n_noise):
        raise DimensionError(
            f"noise shape {noise.shape} does not match "
            f"({scenario.n_steps}, {loop.n_noise})"
        )
    U = np.hstack([ref, noise])
    x0 = np.zeros(loop.model.n_states)
    X = kernels.rk4_lti(loop.model.A, loop.model.B, U, x0, scenario.dt)
    if not np.all(np.isfinite(X)) or np.max(np.abs(X)) > DIVERGENCE_LIMIT:
        raise SimulationError(f"trajectory of '{loop.label}' diverged")
    # Outputs have no feedthrough, so Y follows directly from the state.
    Y = X @ loop.model.C.T
    qp = loop.n_performance
    return SimResult(
        t=scenario.times(), z=Y[:, :qp], z_hat=Y[:, qp:], label=loop.label
    )


def nrmse(z_true, z_est):
    """Per-channel root-mean-square error normalized by the true
    signal's range (falls back to its peak magnitude for flat
    channels)."""
    z_true = np.atleast_2d(np.asarray(z_true, dtype=float))
    z_est = np.atleast_2d(np.asarray(z_est, dtype=float))
    if z_true.shape != z_est.shape:
        raise DimensionError("trajectory shapes do not match")
    err = z_est - z_true
    rms = np.sqrt(np.mean(err * err, axis=0))
    span = np.ptp(z_true, axis=0)
    flat = span < 1e-12
    span = np.where(flat, np.maximum(np.max(np.abs(z_true), axis=0), 1e-12), span)
    return rms / span


def rms_gain_estimate(model, w, periods=40, steps_per_period=200, settle=0.5):
    """Empirical gain of an LTI system at one frequency.

    Drives the system with a sinusoid along the worst input direction
    at w, integrates past the transient, and returns the ratio of
    output to input RMS over the tail; for a stable system this
    approaches the largest singular value of the response at w.
    """
    if w <= 0.0:
        raise ValidationError("frequency must be positive")
    if not is_hurwitz(model.A):
        raise SimulationError("rms gain estimate needs a stable system")
    resp = frequency_response(model, w)
    _, _, vh = np.linalg.svd(resp)
    u_dir = vh[0].conj()
    period = 2.0 * np.pi / w
    dt = period / steps_per_period
    n_steps = int(round(periods * steps_per_period))
    t = np.arange(n_steps) * dt
    U = np.real(np.exp(1j * w * t)[:, None] * u_dir[None, :])
    x0 = np.zeros(model.n_states)
    X = kernels.rk4_lti(model.A, model.B, U, x0, dt)
    Y = X[:-1] @ model.C.T + U @ model.D.T
    tail = slice(int(settle * n_steps), None)
    out_rms = np.sqrt(np.mean(np.sum(Y[tail] ** 2, axis=1)))
    in_rms = np.sqrt(np.mean(np.sum(U[tail] ** 2, axis=1)))
    return float(out_rms / in_rms)


def _perturbations(plant_set, fractions, cap, rng):
    """Random system-matrix perturbations along the family's own
    uncertainty directions: each plant moves by a random positive blend
    of its differences to the other members (the same structured
    variation that generated the family), scaled to fraction *
    sigma_max(A_i) and clipped below the cap so the family estimator's
    worst-case premise still covers it. Degenerate families fall back
    to an isotropic direction."""
    deltas = []
    for i in range(plant_set.n_plants):
        A = plant_set.A_list[i]
        target = fractions[i] * float(np.linalg.svd(A, compute_uv=False)[0])
        if cap is not None:
            target = min(target, 0.95 * cap)
        raw = np.zeros_like(A)
        for k in range(plant_set.n_plants):
            if k != i:
                raw += rng.uniform(0.0, 1.0) * (plant_set.A_list[k] - A)
        if np.linalg.norm(raw) < 1e-12:
            raw = rng.standard_normal(A.shape)
        raw *= target / float(np.linalg.svd(raw, compute_uv=False)[0])
        deltas.append(raw)
    return deltas


def _score(loop, scenario, noise):
    try:
        res = simulate(loop, scenario, noise=noise)
    except SimulationError:
        return "diverged"
    vec = res.nrmse()
    return {"nrmse": vec, "norm": float(np.linalg.norm(vec))}


def compare_estimators(plant_set, mers_result, grc_result=None,
                       grmers_result=None, filters=None, scenario=None,
                       hinf_backoff=0.25, perturb_fractions=None,
                       perturb_cap=None):
    """Score estimator architectures on every plant of the family.

    For each true plant the same noise realization drives a per-plant
    observer loop ('hinf'), the shared family estimator ('mers'), and,
    when both gap-reduction and compensated-family synthesis results
    are given, the gap-reduced estimator ('grmers'). One state-feedback
    controller per architecture is designed on the base plant and held
    fixed across the family, so a single estimator-controller pair is
    scored on every member, and closeness of the family decides how
    well it transfers. filters may supply pre-designed per-plant
    observer gains; otherwise they are synthesized here on the nominal
    models.

    When perturb_fractions is given (one fraction per plant), every
    architecture is additionally scored against plants perturbed by a
    random system-matrix offset of that relative size, capped below
    perturb_cap (defaults to the worst-plant mismatch magnitude of the
    family estimator's base), with all synthesis artifacts held at
    their nominal designs.

    Returns {"nominal": table, "perturbed": table or None} where each
    table maps plant label -> architecture -> {"nrmse": ..., "norm": ...}
    or the string 'diverged'.
    """
    if scenario is None:
        scenario = SimulationScenario()
    rng = np.random.default_rng(scenario.seed)
    B, C, C_z = plant_set.B, plant_set.C, plant_set.C_z

    deltas = None
    if perturb_fractions is not None:
        if len(perturb_fractions) != plant_set.n_plants:
            raise ValidationError("need one perturbation fraction per plant")
        cap = perturb_cap
        if cap is None and mers_result.j >= 0:
            k = int(mers_result.worst_index[mers_result.j])
            mismatch = plant_set.A_list[k] - plant_set.A_list[mers_result.j]
            cap = float(np.linalg.svd(mismatch, compute_uv=False)[0])
            if cap == 0.0:
                cap = None
        deltas = _perturbations(plant_set, perturb_fractions, cap, rng)

    base = mers_result.j if mers_result.j >= 0 else 0
    K = design_state_feedback(plant_set.A_list[base], B)
    K_comp = None
    if grc_result is not None and grmers_result is not None:
        comp_base = augment_plant(
            plant_set.plant(base), pre=grc_result.w_in, post=grc_result.w_ot
        )
        K_comp = design_state_feedback(comp_base.A, comp_base.B)

    nominal = {}
    perturbed = {} if deltas is not None else None
    for i in range(plant_set.n_plants):
        A_i = plant_set.A_list[i]
        if filters is not None:
            L_f = filters[i]
        else:
            try:
                L_f, _, _ = synth_hinf_filter(A_i, C, C_z, backoff=hinf_backoff)
            except Exception:
                L_f = None

        def run_case(A_true, noise):
            row = {}
            if L_f is None:
                row["hinf"] = "diverged"
            else:
                row["hinf"] = _score(
                    build_hinf_loop(A_i, B, C, C_z, L_f, K, A_true=A_true),
                    scenario, noise,
                )
            row["mers"] = _score(
                build_mers_loop(plant_set, i, mers_result, K, A_true=A_true),
                scenario, noise,
            )
            if K_comp is not None:
                row["grmers"] = _score(
                    build_grmers_loop(
                        plant_set, i, grc_result, grmers_result, K_comp,
                        A_true=A_true,
                    ),
                    scenario, noise,
                )
            return row

        noise_i = scenario.noise(plant_set.n_measured, rng=rng)
        nominal[plant_set.labels[i]] = run_case(None, noise_i)
        if deltas is not None:
            noise_p = scenario.noise(plant_set.n_measured, rng=rng)
            perturbed[plant_set.labels[i]] = run_case(A_i + deltas[i], noise_p)
    return {"nominal": nominal, "perturbed": perturbed}


def improvement_summary(tables, base_label=None):
    """Percentage improvements implied by a comparison run.

    Returns {"gr_reduction_pct": {...}, "robust_gain_pct": {...}}: the
    first compares 'grmers' against 'mers' error norms on the nominal
    table (positive means the gap-reduced estimator is better), the
    second compares 'grmers' against 'hinf' on the perturbed table.
    Labels with divergent or missing entries are skipped; base_label,
    when given, is skipped in the gap-reduction summary since both
    estimators share that base plant.
    """
    out = {"gr_reduction_pct": {}, "robust_gain_pct": {}}

    def pct(row, a, b):
        va, vb = row.get(a), row.get(b)
        if isinstance(va, dict) and isinstance(vb, dict) and vb["norm"] > 0:
            return 100.0 * (vb["norm"] - va["norm"]) / vb["norm"]
        return None

    for label, row in tables["nominal"].items():
        if base_label is not None and label == base_label:
            continue
        v = pct(row, "grmers", "mers")
        if v is not None:
            out["gr_reduction_pct"][label] = v
    if tables.get("perturbed"):
        for label, row in tables["perturbed"].items():
            v = pct(row, "grmers", "hinf")
            if v is not None:
                out["robust_gain_pct"][label] = v
    return out
