"""State-space models, plant families and first-order compensator banks.

A plant family shares its input matrix B, measurement matrix C and
performance-output matrix C_z across members; only the system matrices
A_i differ. Compensator banks are diagonal batteries of first-order
sections (b1 s + b0)/(s + a0), one section per channel, realized with
exactly one state per section (no minimal-realization pass anywhere).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError, ValidationError
from .linalg import as_matrix, as_square

__all__ = [
    "StateSpaceModel",
    "PlantSet",
    "FirstOrderSection",
    "CompensatorBank",
    "ErrorSystem",
    "series",
    "realize_bank",
    "invert_bank",
    "error_system",
    "build_error_system",
    "augment_plant",
    "augment_plant_set",
    "frequency_response",
]


def _frozen(arr):
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Immutable real LTI model (A, B, C, D)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = None

    def __post_init__(self):
        A = as_square(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if B.shape[0] != n:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise DimensionError(f"C has {C.shape[1]} columns, expected {n}")
        if self.D is None:
            D = np.zeros((C.shape[0], B.shape[1]))
        else:
            D = as_matrix(self.D, "D")
            if D.shape != (C.shape[0], B.shape[1]):
                raise DimensionError(
                    f"D shape {D.shape} does not match ({C.shape[0]}, {B.shape[1]})"
                )
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "D", _frozen(D))

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_inputs(self):
        return self.B.shape[1]

    @property
    def n_outputs(self):
        return self.C.shape[0]

    def poles(self):
        return np.linalg.eigvals(self.A)


def _pbh_rank_ok(A, M, lam, stacked_rows):
    """PBH rank test at one eigenvalue: full rank of [A - lam I; C]
    (stacked_rows=True) or [A - lam I, B] (stacked_rows=False)."""
    n = A.shape[0]
    shifted = A.astype(np.complex128) - lam * np.eye(n)
    block = np.vstack([shifted, M]) if stacked_rows else np.hstack([shifted, M])
    sv = np.linalg.svd(block, compute_uv=False)
    tol = max(block.shape) * np.finfo(np.float64).eps * max(sv[0], 1.0)
    return np.sum(sv > tol) == n


@dataclass(frozen=True, eq=False)
class PlantSet:
    """Family of N >= 2 plants sharing B, C and C_z.

    Every (A_i, C) pair must be detectable and every (A_i, B) pair
    stabilizable (PBH test over closed right-half-plane eigenvalues);
    violations are rejected at construction with the offending plant
    named.
    """

    A_list: tuple
    B: np.ndarray
    C: np.ndarray
    C_z: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        A_list = tuple(as_square(A, f"A[{i}]") for i, A in enumerate(self.A_list))
        if len(A_list) < 2:
            raise ValidationError(f"plant set needs N >= 2 plants, got {len(A_list)}")
        n = A_list[0].shape[0]
        for i, A in enumerate(A_list):
            if A.shape[0] != n:
                raise ValidationError(
                    f"plant {i} has state dimension {A.shape[0]}, expected {n}"
                )
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        C_z = as_matrix(self.C_z, "C_z")
        for name, M in (("B", B), ("C", C), ("C_z", C_z)):
            dim = M.shape[0] if name == "B" else M.shape[1]
            if dim != n:
                raise DimensionError(f"{name} does not match state dimension {n}")
        for i, A in enumerate(A_list):
            for lam in np.linalg.eigvals(A):
                if lam.real < 0.0:
                    continue
                if not _pbh_rank_ok(A, C.astype(np.complex128), lam, True):
                    raise ValidationError(
                        f"plant {i}: (A, C) not detectable at eigenvalue {lam:.6g}"
                    )
                if not _pbh_rank_ok(A, B.astype(np.complex128), lam, False):
                    raise ValidationError(
                        f"plant {i}: (A, B) not stabilizable at eigenvalue {lam:.6g}"
                    )
        labels = self.labels
        if labels is None:
            labels = tuple(f"P{i}" for i in range(len(A_list)))
        else:
            labels = tuple(str(s) for s in labels)
            if len(labels) != len(A_list):
                raise ValidationError("labels length does not match plant count")
        object.__setattr__(self, "A_list", tuple(_frozen(A) for A in A_list))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "C_z", _frozen(C_z))
        object.__setattr__(self, "labels", labels)

    @property
    def n_plants(self):
        return len(self.A_list)

    @property
    def n_states(self):
        return self.A_list[0].shape[0]

    @property
    def n_inputs(self):
        return self.B.shape[1]

    @property
    def n_measured(self):
        return self.C.shape[0]

    @property
    def n_performance(self):
        return self.C_z.shape[0]

    def plant(self, i):
        """Plant i as a StateSpaceModel with the measurement output."""
        return StateSpaceModel(self.A_list[i], self.B, self.C)


@dataclass(frozen=True)
class FirstOrderSection:
    """One diagonal channel (b1 s + b0)/(s + a0)."""

    b1: float
    b0: float
    a0: float

    def __post_init__(self):
        for name in ("b1", "b0", "a0"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"section coefficient {name} not finite")
            object.__setattr__(self, name, v)
        if self.a0 <= 0.0:
            raise ValidationError(f"section pole -a0 must be stable, got a0={self.a0}")
        if self.b1 < 0.0:
            raise ValidationError(f"section b1 must be >= 0, got {self.b1}")

    def dc_gain(self):
        return self.b0 / self.a0

    def evaluate(self, s):
        return (self.b1 * s + self.b0) / (s + self.a0)


@dataclass(frozen=True)
class CompensatorBank:
    """Diagonal bank of first-order sections.

    role is 'pre' (input side) or 'post' (output side). A bank flagged
    strictly_proper enforces b1 = 0 in every section; a bank meant to be
    inverted must be biproper with b0/b1 > 0 in every section, which
    invert_bank checks at call time.
    """

    sections: tuple
    role: str
    strictly_proper: bool = False

    def __post_init__(self):
        sections = tuple(self.sections)
        if not sections:
            raise ValidationError("compensator bank needs at least one section")
        for s in sections:
            if not isinstance(s, FirstOrderSection):
                raise ValidationError("bank sections must be FirstOrderSection")
        if self.role not in ("pre", "post"):
            raise ValidationError(f"bank role must be 'pre' or 'post', got {self.role!r}")
        if self.strictly_proper and any(s.b1 != 0.0 for s in sections):
            raise ValidationError("strictly proper bank has a section with b1 != 0")
        object.__setattr__(self, "sections", sections)

    @property
    def n_channels(self):
        return len(self.sections)


def identity_bank(n_channels, role):
    """Bank whose every section is (s + 1)/(s + 1), i.e. a unit pass-through."""
    return CompensatorBank(
        tuple(FirstOrderSection(1.0, 1.0, 1.0) for _ in range(n_channels)), role
    )


def scalar_bank(section, n_channels, role, strictly_proper=False):
    """Bank applying one scalar section to every channel."""
    return CompensatorBank(
        tuple(section for _ in range(n_channels)), role,
        strictly_proper=strictly_proper,
    )


def realize_bank(bank):
    """State-space realization of a bank; one state per section."""
    k = bank.n_channels
    A = np.diag([-s.a0 for s in bank.sections])
    B = np.eye(k)
    C = np.diag([s.b0 - s.b1 * s.a0 for s in bank.sections])
    D = np.diag([s.b1 for s in bank.sections])
    return StateSpaceModel(A, B, C, D)


def invert_bank(bank):
    """Realization of the bank's inverse.

    Each section must be biproper (b1 > 0) with a stable inverse pole
    (b0/b1 > 0); otherwise the inverse leaves RH-infinity and the call
    raises DomainError.
    """
    for i, s in enumerate(bank.sections):
        if s.b1 == 0.0:
            raise DomainError(f"section {i} is strictly proper; inverse is improper")
        if s.b0 / s.b1 <= 0.0:
            raise DomainError(
                f"section {i} inverse pole at {-s.b0 / s.b1:.6g} is unstable"
            )
    A = np.diag([-s.b0 / s.b1 for s in bank.sections])
    B = np.eye(bank.n_channels)
    C = np.diag([(s.a0 - s.b0 / s.b1) / s.b1 for s in bank.sections])
    D = np.diag([1.0 / s.b1 for s in bank.sections])
    return StateSpaceModel(A, B, C, D)


@dataclass(frozen=True, eq=False)
class ErrorSystem:
    """Estimation-error dynamics for one (plant, estimator-base) pair.

    The model maps the stacked disturbance d = [x_plant; v] (plant state
    entering through the system-matrix mismatch, measurement noise
    entering through the gain) to the performance-output error e_z. The
    input partition widths are recorded so callers can split B.
    """

    model: StateSpaceModel
    n_state_inputs: int
    n_noise_inputs: int

    def __post_init__(self):
        if self.model.n_inputs != self.n_state_inputs + self.n_noise_inputs:
            raise DimensionError("error-system input partition does not match B")


def error_system(A_base, delta_a, C, C_z, L):
    """Error dynamics of an observer built on A_base with gain L when
    the true system matrix is A_base + delta_a.

    A_err = A_base - L C, B_err = [delta_a, -L], C_err = C_z.
    """
    A_base = as_square(A_base, "A_base")
    delta_a = as_square(delta_a, "delta_a")
    C = as_matrix(C, "C")
    C_z = as_matrix(C_z, "C_z")
    L = as_matrix(L, "L")
    n = A_base.shape[0]
    r = C.shape[0]
    if delta_a.shape != A_base.shape:
        raise DimensionError("delta_a shape does not match A_base")
    if L.shape != (n, r):
        raise DimensionError(f"gain shape {L.shape} does not match ({n}, {r})")
    A_err = A_base - L @ C
    B_err = np.hstack([delta_a, -L])
    model = StateSpaceModel(A_err, B_err, C_z)
    return ErrorSystem(model=model, n_state_inputs=n, n_noise_inputs=r)


def build_error_system(plant_set, i, l, L):
    """Error dynamics when the estimator designed for plant l observes
    plant i of the family."""
    delta = plant_set.A_list[i] - plant_set.A_list[l]
    return error_system(plant_set.A_list[l], delta, plant_set.C, plant_set.C_z, L)


def series(g1, g2):
    """Series interconnection y = g1(g2(u)) with state [x1; x2]."""
    if g1.n_inputs != g2.n_outputs:
        raise DimensionError(
            f"series: g1 expects {g1.n_inputs} inputs, g2 provides {g2.n_outputs}"
        )
    n1, n2 = g1.n_states, g2.n_states
    A = np.block(
        [
            [g1.A, g1.B @ g2.C],
            [np.zeros((n2, n1)), g2.A],
        ]
    )
    B = np.vstack([g1.B @ g2.D, g2.B])
    C = np.hstack([g1.C, g1.D @ g2.C])
    D = g1.D @ g2.D
    return StateSpaceModel(A, B, C, D)


def augment_plant(model, pre=None, post=None):
    """Cascade post * model * pre with state order [post | plant | pre].

    pre and post are compensator banks (or None for a direct
    connection); their channel counts must match the plant's input and
    output widths respectively.
    """
    g = model
    if pre is not None:
        if pre.n_channels != model.n_inputs:
            raise DimensionError(
                f"pre bank has {pre.n_channels} sections, plant has "
                f"{model.n_inputs} inputs"
            )
        g = series(g, realize_bank(pre))
    if post is not None:
        if post.n_channels != model.n_outputs:
            raise DimensionError(
                f"post bank has {post.n_channels} sections, plant has "
                f"{model.n_outputs} outputs"
            )
        g = series(realize_bank(post), g)
    return g


def augment_plant_set(plant_set, pre=None, post=None):
    """Apply shared pre/post banks to every member of a family.

    Returns a new PlantSet over the augmented state [post | plant | pre]
    with the performance output embedded as [0 C_z 0], so the augmented
    performance output equals the original z.
    """
    n_post = post.n_channels if post is not None else 0
    n_pre = pre.n_channels if pre is not None else 0
    n = plant_set.n_states
    aug_models = [
        augment_plant(plant_set.plant(i), pre=pre, post=post)
        for i in range(plant_set.n_plants)
    ]
    C_z_aug = np.hstack(
        [
            np.zeros((plant_set.n_performance, n_post)),
            plant_set.C_z,
            np.zeros((plant_set.n_performance, n_pre)),
        ]
    )
    first = aug_models[0]
    return PlantSet(
        A_list=tuple(m.A for m in aug_models),
        B=first.B,
        C=first.C,
        C_z=C_z_aug,
        labels=plant_set.labels,
    )


def frequency_response(model, w):
    """Frequency response at scalar w (returns p x m complex) or at an
    array of frequencies (returns len(w) x p x m complex)."""
    w_arr = np.atleast_1d(np.asarray(w, dtype=np.float64))
    try:
        resp = kernels.freq_response_grid(model.A, model.B, model.C, model.D, w_arr)
    except np.linalg.LinAlgError as exc:
        raise DomainError("frequency response evaluated at a pole") from exc
    if np.isscalar(w) or np.ndim(w) == 0:
        return resp[0]
    return resp
