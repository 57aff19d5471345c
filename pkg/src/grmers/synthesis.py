"""Estimator and compensator synthesis for plant families.

Three layers build on each other. select_mers evaluates candidate
observer gains, one per base plant, against the family member whose
system matrix deviates most from the base, and picks the base plant
whose worst-case error norm is smallest. mers_synthesis produces those
gains at a fixed performance level by solving one observer feasibility
problem per base plant. merse_search wraps that in a genetic search
over first-order estimator input/output compensators to enlarge the set
of levels at which the problem is feasible, and grc_search shrinks the
family's spread, measured by the nu-gap metric, with plant-side
input/output compensators so that a single estimator transfers better
across the family.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError, SynthesisError, ValidationError
from .ga import GaConfig, ga_optimize
from .linalg import is_hurwitz
from .lmi import ObserverLmiProblem, solve_observer_lmi
from .norms import hinf_norm
from .nugap import max_gap, nu_gap
from .statespace import (
    CompensatorBank,
    FirstOrderSection,
    augment_plant_set,
    build_error_system,
    identity_bank,
    realize_bank,
    series,
)

__all__ = [
    "MersSelection",
    "MersResult",
    "GrcResult",
    "worst_plant_index",
    "select_mers",
    "mers_synthesis",
    "merse_fitness",
    "merse_search",
    "decode_grc_banks",
    "grc_search",
]

# Fitness assigned to gap-search candidates rejected before evaluation;
# any true nu-gap lies in [0, 1], so 2 always loses.
REJECT_FITNESS = 2.0


@dataclass(frozen=True)
class MersSelection:
    """Choice of base plant for a single shared estimator.

    j is the selected base index, worst_index[l] the family member most
    distant from base l in system-matrix spectral norm, and norms[l] the
    error norm achieved by gain l against that worst member (inf when
    the gain is missing or fails to stabilize).
    """

    j: int
    norms: np.ndarray
    worst_index: np.ndarray


@dataclass(frozen=True)
class MersResult:
    """Output of estimator synthesis over a plant family.

    gain is the observer gain for the selected base plant j, achieving
    worst-case error norm fitness < gamma when success is True. The
    pre/post banks are the estimator-side compensators used to reach
    that level (identity banks when none were searched). history and
    evaluations describe the genetic search when one ran.
    """

    success: bool
    gamma: float
    j: int
    gain: np.ndarray
    pre_bank: CompensatorBank
    post_bank: CompensatorBank
    norms: np.ndarray
    worst_index: np.ndarray
    fitness: float
    history: np.ndarray
    evaluations: int


@dataclass(frozen=True)
class GrcResult:
    """Output of the gap-reduction search around base plant j.

    epsilon is the family's nu-gap radius about plant j before
    compensation; fitness is the compensated radius reached by the
    search. success means fitness < epsilon strictly. w_in is the bank
    of biproper input sections (one per plant input) and w_ot the bank
    of strictly proper output sections (one per measured output).
    """

    success: bool
    j: int
    epsilon: float
    fitness: float
    w_in: CompensatorBank
    w_ot: CompensatorBank
    history: np.ndarray
    evaluations: int


def worst_plant_index(plant_set, l):
    """Index of the family member farthest from base plant l, measured
    by the largest singular value of A_i - A_l; ties take the smallest
    index."""
    dists = [
        float(np.linalg.svd(A - plant_set.A_list[l], compute_uv=False)[0])
        for A in plant_set.A_list
    ]
    return int(np.argmax(dists))


def select_mers(plant_set, gains):
    """Pick the base plant whose estimator transfers best to the rest
    of the family.

    Parameters
    ----------
    plant_set : PlantSet
    gains : sequence
        One observer gain per plant, or None where synthesis failed.

    Returns
    -------
    MersSelection
        With j minimizing the worst-case error norm; ties take the
        smallest index.

    Raises
    ------
    SynthesisError
        If no gain stabilizes its own base plant.
    """
    N = plant_set.n_plants
    if len(gains) != N:
        raise ValidationError(f"expected {N} gains, got {len(gains)}")
    norms = np.full(N, np.inf)
    worst = np.empty(N, dtype=int)
    for l in range(N):
        worst[l] = worst_plant_index(plant_set, l)
        L = gains[l]
        if L is None:
            continue
        err = build_error_system(plant_set, int(worst[l]), l, L)
        if not is_hurwitz(err.model.A):
            continue
        norms[l] = hinf_norm(err.model).value
    if not np.any(np.isfinite(norms)):
        raise SynthesisError("no candidate gain stabilizes its base plant")
    j = int(np.argmin(norms))
    return MersSelection(j=j, norms=norms, worst_index=worst)


def _feasibility_sweep(plant_set, gamma, base=None):
    """Solve the observer feasibility problem for every base plant at
    level gamma (or for one pinned base). Returns (certificates,
    worst_index array); skipped bases carry None certificates."""
    certs = []
    worst = np.empty(plant_set.n_plants, dtype=int)
    for l in range(plant_set.n_plants):
        worst[l] = worst_plant_index(plant_set, l)
        if base is not None and l != base:
            certs.append(None)
            continue
        delta = plant_set.A_list[int(worst[l])] - plant_set.A_list[l]
        prob = ObserverLmiProblem(
            A=plant_set.A_list[l],
            C=plant_set.C,
            C_z=plant_set.C_z,
            delta_a=delta,
            gamma=gamma,
        )
        certs.append(solve_observer_lmi(prob))
    return certs, worst


def mers_synthesis(plant_set, gamma, base=None):
    """Fixed-level estimator synthesis without compensators.

    Solves the observer feasibility problem for each base plant against
    its worst-case family member at the given gamma, then selects the
    base plant with the smallest achieved error norm. Passing base pins
    the selection to that plant and solves only its feasibility
    problem, which keeps a compensated redesign on the same base plant
    as the uncompensated estimator it refines.

    Returns a MersResult; success is False when no base plant is
    feasible at this level (fitness then reports gamma plus the
    smallest infeasibility margin seen).
    """
    if base is not None and not 0 <= base < plant_set.n_plants:
        raise ValidationError(
            f"base index {base} outside plant range 0..{plant_set.n_plants - 1}"
        )
    certs, _ = _feasibility_sweep(plant_set, gamma, base=base)
    gains = [c.gain() if c is not None and c.feasible else None for c in certs]
    m, r = plant_set.n_inputs, plant_set.n_measured
    pre = identity_bank(m, "pre")
    post = identity_bank(r, "post")
    empty = np.asarray([])
    if any(c is not None and c.feasible for c in certs):
        sel = select_mers(plant_set, gains)
        return MersResult(
            success=bool(sel.norms[sel.j] < gamma),
            gamma=gamma,
            j=sel.j,
            gain=gains[sel.j],
            pre_bank=pre,
            post_bank=post,
            norms=sel.norms,
            worst_index=sel.worst_index,
            fitness=float(sel.norms[sel.j]),
            history=empty,
            evaluations=plant_set.n_plants,
        )
    penalty = gamma + min(
        max(c.best_eigenvalue, 0.0) for c in certs if c is not None
    )
    return MersResult(
        success=False,
        gamma=gamma,
        j=-1,
        gain=None,
        pre_bank=pre,
        post_bank=post,
        norms=np.full(plant_set.n_plants, np.inf),
        worst_index=np.asarray(
            [worst_plant_index(plant_set, l) for l in range(plant_set.n_plants)]
        ),
        fitness=float(penalty),
        history=empty,
        evaluations=plant_set.n_plants,
    )


def _decode_banks(x, m, r):
    """Genome -> (pre, post) banks; genes are log10 of (b1, b0, a0) per
    section, pre sections first."""
    vals = 10.0 ** np.asarray(x, dtype=float)
    pre = tuple(
        FirstOrderSection(vals[3 * i], vals[3 * i + 1], vals[3 * i + 2])
        for i in range(m)
    )
    off = 3 * m
    post = tuple(
        FirstOrderSection(vals[off + 3 * i], vals[off + 3 * i + 1], vals[off + 3 * i + 2])
        for i in range(r)
    )
    return CompensatorBank(pre, "pre"), CompensatorBank(post, "post")


def merse_fitness(plant_set, gamma):
    """Fitness closure for the estimator-compensator search.

    The returned callable maps a genome (log10 section coefficients,
    input sections first) to the smallest worst-case error norm over
    base plants of the compensated family, or to gamma plus the
    smallest infeasibility margin when no base plant is feasible, so
    infeasible genomes always rank below feasible ones."""

    def fitness(x):
        pre, post = _decode_banks(x, plant_set.n_inputs, plant_set.n_measured)
        try:
            aug = augment_plant_set(plant_set, pre=pre, post=post)
        except (ValidationError, NumericError):
            return gamma + REJECT_FITNESS
        try:
            certs, worst = _feasibility_sweep(aug, gamma)
        except NumericError:
            return gamma + REJECT_FITNESS
        best = np.inf
        pen = np.inf
        for l, c in enumerate(certs):
            if not c.feasible:
                pen = min(pen, max(c.best_eigenvalue, 0.0))
                continue
            err = build_error_system(aug, int(worst[l]), l, c.gain())
            if not is_hurwitz(err.model.A):
                continue
            try:
                best = min(best, hinf_norm(err.model).value)
            except NumericError:
                continue
        if np.isfinite(best):
            return best
        return gamma + (pen if np.isfinite(pen) else REJECT_FITNESS)

    return fitness


def merse_search(plant_set, gamma, population_size=24, max_generations=30,
                 seed=0, log_range=(-4.0, 4.0), gene_bounds=None,
                 stop_at_success=False):
    """Search estimator-side compensators that make the family feasible
    at the given performance level.

    A genetic search runs over first-order sections, one per estimator
    input and one per measured output, with coefficients encoded in
    log10 space over log_range. gene_bounds may supply per-gene (lo,
    hi) arrays instead; genes with lo == hi are frozen, which restricts
    the search to a coefficient subspace. The identity compensator is
    seeded so the search never does worse than no compensation. With
    stop_at_success the search returns at the first genome whose
    fitness beats gamma.

    Returns a MersResult for the best genome found.
    """
    m, r = plant_set.n_inputs, plant_set.n_measured
    n_genes = 3 * (m + r)
    if gene_bounds is None:
        lo = np.full(n_genes, float(log_range[0]))
        hi = np.full(n_genes, float(log_range[1]))
        if np.any(lo > 0.0) or np.any(hi < 0.0):
            raise ValidationError("log_range must contain 0 so identity is encodable")
    else:
        lo = np.asarray(gene_bounds[0], dtype=float)
        hi = np.asarray(gene_bounds[1], dtype=float)
        if lo.shape != (n_genes,) or hi.shape != (n_genes,):
            raise ValidationError(f"gene_bounds must have {n_genes} entries per side")
    cfg = GaConfig(
        bounds_lo=lo,
        bounds_hi=hi,
        population_size=population_size,
        max_generations=max_generations,
        seed=seed,
        seeds=[np.clip(np.zeros(n_genes), lo, hi)],
        target=gamma if stop_at_success else None,
    )
    result = ga_optimize(merse_fitness(plant_set, gamma), cfg)

    pre, post = _decode_banks(result.best_x, m, r)
    aug = augment_plant_set(plant_set, pre=pre, post=post)
    inner = mers_synthesis(aug, gamma)
    return MersResult(
        success=inner.success,
        gamma=gamma,
        j=inner.j,
        gain=inner.gain,
        pre_bank=pre,
        post_bank=post,
        norms=inner.norms,
        worst_index=inner.worst_index,
        fitness=float(result.best_f),
        history=result.history,
        evaluations=result.evaluations,
    )


def _channel_zeros(A, b, c):
    """Finite transmission zeros of the SISO channel (A, b, c, 0) from
    the generalized eigenvalues of the system pencil."""
    n = A.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n:] = b.reshape(n, 1)
    M[n:, :n] = c.reshape(1, n)
    E = np.zeros((n + 1, n + 1))
    E[:n, :n] = np.eye(n)
    vals = scipy.linalg.eigvals(M, E)
    return vals[np.isfinite(vals)]


def _too_close(value, targets, tol=1e-6):
    for t in targets:
        if abs(value - t) <= tol * max(1.0, abs(t)):
            return True
    return False


def decode_grc_banks(x, m, r):
    """Genome -> (w_in, w_ot) plant-side banks.

    The first 3*m genes are log10 of (b1, b0, a0) for the biproper
    input sections; the remaining 2*r genes are log10 of (b0, a0) for
    the strictly proper output sections.
    """
    vals = 10.0 ** np.asarray(x, dtype=float)
    w_in = tuple(
        FirstOrderSection(vals[3 * i], vals[3 * i + 1], vals[3 * i + 2])
        for i in range(m)
    )
    off = 3 * m
    w_ot = tuple(
        FirstOrderSection(0.0, vals[off + 2 * k], vals[off + 2 * k + 1])
        for k in range(r)
    )
    return (
        CompensatorBank(w_in, "pre"),
        CompensatorBank(w_ot, "post", strictly_proper=True),
    )


def grc_search(plant_set, j, population_size=24, max_generations=30,
               seed=0, log_range=(-4.0, 4.0)):
    """Search plant-side compensators that shrink the family's nu-gap
    spread about base plant j.

    Each plant input gets a biproper first-order section and each
    measured output a strictly proper one; the fitness of a candidate
    bank pair is the largest nu-gap between the compensated base plant
    and any other compensated family member. Sections whose poles or
    zeros nearly cancel a plant pole or channel zero are rejected.
    Success requires strictly beating epsilon, the uncompensated
    spread.

    Returns a GrcResult.
    """
    if not 0 <= j < plant_set.n_plants:
        raise ValidationError(f"base index {j} outside family of {plant_set.n_plants}")
    models = [plant_set.plant(i) for i in range(plant_set.n_plants)]
    epsilon = max_gap(models, j)

    plant_poles = np.concatenate([np.linalg.eigvals(A) for A in plant_set.A_list])
    pole_targets = [float(lam.real) for lam in plant_poles if abs(lam.imag) < 1e-9]
    zero_targets = []
    for i in range(plant_set.n_plants):
        A = plant_set.A_list[i]
        for q in range(plant_set.n_inputs):
            for k in range(plant_set.n_measured):
                for z in _channel_zeros(A, plant_set.B[:, q], plant_set.C[k, :]):
                    if abs(z.imag) < 1e-9:
                        zero_targets.append(float(z.real))

    m, r = plant_set.n_inputs, plant_set.n_measured
    n_genes = 3 * m + 2 * r

    def fitness(x):
        w_in, w_ot = decode_grc_banks(x, m, r)
        # Reject near pole-zero cancellation against the plant family.
        for s in w_in.sections:
            if _too_close(-s.a0, zero_targets):
                return REJECT_FITNESS
            if _too_close(-s.b0 / s.b1, pole_targets):
                return REJECT_FITNESS
        for s in w_ot.sections:
            if _too_close(-s.a0, zero_targets):
                return REJECT_FITNESS
        g_in = realize_bank(w_in)
        g_ot = realize_bank(w_ot)
        try:
            mods = [series(g_ot, series(mod, g_in)) for mod in models]
            worst = 0.0
            for i in range(plant_set.n_plants):
                if i == j:
                    continue
                worst = max(worst, nu_gap(mods[j], mods[i]).value)
        except (DomainError, NumericError):
            return REJECT_FITNESS
        return worst

    lo = np.full(n_genes, float(log_range[0]))
    hi = np.full(n_genes, float(log_range[1]))
    cfg = GaConfig(
        bounds_lo=lo,
        bounds_hi=hi,
        population_size=population_size,
        max_generations=max_generations,
        seed=seed,
        seeds=[np.zeros(n_genes)],
    )
    result = ga_optimize(fitness, cfg)
    w_in, w_ot = decode_grc_banks(result.best_x, m, r)
    return GrcResult(
        success=bool(result.best_f < epsilon),
        j=j,
        epsilon=float(epsilon),
        fitness=float(result.best_f),
        w_in=w_in,
        w_ot=w_ot,
        history=result.history,
        evaluations=result.evaluations,
    )
