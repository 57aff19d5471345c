"""Real-coded genetic algorithm used by the synthesis searches.

Small, deterministic, and box-constrained: genomes are real vectors
confined to [lo, hi] per gene, selection is tournament, crossover is
blend (BLX-alpha), and mutation is additive Gaussian scaled to the box
width. Setting lo == hi freezes a gene, which the searches use to pin
structural coefficients while exploring the rest.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = ["GaConfig", "GaResult", "ga_optimize"]


@dataclass(frozen=True)
class GaConfig:
    """Settings for ga_optimize.

    Parameters
    ----------
    bounds_lo, bounds_hi : array_like
        Per-gene box bounds; equal entries freeze that gene.
    population_size : int
        Individuals per generation (at least 4).
    max_generations : int
        Generation budget; the search may stop earlier on target.
    crossover_rate : float
        Probability a child is produced by blend crossover rather than
        copied from its first parent.
    mutation_rate : float
        Per-gene probability of Gaussian perturbation.
    mutation_scale : float
        Mutation standard deviation as a fraction of each box width.
    blend_alpha : float
        Blend crossover expansion factor beyond the parent interval.
    elite_count : int
        Best individuals copied unchanged into the next generation.
    tournament_size : int
        Candidates drawn per parent selection.
    seed : int
        Seed for the generator that drives the whole run.
    seeds : list
        Genomes injected into the initial population (clipped to box).
    target : float or None
        Stop once the best fitness falls strictly below this value.
    """

    bounds_lo: np.ndarray
    bounds_hi: np.ndarray
    population_size: int = 40
    max_generations: int = 60
    crossover_rate: float = 0.9
    mutation_rate: float = 0.2
    mutation_scale: float = 0.05
    blend_alpha: float = 0.5
    elite_count: int = 2
    tournament_size: int = 3
    seed: int = 0
    seeds: list = field(default_factory=list)
    target: float = None

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.bounds_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.bounds_hi, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValidationError("bounds_lo and bounds_hi must be equal-length vectors")
        if lo.size == 0:
            raise ValidationError("at least one gene is required")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError("bounds must be finite")
        if np.any(hi < lo):
            raise ValidationError("bounds_hi must be >= bounds_lo per gene")
        object.__setattr__(self, "bounds_lo", lo)
        object.__setattr__(self, "bounds_hi", hi)
        if self.population_size < 4:
            raise ValidationError("population_size must be at least 4")
        if self.max_generations < 1:
            raise ValidationError("max_generations must be at least 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValidationError("crossover_rate must lie in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValidationError("mutation_rate must lie in [0, 1]")
        if self.elite_count < 0 or self.elite_count >= self.population_size:
            raise ValidationError("elite_count must be in [0, population_size)")
        if self.tournament_size < 1:
            raise ValidationError("tournament_size must be at least 1")


@dataclass(frozen=True)
class GaResult:
    """Outcome of a GA run.

    best_x is the best genome ever evaluated, best_f its fitness,
    history the best fitness after each generation (index 0 is the
    initial population), and evaluations the number of fitness calls.
    """

    best_x: np.ndarray
    best_f: float
    history: np.ndarray
    evaluations: int


def _evaluate(fitness, pop):
    vals = np.empty(pop.shape[0])
    for i, x in enumerate(pop):
        v = float(fitness(x))
        vals[i] = v if np.isfinite(v) else np.inf
    return vals


def ga_optimize(fitness, config):
    """Minimize a fitness function over a box with a real-coded GA.

    Parameters
    ----------
    fitness : callable
        Maps a 1-D genome to a float; non-finite values are treated as
        +inf. Lower is better.
    config : GaConfig
        Search settings; the run is fully determined by config.seed.

    Returns
    -------
    GaResult
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = config.bounds_lo, config.bounds_hi
    width = hi - lo
    n_pop, n_gene = config.population_size, lo.size

    pop = lo + rng.random((n_pop, n_gene)) * width
    for i, s in enumerate(config.seeds[:n_pop]):
        s = np.asarray(s, dtype=float)
        if s.shape != (n_gene,):
            raise ValidationError(f"seed genome {i} has wrong length")
        pop[i] = np.clip(s, lo, hi)

    vals = _evaluate(fitness, pop)
    evaluations = n_pop
    best_i = int(np.argmin(vals))
    best_x, best_f = pop[best_i].copy(), float(vals[best_i])
    history = [best_f]

    sigma = config.mutation_scale * width

    def pick_parent():
        idx = rng.integers(0, n_pop, size=config.tournament_size)
        return pop[idx[np.argmin(vals[idx])]]

    for _gen in range(config.max_generations):
        if config.target is not None and best_f < config.target:
            break
        order = np.argsort(vals, kind="stable")
        children = np.empty_like(pop)
        n_elite = config.elite_count
        children[:n_elite] = pop[order[:n_elite]]
        for j in range(n_elite, n_pop):
            p1, p2 = pick_parent(), pick_parent()
            if rng.random() < config.crossover_rate:
                g_lo = np.minimum(p1, p2)
                g_hi = np.maximum(p1, p2)
                span = g_hi - g_lo
                a = config.blend_alpha
                child = g_lo - a * span + rng.random(n_gene) * (1 + 2 * a) * span
            else:
                child = p1.copy()
            mutate = rng.random(n_gene) < config.mutation_rate
            child = child + mutate * rng.normal(0.0, 1.0, n_gene) * sigma
            children[j] = np.clip(child, lo, hi)
        pop = children
        vals = _evaluate(fitness, pop)
        evaluations += n_pop
        gen_best = int(np.argmin(vals))
        if vals[gen_best] < best_f:
            best_x, best_f = pop[gen_best].copy(), float(vals[gen_best])
        history.append(best_f)

    return GaResult(
        best_x=best_x,
        best_f=best_f,
        history=np.asarray(history),
        evaluations=evaluations,
    )
