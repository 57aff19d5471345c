"""Estimator selection and the two compensator searches."""

import numpy as np
import pytest

from grmers.errors import SynthesisError, ValidationError
from grmers.lmi import ObserverLmiProblem, solve_observer_lmi
from grmers.linalg import is_hurwitz
from grmers.norms import hinf_norm
from grmers.nugap import max_gap
from grmers.statespace import (
    CompensatorBank,
    augment_plant_set,
    build_error_system,
    realize_bank,
    series,
)
from grmers.synthesis import (
    GrcResult,
    MersResult,
    decode_grc_banks,
    grc_search,
    merse_fitness,
    merse_search,
    mers_synthesis,
    select_mers,
    worst_plant_index,
)

from conftest import scalar_family


def per_plant_gains(ps, gamma):
    gains = []
    for l in range(ps.n_plants):
        k = worst_plant_index(ps, l)
        prob = ObserverLmiProblem(
            A=ps.A_list[l], C=ps.C, C_z=ps.C_z,
            delta_a=ps.A_list[k] - ps.A_list[l], gamma=gamma,
        )
        cert = solve_observer_lmi(prob)
        gains.append(cert.gain() if cert.feasible else None)
    return gains


def test_worst_plant_index_matches_svd_oracle(rng):
    A_list = [rng.standard_normal((3, 3)) for _ in range(4)]
    from grmers.statespace import PlantSet

    ps = PlantSet(A_list=A_list, B=np.eye(3)[:, :1],
                  C=np.eye(3)[:2], C_z=np.eye(3)[2:])
    for l in range(4):
        dists = [np.linalg.norm(A - A_list[l], 2) for A in A_list]
        assert worst_plant_index(ps, l) == int(np.argmax(dists))


def test_worst_plant_index_tie_takes_smallest():
    from grmers.statespace import PlantSet

    A0 = -np.eye(2)
    ps = PlantSet(A_list=[A0, A0 + 0.5 * np.eye(2), A0 - 0.5 * np.eye(2)],
                  B=np.eye(2)[:, :1], C=np.eye(2), C_z=np.eye(2)[:1])
    # plants 1 and 2 are equidistant from plant 0
    assert worst_plant_index(ps, 0) == 1


def test_select_mers_matches_brute_force(family3):
    gamma = 2.0
    gains = per_plant_gains(family3, gamma)
    sel = select_mers(family3, gains)
    # independent recomputation of every candidate's transfer norm
    norms = np.full(family3.n_plants, np.inf)
    for l in range(family3.n_plants):
        if gains[l] is None:
            continue
        k = worst_plant_index(family3, l)
        err = build_error_system(family3, k, l, gains[l])
        if is_hurwitz(err.model.A):
            norms[l] = hinf_norm(err.model).value
    assert sel.j == int(np.argmin(norms))
    assert np.allclose(sel.norms, norms)
    assert sel.norms[sel.j] == np.min(norms)


def test_select_mers_skips_missing_gains(family3):
    gains = per_plant_gains(family3, 2.0)
    gains[0] = None
    sel = select_mers(family3, gains)
    assert np.isinf(sel.norms[0])
    assert sel.j != 0
    with pytest.raises(SynthesisError):
        select_mers(family3, [None] * family3.n_plants)
    with pytest.raises(ValidationError):
        select_mers(family3, gains[:-1])


def test_mers_synthesis_success(family3):
    res = mers_synthesis(family3, 2.0)
    assert isinstance(res, MersResult)
    assert res.success
    assert res.fitness < 2.0
    assert res.gain.shape == (1, 1)
    # reported fitness is the verified transfer norm of the pick
    k = int(res.worst_index[res.j])
    err = build_error_system(family3, k, res.j, res.gain)
    assert hinf_norm(err.model).value == pytest.approx(res.fitness, rel=1e-9)
    # bare synthesis reports pass-through banks
    for bank in (res.pre_bank, res.post_bank):
        g = realize_bank(bank)
        w = np.logspace(-1, 1, 5)
        from grmers.statespace import frequency_response

        for wi in w:
            assert np.allclose(frequency_response(g, wi), np.eye(g.D.shape[0]))


def test_mers_synthesis_infeasible_reports_penalty(family3):
    gamma = 0.5  # below the scalar achievable limit of 1
    res = mers_synthesis(family3, gamma)
    assert not res.success
    assert res.j == -1
    assert res.gain is None
    assert np.all(np.isinf(res.norms))
    assert res.fitness > gamma  # penalty keeps infeasible above feasible


def test_merse_fitness_orders_feasible_below_infeasible(family3):
    z = np.zeros(3 * (family3.n_inputs + family3.n_measured))
    f_ok = merse_fitness(family3, 2.0)(z)
    f_bad = merse_fitness(family3, 0.5)(z)
    assert f_ok < 2.0
    assert f_bad > 0.5


def test_merse_search_never_beaten_by_identity(family3):
    bare = mers_synthesis(family3, 2.0)
    res = merse_search(family3, 2.0, population_size=8, max_generations=3,
                       seed=4)
    assert res.fitness <= bare.fitness + 1e-12
    assert res.success
    assert res.history.size == 4
    assert isinstance(res.pre_bank, CompensatorBank)
    assert isinstance(res.post_bank, CompensatorBank)
    # the reported gain belongs to the compensated family
    aug = augment_plant_set(family3, pre=res.pre_bank, post=res.post_bank)
    assert res.gain.shape == (aug.n_states, aug.C.shape[0])


def test_merse_search_gene_bounds(family3):
    n_genes = 3 * (family3.n_inputs + family3.n_measured)
    with pytest.raises(ValidationError):
        merse_search(family3, 2.0, gene_bounds=(np.zeros(2), np.zeros(2)))
    # freezing every gene pins the search to that single genome
    z = np.zeros(n_genes)
    res = merse_search(family3, 2.0, population_size=8, max_generations=2,
                       gene_bounds=(z, z), seed=1)
    pinned = merse_fitness(family3, 2.0)(z)
    assert res.fitness == pytest.approx(pinned, rel=1e-9)
    with pytest.raises(ValidationError):
        merse_search(family3, 2.0, log_range=(1.0, 2.0))  # excludes identity


def test_decode_grc_banks_layout():
    m, r = 2, 1
    x = np.array([0.0, 1.0, -1.0,  # input section 0: b1=1, b0=10, a0=0.1
                  2.0, 0.0, 1.0,   # input section 1: b1=100, b0=1, a0=10
                  -2.0, 0.5])      # output section 0: b0=0.01, a0=10**0.5
    w_in, w_ot = decode_grc_banks(x, m, r)
    assert len(w_in.sections) == m and len(w_ot.sections) == r
    s0, s1 = w_in.sections
    assert (s0.b1, s0.b0, s0.a0) == (1.0, 10.0, 0.1)
    assert (s1.b1, s1.b0, s1.a0) == (100.0, 1.0, 10.0)
    t0 = w_ot.sections[0]
    assert t0.b1 == 0.0  # output sections are strictly proper
    assert t0.b0 == pytest.approx(0.01)
    assert t0.a0 == pytest.approx(10.0 ** 0.5)
    assert w_in.role == "pre" and w_ot.role == "post"


def test_grc_search_reduces_gap_spread():
    ps = scalar_family((0.2, 0.3, 0.45))
    res = grc_search(ps, 0, population_size=16, max_generations=8, seed=2)
    assert isinstance(res, GrcResult)
    models = [ps.plant(i) for i in range(ps.n_plants)]
    assert res.epsilon == pytest.approx(max_gap(models, 0), abs=1e-12)
    assert res.success
    assert res.fitness < res.epsilon
    # independent recomputation on the compensated family
    g_in = realize_bank(res.w_in)
    g_ot = realize_bank(res.w_ot)
    comp = [series(g_ot, series(mod, g_in)) for mod in models]
    assert max_gap(comp, 0) == pytest.approx(res.fitness, abs=1e-9)


def test_grc_search_validates_base_index():
    ps = scalar_family()
    with pytest.raises(ValidationError):
        grc_search(ps, 3)
    with pytest.raises(ValidationError):
        grc_search(ps, -1)
