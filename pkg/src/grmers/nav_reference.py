"""Reference navigation estimator design, kept for regression checks.

A shipped design for a small fixed-wing navigation filter: one shared
estimator covering four flight conditions of an 11-state lateral
navigation model with 3 inputs, 5 measured outputs, and 6 performance
outputs. The tables below freeze that design's compensator coefficients
and its scored error norms; helper functions rebuild the compensator
banks and the excitation scenario so tests can check serialization,
realization, and scoring arithmetic against known-good values.

The plant matrices themselves are not part of the package; synthesis
tests run on generated families of the same shape instead.
"""

import numpy as np

from .sim import SimulationScenario
from .statespace import CompensatorBank, FirstOrderSection

__all__ = [
    "DIMENSIONS",
    "FLIGHT_CONDITIONS",
    "GAMMA",
    "GENERATIONS",
    "BASE_INDEX",
    "WORST_DEVIATION_PEAK",
    "EPSILON",
    "GAP_FITNESS",
    "ESTIMATOR_INPUT_SECTIONS",
    "ESTIMATOR_OUTPUT_SECTIONS",
    "PLANT_INPUT_SECTIONS",
    "PLANT_OUTPUT_SECTIONS",
    "NOMINAL_ERROR_NORMS",
    "ROBUST_ERROR_NORMS",
    "GR_REDUCTION_PCT",
    "ROBUST_GAIN_PCT",
    "PERTURBATION_PCT",
    "NOISE_RMS_DEG_PER_S",
    "NOISE_SPECTRAL_DENSITY",
    "estimator_input_bank",
    "estimator_output_bank",
    "plant_input_bank",
    "plant_output_bank",
    "reference_scenario",
    "gr_reduction_from_norms",
    "robust_gain_from_norms",
]

DIMENSIONS = {
    "n_states": 11,
    "n_inputs": 3,
    "n_measured": 5,
    "n_performance": 6,
}

# (airspeed m/s, climb rate m/s, turn radius m) per family member.
FLIGHT_CONDITIONS = (
    (9.0, 1.0, 30.0),
    (10.0, 1.0, 30.0),
    (10.0, 0.5, 30.0),
    (10.0, 0.0, 30.0),
)

GAMMA = 1.0
GENERATIONS = 200
# Selected base plant (0-based) and the spectral-norm peak of the worst
# system-matrix deviation from it.
BASE_INDEX = 3
WORST_DEVIATION_PEAK = 0.65

# Family nu-gap radius about the base before and after plant-side
# compensation.
EPSILON = 0.2915
GAP_FITNESS = 0.02793

# Estimator-side banks: (b1, b0, a0) per section of (b1 s + b0)/(s + a0).
ESTIMATOR_INPUT_SECTIONS = (
    (47.3, 13.85, 8.196),
    (1.243, 0.6176, 2.576),
    (0.05965, 1.118, 0.7056),
)
ESTIMATOR_OUTPUT_SECTIONS = (
    (323.6, 517.2, 0.932),
    (2447.0, 3710.0, 0.4487),
    (228.1, 163.0, 1.478),
    (1453.0, 803.5, 0.6791),
    (867.4, 564.4, 0.8048),
)

# Plant-side banks; the output sections are strictly proper (b1 = 0).
PLANT_INPUT_SECTIONS = (
    (6723.0, 6409.0, 1.0),
    (0.00026, 0.06368, 2.333),
    (0.00278, 0.9258, 0.2322),
)
PLANT_OUTPUT_SECTIONS = (
    (0.0, 0.0002834, 0.3444),
    (0.0, 0.0002312, 0.7408),
    (0.0, 0.003528, 57.93),
    (0.0, 0.00005, 0.7941),
    (0.0, 15.27, 2.917),
)

# Error norms per family member under the shared scenario; the last
# entry is the base plant.
NOMINAL_ERROR_NORMS = {
    "grmers": (3.85e-2, 3.52e-2, 1.92e-2, 4.9e-3),
    "mers": (6.54e-2, 7.97e-2, 3.66e-2, 6.6e-3),
}
# Same scoring with each plant's system matrix randomly perturbed by
# the percentages below, against per-plant observers.
ROBUST_ERROR_NORMS = {
    "grmers": (5.52e-2, 5.38e-2, 4.39e-2, 2.73e-2),
    "hinf": (6.76e-2, 9.02e-2, 8.10e-2, 4.80e-2),
}
# Published improvement percentages (non-base plants for the nominal
# reduction, every plant for the robustness gain).
GR_REDUCTION_PCT = (41.13, 55.8344, 47.5410)
ROBUST_GAIN_PCT = (17.86, 40.35, 41.13, 43.00)
PERTURBATION_PCT = (8.5, 13.0, 10.0, 5.0)

# Rate-gyro grade measurement noise used in the shipped scoring runs.
NOISE_RMS_DEG_PER_S = 0.06
NOISE_SPECTRAL_DENSITY = 0.005


def _bank(rows, role, strictly_proper=False):
    sections = tuple(FirstOrderSection(b1, b0, a0) for b1, b0, a0 in rows)
    return CompensatorBank(sections, role, strictly_proper=strictly_proper)


def estimator_input_bank():
    """Estimator-side input bank of the shipped design."""
    return _bank(ESTIMATOR_INPUT_SECTIONS, "pre")


def estimator_output_bank():
    """Estimator-side output bank of the shipped design."""
    return _bank(ESTIMATOR_OUTPUT_SECTIONS, "post")


def plant_input_bank():
    """Plant-side input bank of the shipped design."""
    return _bank(PLANT_INPUT_SECTIONS, "pre")


def plant_output_bank():
    """Plant-side output bank of the shipped design (strictly proper)."""
    return _bank(PLANT_OUTPUT_SECTIONS, "post", strictly_proper=True)


def reference_scenario(noise_rms=0.0, seed=0):
    """Excitation used in the shipped scoring runs: a 10% doublet one
    second wide starting at t = 1 s, integrated to 20 s at 1 ms."""
    return SimulationScenario(
        t_final=20.0,
        dt=1e-3,
        doublet_amplitude=0.1,
        doublet_start=1.0,
        doublet_width=1.0,
        noise_rms=noise_rms,
        seed=seed,
    )


def gr_reduction_from_norms(norms=NOMINAL_ERROR_NORMS, base_index=BASE_INDEX):
    """Percentage reduction of the shared-estimator error norm achieved
    by gap reduction, per non-base plant, recomputed from the norm
    tables."""
    out = []
    for i, (a, b) in enumerate(zip(norms["grmers"], norms["mers"])):
        if i == base_index:
            continue
        out.append(100.0 * (b - a) / b)
    return np.asarray(out)


def robust_gain_from_norms(norms=ROBUST_ERROR_NORMS):
    """Percentage advantage of the gap-reduced shared estimator over
    per-plant observers under perturbation, recomputed from the norm
    tables."""
    g = np.asarray(norms["grmers"])
    h = np.asarray(norms["hinf"])
    return 100.0 * (h - g) / h
