"""JSON and CSV serialization for plant families, synthesis results,
and comparison tables.

Numbers round-trip at full precision, nothing time-stamped or
machine-specific is written, and loading validates shapes before
construction so a malformed file is rejected with the offending field
named.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .statespace import CompensatorBank, FirstOrderSection, PlantSet
from .synthesis import GrcResult, MersResult

__all__ = [
    "RunConfig",
    "load_plant_set",
    "save_plant_set",
    "plant_set_to_dict",
    "plant_set_from_dict",
    "mers_result_to_dict",
    "mers_result_from_dict",
    "grc_result_to_dict",
    "grc_result_from_dict",
    "comparison_to_rows",
    "write_json",
    "read_json",
    "write_csv_rows",
    "spawn_seeds",
]


def _np_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(obj, path):
    """Write an object as indented JSON with full-precision floats."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_np_default)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _matrix(entry, field, rows=None, cols=None):
    """Parse one matrix field with shape checking."""
    try:
        M = np.asarray(entry, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"field '{field}' is not numeric") from exc
    if M.ndim != 2:
        raise ValidationError(f"field '{field}' must be a matrix (list of rows)")
    if rows is not None and M.shape[0] != rows:
        raise ValidationError(
            f"field '{field}' has {M.shape[0]} rows, expected {rows}"
        )
    if cols is not None and M.shape[1] != cols:
        raise ValidationError(
            f"field '{field}' has {M.shape[1]} columns, expected {cols}"
        )
    return M


def plant_set_from_dict(data):
    """Build a PlantSet from its dictionary form.

    Expected layout::

        {"plants": [{"label": "P0", "A": [[...]]}, ...],
         "B": [[...]], "C": [[...]], "C_z": [[...]]}

    A plant entry may repeat "B" or "C"; repeated matrices must match
    the shared ones exactly or the offending field is reported.
    """
    if not isinstance(data, dict):
        raise ValidationError("plant set document must be a JSON object")
    for key in ("plants", "B", "C", "C_z"):
        if key not in data:
            raise ValidationError(f"missing field '{key}'")
    plants = data["plants"]
    if not isinstance(plants, list) or len(plants) < 2:
        raise ValidationError("field 'plants' must list at least two plants")
    B = _matrix(data["B"], "B")
    n = B.shape[0]
    C = _matrix(data["C"], "C", cols=n)
    C_z = _matrix(data["C_z"], "C_z", cols=n)
    A_list = []
    labels = []
    for idx, entry in enumerate(plants):
        if not isinstance(entry, dict) or "A" not in entry:
            raise ValidationError(f"plants[{idx}] must be an object with field 'A'")
        A = _matrix(entry["A"], f"plants[{idx}].A", rows=n, cols=n)
        A_list.append(A)
        labels.append(str(entry.get("label", f"P{idx}")))
        for shared_name, shared in (("B", B), ("C", C)):
            if shared_name in entry:
                local = _matrix(entry[shared_name], f"plants[{idx}].{shared_name}")
                if local.shape != shared.shape or not np.array_equal(local, shared):
                    raise ValidationError(
                        f"plants[{idx}].{shared_name} differs from the shared "
                        f"'{shared_name}'; the family must share it"
                    )
    return PlantSet(
        A_list=tuple(A_list), B=B, C=C, C_z=C_z, labels=tuple(labels)
    )


def plant_set_to_dict(ps):
    return {
        "plants": [
            {"label": ps.labels[i], "A": ps.A_list[i].tolist()}
            for i in range(ps.n_plants)
        ],
        "B": ps.B.tolist(),
        "C": ps.C.tolist(),
        "C_z": ps.C_z.tolist(),
    }


def load_plant_set(path):
    """Load and validate a plant family from a JSON file."""
    try:
        data = read_json(path)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return plant_set_from_dict(data)


def save_plant_set(ps, path):
    write_json(plant_set_to_dict(ps), path)


def _section_to_list(s):
    return [s.b1, s.b0, s.a0]


def _section_from_list(entry, field):
    vals = np.asarray(entry, dtype=float)
    if vals.shape != (3,):
        raise ValidationError(f"field '{field}' must be [b1, b0, a0]")
    return FirstOrderSection(float(vals[0]), float(vals[1]), float(vals[2]))


def _bank_to_list(bank):
    return [_section_to_list(s) for s in bank.sections]


def _bank_from_list(entry, field, role, strictly_proper=False):
    if not isinstance(entry, list) or not entry:
        raise ValidationError(f"field '{field}' must be a list of sections")
    sections = tuple(
        _section_from_list(e, f"{field}[{i}]") for i, e in enumerate(entry)
    )
    return CompensatorBank(sections, role, strictly_proper=strictly_proper)


def mers_result_to_dict(res):
    return {
        "kind": "mers",
        "success": bool(res.success),
        "gamma": res.gamma,
        "j": res.j,
        "gain": None if res.gain is None else np.asarray(res.gain).tolist(),
        "pre_bank": _bank_to_list(res.pre_bank),
        "post_bank": _bank_to_list(res.post_bank),
        "norms": np.asarray(res.norms).tolist(),
        "worst_index": np.asarray(res.worst_index).tolist(),
        "fitness": res.fitness,
        "history": np.asarray(res.history).tolist(),
        "evaluations": res.evaluations,
    }


def mers_result_from_dict(data):
    if data.get("kind") != "mers":
        raise ValidationError("document is not an estimator-synthesis result")
    gain = data.get("gain")
    return MersResult(
        success=bool(data["success"]),
        gamma=float(data["gamma"]),
        j=int(data["j"]),
        gain=None if gain is None else np.asarray(gain, dtype=float),
        pre_bank=_bank_from_list(data["pre_bank"], "pre_bank", "pre"),
        post_bank=_bank_from_list(data["post_bank"], "post_bank", "post"),
        norms=np.asarray(data["norms"], dtype=float),
        worst_index=np.asarray(data["worst_index"], dtype=int),
        fitness=float(data["fitness"]),
        history=np.asarray(data["history"], dtype=float),
        evaluations=int(data["evaluations"]),
    )


def grc_result_to_dict(res):
    return {
        "kind": "grc",
        "success": bool(res.success),
        "j": res.j,
        "epsilon": res.epsilon,
        "fitness": res.fitness,
        "w_in": _bank_to_list(res.w_in),
        "w_ot": _bank_to_list(res.w_ot),
        "history": np.asarray(res.history).tolist(),
        "evaluations": res.evaluations,
    }


def grc_result_from_dict(data):
    if data.get("kind") != "grc":
        raise ValidationError("document is not a gap-reduction result")
    return GrcResult(
        success=bool(data["success"]),
        j=int(data["j"]),
        epsilon=float(data["epsilon"]),
        fitness=float(data["fitness"]),
        w_in=_bank_from_list(data["w_in"], "w_in", "pre"),
        w_ot=_bank_from_list(data["w_ot"], "w_ot", "post", strictly_proper=True),
        history=np.asarray(data["history"], dtype=float),
        evaluations=int(data["evaluations"]),
    )


def comparison_to_rows(tables):
    """Flatten comparison tables into CSV-ready rows.

    Accepts the {"nominal": ..., "perturbed": ...} structure produced
    by the estimator comparison (a bare single table also works).
    Columns: case, plant label, architecture, status, error norm, then
    one NRMSE column per performance channel (empty on divergence).
    """
    if "nominal" in tables and isinstance(tables["nominal"], dict):
        cases = [("nominal", tables["nominal"])]
        if tables.get("perturbed"):
            cases.append(("perturbed", tables["perturbed"]))
    else:
        cases = [("nominal", tables)]
    n_chan = 0
    for _, table in cases:
        for row in table.values():
            for v in row.values():
                if isinstance(v, dict):
                    n_chan = max(n_chan, len(np.atleast_1d(v["nrmse"])))
    header = ["case", "plant", "estimator", "status", "norm"] + [
        f"nrmse_{k}" for k in range(n_chan)
    ]
    rows = [header]
    for case, table in cases:
        for label in table:
            for name in sorted(table[label]):
                v = table[label][name]
                if isinstance(v, str):
                    rows.append([case, label, name, v, ""] + [""] * n_chan)
                else:
                    vals = [repr(float(x)) for x in np.atleast_1d(v["nrmse"])]
                    vals += [""] * (n_chan - len(vals))
                    rows.append(
                        [case, label, name, "ok", repr(float(v["norm"]))] + vals
                    )
    return rows


def write_csv_rows(rows, path):
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


def spawn_seeds(seed, count):
    """Derive independent child seeds from one master seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


@dataclass(frozen=True)
class RunConfig:
    """Settings for the end-to-end pipeline (synthesis plus scoring)."""

    gamma: float = 2.0
    seed: int = 0
    population: int = 24
    generations: int = 30
    search_compensators: bool = False
    log_range: float = 4.0
    noise_rms: float = 0.0
    t_final: float = 20.0
    dt: float = 1e-3
    doublet_amplitude: float = 0.1
    perturb: float = None

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValidationError("gamma must be positive")
        if self.population < 4:
            raise ValidationError("population must be at least 4")
        if self.generations < 1:
            raise ValidationError("generations must be at least 1")
        if self.log_range <= 0.0:
            raise ValidationError("log_range must be positive")
        if self.perturb is not None and not 0.0 < self.perturb < 1.0:
            raise ValidationError("perturb must lie in (0, 1)")

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}
