"""Synthetic no-count data."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PlanError, ProbabilityError
from .fock import DensityMatrix, DimensionPolicy
from .povm import PovmElement, Setting, build_elements, probabilities


@dataclass(frozen=True)
class MeasurementRecord:
    """Tally for one setting.

    ``no_count`` is an integer for sampled data. Expected-value records
    (see :func:`expected_counts`) carry the real number ``trials * p``.
    """

    setting_index: int
    trials: int
    no_count: float

    def __post_init__(self):
        if not 0 <= self.no_count <= self.trials:
            raise PlanError(f"no_count={self.no_count} outside [0, {self.trials}]")

    def to_json(self) -> dict:
        n = self.no_count
        if float(n).is_integer():
            n = int(n)
        return {"j": self.setting_index, "trials": int(self.trials), "no_count": n}

    @classmethod
    def from_json(cls, obj: dict) -> "MeasurementRecord":
        return cls(int(obj["j"]), int(obj["trials"]), obj["no_count"])


@dataclass(frozen=True)
class ExperimentPlan:
    settings: tuple[Setting, ...]
    policy: DimensionPolicy
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "settings", tuple(self.settings))
        if not self.settings:
            raise PlanError("empty measurement plan")
        if sum(s.trials for s in self.settings) <= 0:
            raise PlanError("plan has no trials")

    @property
    def total_trials(self) -> int:
        return sum(s.trials for s in self.settings)


def setting_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for one setting."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _checked_probs(rho: DensityMatrix, elements: Sequence[PovmElement]) -> np.ndarray:
    p = probabilities(rho, elements)
    bad = (p > 1 + 1e-9) | (p < -1e-9)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise ProbabilityError(f"setting {j}: probability {p[j]!r} outside [0, 1]")
    return np.clip(p, 0.0, 1.0)


def simulate_counts(rho_true: DensityMatrix, plan: ExperimentPlan,
                    elements: Sequence[PovmElement] | None = None) -> list[MeasurementRecord]:
    if elements is None:
        elements = build_elements(plan.settings, plan.policy)
    p = _checked_probs(rho_true, elements)
    records = []
    for j, (s, pj) in enumerate(zip(plan.settings, p)):
        n = int(setting_rng(plan.seed, j).binomial(s.trials, pj)) if s.trials else 0
        records.append(MeasurementRecord(j, s.trials, n))
    return records


def expected_counts(rho_true: DensityMatrix, plan: ExperimentPlan,
                    elements: Sequence[PovmElement] | None = None) -> list[MeasurementRecord]:
    """Noise-free records with ``no_count = trials * p_j``."""
    if elements is None:
        elements = build_elements(plan.settings, plan.policy)
    p = _checked_probs(rho_true, elements)
    return [MeasurementRecord(j, s.trials, s.trials * float(pj))
            for j, (s, pj) in enumerate(zip(plan.settings, p))]


def records_to_jsonl(records: Sequence[MeasurementRecord], meta: dict | None = None) -> str:
    lines = []
    if meta is not None:
        lines.append(json.dumps({"meta": meta}, sort_keys=True))
    lines += [json.dumps(r.to_json()) for r in records]
    return "\n".join(lines) + "\n"


def records_from_jsonl(text: str) -> list[MeasurementRecord]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if "meta" in obj:
            continue
        out.append(MeasurementRecord.from_json(obj))
    out.sort(key=lambda r: r.setting_index)
    return out


def counts_array(records: Sequence[MeasurementRecord]) -> np.ndarray:
    return np.array([r.no_count for r in records], dtype=float)
