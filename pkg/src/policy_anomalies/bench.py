"""Timing sweeps over generated scenarios."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .anomalies import run_analysis
from .ingest.generator import GenerationParams, generate_scenario
from .paths import DEFAULT_PATH_CAP

DEFAULT_POINTS = (100, 250, 500)


@dataclass
class BenchRow:
    sweep: str
    value: int
    seed: int
    n_pi: int
    n_conflict: int
    n_entities: int
    pre_computation_time: float
    analysis_time: float
    anomalies: int
    truncated: bool

    def to_dict(self) -> dict:
        return asdict(self)


def run_sweep(
    sweep: str,
    fixed: int,
    points: Sequence[int] = DEFAULT_POINTS,
    *,
    seeds: Sequence[int] = (0,),
    conflict_ratio: float = 0.5,
    path_cap: int = DEFAULT_PATH_CAP,
) -> list[BenchRow]:
    """Vary PI count (``sweep="pis"``) or node count (``"entities"``), holding the other at ``fixed``."""
    if sweep not in ("pis", "entities"):
        raise ValueError(f"unknown sweep {sweep!r}")
    if not 0 <= conflict_ratio <= 1:
        raise ValueError("conflict_ratio must lie in [0, 1]")
    rows = []
    for value in points:
        total, entities = (value, fixed) if sweep == "pis" else (fixed, value)
        n_conflict = round(total * conflict_ratio)
        for seed in seeds:
            params = GenerationParams(total - n_conflict, n_conflict, entities, seed)
            result = run_analysis(generate_scenario(params), path_cap)
            rows.append(
                BenchRow(
                    sweep, value, seed, params.n_pi, n_conflict, entities,
                    result.stats.pre_computation_time, result.stats.analysis_time,
                    len(result.anomalies), result.truncated,
                )
            )
    return rows


def quadratic_r2(xs: Sequence[float], ys: Sequence[float]) -> float:
    """R² of a least-squares ``a + b x + c x²`` fit."""
    x, y = np.asarray(xs, float), np.asarray(ys, float)
    coeffs = np.polyfit(x, y, 2)
    resid = y - np.polyval(coeffs, x)
    total = float(((y - y.mean()) ** 2).sum())
    if total == 0.0:
        return 1.0
    return 1.0 - float((resid ** 2).sum()) / total


__all__ = ["BenchRow", "DEFAULT_POINTS", "quadratic_r2", "run_sweep"]
