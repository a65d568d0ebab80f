"""Experiment harness: configs, coefficient profiles, report generation.

A report run walks the cell grid family x n x profile x p in a fixed order,
estimates the Monte-Carlo p-norm of each cell with a seed derived from
(config seed, cell index), evaluates every applicable surrogate, and emits
one CSV row per cell.  Cells are dispatched to a thread pool sized by the
``LCM_WORKERS`` environment variable, but rows are assembled in cell order
and all randomness is keyed per cell, so the written bytes are identical for
any worker count.
"""

from __future__ import annotations

import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coeffs import CoefficientVector
from .errors import InvalidArgumentError
from .families import ProductFamily, UniformBall, family_from_spec
from .montecarlo import MAX_MOMENT_ORDER, MIN_SAMPLES, estimate_pnorm
from .surrogates import surrogate_bundle

__all__ = [
    "ExperimentConfig",
    "ReportRow",
    "ExperimentResult",
    "coefficient_profile",
    "run_experiment",
    "rows_to_csv_bytes",
    "write_report",
    "worker_count",
    "CSV_COLUMNS",
]

logger = logging.getLogger(__name__)

WORKERS_ENV = "LCM_WORKERS"

CSV_COLUMNS = (
    "family", "n", "profile", "p", "mc_value", "mc_stderr",
    "hitczenko", "bn_upper", "gk", "bqn", "momunc",
    "band_lo", "band_up_indep", "band_up_klartag",
    "ratio_lo", "ratio_hi",
)

_CONFIG_KEYS = ("families", "profiles", "n_list", "p_grid", "n_samples", "seed", "output_dir")


@dataclass(frozen=True)
class ExperimentConfig:
    families: tuple[str, ...]
    profiles: tuple[str, ...]
    n_list: tuple[int, ...]
    p_grid: tuple[float, ...]
    n_samples: int
    seed: int
    output_dir: str = "out"

    def __post_init__(self) -> None:
        if not self.families or not self.profiles or not self.n_list or not self.p_grid:
            raise InvalidArgumentError("families, profiles, n_list and p_grid must be non-empty")
        if any(n < 1 for n in self.n_list):
            raise InvalidArgumentError("dimensions must be >= 1")
        ps = self.p_grid
        if any(not (2.0 <= p <= MAX_MOMENT_ORDER) for p in ps):
            raise InvalidArgumentError(
                f"moment orders must lie in [2, {MAX_MOMENT_ORDER}], got {ps}")
        if any(p1 <= p0 for p0, p1 in zip(ps, ps[1:])):
            raise InvalidArgumentError("p_grid must be strictly increasing")
        if self.n_samples < MIN_SAMPLES:
            raise InvalidArgumentError(
                f"n_samples must be >= {MIN_SAMPLES}, got {self.n_samples}")

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        missing = set(_CONFIG_KEYS) - {"output_dir"} - set(data)
        if missing:
            raise InvalidArgumentError(f"missing config keys: {sorted(missing)}")
        return cls(
            families=tuple(str(f) for f in data["families"]),
            profiles=tuple(str(p) for p in data["profiles"]),
            n_list=tuple(int(n) for n in data["n_list"]),
            p_grid=tuple(float(p) for p in data["p_grid"]),
            n_samples=int(data["n_samples"]),
            seed=int(data["seed"]),
            output_dir=str(data.get("output_dir", "out")),
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidArgumentError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidArgumentError("config must be a JSON object")
        return cls.from_mapping(data)


def coefficient_profile(spec: str, n: int) -> np.ndarray | None:
    """Materialize a coefficient profile at dimension n.

    ``one_hot`` | ``flat`` | ``geometric:rho=<r>`` | ``power:alpha=<a>`` |
    ``explicit:v1,v2,...``.  An explicit profile returns None when its length
    does not match n (the cell is inapplicable, not an error).
    """
    spec = spec.strip()
    if n < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {n}")
    if spec == "one_hot":
        out = np.zeros(n)
        out[0] = 1.0
        return out
    if spec == "flat":
        return np.full(n, 1.0 / math.sqrt(n))
    if spec.startswith("geometric:"):
        rho = _parse_param(spec, "geometric", "rho")
        if not (0.0 < rho < 1.0):
            raise InvalidArgumentError(f"geometric ratio must lie in (0, 1), got {rho}")
        return rho ** np.arange(n)
    if spec.startswith("power:"):
        alpha = _parse_param(spec, "power", "alpha")
        if alpha <= 0:
            raise InvalidArgumentError(f"power decay must be positive, got {alpha}")
        return np.arange(1, n + 1, dtype=float) ** (-alpha)
    if spec.startswith("explicit:"):
        try:
            vals = [float(v) for v in spec[len("explicit:"):].split(",")]
        except ValueError as exc:
            raise InvalidArgumentError(f"malformed explicit profile {spec!r}") from exc
        return np.asarray(vals) if len(vals) == n else None
    raise InvalidArgumentError(f"unknown profile spec {spec!r}")


def _parse_param(spec: str, name: str, param: str) -> float:
    body = spec[len(name) + 1:]
    key, _, raw = body.partition("=")
    if key.strip() != param or not raw:
        raise InvalidArgumentError(f"malformed {name} profile {spec!r}")
    try:
        return float(raw)
    except ValueError as exc:
        raise InvalidArgumentError(f"malformed {name} profile {spec!r}") from exc


@dataclass(frozen=True)
class ReportRow:
    family: str
    n: int
    profile: str
    p: float
    mc_value: float
    mc_stderr: float
    hitczenko: float
    bn_upper: float
    gk: float | None
    bqn: float | None
    momunc: float | None
    band_lo: float
    band_up_indep: float
    band_up_klartag: float
    ratio_lo: float
    ratio_hi: float


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple[ReportRow, ...]
    summary: dict


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidArgumentError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise InvalidArgumentError(f"{WORKERS_ENV} must be >= 1, got {value}")
    return value


def _cell_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence((int(seed) & ((1 << 64) - 1), index))
    return int(ss.generate_state(1, np.uint64)[0])


def _iter_cells(config: ExperimentConfig):
    for family_spec in config.families:
        for n in config.n_list:
            for profile_spec in config.profiles:
                for p in config.p_grid:
                    yield family_spec, n, profile_spec, p


def _run_cell(config: ExperimentConfig, index: int, cell) -> ReportRow | None:
    family_spec, n, profile_spec, p = cell
    try:
        family = family_from_spec(family_spec, n)
        values = coefficient_profile(profile_spec, n)
    except InvalidArgumentError as exc:
        logger.info("cell %d (%s, n=%d, %s, p=%g) skipped: %s",
                    index, family_spec, n, profile_spec, p, exc)
        return None
    if values is None:
        logger.info("cell %d (%s, n=%d, %s, p=%g) skipped: profile inapplicable at n=%d",
                    index, family_spec, n, profile_spec, p, n)
        return None
    a = CoefficientVector.from_values(values)
    mc = estimate_pnorm(family, a, p, config.n_samples, _cell_seed(config.seed, index))
    bundle = surrogate_bundle(a, p, family=family)
    return ReportRow(
        family=family_spec,
        n=n,
        profile=profile_spec,
        p=p,
        mc_value=mc.value,
        mc_stderr=mc.stderr,
        hitczenko=bundle.hitczenko,
        bn_upper=bundle.bn_upper,
        gk=bundle.gk,
        bqn=bundle.bqn,
        momunc=bundle.momunc,
        band_lo=bundle.band.lower,
        band_up_indep=bundle.band.upper_indep,
        band_up_klartag=bundle.band.upper_klartag,
        ratio_lo=mc.value / bundle.hitczenko,
        ratio_hi=bundle.bn_upper / mc.value,
    )


def _reference_surrogate(family_spec: str, row: ReportRow) -> tuple[str, float | None]:
    family = family_from_spec(family_spec, row.n)
    if isinstance(family, ProductFamily):
        return "gk", row.gk
    if isinstance(family, UniformBall):
        return "bqn", row.bqn
    return "momunc", row.momunc


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    cells = list(enumerate(_iter_cells(config)))
    results: dict[int, ReportRow | None] = {}
    workers = worker_count()
    if workers == 1:
        for index, cell in cells:
            results[index] = _run_cell(config, index, cell)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {index: pool.submit(_run_cell, config, index, cell)
                       for index, cell in cells}
            for index, fut in futures.items():
                results[index] = fut.result()
    rows = tuple(results[index] for index, _ in cells if results[index] is not None)
    skipped = sum(1 for index, _ in cells if results[index] is None)

    families_summary = {}
    for family_spec in config.families:
        fam_rows = [r for r in rows if r.family == family_spec]
        if not fam_rows:
            continue
        ref_name, _ = _reference_surrogate(family_spec, fam_rows[0])
        ref_ratios = []
        for r in fam_rows:
            _, ref = _reference_surrogate(family_spec, r)
            if ref is not None and ref > 0:
                ref_ratios.append(r.mc_value / ref)
        families_summary[family_spec] = {
            "cells": len(fam_rows),
            "c_lo": max(r.hitczenko / r.mc_value for r in fam_rows),
            "c_hi": max(r.mc_value / r.bn_upper for r in fam_rows),
            "reference": ref_name,
            "ref_ratio_min": min(ref_ratios) if ref_ratios else None,
            "ref_ratio_max": max(ref_ratios) if ref_ratios else None,
        }
    summary = {
        "seed": config.seed,
        "n_samples": config.n_samples,
        "cells": len(rows),
        "skipped": skipped,
        "families": families_summary,
    }
    return ExperimentResult(rows=rows, summary=summary)


def _format_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def rows_to_csv_bytes(rows) -> bytes:
    """Serialize rows deterministically: fixed column order, 17 significant
    digits, '.' decimal separator, '\\n' line endings, empty fields for
    missing surrogates."""
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        buf.write(",".join(_format_field(getattr(row, col)) for col in CSV_COLUMNS) + "\n")
    return buf.getvalue().encode("ascii")


def write_report(result: ExperimentResult, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    csv_path.write_bytes(rows_to_csv_bytes(result.rows))
    summary_path = out / "summary.json"
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return csv_path, summary_path


def row_from_csv_fields(fields_list) -> ReportRow:
    """Inverse of the CSV serialization, for readers of written reports."""
    if len(fields_list) != len(CSV_COLUMNS):
        raise InvalidArgumentError(
            f"expected {len(CSV_COLUMNS)} fields, got {len(fields_list)}")
    kwargs = {}
    for name, raw in zip(CSV_COLUMNS, fields_list):
        if name in ("family", "profile"):
            kwargs[name] = raw
        elif name == "n":
            kwargs[name] = int(raw)
        elif raw == "" and name in ("gk", "bqn", "momunc"):
            kwargs[name] = None
        else:
            kwargs[name] = float(raw)
    return ReportRow(**kwargs)
