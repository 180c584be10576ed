"""Experiment runner: configuration, reproduction suite, CSV comparison."""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from nsfd.harness.experiments import (
    EXPERIMENTS,
    ConfigError,
    format_value,
    parse_value,
    validate_custom,
)

#: Environment variable overriding the default output directory.
OUTPUT_DIR_ENV = "NSFD_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "nsfd-output"

EXIT_SUCCESS = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


@dataclass
class ExperimentConfig:
    experiment: str
    #: Raw ``key -> text`` overrides, validated by :meth:`resolve`.
    overrides: dict[str, str] = field(default_factory=dict)
    output_dir: Path | None = None
    emit_plots: bool = False

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> ExperimentConfig:
        """Read an INI file with ``[experiment]`` and ``[params]`` sections."""
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keys are case-sensitive
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
        if "experiment" not in cp or "id" not in cp["experiment"]:
            raise ConfigError("config file needs an [experiment] section with an id")
        sec = cp["experiment"]
        out = sec.get("output_dir")
        return cls(
            experiment=sec["id"],
            overrides=dict(cp["params"]) if "params" in cp else {},
            output_dir=Path(out) if out else None,
            emit_plots=sec.getboolean("emit_plots", fallback=False),
        )

    def resolve(self) -> dict:
        """Defaults for the experiment updated with validated overrides."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; "
                f"available: {', '.join(EXPERIMENTS)}"
            )
        params = {
            k: (list(v) if isinstance(v, list) else v)
            for k, v in EXPERIMENTS[self.experiment].defaults.items()
        }
        # scalars first so that DF checks can see alpha
        ordered = sorted(self.overrides.items(), key=lambda kv: kv[0] in ("phieff", "psis", "dfs"))
        for key, text in ordered:
            params[key] = parse_value(key, text, params)
        if "phieff" in params and "alpha" in params:
            params["phieff"] = parse_value("phieff", params["phieff"], params)
        if self.experiment == "custom":
            validate_custom(params)
        return params


@dataclass
class RunManifest:
    experiment: str
    parameters: dict[str, str]
    duration_s: float
    #: ``filename -> sha256`` of every output, in write order.
    outputs: dict[str, str]
    version: str
    status: str

    @property
    def exit_code(self) -> int:
        return EXIT_DIVERGED if self.status == "divergence-observed" else EXIT_SUCCESS

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2) + "\n"


def run(config: ExperimentConfig) -> RunManifest:
    """Run one experiment, write its outputs and ``manifest.json``."""
    from nsfd import __version__

    params = config.resolve()
    exp = EXPERIMENTS[config.experiment]
    outdir = Path(config.output_dir or default_output_dir()) / config.experiment
    outdir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    result = exp.runner(config.experiment, dict(params), config.emit_plots)
    duration = time.perf_counter() - start

    checksums = {}
    for name, text in result.files:
        data = text.encode()
        (outdir / name).write_bytes(data)
        checksums[name] = hashlib.sha256(data).hexdigest()

    manifest = RunManifest(
        experiment=config.experiment,
        parameters={k: format_value(v) for k, v in params.items()},
        duration_s=round(duration, 3),
        outputs=checksums,
        version=__version__,
        status="divergence-observed" if result.diverged else "success",
    )
    (outdir / "manifest.json").write_text(manifest.to_json())
    return manifest


# {{{ golden comparison


class SchemaMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class CellDeviation:
    row: int
    column: str
    produced: str
    reference: str
    deviation: float


@dataclass
class DiffReport:
    rel_tol: float
    rate_atol: float | None
    #: Largest relative deviation over non-rate numeric cells.
    max_deviation: float
    #: Largest absolute deviation over rate cells (when *rate_atol* is used).
    max_rate_deviation: float
    mismatches: list[CellDeviation]

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def summary(self) -> str:
        lines = [
            f"max relative deviation {self.max_deviation:.3e} (rtol {self.rel_tol:g})",
        ]
        if self.rate_atol is not None:
            lines.append(
                f"max rate deviation {self.max_rate_deviation:.3e} (atol {self.rate_atol:g})"
            )
        for m in self.mismatches:
            lines.append(
                f"  row {m.row} column {m.column}: produced {m.produced!r} "
                f"reference {m.reference!r} (deviation {m.deviation:.3e})"
            )
        lines.append("PASS" if self.passed else f"FAIL ({len(self.mismatches)} cells)")
        return "\n".join(lines)


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise SchemaMismatchError(f"{path} is empty")
    return rows[0], rows[1:]


def _to_float(text: str) -> float | None:
    try:
        return float(text)
    except ValueError:
        return None


def diff_against_reference(
    produced, reference, rel_tol: float, rate_atol: float | None = None
) -> DiffReport:
    """Compare two CSV files cell by cell.

    Numeric cells are compared by relative deviation. When *rate_atol* is
    given, columns whose name starts with ``rate`` are compared by absolute
    deviation instead. Row numbers in the report are 1-based data rows.
    """
    h1, rows1 = _read_csv(produced)
    h2, rows2 = _read_csv(reference)
    if h1 != h2:
        raise SchemaMismatchError(f"header mismatch: {h1} vs {h2}")
    if len(rows1) != len(rows2):
        raise SchemaMismatchError(f"row count mismatch: {len(rows1)} vs {len(rows2)}")

    max_dev = 0.0
    max_rate_dev = 0.0
    mismatches = []
    for i, (r1, r2) in enumerate(zip(rows1, rows2), start=1):
        if len(r1) != len(h1) or len(r2) != len(h1):
            raise SchemaMismatchError(f"row {i} has the wrong number of cells")
        for col, a, b in zip(h1, r1, r2):
            a, b = a.strip(), b.strip()
            if a == b:
                continue
            fa, fb = _to_float(a), _to_float(b)
            is_rate = rate_atol is not None and col.startswith("rate")
            if fa is None or fb is None or not (math.isfinite(fa) and math.isfinite(fb)):
                dev = math.inf
            elif is_rate:
                dev = abs(fa - fb)
            else:
                dev = abs(fa - fb) / abs(fb) if fb != 0 else abs(fa - fb)

            if is_rate:
                max_rate_dev = max(max_rate_dev, dev)
                tol = rate_atol
            else:
                max_dev = max(max_dev, dev)
                tol = rel_tol
            if dev > tol:
                mismatches.append(CellDeviation(i, col, a, b, dev))

    return DiffReport(rel_tol, rate_atol, max_dev, max_rate_dev, mismatches)


def reference_path(name: str) -> Path:
    """Path of a checked-in reference table, e.g. ``reference_path("table3")``."""
    return Path(__file__).resolve().parent.parent / "data" / f"{name}.csv"


# }}}

__all__ = [
    "EXIT_DIVERGED",
    "EXIT_ERROR",
    "EXIT_SUCCESS",
    "EXPERIMENTS",
    "OUTPUT_DIR_ENV",
    "ConfigError",
    "DiffReport",
    "ExperimentConfig",
    "RunManifest",
    "SchemaMismatchError",
    "diff_against_reference",
    "reference_path",
    "run",
]
