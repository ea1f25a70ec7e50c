"""
Experiment service
实验运行器 - 配置解析、预设实验与结果集组装

Config files are flat `key=value` text with comma-separated lists and `#`
comments. run_preset computes everything in memory; emitter.emit_results
writes it out.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError

from gridkrig.core.config import settings
from gridkrig.core.exceptions import (
    CellFailure, ConfigParseError, ConfigValidationError, GridKrigError, TooFewPairs,
)
from gridkrig.schemas.experiment import (
    CurveSeries, ExperimentConfig, Preset, Provenance, ResultRow, ResultSet,
)
from gridkrig.schemas.simulate import ErrorSamples, ExperimentCell
from gridkrig.schemas.spectral import CovarianceFamily, Profile
from gridkrig.services.simulate import run_monte_carlo
from gridkrig.services.spectral import make_model
from gridkrig.services.stats import summarize, wilcoxon_signed_rank
from gridkrig.services.theory import (
    exponential_error_asymptotic, se_error_bounds, theory_value,
)

logger = logging.getLogger(__name__)


class PresetDefinition(BaseModel):
    """How a preset expands its config into cells"""
    description: str
    required: Tuple[str, ...] = ()
    defaults: Dict[str, object] = Field(default_factory=dict)
    used_from_true: bool = True  # family_used = family_true
    matched_theta: bool = False  # θ′ = θ
    monte_carlo: bool = True


PRESETS: Dict[Preset, PresetDefinition] = {
    Preset.MATCHED_SWEEP: PresetDefinition(
        description="Matched kernels, θ′ = θ, error versus S",
        required=("theta", "sample_sizes"),
        defaults={"families_true": [CovarianceFamily.EXPONENTIAL]},
        matched_theta=True,
    ),
    Preset.MISSPEC_TABLE: PresetDefinition(
        description="One true θ against several θ′, same family",
        required=("theta", "theta_prime", "sample_sizes"),
        defaults={"families_true": [CovarianceFamily.EXPONENTIAL]},
    ),
    Preset.KERNEL_FAMILIES: PresetDefinition(
        description="θ′ sensitivity per family with true θ = 1",
        required=(),
        defaults={
            "families_true": [CovarianceFamily.EXPONENTIAL, CovarianceFamily.MATERN32,
                              CovarianceFamily.SQUARED_EXPONENTIAL],
            "theta": [1.0],
            "theta_prime": [1.0, 10.0],
            "sample_sizes": [51, 101],
        },
    ),
    Preset.WRONG_FAMILY: PresetDefinition(
        description="True Matern32 kriged with other families",
        required=(),
        defaults={
            "families_true": [CovarianceFamily.MATERN32],
            "families_used": [CovarianceFamily.MATERN32, CovarianceFamily.MATERN52,
                              CovarianceFamily.EXPONENTIAL],
            "theta": [1.0],
            "sample_sizes": [26, 51, 101, 201],
        },
        used_from_true=False,
        matched_theta=True,
    ),
    Preset.THEORY_CURVE: PresetDefinition(
        description="Theory-only error curves versus S, no Monte Carlo",
        required=("sample_sizes",),
        defaults={"families_true": [CovarianceFamily.EXPONENTIAL], "theta": [1.0]},
        matched_theta=True,
        monte_carlo=False,
    ),
}

CONFIG_KEYS = (
    "preset", "families_true", "families_used", "theta", "theta_prime", "sample_sizes",
    "replicates", "seed", "profile", "output_dir",
)
LIST_KEYS = ("families_true", "families_used", "theta", "theta_prime", "sample_sizes")


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _parse_family(text: str) -> CovarianceFamily:
    return CovarianceFamily(text)


def _parse_u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return value


_CONVERTERS: Dict[str, Callable[[str], object]] = {
    "preset": Preset,
    "families_true": _parse_family,
    "families_used": _parse_family,
    "theta": float,
    "theta_prime": float,
    "sample_sizes": int,
    "replicates": int,
    "seed": _parse_u64,
    "profile": Profile,
    "output_dir": str,
}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and validate config text, applying preset defaults"""
    raw: Dict[str, object] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigParseError("expected key=value", line=number)
        key, value = (part.strip() for part in content.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigParseError("unknown key", line=number, field=key)
        if key in raw:
            raise ConfigParseError("duplicate key", line=number, field=key)
        convert = _CONVERTERS[key]
        try:
            if key in LIST_KEYS:
                items = [item.strip() for item in value.split(",") if item.strip()]
                raw[key] = [convert(item) for item in items]
            else:
                raw[key] = convert(value)
        except ValueError as e:
            raise ConfigParseError(f"bad value {value!r}: {e}", line=number, field=key) from None
    return build_config(raw)


def build_config(raw: Dict[str, object]) -> ExperimentConfig:
    """Apply preset rules and defaults to parsed fields, then validate"""
    if "preset" not in raw:
        raise ConfigValidationError("preset")
    definition = PRESETS[raw["preset"]]
    for field in definition.required:
        if not raw.get(field):
            raise ConfigValidationError(field)
    fields = dict(definition.defaults)
    fields.update(raw)
    fields.setdefault("families_used", fields.get("families_true"))
    if definition.matched_theta:
        fields["theta_prime"] = fields.get("theta")
    fields.setdefault("replicates", settings.DEFAULT_REPLICATES)
    fields.setdefault("seed", settings.DEFAULT_SEED)
    fields.setdefault("profile", settings.DEFAULT_PROFILE)
    for field in ("families_true", "families_used", "theta", "theta_prime", "sample_sizes"):
        if not fields.get(field):
            raise ConfigValidationError(field)
    try:
        return ExperimentConfig(**fields)
    except ValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first["loc"] else "config"
        raise ConfigValidationError(field, first["msg"]) from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"cannot read {path}: {e}") from e
    config = parse_config_text(text)
    logger.info(f"Loaded {config.preset.value} config from {path} (hash {config.config_hash()[:12]})")
    return config


def apply_overrides(config: ExperimentConfig, seed: Optional[int] = None, replicates: Optional[int] = None,
                    output_dir: Optional[str] = None) -> ExperimentConfig:
    """Command-line flags take precedence over the file"""
    update = {k: v for k, v in (("seed", seed), ("replicates", replicates), ("output_dir", output_dir))
              if v is not None}
    if not update:
        return config
    try:
        return ExperimentConfig(**{**config.model_dump(), **update})
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigValidationError(str(first["loc"][0]), first["msg"]) from None


# ---------------------------------------------------------------------------
# Running presets
# ---------------------------------------------------------------------------

def expand_cells(config: ExperimentConfig) -> List[ExperimentCell]:
    """Cartesian grid in order family_true, θ, family_used, θ′, S"""
    definition = PRESETS[config.preset]
    cells = []
    for family_true in config.families_true:
        for theta in config.theta:
            used_families = [family_true] if definition.used_from_true else config.families_used
            for family_used in used_families:
                primes = [theta] if definition.matched_theta else config.theta_prime
                for theta_prime in primes:
                    for size in config.sample_sizes:
                        cells.append(ExperimentCell(
                            family_true=family_true, theta=theta, family_used=family_used,
                            theta_prime=theta_prime, size=size, profile=config.profile,
                            interval=config.interval,
                        ))
    return cells


def _series_key(cell: ExperimentCell) -> str:
    return f"{cell.family_true.value}_t{cell.theta:g}_{cell.family_used.value}_tp{cell.theta_prime:g}"


def _baseline(cell: ExperimentCell) -> ExperimentCell:
    return cell.model_copy(update={"family_used": cell.family_true, "theta_prime": cell.theta})


class ExperimentRunner:
    """Evaluates every cell of a config; Monte Carlo samples are cached per cell"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.definition = PRESETS[config.preset]
        self._samples: Dict[ExperimentCell, ErrorSamples] = {}

    def samples(self, cell: ExperimentCell) -> ErrorSamples:
        if cell not in self._samples:
            self._samples[cell] = run_monte_carlo(cell, self.config.replicates, self.config.seed)
        return self._samples[cell]

    def theory(self, cell: ExperimentCell) -> Optional[float]:
        """No theory value across families"""
        if cell.family_true != cell.family_used:
            return None
        true_model = make_model(cell.family_true, cell.theta, cell.profile)
        used_model = make_model(cell.family_used, cell.theta_prime, cell.profile)
        return theory_value(true_model, used_model, cell.h)

    def p_value(self, cell: ExperimentCell, samples: ErrorSamples) -> Optional[float]:
        """Paired test against the matched cell with the same true model and S"""
        if cell.matched:
            return None
        baseline = self.samples(_baseline(cell))
        try:
            return wilcoxon_signed_rank(samples.replicate_errors, baseline.replicate_errors).p_value
        except TooFewPairs as e:
            logger.warning(f"No Wilcoxon p-value for {cell.key}: {e}")
            return None

    def row(self, cell: ExperimentCell) -> ResultRow:
        theory = self.theory(cell)
        row = ResultRow(
            family_true=cell.family_true, theta=cell.theta, family_used=cell.family_used,
            theta_prime=cell.theta_prime, S=cell.size, h=cell.h, replicates=0,
            theory_error=theory, theory_profile=cell.profile,
        )
        if not self.definition.monte_carlo:
            return row
        samples = self.samples(cell)
        summary = summarize(samples.replicate_errors)
        if theory is None:
            logger.info(f"{cell.key}: empirical {summary.mean:.4e}")
        else:
            ratio = f"{summary.mean / theory:.3f}" if theory > 0.0 else "n/a"
            logger.info(f"{cell.key}: empirical {summary.mean:.4e}, theory {theory:.4e}, ratio {ratio}")
        return row.model_copy(update={
            "replicates": self.config.replicates,
            "emp_mean": summary.mean, "emp_std": summary.std,
            "emp_ci_lo": summary.ci95_low, "emp_ci_hi": summary.ci95_high,
            "p_value": self.p_value(cell, samples),
        })

    def curves(self, cells: List[ExperimentCell], rows: List[ResultRow]) -> List[CurveSeries]:
        series: Dict[str, CurveSeries] = {}

        def add(name: str, x: float, y: Optional[float]) -> None:
            if y is None:
                return
            series.setdefault(name, CurveSeries(name=name)).points.append((x, y))

        for cell, row in zip(cells, rows):
            key = _series_key(cell)
            x = float(row.S)
            add(f"empirical_{key}", x, row.emp_mean)
            add(f"theory_{key}", x, row.theory_error)
            if self.config.preset != Preset.THEORY_CURVE or not cell.matched:
                continue
            if cell.family_true == CovarianceFamily.EXPONENTIAL:
                add(f"asymptotic_{key}", x, exponential_error_asymptotic(cell.theta, row.h))
            elif cell.family_true == CovarianceFamily.SQUARED_EXPONENTIAL:
                lower, upper = se_error_bounds(cell.theta, row.h)
                add(f"se_lower_{key}", x, lower)
                add(f"se_upper_{key}", x, upper)
        for curve in series.values():
            curve.points.sort()
        return list(series.values())

    def run(self) -> ResultSet:
        cells = expand_cells(self.config)
        logger.info(f"Running {self.config.preset.value}: {len(cells)} cells, "
                    f"{self.config.replicates if self.definition.monte_carlo else 0} replicates each")
        rows = []
        for cell in cells:
            try:
                rows.append(self.row(cell))
            except GridKrigError as e:
                logger.error(f"Cell {cell.key} failed: {e}")
                raise CellFailure(cell.key, e) from e
        return ResultSet(
            rows=rows,
            curves=self.curves(cells, rows),
            provenance=Provenance(
                config_hash=self.config.config_hash(), seed=self.config.seed, preset=self.config.preset,
            ),
        )


def run_preset(config: ExperimentConfig) -> ResultSet:
    """Theory, Monte Carlo and statistics for every cell; writes nothing"""
    return ExperimentRunner(config).run()
