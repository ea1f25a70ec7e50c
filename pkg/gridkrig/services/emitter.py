"""
Result emitter
结果输出 - results.csv、curve_<name>.dat 与 manifest.txt

Output is a pure function of the ResultSet: fixed column order, round-trip float
formatting, no timestamps.
"""

import csv
import logging
import re
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

from gridkrig.core.exceptions import OutputError
from gridkrig.schemas.experiment import CSV_COLUMNS, CurveSeries, ResultSet

logger = logging.getLogger(__name__)

NA = "NA"


def format_value(value: object) -> str:
    if value is None:
        return NA
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        # shortest text that parses back to the same double
        return repr(float(value))
    return str(value)


def curve_filename(curve: CurveSeries) -> str:
    safe = re.sub(r"[^A-Za-z0-9_.-]", "_", curve.name)
    return f"curve_{safe}.dat"


def _write_csv(results: ResultSet, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in results.rows:
            data = row.model_dump()
            writer.writerow({column: format_value(data[column]) for column in CSV_COLUMNS})


def _write_curve(curve: CurveSeries, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# {curve.name}\n")
        f.write(f"# {curve.x_label} {curve.y_label}\n")
        for x, y in curve.points:
            f.write(f"{format_value(float(x))} {format_value(float(y))}\n")


def _write_manifest(results: ResultSet, artifacts: List[str], path: Path) -> None:
    provenance = results.provenance
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"config_hash={provenance.config_hash}\n")
        f.write(f"seed={provenance.seed}\n")
        f.write(f"preset={provenance.preset.value}\n")
        f.write(f"rows={len(results.rows)}\n")
        for name in artifacts:
            f.write(f"artifact={name}\n")


def emit_results(results: ResultSet, output_dir: Union[str, Path]) -> List[str]:
    """Write results.csv, one .dat per curve and manifest.txt; returns the written paths"""
    out = Path(output_dir)
    current: Optional[Path] = out
    try:
        out.mkdir(parents=True, exist_ok=True)
        written: List[Path] = []

        current = out / "results.csv"
        _write_csv(results, current)
        written.append(current)

        for curve in results.curves:
            current = out / curve_filename(curve)
            _write_curve(curve, current)
            written.append(current)

        current = out / "manifest.txt"
        _write_manifest(results, [p.name for p in written], current)
        written.append(current)
    except OSError as e:
        logger.error(f"Failed to write {current}: {e}")
        raise OutputError(str(current), e) from e

    logger.info(f"Wrote {len(written)} files to {out}")
    return [str(p) for p in written]
