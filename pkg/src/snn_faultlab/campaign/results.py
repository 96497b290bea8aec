"""Result rows and their CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

HEADER = (
    "attack", "layer", "delta", "vdd", "fraction", "defenses",
    "seed", "accuracy", "baseline", "relative_degradation",
)
BASELINE = "Baseline"
DIGITS = 6


def _round(x: float | None) -> float | None:
    return None if x is None else round(float(x), DIGITS)


def relative_degradation(baseline: float, accuracy: float) -> float:
    """(baseline - accuracy) / baseline; 0 when the baseline itself is 0."""
    if baseline <= 0:
        return 0.0
    return (baseline - accuracy) / baseline


@dataclass(frozen=True)
class ResultRow:
    attack: str
    layer: str
    delta: float | None
    vdd: float | None
    fraction: float
    defenses: str
    seed: int
    accuracy: float
    baseline: float
    relative_degradation: float

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")
        if self.relative_degradation > 1.0:
            raise ValueError("relative degradation cannot exceed 1")

    @classmethod
    def make(cls, attack, layer, delta, vdd, fraction, defenses, seed, accuracy, baseline):
        """Build a row with every float already at CSV precision."""
        accuracy = _round(accuracy)
        baseline = _round(baseline)
        return cls(
            attack, layer, _round(delta), _round(vdd), _round(fraction), defenses, int(seed),
            accuracy, baseline, _round(relative_degradation(baseline, accuracy)),
        )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{DIGITS}f}"
    return str(value)


def format_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow([_cell(getattr(row, name)) for name in HEADER])
    return buf.getvalue()


def write_csv(rows: Iterable[ResultRow], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows))
    return path


def _opt_float(text: str) -> float | None:
    return float(text) if text else None


def parse_csv(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != HEADER:
        raise ValueError(f"unexpected CSV header: {header}")
    rows = []
    for rec in reader:
        attack, layer, delta, vdd, fraction, defenses, seed, acc, base, rel = rec
        rows.append(
            ResultRow(
                attack, layer, _opt_float(delta), _opt_float(vdd), float(fraction), defenses,
                int(seed), float(acc), float(base), float(rel),
            )
        )
    return rows


def read_csv(path: Path | str) -> list[ResultRow]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))
