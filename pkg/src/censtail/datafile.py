"""Reading ``z,delta`` CSV files and flat ``key = value`` config files."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .core import CensoredSample
from .secondorder import SecondOrderModel


class DataParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column else "") + ": "
        super().__init__(where + msg)
        self.line, self.column = line, column


def parse_data(text: str, source: str = "<data>") -> CensoredSample:
    """Parse CSV with header ``z,delta``; ``#`` lines and blank lines are skipped."""
    header = None
    z, delta = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        fields = [f.strip() for f in next(csv.reader([s]))]
        if header is None:
            names = [f.lower() for f in fields]
            if "z" not in names or "delta" not in names:
                raise DataParseError(f"{source}: header must name columns z and delta", lineno)
            header = (names.index("z"), names.index("delta"), len(names))
            continue
        iz, idl, width = header
        if len(fields) != width:
            raise DataParseError(f"expected {width} fields, got {len(fields)}", lineno)
        try:
            v = float(fields[iz])
        except ValueError:
            raise DataParseError(f"z is not a number: {fields[iz]!r}", lineno, iz + 1) from None
        if not (math.isfinite(v) and v > 0):
            raise DataParseError(f"z must be positive and finite, got {fields[iz]!r}",
                                 lineno, iz + 1)
        if fields[idl] not in ("0", "1"):
            raise DataParseError(f"delta must be 0 or 1, got {fields[idl]!r}", lineno, idl + 1)
        z.append(v)
        delta.append(int(fields[idl]))
    if header is None:
        raise DataParseError(f"{source}: empty data file")
    if len(z) < 2:
        raise DataParseError(f"{source}: need at least 2 observations, got {len(z)}")
    return CensoredSample(z, delta)


def read_data(path: str | Path) -> CensoredSample:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_data(text, str(path))


def write_data(path: str | Path, sample: CensoredSample) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "delta"])
        for zi, di in zip(sample.z, sample.delta):
            w.writerow([f"{zi:.17g}", int(di)])


def parse_keyvalue(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        key, sep, value = s.partition("=")
        if not sep or not key.strip():
            raise DataParseError(f"{source}: expected key = value", lineno)
        out[key.strip()] = value.strip()
    return out


MODEL_KEYS = ("xi", "C", "D", "beta", "xi_c", "C_c", "D_c", "beta_c")


def parse_model(text: str, source: str = "<model>") -> SecondOrderModel:
    kv = parse_keyvalue(text, source)
    missing = [k for k in MODEL_KEYS if k not in kv]
    if missing:
        raise DataParseError(f"{source}: missing keys {', '.join(missing)}")
    unknown = sorted(set(kv) - set(MODEL_KEYS))
    if unknown:
        raise DataParseError(f"{source}: unknown keys {', '.join(unknown)}")
    vals = {}
    for k in MODEL_KEYS:
        num, _, den = kv[k].partition("/")
        try:
            vals[k] = float(num) / (float(den) if den else 1.0)
        except ValueError:
            raise DataParseError(f"{source}: {k} is not a number: {kv[k]!r}") from None
    return SecondOrderModel(**vals)
