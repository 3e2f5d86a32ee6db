"""CSV tables with a commented run-manifest header, and grid parsing for the CLI."""
from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def fmt(value) -> str:
    """Shortest round-trip decimal for floats; str() for everything else."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "item"):  # numpy scalars
        return fmt(value.item())
    return str(value)


@dataclass
class CurveResult:
    """Rows of a grid sweep, in grid order."""

    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def body(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()


@dataclass
class RunManifest:
    command: str
    flags: dict
    seed: int | None = None
    version: str = __version__
    started: str = field(default_factory=lambda: dt.datetime.now(dt.timezone.utc).isoformat())

    def header(self, body: str) -> str:
        digest = hashlib.sha256(body.encode()).hexdigest()
        lines = [
            f"randfib {self.version}",
            f"command: {self.command}",
            f"flags: {json.dumps(self.flags, sort_keys=True, default=str)}",
            f"seed: {self.seed}",
            f"started: {self.started}",
            f"body_sha256: {digest}",
        ]
        return "".join(f"# {line}\n" for line in lines)


def render(result: CurveResult, manifest: RunManifest) -> str:
    body = result.body()
    return manifest.header(body) + body


def write(result: CurveResult, manifest: RunManifest, out: str | Path | None) -> str:
    text = render(result, manifest)
    if out is not None and str(out) != "-":
        Path(out).write_text(text)
    return text


def read_body(text: str) -> str:
    """Strip the '#' manifest lines from a rendered CSV."""
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("#"))


def parse_grid(spec: str) -> list[float]:
    """Either 'start:stop:step' (stop included) or a comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {spec!r} is not start:stop:step")
        start, stop, step = (float(x) for x in parts)
        if step <= 0.0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + i * step, 12) for i in range(count + 1)]
    return [float(x) for x in spec.split(",") if x.strip()]


def read_config(path: str | Path) -> dict:
    """key=value lines; '#' starts a comment. Keys use flag spelling (dashes or underscores)."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out
