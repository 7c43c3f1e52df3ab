"""File formats: susceptibility grids, device profiles and JSON reports."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .attacker import FeasibleSet, FlipPair
from .errors import LoadError, ParameterError
from .receiver import ReceiverParams
from .signal_core import CommonModeCurve, SubtractorParams, TransferParams

GRID_COLUMNS = ("freq_hz", "amplitude_vpp", "u", "v", "n")
FIXTURE_ENV = "DIFFINJECT_FIXTURES"
TOOL = "diffinject"


@dataclass(frozen=True)
class GridRow:
    freq_hz: float
    amplitude_vpp: float
    u: float
    v: float
    n: int

    @property
    def key(self):
        return (self.freq_hz, self.amplitude_vpp)


@dataclass(frozen=True)
class SusceptibilityGrid:
    rows: tuple[GridRow, ...] = ()
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        seen = set()
        for i, r in enumerate(self.rows, 1):
            _validate_row(r, i)
            if r.key in seen:
                raise LoadError(f"row {i}: duplicate (freq_hz, amplitude_vpp) = {r.key}")
            seen.add(r.key)

    def __len__(self):
        return len(self.rows)


def _validate_row(r: GridRow, i: int):
    for name in ("u", "v"):
        x = getattr(r, name)
        if not 0.0 <= x <= 1.0:
            raise LoadError(f"row {i}: {name}={x} outside [0, 1]")
    if not r.freq_hz > 0:
        raise LoadError(f"row {i}: freq_hz must be > 0, got {r.freq_hz}")
    if not r.amplitude_vpp > 0:
        raise LoadError(f"row {i}: amplitude_vpp must be > 0, got {r.amplitude_vpp}")
    if r.n < 0:
        raise LoadError(f"row {i}: n must be >= 0, got {r.n}")


def resolve_fixture(name: str | os.PathLike) -> Path:
    """Find a data file: as given, then in $DIFFINJECT_FIXTURES, then bundled."""
    p = Path(name)
    if p.exists():
        return p
    env = os.environ.get(FIXTURE_ENV)
    if env and (Path(env) / p.name).exists():
        return Path(env) / p.name
    bundled = resources.files("diffinject") / "data" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise LoadError(f"file not found: {name}")


def load_grid(path) -> SusceptibilityGrid:
    path = resolve_fixture(path)
    comments, body = [], []
    with open(path, newline="") as fh:
        for line in fh:
            (comments if line.startswith("#") else body).append(line.rstrip("\r\n"))
    body = [b for b in body if b.strip()]
    if not body:
        raise LoadError(f"{path}: no header line")
    reader = csv.reader(body)
    header = [h.strip() for h in next(reader)]
    missing = [c for c in GRID_COLUMNS if c not in header]
    if missing:
        raise LoadError(f"{path}: missing column(s) {', '.join(missing)}")
    col = {c: header.index(c) for c in GRID_COLUMNS}
    rows = []
    for i, rec in enumerate(reader, 1):
        if len(rec) != len(header):
            raise LoadError(f"{path}: row {i}: expected {len(header)} fields, got {len(rec)}")
        try:
            r = GridRow(
                float(rec[col["freq_hz"]]),
                float(rec[col["amplitude_vpp"]]),
                float(rec[col["u"]]),
                float(rec[col["v"]]),
                int(rec[col["n"]]),
            )
        except ValueError as exc:
            raise LoadError(f"{path}: row {i}: malformed number ({exc})") from None
        rows.append(r)
    try:
        return SusceptibilityGrid(tuple(rows), tuple(c[1:].strip() for c in comments))
    except LoadError as exc:
        raise LoadError(f"{path}: {exc}") from None


def _fmt(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_grid(grid: SusceptibilityGrid) -> str:
    buf = io.StringIO()
    for c in grid.comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(GRID_COLUMNS) + "\n")
    for r in grid.rows:
        buf.write(",".join([_fmt(r.freq_hz), _fmt(r.amplitude_vpp), _fmt(r.u), _fmt(r.v), str(r.n)]) + "\n")
    return buf.getvalue()


def save_grid(grid: SusceptibilityGrid, path):
    Path(path).write_text(format_grid(grid))


def grid_to_feasible(grid: SusceptibilityGrid) -> FeasibleSet:
    return FeasibleSet(FlipPair(r.u, r.v, (r.freq_hz, r.amplitude_vpp)) for r in grid.rows)


# -- device profiles -------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    name: str
    subtractor: SubtractorParams
    receiver: ReceiverParams
    transfer: TransferParams | None = None


def _subtractor_from(d: dict) -> SubtractorParams:
    d = dict(d)
    curve = dict(d.pop("g_cm_curve", {}))
    curve["bumps"] = tuple(tuple(b) for b in curve.get("bumps", ()))
    d["distortion_coeffs"] = tuple(d.get("distortion_coeffs", ()))
    return SubtractorParams(g_cm_curve=CommonModeCurve(**curve), **d)


def profile_from_dict(d: dict) -> Profile:
    try:
        sp = _subtractor_from(d.get("subtractor", {}))
        rp = ReceiverParams(**d.get("receiver", {}))
        tr = d.get("transfer")
        return Profile(d.get("name", "custom"), sp, rp, TransferParams(**tr) if tr else None)
    except TypeError as exc:
        raise LoadError(f"bad profile field: {exc}") from None


def profile_to_dict(p: Profile) -> dict:
    out = {"name": p.name, "subtractor": asdict(p.subtractor), "receiver": asdict(p.receiver)}
    out["transfer"] = asdict(p.transfer) if p.transfer else None
    return out


def load_profile(name_or_path) -> Profile:
    name = str(name_or_path)
    if not name.endswith(".json"):
        name += ".json"
    path = resolve_fixture(name)
    try:
        return profile_from_dict(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise LoadError(f"{path}: invalid JSON ({exc})") from None


# -- reports -----------------------------------------------------------------

def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def make_report(command: str, config: dict, result: dict, master_seed: int | None = None) -> dict:
    from . import __version__

    return {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "master_seed": master_seed,
        "config_hash": config_hash(config),
        "config": config,
        "result": result,
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["tool", "version", "command", "master_seed", "config_hash", "config", "result"],
    "properties": {
        "tool": {"const": TOOL},
        "version": {"type": "string"},
        "command": {"type": "string"},
        "master_seed": {"type": ["integer", "null"]},
        "config_hash": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "config": {"type": "object"},
        "result": {"type": "object"},
    },
    "additionalProperties": False,
}

CAMPAIGN_RESULT_SCHEMA = {
    "type": "object",
    "required": ["successes", "trials", "rate", "ci95", "per_bit_failures"],
    "properties": {
        "successes": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "rate": {"type": "number", "minimum": 0, "maximum": 1},
        "ci95": {
            "type": "array", "minItems": 2, "maxItems": 2,
            "items": {"type": "number", "minimum": 0, "maximum": 1},
        },
        "per_bit_failures": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
}


def check_probability(name: str, x: float):
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1], got {x}")
