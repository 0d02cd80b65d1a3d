"""On-disk formats: scatterer bundles (JSON), modulation plans (TOML),
measurement contexts (JSON) and result records (CSV or JSON).

Complex numbers are always ``[re, im]`` pairs and matrices row-major nested
arrays. Every file carries ``format_version`` (currently 1).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli

from .core import BLOCK_NAMES, BcsContext, FrequencyGrid, PortLayout, ScattererBlocks, ValidationError
from .loads import LoadSegment, ModulationPlan, PortSchedule

FORMAT_VERSION = 1

_FF_KEYS = {"pp": "s_ff_pp", "tp": "s_ff_tp", "pt": "s_ff_pt", "tt": "s_ff_tt"}
_FD_KEYS = {"p": "s_fd_p", "t": "s_fd_t"}
_DF_KEYS = {"p": "s_df_p", "t": "s_df_t"}


class FormatError(ValidationError):
    """A file is malformed or violates a format constraint."""


def _err(path, where: str, msg: str) -> FormatError:
    return FormatError(f"{path}: {where}: {msg}")


def _complex(value, path, where) -> complex:
    if (isinstance(value, (list, tuple)) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(float(value[0]), float(value[1]))
    raise _err(path, where, f"expected a complex number as [re, im], got {value!r}")


def _matrix(value, rows: int, cols: int, path, where) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        got = len(value) if isinstance(value, list) else type(value).__name__
        raise _err(path, where, f"expected {rows} rows, got {got}")
    out = np.empty((rows, cols), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise _err(path, f"{where}[{i}]", f"expected {cols} columns, got {got}")
        for j, v in enumerate(row):
            out[i, j] = _complex(v, path, f"{where}[{i}][{j}]")
    return out


def _require(obj: dict, key: str, path, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise _err(path, where, f"missing key {key!r}")
    return obj[key]


def _check_version(doc, path):
    v = doc.get("format_version", FORMAT_VERSION) if isinstance(doc, dict) else None
    if v != FORMAT_VERSION:
        raise _err(path, "format_version", f"unsupported version {v!r} (expected {FORMAT_VERSION})")


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e


def load_bundle(path) -> tuple[ScattererBlocks, FrequencyGrid, PortLayout]:
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise _err(path, "top level", "expected a JSON object")
    _check_version(doc, path)
    lay = _require(doc, "layout", path, "top level")
    try:
        M, N, H, h_c = (int(_require(lay, k, path, "layout")) for k in ("M", "N", "H", "h_c"))
    except (TypeError, ValueError) as e:
        raise _err(path, "layout", f"integer expected ({e})") from e
    layout = PortLayout(M, N, H)
    g = _require(doc, "grid", path, "top level")
    try:
        grid = FrequencyGrid(float(_require(g, "f_in_hz", path, "grid")),
                             float(_require(g, "f_m_hz", path, "grid")), H, h_c)
    except (IndexError, ValueError) as e:
        raise _err(path, "grid", str(e)) from e
    zr = doc.get("z_ref", {"re": 50.0, "im": 0.0})
    z_ref = complex(float(_require(zr, "re", path, "z_ref")), float(zr.get("im", 0.0)))
    flat = doc.get("flat", False)
    if not isinstance(flat, bool):
        raise _err(path, "flat", "expected true or false")
    entries = _require(doc, "harmonics", path, "top level")
    if not isinstance(entries, list):
        raise _err(path, "harmonics", "expected an array")

    per_h: dict[int, dict[str, np.ndarray]] = {}
    for i, entry in enumerate(entries):
        where = f"harmonics[{i}]"
        h = _require(entry, "h", path, where)
        if not isinstance(h, int) or isinstance(h, bool):
            raise _err(path, where, f"harmonic index must be an integer, got {h!r}")
        if not flat and not 1 <= h <= H:
            raise _err(path, where, f"harmonic {h} outside [1, {H}]")
        if h in per_h:
            raise _err(path, where, f"harmonic {h} given twice")
        mats = {}
        ff = _require(entry, "s_ff", path, where)
        for key, name in _FF_KEYS.items():
            mats[name] = _matrix(_require(ff, key, path, f"{where}.s_ff"), M, M, path, f"{where} (h={h}).s_ff.{key}")
        fd = _require(entry, "s_fd", path, where)
        for key, name in _FD_KEYS.items():
            mats[name] = _matrix(_require(fd, key, path, f"{where}.s_fd"), M, N, path, f"{where} (h={h}).s_fd.{key}")
        df = _require(entry, "s_df", path, where)
        for key, name in _DF_KEYS.items():
            mats[name] = _matrix(_require(df, key, path, f"{where}.s_df"), N, M, path, f"{where} (h={h}).s_df.{key}")
        mats["s_dd"] = _matrix(_require(entry, "s_dd", path, where), N, N, path, f"{where} (h={h}).s_dd")
        per_h[h] = mats

    if flat:
        if len(per_h) != 1:
            raise _err(path, "harmonics", f"a flat bundle carries exactly one entry, got {len(per_h)}")
        only = next(iter(per_h.values()))
        stacked = {name: np.broadcast_to(only[name], (H,) + only[name].shape).copy() for name in BLOCK_NAMES}
    else:
        missing = [h for h in range(1, H + 1) if h not in per_h]
        if missing:
            raise _err(path, "harmonics", "harmonic " + ", ".join(map(str, missing)) + " absent")
        stacked = {name: np.stack([per_h[h][name] for h in range(1, H + 1)]) for name in BLOCK_NAMES}
    try:
        blocks = ScattererBlocks(z_ref=z_ref, layout=layout, **stacked)
    except ValidationError as e:
        raise _err(path, "harmonics", str(e)) from e
    return blocks, grid, layout


def _pairs(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def write_bundle(blocks: ScattererBlocks, grid: FrequencyGrid, path, flat: bool | None = None) -> None:
    """Serialize a bundle; ``flat`` defaults to whether all harmonics coincide."""
    flat = blocks.is_flat if flat is None else flat
    lay = blocks.layout
    hs = [1] if flat else range(1, lay.H + 1)
    entries = []
    for h in hs:
        b = blocks.harmonic(h)
        entries.append({
            "h": h,
            "s_ff": {k: _pairs(b[name]) for k, name in _FF_KEYS.items()},
            "s_fd": {k: _pairs(b[name]) for k, name in _FD_KEYS.items()},
            "s_df": {k: _pairs(b[name]) for k, name in _DF_KEYS.items()},
            "s_dd": _pairs(b["s_dd"]),
        })
    doc = {
        "format_version": FORMAT_VERSION,
        "layout": {"M": lay.M, "N": lay.N, "H": lay.H, "h_c": grid.h_c},
        "grid": {"f_in_hz": grid.f_in, "f_m_hz": grid.f_m},
        "z_ref": {"re": blocks.z_ref.real, "im": blocks.z_ref.imag},
        "flat": flat,
        "harmonics": entries,
    }
    _write_text(path, json.dumps(doc, separators=(",", ":")) + "\n")


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e


# --- modulation plans -------------------------------------------------------

def _state(table: dict, zkey: str, gkey: str, path, where) -> dict:
    has_z, has_g = zkey in table, gkey in table
    if has_z and has_g:
        raise _err(path, where, f"both {zkey!r} and {gkey!r} given; use one")
    if not (has_z or has_g):
        raise _err(path, where, f"one of {zkey!r} or {gkey!r} is required")
    key = zkey if has_z else gkey
    raw = table[key]
    if isinstance(raw, dict):
        value = {}
        for h, v in raw.items():
            try:
                hi = int(h)
            except ValueError:
                raise _err(path, f"{where}.{key}", f"harmonic key {h!r} is not an integer") from None
            value[hi] = _complex(v, path, f"{where}.{key}.{h}")
    else:
        value = _complex(raw, path, f"{where}.{key}")
    return {"impedance": value} if has_z else {"gamma": value}


def _number(table, key, path, where) -> float:
    v = _require(table, key, path, where)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(path, f"{where}.{key}", f"expected a number, got {v!r}")
    return float(v)


def load_plan(path) -> ModulationPlan:
    try:
        with open(path, "rb") as fh:
            doc = tomli.load(fh)
    except OSError as e:
        raise FormatError(f"{path}: cannot read: {e}") from e
    except tomli.TOMLDecodeError as e:
        raise FormatError(f"{path}: {e}") from e
    _check_version(doc, path)
    f_m = _number(doc, "f_m_hz", path, "top level")
    ports = _require(doc, "port", path, "top level")
    if not isinstance(ports, list) or not ports:
        raise _err(path, "port", "expected at least one [[port]] table")
    n = len(ports)
    by_index: dict[int, tuple[PortSchedule, object]] = {}
    for i, port in enumerate(ports):
        idx = port.get("index", i + 1)
        where = f"port {idx}"
        if not isinstance(idx, int) or isinstance(idx, bool) or not 1 <= idx <= n:
            raise _err(path, f"port[{i}]", f"unknown port index {idx!r}; expected 1..{n}")
        if idx in by_index:
            raise _err(path, where, "port index given twice")
        try:
            if "segment" in port:
                if "r_on" in port or "duty_on" in port:
                    raise _err(path, where, "use either [[port.segment]] entries or the r_on/duty_on form")
                segs = []
                for q, seg in enumerate(port["segment"]):
                    sw = f"{where} segment {q + 1}"
                    segs.append(LoadSegment(_number(seg, "duty", path, sw), **_state(seg, "z_ohms", "gamma", path, sw)))
                sched = PortSchedule(tuple(segs))
            else:
                r_on = _number(port, "r_on", path, where)
                duty_on = _number(port, "duty_on", path, where)
                on = _state(port, "z_on", "gamma_on", path, where)
                off = _state(port, "z_off", "gamma_off", path, where)
                sched = PortSchedule.two_state(r_on, duty_on, on, off)
        except FormatError:
            raise
        except ValidationError as e:
            raise _err(path, where, str(e)) from e
        by_index[idx] = (sched, port.get("label", idx))
    ordered = [by_index[i] for i in range(1, n + 1)]
    return ModulationPlan(
        tuple(s for s, _ in ordered), f_m,
        regime=str(doc.get("regime", Path(path).stem)),
        labels=tuple(lbl for _, lbl in ordered),
    )


def plan_table_pairs(path) -> list[tuple[object, float, float]]:
    """Raw ``(label, r_on, duty_on)`` triples of a two-state plan file."""
    with open(path, "rb") as fh:
        doc = tomli.load(fh)
    return [(p.get("label", p.get("index")), float(p["r_on"]), float(p["duty_on"])) for p in doc["port"]]


# --- measurement context ----------------------------------------------------

def _gain(spec, path, where):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec)
    if isinstance(spec, list):
        return [float(x) for x in spec]
    if isinstance(spec, dict) and "table" in spec:
        table = {}
        for i, row in enumerate(spec["table"]):
            key = (int(_require(row, "direction", path, f"{where}.table[{i}]")),
                   float(_require(row, "f_hz", path, f"{where}.table[{i}]")))
            table[key] = float(_require(row, "gain", path, f"{where}.table[{i}]"))

        def lookup(direction, f):
            for (d, fk), g in table.items():
                if d == direction and math.isclose(fk, f, rel_tol=1e-9):
                    return g
            raise ValidationError(f"{path}: {where}: no gain for direction {direction} at {f} Hz")

        return lookup
    raise _err(path, where, "gain must be a number, a per-direction list, or {\"table\": [...]}")


def load_context(path) -> BcsContext:
    doc = _read_json(path)
    _check_version(doc, path)
    try:
        return BcsContext(
            s_t=float(_require(doc, "s_t_m", path, "top level")),
            s_r=float(_require(doc, "s_r_m", path, "top level")),
            gain_tx=_gain(doc.get("gain_tx", 1.0), path, "gain_tx"),
            gain_rx=_gain(doc.get("gain_rx", 1.0), path, "gain_rx"),
        )
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from e


# --- result records ---------------------------------------------------------

@dataclass(frozen=True)
class ResultRecord:
    regime_id: str
    tau: int
    rho: int
    h: int
    k_offset: int
    f_hz: float
    re_b_phi: float
    im_b_phi: float
    re_b_theta: float
    im_b_theta: float
    power_w: float
    bcs_m2: float | None = None
    bcs_dbm2: float | None = None


RECORD_FIELDS = tuple(f.name for f in fields(ResultRecord))
_INT_FIELDS = {"tau", "rho", "h", "k_offset"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def records_to_text(records, fmt: str = "csv") -> str:
    records = list(records)
    if not records:
        raise ValidationError("no records to write")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([_fmt(getattr(r, name)) for name in RECORD_FIELDS])
        return buf.getvalue()
    if fmt == "json":
        doc = {"format_version": FORMAT_VERSION, "records": [asdict(r) for r in records]}
        return json.dumps(doc, indent=1) + "\n"
    raise ValidationError(f"unknown output format {fmt!r}; expected csv or json")


def write_records(records, path, fmt: str = "csv") -> None:
    _write_text(path, records_to_text(records, fmt))


write_spectrum = write_records
write_bcs_sweep = write_records


def _parse_field(name: str, text: str):
    if name == "regime_id":
        return text
    if text == "":
        return None
    return int(text) if name in _INT_FIELDS else float(text)


def read_records(path) -> list[ResultRecord]:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        _check_version(doc, path)
        return [ResultRecord(**r) for r in doc["records"]]
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != RECORD_FIELDS:
        raise _err(path, "line 1", f"header must be {','.join(RECORD_FIELDS)}")
    out = []
    for n, row in enumerate(rows[1:], start=2):
        if len(row) != len(RECORD_FIELDS):
            raise _err(path, f"line {n}", f"expected {len(RECORD_FIELDS)} fields, got {len(row)}")
        out.append(ResultRecord(*(_parse_field(k, v) for k, v in zip(RECORD_FIELDS, row))))
    return out
