"""Config ingestion and CSV/JSON emission."""

from __future__ import annotations

import csv
import io
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import IO, Optional, Sequence, Union

import numpy as np

from .errors import InvalidParameter
from .model import LmmseCurve, ProcessSpec, TabulatedSpectrum, spec_from_config

Destination = Union[str, Path, IO[str], None]


def fmt_number(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan literals; keep them as strings
        return x if math.isfinite(x) else fmt_number(x)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def _write(text: str, destination: Destination):
    if destination is None:
        import sys

        sys.stdout.write(text)
    elif isinstance(destination, (str, Path)):
        Path(destination).write_text(text)
    else:
        destination.write(text)


def table_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt_number(row.get(c)) if not isinstance(row.get(c), str) else row.get(c)
                    for c in columns])
    return buf.getvalue()


def emit_table(rows: Sequence[dict], columns: Sequence[str], fmt: str = "csv",
               destination: Destination = None, summary: Optional[dict] = None):
    if fmt == "csv":
        _write(table_csv(rows, columns), destination)
    elif fmt == "json":
        body = {"columns": list(columns), "rows": [{c: r.get(c) for c in columns} for r in rows]}
        if summary is not None:
            body = {"summary": summary, **body}
        _write(dumps_json(body), destination)
    else:
        raise InvalidParameter("format", f"unknown format {fmt!r}")


def emit_curve(curve: LmmseCurve, fmt: str = "csv", destination: Destination = None,
               value_name: str = "value"):
    """CSV header ``d,<value_name>``; JSON adds the cmmse/mmse/var0 anchors."""
    rows = [{"d": d, value_name: v} for d, v in zip(curve.d, curve.values)]
    if fmt == "json":
        _write(dumps_json({"cmmse": curve.cmmse, "mmse": curve.mmse, "var0": curve.var0,
                           "d": curve.d, value_name: curve.values}), destination)
    else:
        emit_table(rows, ["d", value_name], "csv", destination)


def read_curve_csv(text: str):
    """Inverse of the CSV curve emitter: returns (d, values) arrays."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or len(header) != 2 or header[0] != "d":
        raise InvalidParameter("csv", "expected a 'd,<value>' header")
    rows = [(float(a), float(b)) for a, b in reader]
    if not rows:
        return np.zeros(0), np.zeros(0)
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def parse_grid(text: str) -> np.ndarray:
    """'start:step:stop' (stop included when on the lattice) or 'a,b,inf,...'."""
    text = text.strip()
    if not text:
        return np.zeros(0)
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step <= 0 or stop < start or not math.isfinite(start + step + stop):
                raise InvalidParameter("grid", "need start <= stop and a positive finite step")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(n)
        return np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError:
        raise InvalidParameter("grid", f"cannot parse {text!r}") from None


def parse_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InvalidParameter("list", f"cannot parse {text!r}") from None


@lru_cache(maxsize=1)
def process_schema() -> dict:
    with resources.files("lagmmse").joinpath("schema/process_spec.schema.json").open() as fh:
        return json.load(fh)


def validate_config(cfg: dict) -> dict:
    import jsonschema

    try:
        jsonschema.validate(cfg, process_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "variant"
        raise InvalidParameter(where, exc.message) from None
    return cfg


def spec_from_json(cfg: dict) -> ProcessSpec:
    return spec_from_config(validate_config(cfg))


def read_tabulated_csv(text: str) -> TabulatedSpectrum:
    """Two columns (omega, s_value), optional header."""
    rows = []
    for i, rec in enumerate(csv.reader(io.StringIO(text))):
        if not rec or not rec[0].strip():
            continue
        try:
            rows.append((float(rec[0]), float(rec[1])))
        except (ValueError, IndexError):
            if i or len(rec) != 2:
                raise InvalidParameter("csv", f"bad row {rec!r}") from None
    if not rows:
        raise InvalidParameter("csv", "no spectrum samples")
    arr = np.array(rows)
    return TabulatedSpectrum(arr[:, 0], arr[:, 1])


def load_spec(source: str) -> tuple[ProcessSpec, dict]:
    """Spec from a JSON file, a two-column CSV file, or an inline JSON object.

    Returns the spec and the raw config (which may carry ``snr``).
    """
    if source.lstrip().startswith("{"):
        try:
            cfg = json.loads(source)
        except json.JSONDecodeError as exc:
            raise InvalidParameter("spec", f"invalid inline JSON: {exc.msg}") from None
        return spec_from_json(cfg), cfg
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidParameter("spec", f"cannot read {source}: {exc.strerror}") from None
    if path.suffix.lower() == ".csv":
        spec = read_tabulated_csv(text)
        return spec, {"variant": "tabulated_gaussian"}
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameter("spec", f"{source}: {exc.msg}") from None
    return spec_from_json(cfg), cfg


def write_spec(spec: ProcessSpec, destination: Destination, snr: Optional[float] = None):
    from .model import spec_to_config

    cfg = spec_to_config(spec)
    if snr is not None:
        cfg["snr"] = snr
    _write(dumps_json(cfg), destination)
