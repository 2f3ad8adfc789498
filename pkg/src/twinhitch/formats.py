"""Bit-stable file formats: CSV tables, 16-bit PGM maps, JSON reports, datasets.

Floats are written with ``repr`` (shortest round-trip decimal). CSV files use
``\\n`` line endings, a leading block of ``# key: <json>`` metadata lines, one
header row, then data. Every file is written to a temporary name and renamed
into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from .errors import DatasetError
from .fit import Geometry, HitchDataset

DATASET_COLUMNS = ("net_gain", "pos1", "pos2", "sigma1", "sigma2")
DATASET_KEYS = ("angle_rad", "length_lambda", "k_rad_per_lambda", "seed_sigma_lambda")


def atomic_write(path, data: bytes):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps_json(obj, indent=2):
    """Deterministic JSON: sorted keys, non-finite floats as null."""
    return json.dumps(_jsonable(obj), indent=indent, sort_keys=True, allow_nan=False) + (
        "\n" if indent is not None else ""
    )


def table_bytes(columns, rows, metadata=None) -> bytes:
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"# {key}: {dumps_json(value, indent=None)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue().encode("utf-8")


def write_table(path, columns, rows, metadata=None):
    atomic_write(path, table_bytes(columns, rows, metadata))


def pgm_bytes(image) -> bytes:
    """Binary 16-bit PGM (P5, big-endian); values scaled so the maximum is 65535."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("PGM image must be 2-D")
    peak = image.max() if image.size else 0.0
    if peak > 0:
        scaled = np.rint(np.clip(image / peak, 0.0, 1.0) * 65535.0)
    else:
        scaled = np.zeros_like(image)
    rows, cols = image.shape
    header = f"P5\n{cols} {rows}\n65535\n".encode("ascii")
    return header + scaled.astype(">u2").tobytes()


def write_pgm(path, image):
    atomic_write(path, pgm_bytes(image))


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    cols, rows = (int(v) for v in parts[1].split())
    if int(parts[2]) != 65535:
        raise ValueError("only 16-bit PGM is supported")
    return np.frombuffer(parts[3], dtype=">u2").reshape(rows, cols).astype(np.uint16)


def write_json(path, obj):
    atomic_write(path, dumps_json(obj).encode("utf-8"))


def dataset_bytes(data: HitchDataset) -> bytes:
    g = data.geometry
    meta = {
        "angle_rad": g.angle,
        "length_lambda": g.length,
        "k_rad_per_lambda": g.k,
        "seed_sigma_lambda": g.seed_sigma,
    }
    if g.x0 != 0.0:
        meta["x0_lambda"] = g.x0
    rows = zip(data.net_gain, data.pos1, data.pos2, data.sigma1, data.sigma2)
    return table_bytes(DATASET_COLUMNS, rows, meta)


def write_dataset(path, data: HitchDataset):
    atomic_write(path, dataset_bytes(data))


def parse_dataset(text: str) -> HitchDataset:
    """Parse the dataset CSV schema; errors carry the offending line number."""
    meta = {}
    header_seen = False
    cols = [[] for _ in DATASET_COLUMNS]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if header_seen:
                raise DatasetError("metadata after the header row", lineno)
            key, sep, value = line[1:].partition(":")
            if not sep:
                raise DatasetError("metadata line must read '# key: value'", lineno)
            try:
                meta[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                raise DatasetError(f"bad metadata value {value.strip()!r}", lineno) from None
            continue
        fields_ = [f.strip() for f in line.split(",")]
        if not header_seen:
            if tuple(fields_) != DATASET_COLUMNS:
                raise DatasetError(f"header must be {','.join(DATASET_COLUMNS)}", lineno)
            header_seen = True
            continue
        if len(fields_) != len(DATASET_COLUMNS):
            raise DatasetError(
                f"expected {len(DATASET_COLUMNS)} fields, got {len(fields_)}", lineno
            )
        try:
            values = [float(f) for f in fields_]
        except ValueError:
            raise DatasetError(f"non-numeric field in {line!r}", lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise DatasetError("non-finite value", lineno)
        if values[0] <= 0:
            raise DatasetError("net_gain must be > 0", lineno)
        if values[3] <= 0 or values[4] <= 0:
            raise DatasetError("sigma1 and sigma2 must be > 0", lineno)
        for col, v in zip(cols, values):
            col.append(v)
    if not header_seen:
        raise DatasetError("missing header row")
    missing = [k for k in DATASET_KEYS if k not in meta]
    if missing:
        raise DatasetError(f"missing metadata keys: {', '.join(missing)}")
    try:
        geometry = Geometry(
            angle=float(meta["angle_rad"]),
            length=float(meta["length_lambda"]),
            k=float(meta["k_rad_per_lambda"]),
            seed_sigma=float(meta["seed_sigma_lambda"]),
            x0=float(meta.get("x0_lambda", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise DatasetError(f"bad metadata: {exc}") from None
    return HitchDataset(*cols, geometry=geometry)


def read_dataset(path) -> HitchDataset:
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh.read())
