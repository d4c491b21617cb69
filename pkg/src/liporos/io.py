"""Reading point clouds, molecules and functions; writing reports.

CSV clouds: one point per row, comma separated; blank lines and lines
starting with ``#`` are skipped; a trailing ``#base`` on a data row marks the
base point (default: the first row).

JSON clouds: {"points": [[...], ...], "base_index": 0, "space": {...}}.
JSON molecules either add "weights" aligned with "points", or carry
"molecule": [{"point_index": i, "weight": w}, ...]; a bare list of such
records refers to a separately loaded cloud. Base-point weights are dropped.
JSON functions add "values" aligned with "points".
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError
from .metric import LipFunction, PointCloud
from .spaces import BallSequence, space_from_dict


def sha256_file(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def inputs_digest(paths) -> dict:
    return {str(p): sha256_file(p) for p in paths}


def _read_text(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _read_json(path):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def parse_csv_points(text):
    rows, base = [], 0
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        data, _, tag = s.partition("#")
        if tag.strip() == "base":
            base = len(rows)
        try:
            row = [float(v) for v in next(csv.reader([data])) if v.strip()]
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}") from None
        rows.append(row)
    if not rows:
        raise InputError("no points found")
    if len({len(r) for r in rows}) != 1:
        raise InputError("rows have differing dimensions")
    return np.array(rows), base


def load_cloud(path, space=None) -> PointCloud:
    """Cloud from CSV or JSON; ``space`` overrides any descriptor in the file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        d = _read_json(path)
        if "points" not in d:
            raise InputError(f"{path}: missing 'points'")
        if space is None:
            if "space" not in d:
                raise InputError(f"{path}: no space given in file or on the command line")
            space = space_from_dict(d["space"])
        return PointCloud(space, np.asarray(d["points"], dtype=float), int(d.get("base_index", 0)))
    pts, base = parse_csv_points(_read_text(path))
    if space is None:
        raise InputError("CSV clouds need --space")
    return PointCloud(space, pts, base)


def load_weighted(path, key, space=None):
    d = _read_json(path)
    if key not in d:
        raise InputError(f"{path}: missing {key!r}")
    cloud = load_cloud(path, space)
    vals = np.asarray(d[key], dtype=float)
    if vals.shape != (len(cloud),):
        raise InputError(f"{path}: {key!r} must have one entry per point")
    return cloud, vals


def _molecule_records(cloud, records, path):
    from .kr import Molecule

    try:
        pairs = [(int(r["point_index"]), float(r["weight"])) for r in records]
    except (KeyError, TypeError, ValueError):
        raise InputError(f"{path}: molecule entries need point_index and weight") from None
    return Molecule.from_pairs(cloud, pairs)


def load_molecule(path, space=None, cloud=None):
    """Molecule from JSON; ``cloud`` supplies the points for a bare record list."""
    from .kr import Molecule

    d = _read_json(path)
    if isinstance(d, list):
        if cloud is None:
            raise InputError(f"{path}: a bare molecule list needs a cloud input")
        return _molecule_records(cloud, d, path)
    if "molecule" in d:
        return _molecule_records(cloud if "points" not in d else load_cloud(path, space), d["molecule"], path)
    cloud, w = load_weighted(path, "weights", space)
    return Molecule(cloud, np.arange(len(cloud)), w)


def load_function(path, space=None) -> LipFunction:
    cloud, v = load_weighted(path, "values", space)
    return LipFunction.rebased(cloud, v)


def load_balls(path, space=None) -> BallSequence:
    d = _read_json(path)
    if "balls" not in d:
        raise InputError(f"{path}: missing 'balls'")
    return BallSequence.from_dict(d, space)


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def dumps(report) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"


def write_json(report, path):
    Path(path).write_text(dumps(report))


def write_csv(rows, path):
    """Rows of flat dicts; columns are the union of keys in first-seen order."""
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _clean(v) for k, v in r.items()})
    Path(path).write_text(buf.getvalue())
