"""Serialization of run outputs.

Every artifact carries the resolved configuration and a sha256 of its own
content, so identical configurations give byte-identical files.
"""

import hashlib
import io
import json
import os
from pathlib import Path

OUTPUT_ENV = "CANETOADS_OUTPUT_DIR"
DEFAULT_OUTPUT = "canetoads-out"


def output_dir(explicit=None) -> Path:
    """--output-dir if given, else $CANETOADS_OUTPUT_DIR, else ./canetoads-out."""
    path = Path(explicit or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _jsonable(obj):
    # numpy scalars and arrays, tuples, enums
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def json_document(payload: dict, config: dict) -> str:
    """JSON text with ``config`` echo and a ``sha256`` of everything else."""
    body = {"config": config, **payload}
    text = json.dumps(body, sort_keys=True, default=_jsonable, allow_nan=True)
    body["sha256"] = _sha(text)
    return json.dumps(body, sort_keys=True, indent=2, default=_jsonable) + "\n"


def csv_document(header, rows, config: dict) -> str:
    """CSV with '# key = value' config lines on top and a trailing '# sha256: ...' line."""
    buf = io.StringIO()
    for k in sorted(config):
        buf.write(f"# {k} = {json.dumps(config[k], default=_jsonable)}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    return text + f"# sha256: {_sha(text)}\n"


def _fmt(v):
    if isinstance(v, str):
        return v
    return repr(float(v))


def verify_hash(text: str) -> bool:
    """True when the embedded sha256 matches the content (JSON or CSV)."""
    if text.lstrip().startswith("{"):
        body = json.loads(text)
        digest = body.pop("sha256", None)
        return digest == _sha(json.dumps(body, sort_keys=True, allow_nan=True))
    head, _, last = text.rstrip("\n").rpartition("\n")
    return last.startswith("# sha256: ") and last[len("# sha256: "):] == _sha(head + "\n")


def read_csv(text: str):
    """(config, header, rows as float lists) from :func:`csv_document` text."""
    config, header, rows = {}, None, []
    for line in text.splitlines():
        if line.startswith("# sha256:"):
            continue
        if line.startswith("# "):
            k, _, v = line[2:].partition(" = ")
            config[k] = json.loads(v)
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(c) for c in line.split(",")])
    return config, header, rows


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path
