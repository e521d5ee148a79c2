"""Self-describing data files.

Every file starts with ``# `` header lines holding the kind, the column
names, arbitrary metadata (including the full resolved config) as JSON and
the git blob SHA-1 of the body. Files are written to a temporary name and
renamed into place, so an interrupted run never leaves a partial file.
"""
import hashlib
import io
import json
import os
import tempfile

import numpy as np

MAGIC = "bellcat-data 1"


class DataFileError(ValueError):
    pass


def blob_sha1(data):
    """SHA-1 of ``data`` as git would hash it as a blob."""
    h = hashlib.sha1(b"blob %d\0" % len(data))
    h.update(data)
    return h.hexdigest()


def atomic_write(path, data):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_table(kind, columns, rows, meta):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size and rows.shape[1] != len(columns):
        raise DataFileError("row width does not match the column list")
    buf = io.StringIO()
    if rows.size:
        np.savetxt(buf, rows, fmt="%.17g", delimiter=",")
    body = buf.getvalue().encode()
    head = [
        f"# {MAGIC}",
        f"# kind: {kind}",
        f"# columns: {','.join(columns)}",
        f"# meta: {json.dumps(meta, sort_keys=True)}",
        f"# sha1: {blob_sha1(body)}",
    ]
    return ("\n".join(head) + "\n").encode() + body


def write_table(path, kind, columns, rows, meta):
    atomic_write(path, format_table(kind, columns, rows, meta))


def read_table(path, verify=True):
    """Return ``(kind, columns, meta, rows)``; raises on a hash mismatch."""
    with open(path, "rb") as fh:
        raw = fh.read()
    lines = raw.split(b"\n")
    head = {}
    n_head = 0
    for line in lines:
        if not line.startswith(b"# "):
            break
        key, _, val = line[2:].decode().partition(": ")
        head[key] = val
        n_head += 1
    if lines[0] != f"# {MAGIC}".encode():
        raise DataFileError(f"{path}: not a bellcat data file")
    body = b"\n".join(lines[n_head:])
    if verify and blob_sha1(body) != head.get("sha1"):
        raise DataFileError(f"{path}: content hash mismatch")
    columns = head["columns"].split(",")
    rows = (np.loadtxt(io.BytesIO(body), delimiter=",", ndmin=2) if body.strip()
            else np.empty((0, len(columns))))
    return head["kind"], columns, json.loads(head["meta"]), rows


def write_json(path, payload):
    """JSON report with the git blob hash of its canonical ``data`` member."""
    data = json.dumps(payload.get("data"), sort_keys=True).encode()
    doc = dict(payload, content_sha1=blob_sha1(data))
    atomic_write(path, (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode())
