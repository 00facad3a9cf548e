from __future__ import annotations

import csv
import io
import json
import os
import shutil
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

SCHEMA_VERSION = 1


def output_dir(args, cfg: dict) -> Path:
    """--out > config output_dir > $CPBLAB_OUTPUT_DIR > cwd."""
    for cand in (getattr(args, "out", None), cfg.get("output_dir"), os.getenv("CPBLAB_OUTPUT_DIR")):
        if cand:
            return Path(cand).expanduser()
    return Path.cwd()


def atomic_write_text(dst: Path, text: str):
    dst.parent.mkdir(parents=True, exist_ok=True)
    tmp = dst.with_suffix(dst.suffix + ".tmp-cpblab")
    with tmp.open("w", encoding="utf-8", newline="") as f:
        f.write(text)
    try:
        os.replace(tmp, dst)  # atomic on same volume
    except OSError:
        shutil.copyfile(tmp, dst)
        tmp.unlink(missing_ok=True)


def _header_lines(kind: str, cfg: Optional[dict], extra: Optional[dict]) -> List[str]:
    lines = [f"# schema: cpblab/{kind}/v{SCHEMA_VERSION}"]
    if cfg is not None:
        lines.append("# config: " + json.dumps(cfg, sort_keys=True))
    for k in sorted(extra or {}):
        lines.append(f"# {k}: " + json.dumps(extra[k], sort_keys=True))
    return lines


def write_csv(
    path: Path,
    kind: str,
    header: Sequence[str],
    rows: Iterable[Sequence],
    cfg: Optional[dict] = None,
    extra: Optional[dict] = None,
) -> Path:
    """CSV with '#' preamble (schema tag, resolved config, extras) then a header row.

    Floats are written with repr so identical runs give identical bytes.
    """
    buf = io.StringIO()
    for line in _header_lines(kind, cfg, extra):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    atomic_write_text(Path(path), buf.getvalue())
    return Path(path)


def read_csv(path: Path):
    """(meta, header, rows) from a file written by write_csv; values are left as strings."""
    meta, body = {}, []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = value if key == "schema" else json.loads(value)
            else:
                body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]


def write_json(path: Path, kind: str, payload: dict, cfg: Optional[dict] = None) -> Path:
    doc = {"schema": f"cpblab/{kind}/v{SCHEMA_VERSION}", **payload}
    if cfg is not None:
        doc["config"] = cfg
    atomic_write_text(Path(path), json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return Path(path)
