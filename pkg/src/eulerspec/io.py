"""Serialization of run results: canonical JSON and delimited text."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

SCHEMA_VERSION = 1
RESULT_KINDS = ("spectrum", "evolution", "resolvent")

CSV_HEADERS = {
    "slices": ("qhat_x", "qhat_y", "n_lo", "n_hi", "beta_re", "beta_im"),
    "spectrum": ("qhat_x", "qhat_y", "re", "im", "converged"),
    "evolution": ("trial", "t", "norm"),
    "resolvent": ("tau", "resolvent_norm"),
}


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj, pretty: bool = False) -> str:
    """Deterministic JSON: sorted keys, shortest float repr, trailing newline."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2 if pretty else None) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def load_results(run_dir: Path) -> dict:
    """kind -> parsed JSON for every ``<kind>.json`` found in ``run_dir``."""
    run_dir = Path(run_dir)
    out = {}
    for kind in RESULT_KINDS:
        f = run_dir / f"{kind}.json"
        if f.is_file():
            data = json.loads(f.read_text())
            if data.get("schema") != SCHEMA_VERSION or data.get("kind") != kind:
                raise ValueError(f"{f} is not a schema-{SCHEMA_VERSION} {kind} result")
            out[kind] = data
    return out
