"""Deterministic serialization helpers shared by the CLI artifacts.

JSON is emitted with sorted keys, two-space indentation and a trailing
newline, and ``allow_nan=False`` so a NaN or infinity slipping into a
report fails loudly instead of producing invalid JSON.  Floats render via
``repr`` (shortest round-trip form), which makes artifacts byte-stable
across runs: equal numbers always serialize to equal bytes.
"""

import json

SCHEMA_VERSION = "1"


def json_dumps(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def roc_csv(points) -> str:
    """CSV rendering of (threshold, fpr, tpr) triples."""
    lines = ["threshold,fpr,tpr"]
    for threshold, fpr, tpr in points:
        lines.append(f"{threshold!r},{fpr!r},{tpr!r}")
    return "\n".join(lines) + "\n"
