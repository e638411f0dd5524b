"""JSON-lines persistence helpers shared by the CLI and the review service.

All persisted records carry a schema version field "v". Serialisation is
canonical (sorted keys, repr-exact floats) so identical pipeline outputs
produce identical bytes.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

SCHEMA_VERSION = 1


def dumps_canonical(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_jsonl(path: str | os.PathLike, records: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(dumps_canonical(record))
            fh.write("\n")
            count += 1
    return count


def read_jsonl(path: str | os.PathLike) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
