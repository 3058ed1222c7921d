"""Event log records and their two text encodings.

``csv``   ``t_ms,event_kind,src,dst,detail`` with ``detail`` as ``k=v;k=v``
``jsonl`` one JSON object per line: ``{"t_us":..,"kind":..,"src":..,"dst":..,<detail>}``

Both start with run metadata (``# key=value`` lines, or a ``"kind":"meta"``
object) and decode back to identical records. Times are integer microseconds;
``dst`` is -1 for broadcasts and node-less records. Detail values are strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

CSV_HEADER = "t_ms,event_kind,src,dst,detail"
FORMATS = ("csv", "jsonl")


class Record(NamedTuple):
    t_us: int
    kind: str
    src: int
    dst: int
    detail: dict

    @property
    def t(self) -> float:
        return self.t_us / 1e6

    def get(self, key, default=None):
        return self.detail.get(key, default)


def fmt_ms(t_us: int) -> str:
    sign = "-" if t_us < 0 else ""
    q, r = divmod(abs(t_us), 1000)
    return f"{sign}{q}.{r:03d}"


def _parse_ms(s: str) -> int:
    neg = s.startswith("-")
    whole, _, frac = s.lstrip("-").partition(".")
    us = int(whole) * 1000 + int((frac + "000")[:3])
    return -us if neg else us


@dataclass
class EventLog:
    meta: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def add(self, t_us: int, kind: str, src: int = -1, dst: int = -1, **detail) -> None:
        self.records.append(Record(t_us, kind, src, dst, {k: str(v) for k, v in detail.items()}))

    def sort(self) -> None:
        self.records.sort(key=lambda r: r.t_us)

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def of_kind(self, *kinds) -> list[Record]:
        return [r for r in self.records if r.kind in kinds]

    # -- encoding ------------------------------------------------------------

    def dumps(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            lines = [f"# {k}={v}" for k, v in self.meta.items()]
            lines.append(CSV_HEADER)
            for r in self.records:
                detail = ";".join(f"{k}={v}" for k, v in r.detail.items())
                lines.append(f"{fmt_ms(r.t_us)},{r.kind},{r.src},{r.dst},{detail}")
        elif fmt == "jsonl":
            lines = [json.dumps({"kind": "meta", **{k: str(v) for k, v in self.meta.items()}})]
            for r in self.records:
                obj = {"t_us": r.t_us, "kind": r.kind, "src": r.src, "dst": r.dst, **r.detail}
                lines.append(json.dumps(obj, separators=(",", ":")))
        else:
            raise ValueError(f"unknown log format {fmt!r}; expected one of {FORMATS}")
        return "\n".join(lines) + "\n"

    def write(self, path, fmt: str = "csv") -> None:
        Path(path).write_text(self.dumps(fmt), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "EventLog":
        log = cls()
        lines = text.splitlines()
        if lines and lines[0].startswith("{"):
            for line in lines:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if obj.get("kind") == "meta" and "t_us" not in obj:
                    obj.pop("kind")
                    log.meta.update(obj)
                    continue
                t_us = int(obj.pop("t_us"))
                kind = obj.pop("kind")
                src = int(obj.pop("src"))
                dst = int(obj.pop("dst"))
                log.records.append(Record(t_us, kind, src, dst, {k: str(v) for k, v in obj.items()}))
            return log
        for line in lines:
            if not line.strip() or line == CSV_HEADER:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                log.meta[key] = value
                continue
            t_ms, kind, src, dst, detail = line.split(",", 4)
            d = {}
            if detail:
                for part in detail.split(";"):
                    k, _, v = part.partition("=")
                    d[k] = v
            log.records.append(Record(_parse_ms(t_ms), kind, int(src), int(dst), d))
        return log

    @classmethod
    def read(cls, path) -> "EventLog":
        return cls.loads(Path(path).read_text(encoding="utf-8"))
