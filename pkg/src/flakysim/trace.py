"""Trace records and their line-delimited JSON encoding.

A trace file is one header object followed by one object per event.  Field
order is fixed so identical runs produce identical bytes.  Event payloads only
hold ints, strings, booleans, ``None``, tuples and str-keyed dicts; tuples are
written as JSON arrays and read back as tuples, which makes the encoding
lossless.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Iterator, NamedTuple

FORMAT = "flakysim-trace"
VERSION = 1

KINDS = frozenset({
    "Send", "Deliver", "Drop", "Crash", "TimerSet", "TimerFire",
    "EnterView", "Advance", "Propose", "Decide", "Invoke", "Respond",
})


class TraceFormatError(ValueError):
    pass


class TraceEvent(NamedTuple):
    time: int
    seq: int
    process: int
    kind: str
    data: dict

    @property
    def instant(self) -> tuple[int, int]:
        """Position in the total trace order; use this for strict 'before'."""
        return (self.time, self.seq)


def _tuplify(x: Any) -> Any:
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    if isinstance(x, dict):
        return {k: _tuplify(v) for k, v in x.items()}
    return x


class Trace:
    def __init__(self, header: dict, events: list[TraceEvent]):
        self.header = header
        self.events = events

    @property
    def scenario(self) -> dict:
        return self.header["scenario"]

    @property
    def end_time(self) -> int:
        return self.header["end_time"]

    def of_kind(self, *kinds: str) -> Iterator[TraceEvent]:
        ks = set(kinds)
        return (e for e in self.events if e.kind in ks)

    def lines(self) -> Iterator[str]:
        yield json.dumps({"format": FORMAT, "version": VERSION, **self.header},
                         separators=(",", ":"))
        for e in self.events:
            yield json.dumps({"t": e.time, "seq": e.seq, "p": e.process,
                              "kind": e.kind, "data": e.data},
                             separators=(",", ":"))

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line)
                fh.write("\n")

    @classmethod
    def loads(cls, text: str) -> "Trace":
        return cls.from_lines(text.splitlines())

    @classmethod
    def load(cls, path) -> "Trace":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Trace":
        it = (ln for ln in lines if ln.strip())
        try:
            head = json.loads(next(it))
        except StopIteration:
            raise TraceFormatError("empty trace") from None
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"bad header: {exc}") from None
        if head.pop("format", None) != FORMAT:
            raise TraceFormatError("not a flakysim trace")
        if head.pop("version", None) != VERSION:
            raise TraceFormatError("unsupported trace version")
        events = []
        last = (-1, -1)
        for lineno, line in enumerate(it, start=2):
            try:
                raw = json.loads(line)
                ev = TraceEvent(raw["t"], raw["seq"], raw["p"], raw["kind"],
                                _tuplify(raw["data"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise TraceFormatError(f"line {lineno}: {exc}") from None
            if ev.kind not in KINDS:
                raise TraceFormatError(f"line {lineno}: unknown kind {ev.kind!r}")
            if ev.instant <= last:
                raise TraceFormatError(f"line {lineno}: events out of order")
            last = ev.instant
            events.append(ev)
        return cls(head, events)
