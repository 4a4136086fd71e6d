"""Fixed-width binary encoding of protocol state.

Every scalar is written as one presence byte plus a signed 64-bit integer, so
the encoded size depends only on the shape of the state (n and the protocol),
never on the magnitude of views, tags or counters.  Comparing sizes at several
points of a run therefore measures whether the state grows with run length.
"""

from __future__ import annotations

import struct
from typing import Any, Iterable

from .consensus import ACCEPTED, DECIDED, ENTERED, PROPOSED, Consensus
from .register import Register
from .synchronizer import Synchronizer

_SCALAR = struct.Struct("<bq")
_PHASES = {None: 0, ENTERED: 1, PROPOSED: 2, ACCEPTED: 3, DECIDED: 4}


def _flatten(x: Any) -> Iterable[int | None]:
    if isinstance(x, (tuple, list)):
        for item in x:
            yield from _flatten(item)
    else:
        yield x


def encode_scalars(items: Iterable[Any]) -> bytes:
    """Encode ints (or None) at fixed width; anything else is rejected."""
    out = bytearray()
    for v in _flatten(list(items)):
        if v is None:
            out += _SCALAR.pack(0, 0)
        elif isinstance(v, bool) or not isinstance(v, int):
            raise TypeError(f"cannot encode {v!r} as a fixed-width integer")
        else:
            out += _SCALAR.pack(1, v)
    return bytes(out)


def encode_synchronizer(s: Synchronizer) -> bytes:
    return encode_scalars([s.curr_view, s.views])


def encode_consensus(c: Consensus) -> bytes:
    return encode_scalars([c.view, _PHASES[c.phase], c.cview, c.val, c.my_proposal,
                           c.timeout, c.decision, c.m1b, c.m2a, c.m2b])


def encode_register(r: Register) -> bytes:
    status = ("IDLE", "WR_QUERY", "WR_PROPAGATE", "RD_QUERY", "RD_PROPAGATE").index(r.status)
    op_tag = r.op_tag if r.op_tag is not None else (None, None)
    return encode_scalars([r.val, r.tag, r.seq, status, r.wr_val, r.rd_val, op_tag,
                           r.query, r.query_ack, r.write, r.write_ack])


def state_sizes(nodes: dict) -> dict[str, dict[int, int]]:
    """Encoded byte size per protocol layer and process for the given nodes."""
    sizes: dict[str, dict[int, int]] = {}
    for pid, node in sorted(nodes.items()):
        if hasattr(node, "reg"):
            sizes.setdefault("register", {})[pid] = len(encode_register(node.reg))
            continue
        slot = node.slots.get(0)
        if slot is not None:
            sizes.setdefault("synchronizer", {})[pid] = len(encode_synchronizer(slot.sync))
            sizes.setdefault("consensus", {})[pid] = len(encode_consensus(slot.cons))
    return sizes
