#!/usr/bin/env python3
"""Writes a scripted bridge session: the bytes a client must send and the
bytes a server answers with. Built with struct only, independent of the C++
codec."""

import struct
import sys
from pathlib import Path


def frame(ftype, payload):
    return struct.pack("<IB", len(payload) + 1, ftype) + payload


HELLO, EVAL, RESULT, ERROR = 1, 2, 3, 4

# 3x2 RGB image, pixel p has channels (10p, 10p + 1, 10p + 2).
width, height, channels = 3, 2, 3
pixels = bytes(v for p in range(6) for v in (10 * p, 10 * p + 1, 10 * p + 2))
classes = [7, 2]

client = b""
server = b""

hello = struct.pack("<IIBI", width, height, channels, len(classes))
hello += b"".join(struct.pack("<I", c) for c in classes)
hello += bytes([0, 128, 128, 128]) + pixels
client += frame(HELLO, hello)
server += frame(HELLO, struct.pack("<I", 2) + b"fixture-model")


def spans(members, n):
    runs, p = [], 0
    while p < n:
        if p in members:
            q = p
            while q < n and q in members:
                q += 1
            runs.append((p, q - p))
            p = q
        else:
            p += 1
    return runs


def eval_payload(request_id, masks):
    out = struct.pack("<II", request_id, len(masks))
    for m in masks:
        runs = spans(m, 6)
        out += struct.pack("<I", len(runs))
        for start, length in runs:
            out += struct.pack("<II", start, length)
    return out


def result_payload(request_id, rows):
    out = struct.pack("<III", request_id, len(rows), len(rows[0]))
    for row in rows:
        out += b"".join(struct.pack("<f", s) for s in row)
    return out


# Batch 1: {0,1,2}, {}, {0,2,3,5}. A stale RESULT arrives before the answer.
client += frame(EVAL, eval_payload(1, [{0, 1, 2}, set(), {0, 2, 3, 5}]))
server += frame(RESULT, result_payload(99, [[9.0, 9.0]]))
server += frame(RESULT, result_payload(1, [[0.5, -1.25], [0.0, 0.0], [0.75, 2.5]]))

# Batch 2: the model fails.
client += frame(EVAL, eval_payload(2, [{1, 4, 5}]))
server += frame(ERROR, struct.pack("<I", 7) + b"model crashed")

out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
(out / "bridge_client.bin").write_bytes(client)
(out / "bridge_server.bin").write_bytes(server)
