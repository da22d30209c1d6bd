"""Symbol sequence files: raw little-endian uint16 (.sym16) or decimal text.

Both formats begin with one header line
``# rha seed=<u64> schedule=<spec> n=<len>``; readers also accept raw
``.sym16`` data without a header.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .sampler import SymbolSequence

_HEADER = re.compile(rb"^# rha seed=(\d+) schedule=(.*) n=(\d+)$")


def header_line(seq: SymbolSequence) -> str:
    p = seq.provenance
    return f"# rha seed={int(p.get('seed', 0))} schedule={p.get('schedule', 'unknown')} n={len(seq)}"


def _fmt(path: Path, fmt: str | None) -> str:
    if fmt:
        return fmt
    return "sym16" if path.suffix == ".sym16" else "text"


def write_sequence(path, seq: SymbolSequence, fmt: str | None = None) -> Path:
    path = Path(path)
    fmt = _fmt(path, fmt)
    head = header_line(seq).encode() + b"\n"
    if fmt == "sym16":
        if len(seq) and int(seq.symbols.max()) > 0xFFFF:
            raise ValueError("symbols above 65535 do not fit the sym16 format")
        body = seq.symbols.astype("<u2").tobytes()
    elif fmt == "text":
        body = ("\n".join(map(str, seq.symbols.tolist())) + ("\n" if len(seq) else "")).encode()
    else:
        raise ValueError(f"unknown sequence format {fmt!r}")
    path.write_bytes(head + body)
    return path


def read_sequence(path, fmt: str | None = None, alphabet_size: int | None = None) -> SymbolSequence:
    path = Path(path)
    fmt = _fmt(path, fmt)
    data = path.read_bytes()
    prov: dict = {}
    n_expected = None
    if data.startswith(b"# rha"):
        line, _, data = data.partition(b"\n")
        m = _HEADER.match(line)
        if not m:
            raise ValueError(f"malformed header in {path}")
        prov = {"seed": int(m.group(1)), "schedule": m.group(2).decode(), "length": int(m.group(3))}
        n_expected = prov["length"]
    if fmt == "sym16":
        if len(data) % 2:
            raise ValueError("sym16 payload has odd length")
        syms = np.frombuffer(data, dtype="<u2").astype(np.uint16)
    else:
        lines = [t for t in data.decode().split() if t]
        syms = np.array([int(t) for t in lines], dtype=np.int64)
        if syms.size and syms.max() <= 0xFFFF:
            syms = syms.astype(np.uint16)
    if n_expected is not None and syms.size != n_expected:
        raise ValueError(f"header says n={n_expected} but file holds {syms.size} symbols")
    k = alphabet_size or (int(syms.max()) if syms.size else 1)
    return SymbolSequence(k, syms, prov)
