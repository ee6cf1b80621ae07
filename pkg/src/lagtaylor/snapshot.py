"""Binary snapshots of fields ("CLXF") and Taylor states ("CLXT").

Field snapshot, all integers unsigned 32-bit little-endian, floats binary64
little-endian::

    b"CLXF" | version | kind byte (0 disk, 1 annulus) | r_inner | r_outer
            | n_theta | n_r | samples (components row-major, then theta, then r)

The component count is implied by the payload length (1, 2 or 4 arrays).

State checkpoint::

    b"CLXT" | version | path byte (0 simply-connected, 1 general) | N
            | omega0 snapshot
            | for n = 0..N: Yc[n], Gc[n], Vc[n], Qc[n] snapshots
            | ledger rows, N + 1 quadruples of binary64

Writes go to a temporary file in the target directory followed by a rename.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .domain import ANNULUS, DISK, DomainSpec
from .errors import SnapshotFormatError
from .fields import ScalarField, TensorField, VectorField, _Field, wrap
from .recursion import GENERAL, SC, NormLedger, TaylorState

FIELD_MAGIC = b"CLXF"
STATE_MAGIC = b"CLXT"
VERSION = 1

_KINDS = {DISK: 0, ANNULUS: 1}
_PATHS = {SC: 0, GENERAL: 1}
_HEAD = struct.Struct("<4sIBddII")
_STATE_HEAD = struct.Struct("<4sIBI")
_F64 = np.dtype("<f8")


def atomic_write(path, data: bytes | str):
    """Write ``data`` to ``path`` via a temporary file and ``os.replace``."""
    path = os.fspath(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- fields ----------------------------------------------------------------------------

def field_to_bytes(f: _Field) -> bytes:
    dom = f.domain
    head = _HEAD.pack(FIELD_MAGIC, VERSION, _KINDS[dom.kind], dom.r_inner, dom.r_outer,
                      dom.n_theta, dom.n_r)
    return head + np.ascontiguousarray(f.values, dtype=_F64).tobytes()


def _read_field(buf: bytes, offset: int, rank: int | None, sobolev_r: int):
    if len(buf) - offset < _HEAD.size:
        raise SnapshotFormatError("truncated field header")
    magic, version, kind, ri, ro, nt, nr = _HEAD.unpack_from(buf, offset)
    if magic != FIELD_MAGIC:
        raise SnapshotFormatError(f"bad field magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported field version {version}")
    kinds = {v: k for k, v in _KINDS.items()}
    if kind not in kinds:
        raise SnapshotFormatError(f"bad domain kind byte {kind}")
    try:
        dom = DomainSpec(kinds[kind], ri, ro, nt, nr, sobolev_r)
    except ValueError as exc:
        raise SnapshotFormatError(f"bad domain record: {exc}") from None
    offset += _HEAD.size
    plane = nt * nr * _F64.itemsize
    if rank is None:
        ncomp, rem = divmod(len(buf) - offset, plane)
        if rem or ncomp not in (1, 2, 4):
            raise SnapshotFormatError("payload length does not match a scalar, vector or tensor")
    else:
        ncomp = 2**rank
    size = ncomp * plane
    if len(buf) - offset < size:
        raise SnapshotFormatError("truncated field payload")
    vals = np.frombuffer(buf, dtype=_F64, count=ncomp * nt * nr, offset=offset)
    shape = {1: (), 2: (2,), 4: (2, 2)}[ncomp] + (nt, nr)
    return wrap(dom, vals.reshape(shape).astype(float)), offset + size


def field_from_bytes(buf: bytes, sobolev_r: int = 2) -> _Field:
    f, end = _read_field(buf, 0, None, sobolev_r)
    return f


def save_field(f: _Field, path):
    atomic_write(path, field_to_bytes(f))


def load_field(path, sobolev_r: int = 2) -> _Field:
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read(), sobolev_r)


# -- states ----------------------------------------------------------------------------

def state_to_bytes(state: TaylorState) -> bytes:
    N = state.N
    if len(state.Qc) != N + 1 or len(state.ledger) != N + 1:
        raise ValueError("state is mid-order; finish the expansion before saving")
    parts = [_STATE_HEAD.pack(STATE_MAGIC, VERSION, _PATHS[state.path], N),
             field_to_bytes(state.omega0)]
    for n in range(N + 1):
        for seq in (state.Yc, state.Gc, state.Vc, state.Qc):
            parts.append(field_to_bytes(seq[n]))
    parts.append(np.ascontiguousarray(state.ledger.as_array(), dtype=_F64).tobytes())
    return b"".join(parts)


def state_from_bytes(buf: bytes, sobolev_r: int = 2) -> TaylorState:
    if len(buf) < _STATE_HEAD.size:
        raise SnapshotFormatError("truncated state header")
    magic, version, path_byte, N = _STATE_HEAD.unpack_from(buf, 0)
    if magic != STATE_MAGIC:
        raise SnapshotFormatError(f"bad state magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported state version {version}")
    paths = {v: k for k, v in _PATHS.items()}
    if path_byte not in paths:
        raise SnapshotFormatError(f"bad path byte {path_byte}")
    off = _STATE_HEAD.size
    omega0, off = _read_field(buf, off, 0, sobolev_r)
    dom = omega0.domain
    seqs = {"Yc": [], "Gc": [], "Vc": [], "Qc": []}
    ranks = (("Yc", 2), ("Gc", 2), ("Vc", 1), ("Qc", 0))
    for _ in range(N + 1):
        for name, rank in ranks:
            f, off = _read_field(buf, off, rank, sobolev_r)
            if f.domain != dom:
                raise SnapshotFormatError("field domains disagree inside the checkpoint")
            seqs[name].append(f)
    need = 4 * (N + 1) * _F64.itemsize
    if len(buf) - off != need:
        raise SnapshotFormatError("ledger block has the wrong length")
    rows = np.frombuffer(buf, dtype=_F64, count=4 * (N + 1), offset=off).reshape(N + 1, 4)
    ledger = NormLedger(sobolev_r, [tuple(float(v) for v in r) for r in rows])
    return TaylorState(dom, paths[path_byte], omega0, seqs["Yc"], seqs["Gc"], seqs["Vc"],
                       seqs["Qc"], ledger)


def save_state(state: TaylorState, path):
    atomic_write(path, state_to_bytes(state))


def load_state(path, sobolev_r: int = 2) -> TaylorState:
    with open(path, "rb") as fh:
        return state_from_bytes(fh.read(), sobolev_r)


__all__ = ["FIELD_MAGIC", "STATE_MAGIC", "VERSION", "atomic_write", "field_to_bytes",
           "field_from_bytes", "save_field", "load_field", "state_to_bytes",
           "state_from_bytes", "save_state", "load_state", "ScalarField", "VectorField",
           "TensorField"]
