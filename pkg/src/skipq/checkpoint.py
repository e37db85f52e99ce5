"""Versioned binary checkpoints.

Layout: an 8-byte magic, a uint32 format version, a uint32 header length,
a canonical JSON header, then the raw little-endian float64 payload.  For
network backends the payload is every weight/bias array followed by the
RMSProp accumulators in the same order; for tabular backends it is the Q
table row by row.  The header additionally records the global step
counter, the extended action space, and (optionally) an RNG state, and is
serialized with sorted keys so identical states produce identical bytes:
save/load round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .actions import ExtendedActionSpace
from .agent import NetworkQ, TabularQ
from .errors import CheckpointError
from .nets import LayerSpec, NetworkParams, plan_shapes, _param_counts

MAGIC = b"SKIPQCK\x00"
VERSION = 1

NETWORK = "network"
TABULAR = "tabular"


@dataclass
class Checkpoint:
    step: int
    space: ExtendedActionSpace
    network: NetworkParams = None
    table: dict = None
    rng_state: dict = None

    @property
    def backend(self) -> str:
        return NETWORK if self.network is not None else TABULAR

    def q_function(self):
        """Materialize the stored Q function."""
        if self.network is not None:
            return NetworkQ(self.network)
        q = TabularQ(self.space.size)
        for state, row in self.table.items():
            q.set_row(state, row)
        return q


def from_tabular(q: TabularQ, space: ExtendedActionSpace, step: int = 0, rng_state=None) -> Checkpoint:
    return Checkpoint(step=step, space=space, table={s: row.copy() for s, row in q.table.items()}, rng_state=rng_state)


def from_network(params: NetworkParams, space: ExtendedActionSpace, step: int = 0, rng_state=None) -> Checkpoint:
    return Checkpoint(step=step, space=space, network=params, rng_state=rng_state)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    header = {
        "backend": ckpt.backend,
        "step": int(ckpt.step),
        "space": ckpt.space.to_dict(),
        "rng": ckpt.rng_state,
    }
    chunks = []
    if ckpt.backend == NETWORK:
        p = ckpt.network
        header["network"] = {
            "input_shape": list(p.input_shape),
            "output_count": p.output_count,
            "layers": [spec.to_dict() for spec in p.layers],
        }
        for w, b in zip(p.weights, p.biases):
            chunks.append(w)
            chunks.append(b)
        for w, b in zip(p.sq_avg_w, p.sq_avg_b):
            chunks.append(w)
            chunks.append(b)
    else:
        states = sorted(ckpt.table)
        header["tabular"] = {
            "action_count": ckpt.space.size,
            "states": [int(s) for s in states],
        }
        for s in states:
            chunks.append(np.asarray(ckpt.table[s], dtype=np.float64))
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for arr in chunks:
            fh.write(arr.astype("<f8").tobytes())


def _read_array(buf: memoryview, offset: int, count: int):
    end = offset + count * 8
    if end > len(buf):
        raise CheckpointError("checkpoint payload truncated")
    return np.frombuffer(buf[offset:end], dtype="<f8").astype(np.float64), end


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, header_len = struct.unpack_from("<II", blob, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header_start = len(MAGIC) + 8
    try:
        header = json.loads(blob[header_start : header_start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header") from exc
    payload = memoryview(blob)[header_start + header_len :]
    space = ExtendedActionSpace.from_dict(header["space"])
    step = header["step"]
    rng_state = header.get("rng")

    if header["backend"] == NETWORK:
        meta = header["network"]
        layers = tuple(LayerSpec.from_dict(d) for d in meta["layers"])
        input_shape = tuple(meta["input_shape"])
        output_count = meta["output_count"]
        shapes = plan_shapes(layers, input_shape, output_count)
        weights, biases, sq_w, sq_b = [], [], [], []
        offset = 0
        counts = []
        for i, spec in enumerate(layers):
            if spec.kind == "rectifier":
                continue
            counts.append(_param_counts(spec, shapes[i]))
        for w_count, b_count in counts:
            w, offset = _read_array(payload, offset, w_count)
            b, offset = _read_array(payload, offset, b_count)
            weights.append(w)
            biases.append(b)
        for w_count, b_count in counts:
            w, offset = _read_array(payload, offset, w_count)
            b, offset = _read_array(payload, offset, b_count)
            sq_w.append(w)
            sq_b.append(b)
        params = NetworkParams(
            layers=layers,
            input_shape=input_shape,
            output_count=output_count,
            weights=weights,
            biases=biases,
            sq_avg_w=sq_w,
            sq_avg_b=sq_b,
            shapes=shapes,
        )
        return Checkpoint(step=step, space=space, network=params, rng_state=rng_state)

    meta = header["tabular"]
    table = {}
    offset = 0
    for s in meta["states"]:
        row, offset = _read_array(payload, offset, meta["action_count"])
        table[int(s)] = row
    return Checkpoint(step=step, space=space, table=table, rng_state=rng_state)


def rng_state_of(rng) -> dict:
    return rng.bit_generator.state


def restore_rng(state: dict):
    rng = np.random.default_rng()
    rng.bit_generator.state = state
    return rng
