"""Versioned binary container for built search structures.

Layout: 4-byte magic, u16 version, u32 header length, JSON header (family
tag, dimension, size, epsilon, seed, separation exponent, normalization),
then a pickled payload holding the search tree.
"""

from __future__ import annotations

import io
import json
import pickle
import struct

MAGIC = b"GVOR"
VERSION = 1


class ArtifactError(ValueError):
    pass


def save_artifact(path: str, tree, meta: dict) -> int:
    header = dict(meta)
    header.update(
        {
            "n": tree.params.n,
            "epsilon": tree.params.eps,
            "seed": tree.seed,
            "log2_N": tree.params.log2_n_big,
            "dim": tree.family.dim,
        }
    )
    head = json.dumps(header, sort_keys=True).encode()
    blob = pickle.dumps(tree, protocol=4)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HI", VERSION, len(head)))
        fh.write(head)
        fh.write(blob)
    return len(MAGIC) + 6 + len(head) + len(blob)


def read_header(path: str) -> dict:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ArtifactError("not a genvor artifact (bad magic)")
        version, hlen = struct.unpack("<HI", fh.read(6))
        if version != VERSION:
            raise ArtifactError(f"unsupported artifact version {version}")
        return json.loads(fh.read(hlen).decode())


def load_artifact(path: str):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ArtifactError("not a genvor artifact (bad magic)")
        version, hlen = struct.unpack("<HI", fh.read(6))
        if version != VERSION:
            raise ArtifactError(f"unsupported artifact version {version}")
        header = json.loads(fh.read(hlen).decode())
        tree = pickle.load(fh)
    return tree, header
