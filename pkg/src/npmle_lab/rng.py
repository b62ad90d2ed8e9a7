"""Counter-based random streams.

Every stream is a Philox4x64-10 generator (numpy's ``Philox``) whose 128-bit
key is the first 16 bytes of SHA-256 of the UTF-8 string
``"{master_seed}:{purpose}:{index}"``, read big-endian. The counter starts at
zero. Independent purposes (inputs, labels, initialisation, minibatches, ...)
therefore never share state, and another implementation of Philox can
reproduce the streams from the same triple.
"""

import hashlib

import numpy as np


def stream_key(seed, purpose, index=0):
    digest = hashlib.sha256(f"{int(seed)}:{purpose}:{int(index)}".encode()).digest()
    return int.from_bytes(digest[:16], "big")


def substream(seed, purpose, index=0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stream_key(seed, purpose, index)))
