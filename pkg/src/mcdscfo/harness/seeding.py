"""Counter-based per-trial seeds."""

import hashlib
import struct

import numpy as np

__all__ = ["derive_trial_seed", "trial_rng"]

_MASK64 = (1 << 64) - 1


def derive_trial_seed(master_seed, experiment_id, sweep_index, trial_index):
    """
    64-bit seed for one trial, hashed from its coordinates.

    BLAKE2b over a fixed little-endian encoding, so the value is the same on
    every platform and independent of the order in which trials run.
    """
    exp = str(experiment_id).encode("utf-8")
    payload = struct.pack(
        "<QQQQ",
        int(master_seed) & _MASK64,
        len(exp),
        int(sweep_index) & _MASK64,
        int(trial_index) & _MASK64,
    )
    digest = hashlib.blake2b(payload + exp, digest_size=8, person=b"mcdscfo-trial").digest()
    return int.from_bytes(digest, "little")


def trial_rng(master_seed, experiment_id, sweep_index, trial_index):
    """Private generator for one trial."""
    seed = derive_trial_seed(master_seed, experiment_id, sweep_index, trial_index)
    return np.random.Generator(np.random.Philox(seed))
