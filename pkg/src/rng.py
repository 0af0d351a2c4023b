"""
Counter-based random streams.

Every random draw in a run comes from a stream addressed by
(run seed, purpose, entity index, timestep). Streams are independent of one
another and of evaluation order, so robots can be processed in any order (or
in parallel) without changing a single number.
"""

import zlib

import numpy as np

# Stream purposes
INIT = "init"
SENSE = "sense"
CONTROL = "control"
TARGET = "target"


def _purpose_key(purpose: str) -> int:
    # Stable across processes, unlike hash()
    return zlib.crc32(purpose.encode("utf-8")) & 0xFFFFFFFF


def stream(seed: int, purpose: str, index: int = 0, step: int = 0) -> np.random.Generator:
    """
    Get the random stream for one entity at one timestep.

    Args:
        seed: Run seed (non-negative)
        purpose: One of INIT, SENSE, CONTROL, TARGET
        index: Entity index (robot or target)
        step: Timestep counter

    Returns:
        A fresh numpy Generator; identical arguments always give identical draws
    """
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}")
    sequence = np.random.SeedSequence(
        entropy=int(seed),
        spawn_key=(_purpose_key(purpose), int(index), int(step)),
    )
    return np.random.Generator(np.random.Philox(sequence))


def init_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Stream used by world initialization (placement and headings)."""
    return stream(seed, INIT, index, 0)
