import numpy as np


def make_rng(seed, *stream):
    """Counter-based generator keyed by ``seed`` and an optional stream path.

    Every random draw in the package goes through here, so a run is fully
    determined by its seed and the (chunk, shot, run) indices it derives.
    """
    if seed is None:
        seed = 0
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(s) for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def derive_seed(seed, *stream):
    """A 63-bit child seed, e.g. for the i-th run of an experiment."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(s) for s in stream])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
