"""Named, independent RNG streams for one training run.

Every stochastic component draws from its own stream so that enabling or
disabling one component (say, swapping the exploration strategy) never shifts
the random sequences seen by the others. This is what makes a lambda=0 run of
the learned explorer reproduce a greedy run action-for-action.
"""

import numpy as np

# Fixed order; changing it changes every seeded run.
STREAM_NAMES = ("env", "init", "action_noise", "smoothing", "buffer", "warmup")


class RngStreams:
    """Independent `np.random.Generator` streams derived from one root seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        root = np.random.SeedSequence(self.seed)
        children = root.spawn(len(STREAM_NAMES))
        self._streams = {
            name: np.random.default_rng(child)
            for name, child in zip(STREAM_NAMES, children)
        }
        # Recorded in run manifests so a run can be audited/reproduced.
        self.spawn_keys = {
            name: list(child.spawn_key)
            for name, child in zip(STREAM_NAMES, children)
        }

    def __getitem__(self, name: str) -> np.random.Generator:
        return self._streams[name]

    @property
    def env(self) -> np.random.Generator:
        return self._streams["env"]

    @property
    def init(self) -> np.random.Generator:
        return self._streams["init"]

    @property
    def action_noise(self) -> np.random.Generator:
        return self._streams["action_noise"]

    @property
    def smoothing(self) -> np.random.Generator:
        return self._streams["smoothing"]

    @property
    def buffer(self) -> np.random.Generator:
        return self._streams["buffer"]

    @property
    def warmup(self) -> np.random.Generator:
        return self._streams["warmup"]
