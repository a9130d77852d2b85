"""Running mean/std observation normalization (used by the DDPG variant)."""

import numpy as np


class RunningNorm:
    """Welford-style running statistics over observed states.

    Updated only while collecting data; evaluation and update phases read the
    frozen statistics. Before any update it behaves as the identity.
    """

    def __init__(self, dim, epsilon=1e-8):
        self.dim = int(dim)
        self.epsilon = float(epsilon)
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros(dim)

    def update(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        for row in x:
            self.count += 1
            delta = row - self.mean
            self.mean += delta / self.count
            self.m2 += delta * (row - self.mean)

    @property
    def std(self):
        if self.count < 2:
            return np.ones(self.dim)
        return np.sqrt(self.m2 / self.count + self.epsilon)

    def normalize(self, x):
        if self.count < 2:
            return np.asarray(x, dtype=float)
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def state_dict(self):
        return {"count": self.count, "mean": self.mean.copy(), "m2": self.m2.copy()}

    def load_state_dict(self, d):
        self.count = int(d["count"])
        self.mean = np.asarray(d["mean"], dtype=float).copy()
        self.m2 = np.asarray(d["m2"], dtype=float).copy()
