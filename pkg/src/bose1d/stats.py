"""Energy estimates with block-averaged error bars."""
import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class EnergyEstimate:
    """Block-averaged mean energy.

    ``stderr`` is the standard error of the mean of ``n_blocks`` block
    means.  ``variance`` is the sample variance of the local energy (not
    of the mean); it is exactly zero for an exact eigenstate.
    """
    mean: float
    stderr: float
    n_blocks: int
    acceptance: float = 1.0
    variance: float = math.nan
    n_samples: int = 0
    n_discarded: int = 0

    def as_dict(self):
        return asdict(self)


def block_error(block_means):
    """Standard error of the mean from independent block means."""
    b = np.asarray(block_means, dtype=float)
    if b.size < 2:
        return math.nan
    return float(np.std(b, ddof=1) / math.sqrt(b.size))


def combine_shifted(shift, s1, s2, count):
    """Mean and variance from per-stream shifted sums.

    Stream ``w`` contributed values ``e`` through ``s1 = sum(e - shift)``,
    ``s2 = sum((e - shift)**2)`` and ``count``.  Shifting by a value close
    to the stream's data keeps the variance accurate when the spread is
    many orders of magnitude below the mean.
    """
    shift = np.asarray(shift, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    count = np.asarray(count, dtype=float)
    total = count.sum()
    if total == 0:
        return math.nan, math.nan
    used = count > 0
    mean_w = np.where(used, s1 / np.where(used, count, 1.0), 0.0)
    mean = float((shift * count).sum() + s1.sum()) / total
    centred = float(np.where(used, s2 - s1 * mean_w, 0.0).sum())
    spread = float((count * (shift + mean_w - mean) ** 2).sum())
    var = (centred + spread) / (total - 1.0) if total > 1 else 0.0
    return float(mean), max(float(var), 0.0)
