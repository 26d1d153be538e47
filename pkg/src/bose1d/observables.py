"""One-body density and pair-correlation histograms.

Histograms accumulate weighted positions from a sample stream (VMC with
unit weights, DMC with walker weights).  Accumulation is additive, so
partial histograms from several workers combine with :meth:`merge`.
After :meth:`normalize` the bin values integrate to one.
"""
import json
import math
import warnings

import numpy as np

from .errors import DomainError

DENSITY_BINS = 200
PAIR_BINS = 100
HARMONIC_EXTENT = 6.0


class BinningMismatch(ValueError):
    """Histograms with different edges were combined."""


def _fmt(v):
    return format(float(v), ".12g")


class _Histogram:
    ndim = 0

    def __init__(self, edges, weights=None, sumw2=None, total=0.0, rejected=0,
                 normalized=False):
        self.edges = edges
        shape = tuple(len(e) - 1 for e in edges)
        self.weights = np.zeros(shape) if weights is None else np.asarray(weights, dtype=float)
        self.sumw2 = np.zeros(shape) if sumw2 is None else np.asarray(sumw2, dtype=float)
        self.total = float(total)
        self.rejected = int(rejected)
        self.normalized = normalized

    @property
    def widths(self):
        return [e[1] - e[0] for e in self.edges]

    @property
    def centers(self):
        c = [0.5 * (e[1:] + e[:-1]) for e in self.edges]
        return c[0] if self.ndim == 1 else c

    @property
    def cell_area(self):
        return math.prod(self.widths)

    def _same_binning(self, other):
        return (type(self) is type(other)
                and all(a.shape == b.shape and np.array_equal(a, b)
                        for a, b in zip(self.edges, other.edges)))

    def empty_like(self):
        return self._from_edges(self.edges)

    def merge(self, other):
        """Add another partial histogram into this one (in place)."""
        if not self._same_binning(other):
            raise BinningMismatch("cannot merge histograms with different binning")
        if self.normalized or other.normalized:
            raise ValueError("merge raw histograms before normalising")
        self.weights += other.weights
        self.sumw2 += other.sumw2
        self.total += other.total
        self.rejected += other.rejected
        return self

    def integral(self):
        return float(self.weights.sum() * self.cell_area)

    def normalize(self):
        """Copy whose values integrate to one; errors scale alongside."""
        if self.normalized:
            return self.copy()
        mass = self.weights.sum() * self.cell_area
        if not mass > 0:
            raise ValueError("cannot normalise an empty histogram")
        return self._from_edges(self.edges, weights=self.weights / mass,
                                sumw2=self.sumw2 / mass ** 2, total=self.total,
                                rejected=self.rejected, normalized=True)

    def errors(self):
        """Per-bin statistical error assuming uncorrelated entries."""
        return np.sqrt(self.sumw2)

    def copy(self):
        return self._from_edges(self.edges, weights=self.weights.copy(),
                                sumw2=self.sumw2.copy(), total=self.total,
                                rejected=self.rejected, normalized=self.normalized)

    def _bin(self, v, axis):
        e = self.edges[axis]
        # search the stored edges: (x - lo) / width rounds 0.0 on [-5, 5] into bin 24
        k = np.searchsorted(e, v, side="right") - 1
        n = len(e) - 1
        # the upper edge belongs to the last bin
        k = np.where(v == e[-1], n - 1, k)
        ok = (k >= 0) & (k < n) & np.isfinite(v)
        return k, ok

    def _note_rejected(self, count):
        if count:
            self.rejected += int(count)
            warnings.warn(f"{count} position(s) outside the histogram domain ignored",
                          RuntimeWarning, stacklevel=3)

    def to_json(self):
        def num(a):
            return [float(_fmt(v)) for v in np.ravel(a)]
        values = np.reshape(num(self.weights), self.weights.shape).tolist()
        d = {"kind": type(self).__name__, "edges": [num(e) for e in self.edges],
             "values": values, "normalized": self.normalized,
             "total_weight": float(_fmt(self.total)), "rejected": self.rejected}
        return json.dumps(d, sort_keys=True, indent=1) + "\n"

    def write(self, path, fmt="csv"):
        text = self.to_csv() if fmt == "csv" else self.to_json()
        try:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write histogram to {path}: {exc}") from exc
        return path


def _uniform_edges(lo, hi, bins):
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DomainError(f"histogram range [{lo}, {hi}] is empty")
    if bins < 1:
        raise DomainError("need at least one bin")
    return np.linspace(lo, hi, bins + 1)


class Histogram1D(_Histogram):
    """Density of particle positions."""
    ndim = 1

    def __init__(self, lo=-HARMONIC_EXTENT, hi=HARMONIC_EXTENT, bins=DENSITY_BINS, **state):
        super().__init__((_uniform_edges(lo, hi, bins),), **state)

    @classmethod
    def _from_edges(cls, edges, **state):
        e = edges[0]
        return cls(e[0], e[-1], len(e) - 1, **state)

    @property
    def values(self):
        return self.weights

    def accumulate(self, config, weight=1.0):
        x = np.atleast_2d(np.asarray(config, dtype=float))
        w = np.broadcast_to(np.asarray(weight, dtype=float), x.shape[:1])
        w = np.broadcast_to(w[:, None], x.shape)
        k, ok = self._bin(x, 0)
        n = self.weights.size
        self.weights += np.bincount(k[ok], weights=w[ok], minlength=n)
        self.sumw2 += np.bincount(k[ok], weights=w[ok] ** 2, minlength=n)
        self.total += float(w[ok].sum())
        self._note_rejected((~ok).sum())
        return self

    def to_csv(self):
        e = self.edges[0]
        lines = ["x_lo,x_hi,value"]
        lines += [f"{_fmt(a)},{_fmt(b)},{_fmt(v)}" for a, b, v in zip(e[:-1], e[1:], self.weights)]
        return "\n".join(lines) + "\n"


class Histogram2D(_Histogram):
    """Pair correlation, symmetric under exchange of the two axes."""
    ndim = 2

    def __init__(self, lo=-HARMONIC_EXTENT, hi=HARMONIC_EXTENT, bins=PAIR_BINS, **state):
        e = _uniform_edges(lo, hi, bins)
        super().__init__((e, e.copy()), **state)

    @classmethod
    def _from_edges(cls, edges, **state):
        e = edges[0]
        return cls(e[0], e[-1], len(e) - 1, **state)

    @property
    def values(self):
        return self.weights

    def accumulate(self, config, weight=1.0):
        x = np.atleast_2d(np.asarray(config, dtype=float))
        m, n = x.shape
        if n < 2:
            raise DomainError("pair correlations need at least two particles")
        i, j = np.triu_indices(n, 1)
        w = np.broadcast_to(np.asarray(weight, dtype=float), (m,))
        w = np.broadcast_to(w[:, None], (m, len(i)))
        ka, oka = self._bin(x[:, i], 0)
        kb, okb = self._bin(x[:, j], 1)
        ok = oka & okb
        nb = self.weights.shape[0]
        flat = ka[ok] * nb + kb[ok]
        one = np.bincount(flat, weights=w[ok], minlength=nb * nb).reshape(nb, nb)
        sq = np.bincount(flat, weights=w[ok] ** 2, minlength=nb * nb).reshape(nb, nb)
        # adding the transpose keeps mirrored cells bit-identical
        self.weights += one + one.T
        self.sumw2 += sq + sq.T
        self.total += 2.0 * float(w[ok].sum())
        self._note_rejected((~ok).sum())
        return self

    def marginal(self):
        """One-axis marginal as a normalised :class:`Histogram1D`."""
        h = self.normalize()
        out = Histogram1D._from_edges(self.edges[:1])
        out.weights = h.weights.sum(1) * self.widths[1]
        out.sumw2 = h.sumw2.sum(1) * self.widths[1] ** 2
        out.total = self.total
        out.normalized = True
        return out

    def band_mean(self, half_width):
        """Mean value over cells whose centres satisfy ``|x1 - x2| < half_width``."""
        cx, cy = self.centers
        band = np.abs(cx[:, None] - cy[None, :]) < half_width
        if not band.any():
            raise DomainError("band contains no cell centres")
        return float(self.weights[band].mean())

    def to_csv(self):
        ex, ey = self.edges
        lines = ["# row-major grid: rows follow axis 0 (x1), columns axis 1 (x2)",
                 "edges_x1," + ",".join(_fmt(v) for v in ex),
                 "edges_x2," + ",".join(_fmt(v) for v in ey)]
        lines += [",".join(_fmt(v) for v in row) for row in self.weights]
        return "\n".join(lines) + "\n"


def default_domain(trap):
    if trap.kind == "lattice":
        return -trap.half_width, trap.half_width
    return -HARMONIC_EXTENT, HARMONIC_EXTENT


def density_histogram(trap, bins=DENSITY_BINS):
    return Histogram1D(*default_domain(trap), bins)


def pair_histogram(trap, bins=PAIR_BINS):
    return Histogram2D(*default_domain(trap), bins)


def accumulate_density(hist, config, weight=1.0):
    return hist.accumulate(config, weight)


def accumulate_pair(hist, config, weight=1.0):
    return hist.accumulate(config, weight)


def merge_all(hists):
    """Pairwise (tree) sum of partial histograms."""
    hists = [h.copy() for h in hists]
    if not hists:
        raise ValueError("nothing to merge")
    while len(hists) > 1:
        nxt = [hists[k].merge(hists[k + 1]) for k in range(0, len(hists) - 1, 2)]
        if len(hists) % 2:
            nxt.append(hists[-1])
        hists = nxt
    return hists[0]


def extrapolated_estimate(mixed, variational):
    """``2 mixed - variational`` clipped at zero and renormalised."""
    if not mixed._same_binning(variational):
        raise BinningMismatch("mixed and variational histograms differ in binning")
    m = mixed.normalize()
    v = variational.normalize()
    out = m.copy()
    out.weights = np.clip(2.0 * m.weights - v.weights, 0.0, None)
    out.sumw2 = 4.0 * m.sumw2 + v.sumw2
    out.normalized = False
    return out.normalize()


def smooth(values, window=5):
    """Centred moving average; the window shrinks at the ends."""
    v = np.asarray(values, dtype=float)
    kernel = np.ones(window)
    return np.convolve(v, kernel, "same") / np.convolve(np.ones_like(v), kernel, "same")


def find_peaks(hist, window=5, threshold=0.05):
    """Positions of local maxima of the smoothed density above
    ``threshold`` times its global maximum."""
    y = smooth(hist.values, window)
    x = hist.centers
    top = y.max()
    padded = np.concatenate([[-np.inf], y, [-np.inf]])
    # plateaus count once, at their left end
    is_max = (padded[1:-1] > padded[:-2]) & (padded[1:-1] >= padded[2:])
    is_max &= y > threshold * top
    return x[is_max]


def peaks_per_well(hist, centers, window=5, threshold=0.05):
    """Number of smoothed maxima closest to each well centre."""
    c = np.asarray(centers, dtype=float)
    counts = np.zeros(len(c), dtype=int)
    for p in find_peaks(hist, window, threshold):
        counts[np.argmin(np.abs(c - p))] += 1
    return counts.tolist()


def l1_distance(a, b):
    if not a._same_binning(b):
        raise BinningMismatch("histograms differ in binning")
    return float(np.abs(a.normalize().values - b.normalize().values).sum() * a.cell_area)
