"""Private estimators, the simplex projection they need, and an exact
differential privacy auditor for finite mechanisms.

The auditor works on fully tabulated conditional probability tables, so
the reported delta* is exact up to floating point.  The Laplace estimator
draws its noise by inverse CDF from the seeded uniform stream, which keeps
every run reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .core import Dataset, PrivacyBudget, ProbVector

_ROW_ATOL = 1e-9


@dataclass(frozen=True)
class FiniteMechanism:
    """Explicit conditional probability table P[output | dataset].

    ``datasets`` are hashable records (tuples for sequence-valued data);
    ``outputs`` are arbitrary labels.  Rows must be probability vectors.
    """

    datasets: tuple
    outputs: tuple
    table: np.ndarray

    def __init__(self, datasets: Sequence, outputs: Sequence, table):
        t = np.asarray(table, dtype=float)
        if t.shape != (len(datasets), len(outputs)):
            raise ValueError("table shape must be (len(datasets), len(outputs))")
        if t.min() < 0:
            raise ValueError("table entries must be >= 0")
        if np.abs(t.sum(axis=1) - 1.0).max() > _ROW_ATOL:
            raise ValueError("every table row must sum to 1 within 1e-9")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "datasets", tuple(_freeze(x) for x in datasets))
        object.__setattr__(self, "outputs", tuple(_freeze(o) for o in outputs))
        object.__setattr__(self, "table", t)

    def to_json(self) -> dict:
        return {
            "datasets": [list(x) if isinstance(x, tuple) else x for x in self.datasets],
            "outputs": [list(o) if isinstance(o, tuple) else o for o in self.outputs],
            "table": self.table.tolist(),
        }


def _freeze(x):
    if isinstance(x, (list, np.ndarray)):
        return tuple(np.asarray(x).tolist())
    return x


def mechanism_from_json(obj: dict) -> FiniteMechanism:
    return FiniteMechanism(obj["datasets"], obj["outputs"], obj["table"])


@dataclass(frozen=True)
class EstimatorConfig:
    """Configuration of a shipped estimator."""

    kind: str  # "empirical" | "laplace"
    k: int
    budget: PrivacyBudget = PrivacyBudget(0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("empirical", "laplace"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "laplace" and not self.budget.epsilon > 0:
            raise ValueError("laplace estimator requires epsilon > 0")


def _counts(data: Dataset, k: int) -> np.ndarray:
    values = np.asarray(data.values)
    if values.ndim != 1:
        raise ValueError("k-ary estimators expect a flat dataset of symbols")
    if values.size == 0:
        raise ValueError("dataset is empty")
    if values.min() < 1 or values.max() > k:
        raise ValueError(f"symbols must lie in 1..{k}")
    return np.bincount(values.astype(np.int64) - 1, minlength=k).astype(float)


def empirical_estimator(data: Dataset, k: int) -> ProbVector:
    """Exact frequency vector of the sample."""
    counts = _counts(data, k)
    return ProbVector(counts / counts.sum())


def laplace_noise(shape, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Laplace(scale) noise by inverse CDF from the uniform stream."""
    u = rng.random(shape) - 0.5
    inner = np.maximum(1.0 - 2.0 * np.abs(u), np.finfo(float).tiny)
    return -scale * np.sign(u) * np.log(inner)


def laplace_estimator(
    data: Dataset, k: int, epsilon: float, rng: np.random.Generator
) -> ProbVector:
    """Empirical frequencies plus per-coordinate Laplace(2/(n eps)) noise,
    projected back onto the probability simplex.

    Changing one record moves the frequency vector by at most 2/n in l1,
    so the noised vector is eps-differentially private; the projection is
    post-processing and preserves that.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    counts = _counts(data, k)
    n = counts.sum()
    noisy = counts / n + laplace_noise(k, 2.0 / (n * epsilon), rng)
    return project_simplex(noisy)


def noisy_counts_estimate(
    counts: np.ndarray, n: int, epsilon: Optional[float], rng: np.random.Generator
) -> np.ndarray:
    """Vectorized estimator core on count rows of shape (..., k).

    epsilon None applies the plain empirical estimator; otherwise the
    Laplace release followed by simplex projection, row by row.
    """
    emp = np.asarray(counts, dtype=float) / n
    if epsilon is None:
        return emp
    noisy = emp + laplace_noise(emp.shape, 2.0 / (n * epsilon), rng)
    return project_rows_to_simplex(noisy)


def project_rows_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex.

    Sort-and-threshold: with entries sorted in decreasing order, find the
    largest j such that u_j + (1 - sum_{i<=j} u_i)/j > 0, shift everything
    by that threshold, and clamp at zero.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if not np.all(np.isfinite(v)):
        raise ValueError("projection input must be finite")
    m, k = v.shape
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1)
    j = np.arange(1, k + 1)
    cond = u + (1.0 - css) / j > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (1.0 - css[np.arange(m), rho]) / (rho + 1)
    return np.maximum(v + theta[:, None], 0.0)


def project_simplex(v: Sequence[float]) -> ProbVector:
    """Euclidean projection of a vector onto the probability simplex."""
    w = project_rows_to_simplex(np.asarray(v, dtype=float)[None, :])[0]
    return ProbVector(w / w.sum())


NeighborRelation = Union[None, Iterable, Callable]


def _hamming_pairs(datasets: Sequence, radius: int) -> list[tuple[int, int]]:
    pairs = []
    for i, x in enumerate(datasets):
        for j, y in enumerate(datasets):
            if i == j:
                continue
            if not isinstance(x, tuple) or not isinstance(y, tuple) or len(x) != len(y):
                raise ValueError(
                    "default neighbor relation needs equal-length sequence datasets"
                )
            if sum(a != b for a, b in zip(x, y)) <= radius:
                pairs.append((i, j))
    return pairs


def _resolve_pairs(mech: FiniteMechanism, neighbor_relation: NeighborRelation):
    if neighbor_relation is None:
        return _hamming_pairs(mech.datasets, 1)
    if callable(neighbor_relation):
        return [
            (i, j)
            for i, x in enumerate(mech.datasets)
            for j, y in enumerate(mech.datasets)
            if i != j and neighbor_relation(x, y)
        ]
    index = {x: i for i, x in enumerate(mech.datasets)}
    pairs = []
    for a, b in neighbor_relation:
        ia = a if isinstance(a, (int, np.integer)) else index.get(_freeze(a))
        ib = b if isinstance(b, (int, np.integer)) else index.get(_freeze(b))
        if ia is None or ib is None:
            raise ValueError(f"neighbor relation references an untabulated dataset: {(a, b)}")
        if not (0 <= ia < len(mech.datasets) and 0 <= ib < len(mech.datasets)):
            raise ValueError(f"neighbor index out of range: {(a, b)}")
        pairs.append((int(ia), int(ib)))
    return pairs


def check_dp(
    mech: FiniteMechanism,
    neighbor_relation: NeighborRelation = None,
    epsilon: float = 0.0,
) -> float:
    """Tight delta* at the given epsilon.

    delta* = max over ordered neighboring pairs (x, y) of
    sum_o max(0, P[o|x] - e^eps P[o|y]); the mechanism is (eps, delta)-DP
    exactly when delta >= delta*.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    pairs = _resolve_pairs(mech, neighbor_relation)
    if not pairs:
        return 0.0
    scale = math.exp(epsilon)
    t = mech.table
    return float(max(np.maximum(t[i] - scale * t[j], 0.0).sum() for i, j in pairs))


def group_dp_check(mech: FiniteMechanism, epsilon: float, delta: float, t: int) -> float:
    """Worst slack of the group privacy inequality at distance cap t.

    Returns max over dataset pairs at Hamming distance <= t of
    sum_o max(0, P[o|x] - e^{t eps} P[o|y]) minus the additive budget
    delta * t * e^{eps (t-1)}.  A value <= 0 certifies the group property
    for this mechanism at (eps, delta, t).
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    pairs = _hamming_pairs(mech.datasets, t)
    if not pairs:
        return -delta * t * math.exp(epsilon * (t - 1))
    scale = math.exp(t * epsilon)
    tab = mech.table
    worst = max(np.maximum(tab[i] - scale * tab[j], 0.0).sum() for i, j in pairs)
    return float(worst - delta * t * math.exp(epsilon * (t - 1)))


def randomized_response(n_bits: int, epsilon: float) -> FiniteMechanism:
    """Bitwise randomized response: each bit flips with probability
    1/(1 + e^eps), independently.

    The flip probability is rounded one-sidedly (up, by one part in 1e12)
    so that the tabulated likelihood ratios stay at or below e^eps instead
    of straddling it by float rounding; the realized table then satisfies
    the eps and group-privacy inequalities exactly, not just to rounding.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    flip = (1.0 / (1.0 + math.exp(epsilon))) * (1.0 + 1e-12)
    keep = 1.0 - flip
    space = list(itertools.product((0, 1), repeat=n_bits))
    x = np.array(space)
    agree = n_bits - (x[:, None, :] != x[None, :, :]).sum(axis=2)
    table = keep**agree * flip ** (n_bits - agree)
    return FiniteMechanism(space, space, table)


def _laplace_diff_cdf(z: np.ndarray, b: float) -> np.ndarray:
    """CDF of the difference of two independent Laplace(b) variables."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z) / b
    tail = 0.25 * (2.0 + a) * np.exp(-a)
    return np.where(z >= 0, 1.0 - tail, tail)


def discretized_laplace_estimator(n: int, epsilon: float, cells: int = 20) -> FiniteMechanism:
    """The k=2 Laplace estimator tabulated exactly on a grid of output cells.

    Datasets are all of {1,2}^n.  The released first coordinate is
    clip(((c1-c2)/n + Z + 1)/2, 0, 1) with Z the difference of the two
    Laplace(2/(n eps)) noise draws; cell probabilities come from the closed
    form of that difference's CDF, so the table is exact and the binning is
    pure post-processing of an eps-DP release.
    """
    if n < 1 or cells < 2 or epsilon <= 0:
        raise ValueError("need n >= 1, cells >= 2, epsilon > 0")
    b = 2.0 / (n * epsilon)
    datasets = list(itertools.product((1, 2), repeat=n))
    edges = np.linspace(0.0, 1.0, cells + 1)
    rows = []
    for x in datasets:
        c1 = sum(1 for s in x if s == 1)
        q = (2 * c1 - n) / n  # empirical p1 - p2
        cdf_at = _laplace_diff_cdf(2.0 * edges[1:-1] - 1.0 - q, b)
        g = np.concatenate(([0.0], cdf_at, [1.0]))
        rows.append(np.diff(g))
    return FiniteMechanism(datasets, list(range(cells)), np.array(rows))
