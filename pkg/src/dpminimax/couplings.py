"""Explicit couplings between dataset distributions and their empirics.

A coupling draws dataset pairs (X, Y) whose marginals match two prescribed
laws while keeping the record-level Hamming distance small in expectation;
that expected distance is the quantity the privacy penalty terms feed on.
The Hamming distance here counts whole records: a d-tuple record differing
in one coordinate contributes 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Dataset, Distribution, Metric, ProbVector, ProductDist, distance
from .packings import HypercubeFamily, assouad_kary_family, assouad_product_family


def dataset_hamming(x: Dataset, y: Dataset) -> int:
    """Number of records at which two equal-length datasets differ."""
    a, b = x.values, y.values
    if a.shape != b.shape:
        raise ValueError("datasets must have identical shape")
    diff = a != b
    if diff.ndim == 2:
        diff = diff.any(axis=1)
    return int(diff.sum())


@dataclass(frozen=True)
class CouplingSampler:
    """A sampler of dataset pairs with declared marginals.

    ``expected_hamming`` is the exact analytic E[Hamming(X, Y)] of this
    construction; ``hamming_bound`` is the stated cap it realizes (equal to
    the expectation for every shipped coupling).
    """

    left_marginal: Distribution
    right_marginal: Distribution
    n: int
    expected_hamming: float
    hamming_bound: float

    def draw(self, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
        raise NotImplementedError


def _sample_pmf(probs: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(probs.size, size=size, p=probs) + 1


@dataclass(frozen=True)
class _MaximalCoupling(CouplingSampler):
    overlap: np.ndarray = field(default=None, repr=False)
    resid_left: np.ndarray = field(default=None, repr=False)
    resid_right: np.ndarray = field(default=None, repr=False)
    tv: float = 0.0

    def draw(self, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
        n = self.n
        agree = rng.random(n) >= self.tv
        x = np.empty(n, dtype=np.int64)
        y = np.empty(n, dtype=np.int64)
        n_agree = int(agree.sum())
        if n_agree:
            shared = _sample_pmf(self.overlap, n_agree, rng)
            x[agree] = shared
            y[agree] = shared
        n_dis = n - n_agree
        if n_dis:
            x[~agree] = _sample_pmf(self.resid_left, n_dis, rng)
            y[~agree] = _sample_pmf(self.resid_right, n_dis, rng)
        return Dataset(x), Dataset(y)


def maximal_coupling_iid(p: ProbVector, q: ProbVector, n: int) -> CouplingSampler:
    """Coordinate-wise maximal coupling of p^n and q^n.

    Each coordinate agrees with probability 1 - TV(p, q), drawn from the
    normalized overlap min(p, q); otherwise the two sides draw independently
    from the normalized residuals, whose supports are disjoint, so
    E[Hamming] = n * TV(p, q) exactly.
    """
    if p.k != q.k:
        raise ValueError("p and q must share an alphabet")
    if n < 1:
        raise ValueError("n must be >= 1")
    tv = distance(p, q, Metric.TV)
    overlap = np.minimum(p.probs, q.probs)
    if tv < 1.0:
        overlap = overlap / overlap.sum()
    else:
        overlap = np.full(p.k, 1.0 / p.k)  # unused: coordinates never agree
    if tv > 0.0:
        resid_left = np.maximum(p.probs - q.probs, 0.0)
        resid_left = resid_left / resid_left.sum()
        resid_right = np.maximum(q.probs - p.probs, 0.0)
        resid_right = resid_right / resid_right.sum()
    else:
        resid_left = resid_right = np.full(p.k, 1.0 / p.k)  # unused
    return _MaximalCoupling(
        left_marginal=p,
        right_marginal=q,
        n=n,
        expected_hamming=n * tv,
        hamming_bound=n * tv,
        overlap=overlap,
        resid_left=resid_left,
        resid_right=resid_right,
        tv=tv,
    )


@dataclass(frozen=True)
class _AssouadKaryCoupling(CouplingSampler):
    family: HypercubeFamily = None
    coord: int = 1
    flip_prob: float = 0.0

    def draw(self, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
        fam = self.family
        e = np.where(rng.random(fam.index_dim) < 0.5, -1, 1)
        e[self.coord - 1] = 1
        probs = fam.member(e).probs
        x = _sample_pmf(probs, self.n, rng)
        high = 2 * self.coord - 1  # the symbol that flips to its partner
        flips = (x == high) & (rng.random(self.n) < self.flip_prob)
        y = x.copy()
        y[flips] = high + 1
        return Dataset(x), Dataset(y)


def assouad_kary_coupling(k: int, alpha: float, n: int, i: int) -> CouplingSampler:
    """Coupling between the coordinate-i mixtures of the k-ary hypercube family.

    X is drawn by picking a sign vector with e_i = +1 and sampling n records;
    Y rewrites each record equal to symbol 2i-1 to symbol 2i independently
    with probability 20 alpha / (1 + 10 alpha).  Sharing the remaining sign
    coordinates makes Y exactly distributed as the e_i = -1 mixture, and
    E[Hamming] = 20 alpha n / k exactly.
    """
    family = assouad_kary_family(k, alpha, n)
    if not 1 <= i <= family.index_dim:
        raise ValueError(f"coordinate i must lie in 1..{family.index_dim}")
    rate = 20.0 * alpha * n / k
    return _AssouadKaryCoupling(
        left_marginal=family.mixture_marginal(i, +1),
        right_marginal=family.mixture_marginal(i, -1),
        n=n,
        expected_hamming=rate,
        hamming_bound=rate,
        family=family,
        coord=i,
        flip_prob=20.0 * alpha / (1.0 + 10.0 * alpha),
    )


@dataclass(frozen=True)
class _ProductFlipCoupling(CouplingSampler):
    family: HypercubeFamily = None
    coord: int = 1
    flip_prob: float = 0.0

    def draw(self, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
        fam = self.family
        d = fam.index_dim
        e = np.where(rng.random(d) < 0.5, -1, 1)
        e[self.coord - 1] = 1
        means = (1.0 + 20.0 * e * fam.alpha) / d
        bits = (rng.random((self.n, d)) < means[None, :]).astype(np.int64)
        x = bits + 1
        col = self.coord - 1
        flips = (bits[:, col] == 1) & (rng.random(self.n) < self.flip_prob)
        y = x.copy()
        y[flips, col] = 1
        return Dataset(x), Dataset(y)


def product_flip_coupling(d: int, alpha: float, n: int, i: int) -> CouplingSampler:
    """Coupling between the coordinate-i mixtures of the Bernoulli product family.

    X is drawn by picking a sign vector with e_i = +1 and sampling n product
    records; Y flips the i-th bit of each record from 1 to 0 independently
    with probability 40 alpha / (1 + 20 alpha) (symbol 2 to symbol 1), which
    realizes the e_i = -1 mixture with E[Hamming] = 40 alpha n / d exactly.
    """
    family = assouad_product_family(d, alpha, n)
    if not 1 <= i <= d:
        raise ValueError(f"coordinate i must lie in 1..{d}")
    rate = 40.0 * alpha * n / d
    return _ProductFlipCoupling(
        left_marginal=family.mixture_marginal(i, +1),
        right_marginal=family.mixture_marginal(i, -1),
        n=n,
        expected_hamming=rate,
        hamming_bound=rate,
        family=family,
        coord=i,
        flip_prob=40.0 * alpha / (1.0 + 20.0 * alpha),
    )


def empirical_hamming(
    sampler: CouplingSampler, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Sample mean and standard error of Hamming(X, Y) over coupled draws."""
    if trials < 100:
        raise ValueError("need at least 100 trials")
    vals = np.empty(trials)
    for t in range(trials):
        x, y = sampler.draw(rng)
        vals[t] = dataset_hamming(x, y)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(trials))
    return mean, stderr


def marginal_check(
    sampler: CouplingSampler, side: str, trials: int, rng: np.random.Generator
) -> float:
    """Empirical check that one side of the coupling has its declared marginal.

    ``trials`` counts sampled records; datasets are drawn (ceil(trials/n) of
    them) and their records pooled.  For k-ary marginals the result is the
    TV between the pooled histogram and the declared single-record law; for
    product marginals it is the worst per-coordinate TV, since the joint
    record space is too large to histogram at desk scale.  Continuous
    marginals are unsupported.
    """
    if trials < 10**4:
        raise ValueError("need at least 10^4 record trials")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    declared = sampler.left_marginal if side == "left" else sampler.right_marginal
    draws = max(1, math.ceil(trials / sampler.n))
    chunks = []
    for _ in range(draws):
        x, y = sampler.draw(rng)
        chunks.append(x.values if side == "left" else y.values)
    pooled = np.concatenate(chunks, axis=0)
    if isinstance(declared, ProbVector):
        freq = np.bincount(pooled.astype(np.int64) - 1, minlength=declared.k) / pooled.size
        return float(0.5 * np.abs(freq - declared.probs).sum())
    if isinstance(declared, ProductDist):
        worst = 0.0
        for c, marg in enumerate(declared.marginals):
            freq = np.bincount(pooled[:, c].astype(np.int64) - 1, minlength=marg.k)
            freq = freq / pooled.shape[0]
            worst = max(worst, float(0.5 * np.abs(freq - marg.probs).sum()))
        return worst
    raise ValueError("continuous marginals are unsupported")
