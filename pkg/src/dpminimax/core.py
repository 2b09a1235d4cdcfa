"""Probability objects, statistical distances, and sampling primitives.

Discrete distributions live on the alphabet {1, ..., k}.  Product
distributions are tuples of independent k-ary marginals, and Gaussian
mixtures have identity covariance with norm-bounded component means.
All sampling goes through an explicit ``numpy.random.Generator`` so that
every downstream computation is reproducible from a seed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import logsumexp

# Validity is judged at 1e-9; constructors silently renormalize inputs
# that are off by at most 1e-6 and reject anything worse.
SUM_ATOL = 1e-9
RENORM_ATOL = 1e-6
_NEG_DUST = 1e-12


class Metric(enum.Enum):
    """Distance between two k-ary distributions."""

    TV = "tv"
    KL = "kl"
    CHI2 = "chi2"
    L1 = "l1"
    L2 = "l2"


def _as_prob_array(probs: Sequence[float], what: str) -> np.ndarray:
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{what} must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    if arr.min() < -_NEG_DUST:
        raise ValueError(f"{what} has a negative entry: {arr.min()}")
    arr = np.clip(arr, 0.0, None)
    total = arr.sum()
    if abs(total - 1.0) > RENORM_ATOL:
        raise ValueError(f"{what} sums to {total}, outside the 1e-6 renormalization band")
    arr = arr / total
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProbVector:
    """A probability mass function over the alphabet {1, ..., k}."""

    probs: np.ndarray

    def __init__(self, probs: Sequence[float]):
        object.__setattr__(self, "probs", _as_prob_array(probs, "ProbVector"))

    @property
    def k(self) -> int:
        return int(self.probs.size)

    @classmethod
    def uniform(cls, k: int) -> "ProbVector":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point_mass(cls, k: int, symbol: int) -> "ProbVector":
        if not 1 <= symbol <= k:
            raise ValueError(f"symbol {symbol} outside 1..{k}")
        p = np.zeros(k)
        p[symbol - 1] = 1.0
        return cls(p)

    def __eq__(self, other) -> bool:
        return isinstance(other, ProbVector) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def to_json(self) -> dict:
        return {"type": "kary", "probs": self.probs.tolist()}


@dataclass(frozen=True)
class ProductDist:
    """Independent product of d k-ary marginals over {1, ..., k}^d."""

    marginals: tuple[ProbVector, ...]

    def __init__(self, marginals: Sequence[ProbVector]):
        margs = tuple(marginals)
        if len(margs) < 1:
            raise ValueError("ProductDist needs at least one marginal")
        k = margs[0].k
        if any(m.k != k for m in margs):
            raise ValueError("all marginals must share the same alphabet size")
        object.__setattr__(self, "marginals", margs)

    @property
    def k(self) -> int:
        return self.marginals[0].k

    @property
    def d(self) -> int:
        return len(self.marginals)

    def mean_matrix(self) -> np.ndarray:
        """Stacked marginal pmfs, shape (d, k)."""
        return np.stack([m.probs for m in self.marginals])

    def to_json(self) -> dict:
        return {"type": "product", "marginals": [m.probs.tolist() for m in self.marginals]}


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Mixture of k identity-covariance Gaussians with mean norms capped at R."""

    weights: np.ndarray
    means: np.ndarray
    norm_bound: float

    def __init__(self, weights: Sequence[float], means, norm_bound: float):
        w = _as_prob_array(weights, "mixture weights")
        mu = np.asarray(means, dtype=float)
        if mu.ndim != 2 or mu.shape[0] != w.size:
            raise ValueError("means must have shape (k, d) matching the weights")
        if not np.all(np.isfinite(mu)):
            raise ValueError("means contain non-finite entries")
        norms = np.linalg.norm(mu, axis=1)
        if norms.max() > norm_bound + SUM_ATOL:
            raise ValueError(
                f"component mean norm {norms.max():.6g} exceeds the bound {norm_bound}"
            )
        mu = mu.copy()
        mu.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "norm_bound", float(norm_bound))

    @property
    def k(self) -> int:
        return int(self.weights.size)

    @property
    def d(self) -> int:
        return int(self.means.shape[1])

    def log_density(self, z: np.ndarray) -> np.ndarray:
        """Log mixture density at points z of shape (m, d), computed in log space."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        sq = ((z[:, None, :] - self.means[None, :, :]) ** 2).sum(axis=2)
        log_comp = -0.5 * sq - 0.5 * self.d * math.log(2.0 * math.pi)
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights)
        return logsumexp(log_comp + log_w[None, :], axis=1)

    def to_json(self) -> dict:
        return {
            "type": "gmix",
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "R": self.norm_bound,
        }


Distribution = Union[ProbVector, ProductDist, GaussianMixtureSpec]


def dist_from_json(obj: dict) -> Distribution:
    """Inverse of the ``to_json`` methods on the three distribution types."""
    kind = obj.get("type")
    if kind == "kary":
        return ProbVector(obj["probs"])
    if kind == "product":
        return ProductDist([ProbVector(m) for m in obj["marginals"]])
    if kind == "gmix":
        return GaussianMixtureSpec(obj["weights"], obj["means"], obj["R"])
    raise ValueError(f"unknown distribution type {kind!r}")


@dataclass(frozen=True)
class PrivacyBudget:
    """The (epsilon, delta) pair of the differential privacy constraint."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon >= 0):
            raise ValueError("epsilon must be >= 0")
        if not (0 <= self.delta <= 1):
            raise ValueError("delta must lie in [0, 1]")


@dataclass(frozen=True)
class Dataset:
    """A length-n sequence of records.

    Records are integers in {1, ..., k} for k-ary distributions, integer
    d-tuples for product distributions (rows of a (n, d) array), and real
    d-vectors for Gaussian mixtures.
    """

    values: np.ndarray

    def __init__(self, values):
        arr = np.asarray(values)
        if arr.ndim not in (1, 2):
            raise ValueError("dataset values must be a 1-d or 2-d array")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


def distance(p: ProbVector, q: ProbVector, metric: Metric) -> float:
    """Distance between two pmfs on a common alphabet.

    KL uses the convention 0*log(0/q) = 0 and returns +inf when p puts mass
    where q does not.  CHI2 likewise returns +inf on a zero denominator under
    a supported symbol; neither is an error because disjoint-support pairs
    are legitimate inputs.
    """
    if p.k != q.k:
        raise ValueError(f"alphabet mismatch: {p.k} vs {q.k}")
    a, b = p.probs, q.probs
    metric = Metric(metric)
    if metric is Metric.TV:
        return float(0.5 * np.abs(a - b).sum())
    if metric is Metric.L1:
        return float(np.abs(a - b).sum())
    if metric is Metric.L2:
        return float(np.linalg.norm(a - b))
    if metric is Metric.KL:
        support = a > 0
        if np.any(support & (b == 0)):
            return math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(support, a * np.log(np.where(support, a, 1.0) / np.where(b > 0, b, 1.0)), 0.0)
        return float(max(terms.sum(), 0.0))
    if metric is Metric.CHI2:
        diff_sq = (a - b) ** 2
        zero_den = b == 0
        if np.any(zero_den & (diff_sq > 0)):
            return math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(zero_den, 0.0, diff_sq / np.where(zero_den, 1.0, b))
        return float(terms.sum())
    raise ValueError(f"unknown metric {metric}")


def product_kl(p: ProductDist, q: ProductDist) -> float:
    """KL between product distributions: the exact sum of marginal KLs."""
    if p.k != q.k or p.d != q.d:
        raise ValueError("product distributions must share (k, d)")
    return float(sum(distance(pm, qm, Metric.KL) for pm, qm in zip(p.marginals, q.marginals)))


def product_tv_exact(p: ProductDist, q: ProductDist, max_atoms: int = 2**24) -> float:
    """Exact TV between product distributions by full enumeration of [k]^d.

    Cost is k^d probability evaluations; refuses beyond ``max_atoms``.
    """
    if p.k != q.k or p.d != q.d:
        raise ValueError("product distributions must share (k, d)")
    atoms = p.k**p.d
    if atoms > max_atoms:
        raise ValueError(f"enumeration of {atoms} atoms exceeds the cap {max_atoms}")
    pj = np.ones(1)
    qj = np.ones(1)
    for pm, qm in zip(p.marginals, q.marginals):
        pj = np.multiply.outer(pj, pm.probs).ravel()
        qj = np.multiply.outer(qj, qm.probs).ravel()
    return float(0.5 * np.abs(pj - qj).sum())


def gaussian_component_kl(mu1: Sequence[float], mu2: Sequence[float]) -> float:
    """KL between two identity-covariance Gaussians: ||mu1 - mu2||^2 / 2."""
    a = np.asarray(mu1, dtype=float)
    b = np.asarray(mu2, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("means must be 1-d vectors of equal dimension")
    return float(0.5 * np.dot(a - b, a - b))


def mixture_tv_mc(
    m1: GaussianMixtureSpec,
    m2: GaussianMixtureSpec,
    samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo estimate of TV between two Gaussian mixtures.

    Samples z from the equal-weight average (m1 + m2) / 2 and averages
    |m1(z) - m2(z)| / ((m1(z) + m2(z)) / 2) / 2; the integrand is bounded
    in [0, 1], so the estimate is unbiased with bounded variance.
    Returns (estimate, standard error).
    """
    if m1.d != m2.d:
        raise ValueError("mixtures must share the ambient dimension")
    if samples < 1000:
        raise ValueError("need at least 1000 samples for a usable standard error")
    side = rng.integers(0, 2, size=samples)
    z = np.empty((samples, m1.d))
    for s, mix in ((0, m1), (1, m2)):
        idx = np.flatnonzero(side == s)
        if idx.size == 0:
            continue
        comp = rng.choice(mix.k, size=idx.size, p=mix.weights)
        z[idx] = mix.means[comp] + rng.standard_normal((idx.size, mix.d))
    la = m1.log_density(z)
    lb = m2.log_density(z)
    bad = ~(np.isfinite(la) | np.isfinite(lb))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise FloatingPointError(
            f"density underflow for sample index {i} at z={z[i].tolist()}"
        )
    c = np.maximum(la, lb)
    ea = np.exp(la - c)
    eb = np.exp(lb - c)
    vals = np.abs(ea - eb) / (ea + eb)  # equals |m1-m2| / (m1+m2), in [0, 1]
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(samples))
    return est, stderr


def sample_dataset(dist: Distribution, n: int, rng: np.random.Generator) -> Dataset:
    """Draw n i.i.d. records from the distribution.

    Fixed seed gives bit-identical output.  Symbols are 1-based for the
    discrete families; Gaussian mixture records are rows of an (n, d) array.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(dist, ProbVector):
        if n == 0:
            return Dataset(np.empty(0, dtype=np.int64))
        return Dataset(rng.choice(dist.k, size=n, p=dist.probs) + 1)
    if isinstance(dist, ProductDist):
        if n == 0:
            return Dataset(np.empty((0, dist.d), dtype=np.int64))
        cols = [rng.choice(dist.k, size=n, p=m.probs) + 1 for m in dist.marginals]
        return Dataset(np.stack(cols, axis=1))
    if isinstance(dist, GaussianMixtureSpec):
        if n == 0:
            return Dataset(np.empty((0, dist.d)))
        comp = rng.choice(dist.k, size=n, p=dist.weights)
        return Dataset(dist.means[comp] + rng.standard_normal((n, dist.d)))
    raise TypeError(f"cannot sample from {type(dist).__name__}")
