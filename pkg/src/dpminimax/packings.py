"""Hard-instance distribution families: packings and hypercube families.

Each constructor builds a family of distributions that are far apart in
the loss of interest while staying close in KL and TV, the configuration
that makes estimation provably hard.  Families carry their claimed
separation and closeness caps and can re-verify them exhaustively.

Where a guarantee needs a parameter regime the construction does not meet
(small alphabets, large alpha), the family is still built and numerically
verified, with the counting guarantee flagged as waived in ``meta``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .codes import Code, gv_constant_weight, gv_qary
from .core import (
    Distribution,
    GaussianMixtureSpec,
    Metric,
    ProbVector,
    ProductDist,
    dist_from_json,
    distance,
    gaussian_component_kl,
    mixture_tv_mc,
    product_kl,
    product_tv_exact,
)

PAIRWISE_MEMBER_CAP = 2000
PRODUCT_ATOM_CAP = 2**24
_TOL = 1e-12


def _inf_to_json(x):
    if x is None:
        return None
    return "inf" if math.isinf(x) else x


def _inf_from_json(x):
    if x is None:
        return None
    return math.inf if x == "inf" else float(x)


@dataclass(frozen=True)
class PackingFamily:
    """A finite family of distributions with claimed pairwise bounds.

    ``separation`` is the claimed pairwise lower bound in ``loss`` (0 when
    the construction's separation constant is not pinned down; the measured
    minimum then lives in the verification report).  ``kl_cap`` and
    ``tv_cap`` are claimed pairwise upper bounds.
    """

    members: tuple
    separation: float
    kl_cap: float
    tv_cap: Optional[float]
    loss: str  # "tv" | "l2"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("a packing family needs at least 2 members")
        kinds = {type(m) for m in self.members}
        if len(kinds) != 1:
            raise ValueError("family members must share a single distribution type")
        if self.loss not in ("tv", "l2"):
            raise ValueError("loss must be 'tv' or 'l2'")

    @property
    def size(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        return {
            "separation": self.separation,
            "kl_cap": _inf_to_json(self.kl_cap),
            "tv_cap": _inf_to_json(self.tv_cap),
            "loss": self.loss,
            "meta": self.meta,
            "members": [m.to_json() for m in self.members],
        }


def family_from_json(obj: dict) -> PackingFamily:
    return PackingFamily(
        members=tuple(dist_from_json(m) for m in obj["members"]),
        separation=float(obj["separation"]),
        kl_cap=_inf_from_json(obj["kl_cap"]),
        tv_cap=_inf_from_json(obj.get("tv_cap")),
        loss=obj["loss"],
        meta=obj.get("meta", {}),
    )


def _code_meta(code: Code) -> dict:
    return {
        "alphabet": code.alphabet_size,
        "length": code.length,
        "weight": code.weight,
        "size": code.size,
        "min_distance": code.claimed_min_distance,
        "size_bound": code.size_bound,
        "size_bound_certified": code.size_bound_certified,
        "exhaustive": code.exhaustive,
    }


def kary_tv_packing(
    k: int, alpha: float, max_members: Optional[int] = None, seed: int = 0
) -> PackingFamily:
    """k-ary pmfs perturbed by +-24 alpha / k along constant-weight codewords.

    Pairwise TV equals 24 alpha d_H / k, so the code's minimum distance of
    ceil(k/8) forces separation 3 alpha; TV tops out at 24 alpha and KL is
    capped by the chi-squared bound 10000 alpha^2.  Requires alpha < 1/24
    for the entries to stay positive; the code-size guarantee is certified
    only for alpha < 1/48 and k >= 40.
    """
    if k < 4 or k % 2:
        raise ValueError("k must be an even integer >= 4")
    if not 0 < alpha < 1.0 / 24.0:
        raise ValueError("alpha must lie in (0, 1/24) for valid pmfs")
    code = gv_constant_weight(k, k // 2, max_words=max_members, seed=seed)
    if code.size < 2:
        raise ValueError("code produced fewer than 2 words")
    probs = (1.0 + 24.0 * alpha * (2.0 * code.words - 1.0)) / k
    members = tuple(ProbVector(row) for row in probs)
    certified = alpha < 1.0 / 48.0 and k >= 40 and code.size_bound_certified
    return PackingFamily(
        members=members,
        separation=3.0 * alpha,
        kl_cap=10000.0 * alpha**2,
        tv_cap=24.0 * alpha,
        loss="tv",
        meta={
            "kind": "kary_tv",
            "k": k,
            "alpha": alpha,
            "code": _code_meta(code),
            "size_guarantee_certified": certified,
        },
    )


def kary_l2_packing(
    k: int, alpha: float, max_members: Optional[int] = None, seed: int = 0
) -> PackingFamily:
    """Sparse k-ary pmfs uniform on the support of weight-l codewords,
    l = floor(1 / (50 alpha^2)).

    Pairwise l2 distance is sqrt(d_H)/l, at least 1/(2 sqrt(l)) at the
    code's minimum distance.  Supports are generally disjoint, so TV can
    reach 1 and KL can be infinite; both are legitimate here.  For
    alpha < 1/sqrt(k) use the TV packing and the Cauchy-Schwarz reduction
    instead (rejected with an error).
    """
    if not alpha >= 1.0 / math.sqrt(k):
        raise ValueError(
            "alpha below 1/sqrt(k): use the tv packing with the Cauchy-Schwarz reduction"
        )
    l = math.floor(1.0 / (50.0 * alpha**2))
    if l < 1:
        raise ValueError(f"alpha={alpha} gives support weight floor(1/(50 a^2)) = {l} < 1")
    code = gv_constant_weight(k, l, max_words=max_members, seed=seed)
    if code.size < 2:
        raise ValueError("code produced fewer than 2 words")
    members = tuple(ProbVector(row / l) for row in code.words)
    return PackingFamily(
        members=members,
        separation=1.0 / (2.0 * math.sqrt(l)),
        kl_cap=math.inf,
        tv_cap=1.0,
        loss="l2",
        meta={
            "kind": "kary_l2",
            "k": k,
            "alpha": alpha,
            "support_weight": l,
            "code": _code_meta(code),
            "size_guarantee_certified": code.size_bound_certified,
        },
    )


def _inner_target(max_members: Optional[int], d: int) -> Optional[int]:
    # Enough inner marginals that an outer code of max_members words exists
    # by the counting bound (h/16)^{d/2} >= M, capped to keep things cheap.
    if max_members is None:
        return None
    return int(min(4096, max(16, math.ceil(16.0 * max_members ** (2.0 / d)))))


def product_marginals(k: int, d: int, alpha: float, code: Code, balanced: bool) -> list[ProbVector]:
    """The inner k-ary marginals of the product construction."""
    t = alpha / math.sqrt(d)
    if balanced:
        if t >= 1.0:
            raise ValueError("perturbation alpha/sqrt(d) must stay below 1")
        probs = (1.0 + t * (2.0 * code.words - 1.0)) / k
    else:
        probs = (1.0 + t * code.words) / k
        probs = probs / probs.sum(axis=1, keepdims=True)
    return [ProbVector(row) for row in probs]


def product_packing(
    k: int,
    d: int,
    alpha: float,
    balanced: bool = True,
    max_members: Optional[int] = None,
    seed: int = 0,
) -> PackingFamily:
    """(k, d)-product distributions from a two-level code construction.

    An inner constant-weight code perturbs k-ary marginals by alpha/(k
    sqrt(d)); an outer h-ary code of length d picks one marginal per
    coordinate.  KL additivity gives the exact pairwise cap 4 alpha^2 and
    Pinsker turns it into the TV cap 2 sqrt(2) alpha.  The balanced variant
    subtracts the perturbation on zero bits so every marginal sums to 1
    exactly; balanced=False keeps the one-sided bumps and renormalizes.
    """
    if k < 4 or k % 2:
        raise ValueError("k must be an even integer >= 4")
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0 < alpha < 0.1:
        raise ValueError("alpha must lie in (0, 0.1)")
    inner = gv_constant_weight(k, k // 2, max_words=_inner_target(max_members, d), seed=seed)
    h = inner.size
    if h < 2:
        raise ValueError("inner code produced fewer than 2 marginals")
    marginals = product_marginals(k, d, alpha, inner, balanced)
    outer = gv_qary(h, d, max_words=max_members, seed=seed + 1)
    if outer.size < 2:
        raise ValueError("outer code produced fewer than 2 words")
    members = tuple(
        ProductDist([marginals[sym] for sym in word]) for word in outer.words
    )
    return PackingFamily(
        members=members,
        separation=0.0,
        kl_cap=4.0 * alpha**2,
        tv_cap=2.0 * math.sqrt(2.0) * alpha,
        loss="tv",
        meta={
            "kind": "product",
            "k": k,
            "d": d,
            "alpha": alpha,
            "balanced": balanced,
            "inner_code": _code_meta(inner),
            "outer_code": _code_meta(outer),
            "separation_note": (
                "pairwise TV is bounded below by an unspecified constant times alpha; "
                "the verification report carries the measured minimum"
            ),
        },
    )


def _ball_packing_points(
    count: int, dim: int, radius: float, min_gap: float, rng: np.random.Generator
) -> np.ndarray:
    """Greedy farthest-point style packing: seeded uniform proposals inside
    the radius ball, kept when farther than min_gap from all kept points."""
    kept = np.empty((count, dim))
    m = 0
    for _ in range(200 * count + 1000):
        x = rng.standard_normal(dim)
        x *= radius * rng.random() ** (1.0 / dim) / np.linalg.norm(x)
        if m == 0 or np.linalg.norm(kept[:m] - x, axis=1).min() > min_gap:
            kept[m] = x
            m += 1
            if m == count:
                return kept
    raise ValueError(
        f"could not pack {count} points at gap {min_gap:.3g} inside radius {radius:.3g}; "
        "the norm bound R is too small for this (k, d, alpha)"
    )


def gaussian_mixture_packing(
    k: int,
    d: int,
    alpha: float,
    R: float,
    max_members: Optional[int] = None,
    seed: int = 0,
) -> PackingFamily:
    """Uniform k-mixtures of identity-covariance Gaussians whose component
    means encode a two-level code.

    Component j of member b sits at mu_{b_j} + shift_j, where the mu's are
    codeword-scaled vectors with entries alpha/sqrt(d) and the shifts
    separate the components: (R/2) e_j when k <= d, or a greedy packing of
    the R/3 ball when k > d.  The pairwise KL convexity bound
    (1/k) sum_t ||delta mu_t||^2 / 2 is capped by 4 alpha^2.
    """
    if k < 2 or d < 2:
        raise ValueError("need k >= 2 mixture components and d >= 2")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    if k <= d:
        threshold = math.sqrt(64.0 * math.log(8.0 * k / alpha))
        if R < threshold:
            raise ValueError(f"R={R:.4g} below the case k<=d threshold {threshold:.4g}")
        shifts = 0.5 * R * np.eye(d)[:k]
    else:
        threshold = k ** (1.0 / d) * math.sqrt(64.0 * d * math.log(8.0 * k / alpha))
        if R < threshold:
            raise ValueError(f"R={R:.4g} below the case k>d threshold {threshold:.4g}")
        r = math.sqrt(16.0 * d * math.log(8.0 * k / alpha))
        shifts = _ball_packing_points(k, d, R / 3.0, r, rng)
    inner = gv_constant_weight(d, d // 2, max_words=_inner_target(max_members, k), seed=seed)
    h = inner.size
    if h < 2:
        raise ValueError("inner code produced fewer than 2 mean vectors")
    mus = inner.words * (alpha / math.sqrt(d))
    outer = gv_qary(h, k, max_words=max_members, seed=seed + 1)
    if outer.size < 2:
        raise ValueError("outer code produced fewer than 2 words")
    weights = np.full(k, 1.0 / k)
    members = []
    for word in outer.words:
        means = mus[word] + shifts
        members.append(GaussianMixtureSpec(weights, means, R))
    return PackingFamily(
        members=tuple(members),
        separation=0.0,
        kl_cap=4.0 * alpha**2,
        tv_cap=2.0 * math.sqrt(2.0) * alpha,
        loss="tv",
        meta={
            "kind": "gmix",
            "k": k,
            "d": d,
            "alpha": alpha,
            "R": R,
            "case": "axis-shift" if k <= d else "ball-packing",
            "inner_code": _code_meta(inner),
            "outer_code": _code_meta(outer),
            "separation_note": (
                "pairwise TV is bounded below by an unspecified constant times alpha; "
                "the verification report carries the measured minimum"
            ),
        },
    )


# ---------------------------------------------------------------------------
# Hypercube (sign-vector indexed) families


@dataclass(frozen=True)
class HypercubeFamily:
    """A family indexed by sign vectors in {-1, +1}^index_dim whose loss
    decomposes across coordinates: loss(member(u), member(v)) >=
    2 tau * (number of differing coordinates).

    ``n`` is the i.i.d. sample count represented implicitly: the coordinate
    mixtures pair with n-fold product sampling in the couplings and the
    harness.  ``coupling_rate`` is the per-sample expected-Hamming rate of
    the shipped coordinate coupling, so D = coupling_rate * n.
    """

    kind: str  # "kary" | "product"
    index_dim: int
    tau: float
    n: int
    alpha: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.index_dim < 1 or self.n < 0:
            raise ValueError("need index_dim >= 1 and n >= 0")

    def _check_sign_vector(self, e) -> np.ndarray:
        e = np.asarray(e, dtype=int)
        if e.shape != (self.index_dim,) or not np.all(np.abs(e) == 1):
            raise ValueError(f"sign vector must be +-1 of length {self.index_dim}")
        return e

    def member(self, e) -> Distribution:
        """The single-draw distribution indexed by the sign vector e."""
        e = self._check_sign_vector(e)
        if self.kind == "kary":
            k = 2 * self.index_dim
            p = np.empty(k)
            p[0::2] = (1.0 + 10.0 * e * self.alpha) / k
            p[1::2] = (1.0 - 10.0 * e * self.alpha) / k
            return ProbVector(p)
        d = self.index_dim
        means = (1.0 + 20.0 * e * self.alpha) / d
        return ProductDist([ProbVector([1.0 - m, m]) for m in means])

    def all_members(self, cap: int = 4096) -> list[tuple[np.ndarray, Distribution]]:
        if 2**self.index_dim > cap:
            raise ValueError(f"2^{self.index_dim} members exceed the cap {cap}")
        out = []
        for signs in itertools.product((-1, 1), repeat=self.index_dim):
            e = np.array(signs)
            out.append((e, self.member(e)))
        return out

    def mixture_marginal(self, i: int, sign: int) -> Distribution:
        """Single-draw law of the mixture with coordinate i pinned to sign.

        Averaging over the free coordinates collapses their perturbations,
        so only coordinate i keeps its bias; the result is available in
        closed form.
        """
        if not 1 <= i <= self.index_dim:
            raise ValueError(f"coordinate i must lie in 1..{self.index_dim}")
        if sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")
        if self.kind == "kary":
            k = 2 * self.index_dim
            p = np.full(k, 1.0 / k)
            p[2 * i - 2] = (1.0 + 10.0 * sign * self.alpha) / k
            p[2 * i - 1] = (1.0 - 10.0 * sign * self.alpha) / k
            return ProbVector(p)
        d = self.index_dim
        means = np.full(d, 1.0 / d)
        means[i - 1] = (1.0 + 20.0 * sign * self.alpha) / d
        return ProductDist([ProbVector([1.0 - m, m]) for m in means])

    @property
    def coupling_rate(self) -> float:
        """Expected per-sample Hamming rate of the coordinate coupling."""
        if self.kind == "kary":
            return 20.0 * self.alpha / (2 * self.index_dim)
        return 40.0 * self.alpha / self.index_dim

    def pair_tv(self, u, v) -> float:
        """Exact TV between member(u) and member(v)."""
        u = self._check_sign_vector(u)
        v = self._check_sign_vector(v)
        if self.kind == "kary":
            ham = int((u != v).sum())
            return 20.0 * self.alpha / (2 * self.index_dim) * ham
        return product_tv_exact(self.member(u), self.member(v))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "index_dim": self.index_dim,
            "tau": self.tau,
            "n": self.n,
            "alpha": self.alpha,
            "meta": self.meta,
        }


def assouad_kary_family(k: int, alpha: float, n: int) -> HypercubeFamily:
    """k-ary hypercube family: symbol pair (2i-1, 2i) carries mass
    (1 +- 10 e_i alpha)/k.

    TV between members is exactly (20 alpha / k) * (differing coordinates),
    so the loss decomposition holds with equality at tau = 10 alpha / k.
    alpha = 0.1 puts the low symbols exactly at mass zero and is the
    largest admissible value.
    """
    if k < 2 or k % 2:
        raise ValueError("k must be an even integer >= 2")
    if not 0 <= alpha <= 0.1:
        raise ValueError("alpha must lie in [0, 0.1]")
    return HypercubeFamily(
        kind="kary",
        index_dim=k // 2,
        tau=10.0 * alpha / k,
        n=n,
        alpha=alpha,
        meta={"k": k},
    )


def assouad_product_family(d: int, alpha: float, n: int) -> HypercubeFamily:
    """Bernoulli product hypercube family with coordinate means
    (1 + 20 e_i alpha)/d over {0,1}^d (bit b stored as symbol b+1).

    tau = 2.5 alpha / d comes from the event-probability argument whose
    chain needs very large d; at desk scale the decomposition is verified
    by exact enumeration instead.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0 <= alpha < 0.05:
        raise ValueError("alpha must lie in [0, 0.05) for valid coordinate means")
    return HypercubeFamily(
        kind="product",
        index_dim=d,
        tau=2.5 * alpha / d,
        n=n,
        alpha=alpha,
        meta={"d": d},
    )


def product_event_gap(family: HypercubeFamily, u, v) -> float:
    """Closed-form testing gap for the Bernoulli product family.

    For the event A = {every coordinate where u is +1 and v is -1 is 0},
    P_v[A] - P_u[A] = (1 - (1-20a)/d)^{|S'|} - (1 - (1+20a)/d)^{|S'|},
    a lower bound on TV(member(u), member(v)).
    """
    if family.kind != "product":
        raise ValueError("event gap applies to the product family")
    u = family._check_sign_vector(u)
    v = family._check_sign_vector(v)
    s_prime = int(((u != v) & (u == 1)).sum())
    d, a = family.index_dim, family.alpha
    lo = (1.0 - (1.0 + 20.0 * a) / d) ** s_prime
    hi = (1.0 - (1.0 - 20.0 * a) / d) ** s_prime
    return hi - lo


# ---------------------------------------------------------------------------
# Verification


def _pairwise_kl_matrix(P: np.ndarray) -> np.ndarray:
    """KL between all row pairs of a stochastic matrix, +inf where the row
    support is not contained in the column row's support."""
    support = P > 0
    safe_log = np.where(support, np.log(np.where(support, P, 1.0)), 0.0)
    row_e = (P * safe_log).sum(axis=1)
    cross = P @ safe_log.T
    kl = row_e[:, None] - cross
    viol = np.einsum("ik,jk->ij", support.astype(np.uint8), (~support).astype(np.uint8)) > 0
    kl = np.where(viol, np.inf, np.maximum(kl, 0.0))
    np.fill_diagonal(kl, 0.0)
    return kl


def _offdiag(mat: np.ndarray) -> np.ndarray:
    m = mat.shape[0]
    return mat[~np.eye(m, dtype=bool)]


def verify_family(
    family: PackingFamily,
    rng: Optional[np.random.Generator] = None,
    exact_tv_pairs: int = 3,
    mc_pairs: int = 2,
    mc_samples: int = 20000,
) -> dict:
    """Exhaustively re-check the family's declared pairwise bounds.

    k-ary members get full pairwise TV/KL/L2.  Product members get exact
    pairwise KL via additivity, the Pinsker TV cap, and exact TV by
    enumeration for a deterministic sample of pairs.  Gaussian mixtures get
    the exact KL convexity bound, the mean-norm check, and Monte Carlo TV
    for a sample of pairs.  Returns a report dict with an overall ``ok``.
    """
    members = family.members
    m = len(members)
    if m > PAIRWISE_MEMBER_CAP:
        raise ValueError(f"{m} members exceed the pairwise verification cap")
    report: dict = {"kind": family.meta.get("kind"), "members": m, "loss": family.loss}
    checks: list[bool] = []

    if isinstance(members[0], ProbVector):
        P = np.stack([p.probs for p in members])
        tv = 0.5 * cdist(P, P, metric="cityblock")
        l2 = cdist(P, P, metric="euclidean")
        kl = _pairwise_kl_matrix(P)
        report["min_tv"], report["max_tv"] = float(_offdiag(tv).min()), float(_offdiag(tv).max())
        report["min_l2"], report["max_l2"] = float(_offdiag(l2).min()), float(_offdiag(l2).max())
        kl_off = _offdiag(kl)
        report["max_kl"] = float(kl_off.max())
        report["min_kl"] = float(kl_off.min())
        sep_measured = report["min_tv"] if family.loss == "tv" else report["min_l2"]
    elif isinstance(members[0], ProductDist):
        margs: list[np.ndarray] = []
        index: dict[bytes, int] = {}
        words = np.empty((m, members[0].d), dtype=np.int64)
        for mi, member in enumerate(members):
            for ci, marg in enumerate(member.marginals):
                key = marg.probs.tobytes()
                if key not in index:
                    index[key] = len(margs)
                    margs.append(marg.probs)
                words[mi, ci] = index[key]
        Q = np.stack(margs)
        kl_marg = _pairwise_kl_matrix(Q)
        kl = kl_marg[words[:, None, :], words[None, :, :]].sum(axis=2)
        kl_off = _offdiag(kl)
        report["max_kl"] = float(kl_off.max())
        report["min_kl"] = float(kl_off.min())
        with np.errstate(invalid="ignore"):
            report["max_tv_pinsker"] = float(np.sqrt(2.0 * report["max_kl"]))
        atoms = members[0].k ** members[0].d
        measured = []
        if atoms <= PRODUCT_ATOM_CAP:
            order = np.argsort(kl_off.ravel())
            pairs = set()
            idx = np.argwhere(~np.eye(m, dtype=bool))
            for pos in order[: max(0, exact_tv_pairs - 1)]:
                i, j = (int(x) for x in idx[pos])
                pairs.add((min(i, j), max(i, j)))
            pairs.add((0, 1))
            for i, j in sorted(pairs):
                measured.append(product_tv_exact(members[i], members[j]))
        report["exact_tv_pairs"] = len(measured)
        report["measured_min_tv"] = float(min(measured)) if measured else None
        report["measured_max_tv"] = float(max(measured)) if measured else None
        if measured and family.tv_cap is not None:
            checks.append(max(measured) <= family.tv_cap + _TOL)
        sep_measured = report["measured_min_tv"]
    else:  # Gaussian mixtures
        convexity = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                a, b = members[i], members[j]
                val = float(
                    0.5 * ((a.means - b.means) ** 2).sum(axis=1).mean()
                )
                convexity[i, j] = convexity[j, i] = val
        off = _offdiag(convexity)
        report["max_kl_convexity"] = float(off.max())
        report["min_kl_convexity"] = float(off.min())
        report["max_kl"] = report["max_kl_convexity"]
        norms = max(float(np.linalg.norm(x.means, axis=1).max()) for x in members)
        report["max_mean_norm"] = norms
        report["norm_bound"] = members[0].norm_bound
        checks.append(norms <= members[0].norm_bound + _TOL)
        measured = []
        if mc_pairs > 0:
            rng = rng or np.random.default_rng(0)
            flat_idx = np.argsort(off.ravel())
            idx = np.argwhere(~np.eye(m, dtype=bool))
            seen = set()
            for pos in flat_idx:
                i, j = idx[pos]
                key = (int(min(i, j)), int(max(i, j)))
                if key in seen:
                    continue
                seen.add(key)
                est, se = mixture_tv_mc(members[key[0]], members[key[1]], mc_samples, rng)
                measured.append({"pair": list(key), "tv": est, "stderr": se})
                if len(measured) >= mc_pairs:
                    break
        report["mc_tv"] = measured
        sep_measured = min((x["tv"] for x in measured), default=None)

    report["measured_min_separation"] = sep_measured
    if family.kl_cap is not None and math.isfinite(family.kl_cap):
        checks.append(report["max_kl"] <= family.kl_cap + _TOL)
    if isinstance(members[0], ProbVector):
        if family.tv_cap is not None:
            checks.append(report["max_tv"] <= family.tv_cap + _TOL)
        if family.separation > 0:
            checks.append(sep_measured >= family.separation - _TOL)
    report["ok"] = bool(all(checks)) if checks else True
    return report


def verify_hypercube(
    family: HypercubeFamily,
    rng: Optional[np.random.Generator] = None,
    pair_cap: int = 64,
) -> dict:
    """Check the loss decomposition of a hypercube family.

    The k-ary family is checked for exact equality TV = 2 tau * hamming on
    all pairs (up to pair_cap sign vectors); the product family is checked
    by exact TV enumeration against the 2 tau * hamming floor on a
    deterministic sample of pairs.
    """
    rng = rng or np.random.default_rng(0)
    dim = family.index_dim
    if 2**dim <= pair_cap:
        vectors = [np.array(s) for s in itertools.product((-1, 1), repeat=dim)]
    else:
        vectors = [
            np.where(rng.random(dim) < 0.5, -1, 1) for _ in range(pair_cap)
        ]
    worst_gap = math.inf
    equality_err = 0.0
    n_pairs = 0
    for a in range(len(vectors)):
        for b in range(a + 1, len(vectors)):
            u, v = vectors[a], vectors[b]
            ham = int((u != v).sum())
            if ham == 0:
                continue
            tv = family.pair_tv(u, v)
            floor = 2.0 * family.tau * ham
            worst_gap = min(worst_gap, tv - floor)
            if family.kind == "kary":
                equality_err = max(equality_err, abs(tv - floor))
            n_pairs += 1
    report = {
        "kind": family.kind,
        "index_dim": dim,
        "tau": family.tau,
        "pairs_checked": n_pairs,
        "worst_decomposition_gap": worst_gap,
        "ok": worst_gap >= -_TOL,
    }
    if family.kind == "kary":
        report["equality_error"] = equality_err
        report["ok"] = report["ok"] and equality_err <= 1e-9
    return report
