"""Monte Carlo minimax-risk estimation and end-to-end experiments.

The harness evaluates a fixed estimator against a hard-instance family:
for each sample size it draws datasets, runs the estimator, and reports
the per-member mean loss and the max over members, which upper-bounds the
minimax risk (no search over estimators is attempted).  Matched
lower-bound values from the bound evaluators ride along so experiments can
check one-sided consistency: a certified-DP estimator's measured risk must
sit above any applicable lower bound.

Per-(member, n) RNG substreams make every report bit-reproducible from
its seed, independent of the thread count.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
import math
import subprocess
import time
from dataclasses import dataclass, field
from importlib.metadata import version as _pkg_version
from typing import Optional, Sequence, Union

import jsonschema
import numpy as np

from . import bounds as bounds_mod
from .core import (
    Distribution,
    GaussianMixtureSpec,
    Metric,
    PrivacyBudget,
    ProbVector,
    ProductDist,
    dist_from_json,
    distance,
)
from .mechanisms import EstimatorConfig, laplace_noise, noisy_counts_estimate, project_rows_to_simplex
from .packings import (
    HypercubeFamily,
    PackingFamily,
    assouad_kary_family,
    assouad_product_family,
    gaussian_mixture_packing,
    kary_l2_packing,
    kary_tv_packing,
    product_packing,
)

MEMBER_CAP = 2000
_PRODUCT_LOSS_ATOM_CAP = 2**13

CSV_COLUMNS = [
    "family_member",
    "n",
    "trials",
    "mean_loss",
    "stderr",
    "bound_lecam",
    "bound_fano",
    "bound_assouad",
]

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema", "family", "estimator", "loss", "n_grid", "trials", "seed"],
    "properties": {
        "schema": {"const": 1},
        "family": {"type": "object", "required": ["kind"]},
        "estimator": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["empirical", "laplace"]},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "delta": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "loss": {"enum": ["tv", "l2"]},
        "n_grid": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "trials": {"type": "integer", "minimum": 50},
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": 1},
        "plot": {"type": "boolean"},
    },
    "additionalProperties": True,
}

FamilyLike = Union[PackingFamily, HypercubeFamily, Sequence[Distribution]]


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo risk experiment: a family, an estimator, a loss,
    and the (n, trials, seed) sampling plan."""

    family: FamilyLike
    estimator: EstimatorConfig
    loss: str
    n_grid: tuple[int, ...]
    trials: int = 200
    seed: int = 0
    threads: int = 1
    family_spec: Optional[dict] = None

    def __post_init__(self):
        if self.loss not in ("tv", "l2"):
            raise ValueError("loss must be 'tv' or 'l2'")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise ValueError("n_grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if any(n < 1 for n in grid):
            raise ValueError("n_grid entries must be >= 1")
        if self.trials < 50:
            raise ValueError("trials must be >= 50")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        object.__setattr__(self, "n_grid", grid)


@dataclass
class RiskReport:
    """Per-(member, n) mean losses, the per-n max risk, and matched bounds."""

    loss: str
    n_grid: tuple[int, ...]
    trials: int
    seed: int
    member_labels: list[str]
    mean_loss: np.ndarray  # (members, len(n_grid))
    stderr: np.ndarray
    max_risk: list[float]
    argmax_member: list[int]
    bound_values: list[dict]  # per n: {"lecam": float|None, "fano": ..., "assouad": ...}
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "loss": self.loss,
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "seed": self.seed,
            "member_labels": self.member_labels,
            "mean_loss": self.mean_loss.tolist(),
            "stderr": self.stderr.tolist(),
            "max_risk": self.max_risk,
            "argmax_member": self.argmax_member,
            "bounds": self.bound_values,
            "meta": self.meta,
        }

    def csv_rows(self) -> list[list]:
        rows = []
        for mi, label in enumerate(self.member_labels):
            for ni, n in enumerate(self.n_grid):
                b = self.bound_values[ni]
                rows.append(
                    [
                        label,
                        n,
                        self.trials,
                        f"{self.mean_loss[mi, ni]:.10g}",
                        f"{self.stderr[mi, ni]:.10g}",
                        "" if b.get("lecam") is None else f"{b['lecam']:.10g}",
                        "" if b.get("fano") is None else f"{b['fano']:.10g}",
                        "" if b.get("assouad") is None else f"{b['assouad']:.10g}",
                    ]
                )
        return rows


def _resolve_members(family: FamilyLike) -> tuple[list[Distribution], list[str]]:
    if isinstance(family, PackingFamily):
        members = list(family.members)
        labels = [f"m{i:03d}" for i in range(len(members))]
    elif isinstance(family, HypercubeFamily):
        pairs = family.all_members(cap=MEMBER_CAP)
        members = [m for _, m in pairs]
        labels = ["".join("+" if s > 0 else "-" for s in e) for e, _ in pairs]
    else:
        members = list(family)
        labels = [f"m{i:03d}" for i in range(len(members))]
    if not members:
        raise ValueError("family has no members")
    if len(members) > MEMBER_CAP:
        raise ValueError(f"{len(members)} members exceed the harness cap {MEMBER_CAP}")
    return members, labels


def _losses_kary(est: np.ndarray, truth: np.ndarray, loss: str) -> np.ndarray:
    diff = est - truth[None, :]
    if loss == "tv":
        return 0.5 * np.abs(diff).sum(axis=1)
    return np.sqrt((diff**2).sum(axis=1))


def _member_risk_kary(
    member: ProbVector, n: int, trials: int, estimator: EstimatorConfig, loss: str,
    rng: np.random.Generator,
) -> np.ndarray:
    # Multinomial counts are a sufficient statistic for both shipped
    # estimators, so datasets are sampled as counts directly.
    counts = rng.multinomial(n, member.probs, size=trials)
    eps = estimator.budget.epsilon if estimator.kind == "laplace" else None
    est = noisy_counts_estimate(counts, n, eps, rng)
    return _losses_kary(est, member.probs, loss)


def _member_risk_product(
    member: ProductDist, n: int, trials: int, estimator: EstimatorConfig, loss: str,
    rng: np.random.Generator,
) -> np.ndarray:
    if loss != "tv":
        raise ValueError("product-family risk supports tv loss only")
    k, d = member.k, member.d
    if k**d > _PRODUCT_LOSS_ATOM_CAP:
        raise ValueError(f"exact product tv needs k^d <= {_PRODUCT_LOSS_ATOM_CAP}")
    # Per-coordinate release; one record can move every coordinate's
    # histogram by 2/n in l1, so the laplace scale carries the factor d.
    est_marginals = np.empty((d, trials, k))
    for c, marg in enumerate(member.marginals):
        counts = rng.multinomial(n, marg.probs, size=trials)
        emp = counts / n
        if estimator.kind == "laplace":
            emp = emp + laplace_noise(emp.shape, 2.0 * d / (n * estimator.budget.epsilon), rng)
            emp = project_rows_to_simplex(emp)
        est_marginals[c] = emp
    joint_est = np.ones((trials, 1))
    joint_true = np.ones(1)
    for c, marg in enumerate(member.marginals):
        joint_est = (joint_est[:, :, None] * est_marginals[c][:, None, :]).reshape(trials, -1)
        joint_true = np.multiply.outer(joint_true, marg.probs).ravel()
    return 0.5 * np.abs(joint_est - joint_true[None, :]).sum(axis=1)


def _member_risk(member, n, trials, estimator, loss, rng) -> np.ndarray:
    if isinstance(member, ProbVector):
        return _member_risk_kary(member, n, trials, estimator, loss, rng)
    if isinstance(member, ProductDist):
        return _member_risk_product(member, n, trials, estimator, loss, rng)
    raise ValueError("risk estimation covers discrete families only")


def family_bounds(family: FamilyLike, n: int, budget: PrivacyBudget) -> dict:
    """Matched lower-bound values for one sample size.

    Packing families get the pair bound (via their closest pair, with the
    n-fold coupling D = n * tv) and the multi-way bound at their declared
    separation and caps (pure DP only; vacuous when the separation constant
    is not pinned down).  Hypercube families get the decomposition bound at
    D = coupling_rate * n and the pair bound on their coordinate mixtures.
    """
    out: dict[str, Optional[float]] = {"lecam": None, "fano": None, "assouad": None}
    if isinstance(family, HypercubeFamily):
        rate = family.coupling_rate
        out["assouad"] = bounds_mod.assouad_bound(
            family.index_dim, family.tau, rate * n, budget
        ).value
        out["lecam"] = bounds_mod.le_cam_bound(min(1.0, rate * n), rate * n, budget).value
        return out
    if isinstance(family, PackingFamily):
        members = family.members
        if isinstance(members[0], ProbVector):
            P = np.stack([p.probs for p in members])
            tv_min = math.inf
            for i in range(len(members) - 1):
                tv_min = min(tv_min, float(0.5 * np.abs(P[i + 1 :] - P[i]).sum(axis=1).min()))
        else:
            # closest pair gauged through the KL caps; an upper bound on its
            # tv keeps both le cam terms valid lower bounds
            cap = family.kl_cap if family.tv_cap is None else None
            tv_min = family.tv_cap if family.tv_cap is not None else math.sqrt(2 * cap)
        out["lecam"] = bounds_mod.le_cam_bound(
            min(1.0, n * tv_min), n * tv_min, budget
        ).value
        if budget.delta == 0 and family.tv_cap is not None and math.isfinite(family.kl_cap):
            out["fano"] = bounds_mod.fano_bound(
                family.separation,
                n * family.kl_cap,
                n * family.tv_cap,
                family.size,
                budget.epsilon,
            ).value
        return out
    return out


def monte_carlo_risk(config: ExperimentConfig) -> RiskReport:
    """Estimate the fixed-estimator risk profile of a family.

    For each n in the grid and each member, draws ``trials`` datasets,
    applies the estimator, and averages the loss; the per-n max over
    members is the empirical risk proxy.  Streams are derived from
    (seed, member, n), so results do not depend on the thread count.
    """
    members, labels = _resolve_members(config.family)
    n_grid = config.n_grid
    shape = (len(members), len(n_grid))
    mean = np.zeros(shape)
    stderr = np.zeros(shape)
    t_start = time.time()

    def task(mi: int, ni: int):
        rng = np.random.default_rng(
            np.random.SeedSequence([config.seed & 0x7FFFFFFF, mi, ni])
        )
        losses = _member_risk(
            members[mi], n_grid[ni], config.trials, config.estimator, config.loss, rng
        )
        return mi, ni, float(losses.mean()), float(losses.std(ddof=1) / math.sqrt(config.trials))

    jobs = [(mi, ni) for mi in range(len(members)) for ni in range(len(n_grid))]
    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.threads) as pool:
            for mi, ni, m, s in pool.map(lambda j: task(*j), jobs):
                mean[mi, ni], stderr[mi, ni] = m, s
    else:
        for mi, ni in jobs:
            _, _, m, s = task(mi, ni)
            mean[mi, ni], stderr[mi, ni] = m, s

    budget = config.estimator.budget
    bound_values = [family_bounds(config.family, n, budget) for n in n_grid]
    max_risk = [float(mean[:, ni].max()) for ni in range(len(n_grid))]
    argmax = [int(mean[:, ni].argmax()) for ni in range(len(n_grid))]
    meta = {
        "estimator": {
            "kind": config.estimator.kind,
            "epsilon": budget.epsilon,
            "delta": budget.delta,
        },
        "family_spec": config.family_spec,
        "wall_time_s": time.time() - t_start,
        "versions": _version_stamp(),
    }
    return RiskReport(
        loss=config.loss,
        n_grid=n_grid,
        trials=config.trials,
        seed=config.seed,
        member_labels=labels,
        mean_loss=mean,
        stderr=stderr,
        max_risk=max_risk,
        argmax_member=argmax,
        bound_values=bound_values,
        meta=meta,
    )


def _version_stamp() -> dict:
    try:
        pkg = _pkg_version("dpminimax")
    except Exception:
        pkg = "unknown"
    try:
        git = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        ).stdout.strip() or None
    except Exception:
        git = None
    return {"dpminimax": pkg, "numpy": np.__version__, "git": git}


def build_family(spec: dict) -> FamilyLike:
    """Build a family from its JSON description (the config 'family' object)."""
    kind = spec.get("kind")
    mm = spec.get("max_members")
    seed = spec.get("seed", 0)
    if kind == "kary-tv":
        return kary_tv_packing(spec["k"], spec["alpha"], max_members=mm, seed=seed)
    if kind == "kary-l2":
        return kary_l2_packing(spec["k"], spec["alpha"], max_members=mm, seed=seed)
    if kind == "product":
        return product_packing(
            spec["k"], spec["d"], spec["alpha"],
            balanced=spec.get("balanced", True), max_members=mm, seed=seed,
        )
    if kind == "gmix":
        return gaussian_mixture_packing(
            spec["k"], spec["d"], spec["alpha"], spec["R"], max_members=mm, seed=seed
        )
    if kind == "assouad-kary":
        return assouad_kary_family(spec["k"], spec["alpha"], spec.get("n", 0))
    if kind == "assouad-product":
        return assouad_product_family(spec["d"], spec["alpha"], spec.get("n", 0))
    if kind == "uniform":
        return [ProbVector.uniform(spec["k"])]
    if kind == "members":
        return [dist_from_json(m) for m in spec["members"]]
    raise ValueError(f"unknown family kind {kind!r}")


def _estimator_from_spec(spec: dict) -> EstimatorConfig:
    kind = spec["kind"]
    eps = spec.get("epsilon", 0.0)
    delta = spec.get("delta", 0.0)
    return EstimatorConfig(kind=kind, k=0, budget=PrivacyBudget(eps, delta))


def load_config(source: Union[str, dict]) -> tuple[ExperimentConfig, dict]:
    """Parse and validate an experiment config (path or dict), schema 1."""
    if isinstance(source, dict):
        raw = source
    else:
        with open(source) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{source}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValueError(f"config schema error at {path}: {exc.message}") from exc
    config = ExperimentConfig(
        family=build_family(raw["family"]),
        estimator=_estimator_from_spec(raw["estimator"]),
        loss=raw["loss"],
        n_grid=tuple(raw["n_grid"]),
        trials=raw["trials"],
        seed=raw["seed"],
        threads=raw.get("threads", 1),
        family_spec=raw["family"],
    )
    return config, raw


def consistency_bands(report: RiskReport, estimator: EstimatorConfig) -> list[dict]:
    """One-sided lower-bound checks the experiment declares as pass/fail.

    Only a certified-DP estimator is subject to the lower bounds; the
    plain empirical estimator is exempt.  Each applicable bound at each n
    must sit below measured risk + 4 stderr.
    """
    bands = []
    if estimator.kind != "laplace":
        return bands
    for ni, n in enumerate(report.n_grid):
        mi = report.argmax_member[ni]
        risk = report.max_risk[ni]
        slack = 4.0 * report.stderr[mi, ni]
        for name in ("lecam", "fano", "assouad"):
            val = report.bound_values[ni].get(name)
            if val is None or val <= 0:
                continue
            bands.append(
                {
                    "name": f"{name}_le_risk_n{n}",
                    "bound": val,
                    "risk": risk,
                    "slack": slack,
                    "ok": bool(risk >= val - slack),
                }
            )
    return bands


def run_experiment(
    source: Union[str, dict], out_prefix: str, plot: Optional[bool] = None
) -> dict:
    """Execute a config file end to end: risk estimation, matched bounds,
    JSON + CSV reports, and (by default) a rendered figure next to them.

    Returns {"report": ..., "bands": ..., "paths": ..., "ok": ...}.
    """
    config, raw = load_config(source)
    if plot is None:
        plot = raw.get("plot", True)
    report = monte_carlo_risk(config)
    bands = consistency_bands(report, config.estimator)
    payload = {
        "schema": 1,
        "config": raw,
        "report": report.to_json(),
        "bands": bands,
        "ok": all(b["ok"] for b in bands),
    }
    paths = {"json": f"{out_prefix}.json", "csv": f"{out_prefix}.csv"}
    with open(paths["json"], "w") as fh:
        json.dump(payload, fh, indent=2)
    with open(paths["csv"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(report.csv_rows())
    if plot:
        from .plots import risk_plot

        paths["png"] = f"{out_prefix}.png"
        risk_plot(report, paths["png"])
    payload["paths"] = paths
    return payload


# ---------------------------------------------------------------------------
# Scaling checks


def _scaling_expression(problem: str, size: int, alpha: float, epsilon: float) -> float:
    if problem == "kary_tv":
        return size / alpha**2 + size / (alpha * epsilon)
    if problem == "kary_l2":
        return 1.0 / alpha**2 + math.sqrt(size) / (alpha * epsilon)
    if problem == "assouad_product":
        # statistical-regime reference: the shipped per-coordinate release
        # pays an extra factor of the dimension under privacy, so the
        # epsilon term is excluded from the expected-ratio reference
        return size / alpha**2
    raise ValueError(f"unknown scaling problem {problem!r}")


def _scaling_family(problem: str, size: int) -> list[Distribution]:
    if problem in ("kary_tv", "kary_l2"):
        return [ProbVector.uniform(size)]
    mean = 1.0 / size
    return [ProductDist([ProbVector([1.0 - mean, mean]) for _ in range(size)])]


def required_n(
    problem: str,
    size: int,
    alpha: float,
    epsilon: float,
    trials: int,
    seed: int,
    n_lo: int = 2,
    n_hi: Optional[int] = None,
    max_doublings: int = 24,
) -> int:
    """Smallest n (up to bisection resolution) at which the shipped
    estimator's risk drops to alpha on the problem's reference family."""
    loss = "l2" if problem == "kary_l2" else "tv"
    members = _scaling_family(problem, size)
    estimator = EstimatorConfig(kind="laplace", k=0, budget=PrivacyBudget(epsilon, 0.0))

    def risk(n: int) -> float:
        worst = 0.0
        for mi, member in enumerate(members):
            rng = np.random.default_rng(np.random.SeedSequence([seed & 0x7FFFFFFF, size, mi, n]))
            worst = max(worst, float(_member_risk(member, n, trials, estimator, loss, rng).mean()))
        return worst

    lo, hi = n_lo, n_hi
    if hi is None:
        hi = max(4, 2 * lo)
        for _ in range(max_doublings):
            if risk(hi) <= alpha:
                break
            lo, hi = hi, hi * 2
        else:
            raise RuntimeError(
                f"bisection failed to bracket: risk({hi}) still above alpha={alpha} "
                f"for {problem} at size {size}"
            )
    elif risk(hi) > alpha:
        raise RuntimeError(
            f"bisection failed to bracket: risk({hi}) above alpha={alpha} "
            f"for {problem} at size {size}"
        )
    while hi - lo > max(1, int(0.02 * hi)):
        mid = (lo + hi) // 2
        if risk(mid) <= alpha:
            hi = mid
        else:
            lo = mid
    return hi


def scaling_check(
    problem: str,
    base_params: dict,
    scale_factors: Sequence[float],
    band: float = 0.25,
) -> dict:
    """Verify how the required sample size grows along one parameter axis.

    ``base_params`` carries size (k or d), alpha, epsilon, trials, seed and
    the axis to scale ("size", "alpha", or "epsilon").  For consecutive
    scale factors, the measured required-n ratio must fall within
    (1 +- band) of the ratio predicted by the problem's sample-complexity
    expression.  Returns per-step verdicts and an overall ok.
    """
    axis = base_params.get("axis", "size")
    size0 = int(base_params["size"])
    alpha0 = float(base_params["alpha"])
    eps0 = float(base_params["epsilon"])
    trials = int(base_params.get("trials", 200))
    seed = int(base_params.get("seed", 0))
    points = []
    for f in scale_factors:
        size, alpha, eps = size0, alpha0, eps0
        if axis == "size":
            size = int(round(size0 * f))
        elif axis == "alpha":
            alpha = alpha0 * f
        elif axis == "epsilon":
            eps = eps0 * f
        else:
            raise ValueError(f"unknown axis {axis!r}")
        n_req = required_n(problem, size, alpha, eps, trials, seed)
        points.append(
            {
                "factor": f,
                "size": size,
                "alpha": alpha,
                "epsilon": eps,
                "required_n": n_req,
                "reference": _scaling_expression(problem, size, alpha, eps),
            }
        )
    steps = []
    for a, b in zip(points, points[1:]):
        measured = b["required_n"] / a["required_n"]
        expected = b["reference"] / a["reference"]
        steps.append(
            {
                "from": a["factor"],
                "to": b["factor"],
                "measured_ratio": measured,
                "expected_ratio": expected,
                "band": [expected * (1 - band), expected * (1 + band)],
                "ok": bool(expected * (1 - band) <= measured <= expected * (1 + band)),
            }
        )
    return {
        "problem": problem,
        "axis": axis,
        "points": points,
        "steps": steps,
        "ok": all(s["ok"] for s in steps),
    }
