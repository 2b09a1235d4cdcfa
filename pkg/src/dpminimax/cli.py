"""Command line interface.

Every subcommand prints a JSON document (or writes it with --out) so the
outputs can be piped into further tooling.  Commands that carry declared
pass/fail bands (pack verify, couple run, experiment, scaling) exit
nonzero when a band fails.
"""

from __future__ import annotations

import json
import math
import sys

import click
import numpy as np

from . import bounds as bounds_mod
from .codes import code_from_json, gv_constant_weight, gv_qary
from .core import Dataset, PrivacyBudget, ProbVector, dist_from_json
from .couplings import (
    assouad_kary_coupling,
    empirical_hamming,
    marginal_check,
    maximal_coupling_iid,
    product_flip_coupling,
)
from .harness import build_family, run_experiment, scaling_check
from .mechanisms import (
    check_dp,
    empirical_estimator,
    group_dp_check,
    laplace_estimator,
    mechanism_from_json,
)
from .packings import HypercubeFamily, family_from_json, verify_family, verify_hypercube


def _emit(ctx, payload, ok: bool = True):
    text = json.dumps(payload, indent=2, default=_json_default)
    out = ctx.obj.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)
    if not ok:
        sys.exit(1)


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    raise TypeError(f"not JSON serializable: {type(x)}")


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Global RNG seed.")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker threads.")
@click.option("--out", type=click.Path(), default=None, help="Write output here instead of stdout.")
@click.pass_context
def main(ctx, seed, threads, out):
    """Differentially private estimation bounds, hard instances, and checks."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, threads=threads, out=out)


# -- bounds -----------------------------------------------------------------


@main.group()
def bounds():
    """Evaluate the lower-bound formulas."""


@bounds.command("lecam")
@click.option("--tv", type=float, required=True)
@click.option("--d", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.pass_context
def bounds_lecam(ctx, tv, d, eps, delta):
    rep = bounds_mod.le_cam_bound(tv, d, PrivacyBudget(eps, delta))
    _emit(ctx, rep.to_json())


@bounds.command("fano")
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--d", type=float, required=True)
@click.option("--m", type=int, required=True)
@click.option("--eps", type=float, required=True)
@click.pass_context
def bounds_fano(ctx, alpha, beta, d, m, eps):
    _emit(ctx, bounds_mod.fano_bound(alpha, beta, d, m, eps).to_json())


@bounds.command("assouad")
@click.option("--k-index", type=int, required=True)
@click.option("--tau", type=float, required=True)
@click.option("--d", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.pass_context
def bounds_assouad(ctx, k_index, tau, d, eps, delta):
    _emit(ctx, bounds_mod.assouad_bound(k_index, tau, d, PrivacyBudget(eps, delta)).to_json())


@bounds.command("corollary")
@click.option("--alpha-sep", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--m", type=int, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--tau", type=float, required=True)
@click.pass_context
def bounds_corollary(ctx, alpha_sep, beta, gamma, m, eps, tau):
    n_classical, n_private = bounds_mod.fano_sample_complexity(alpha_sep, beta, gamma, m, eps, tau)
    _emit(ctx, {"n_classical": n_classical, "n_private": n_private})


@bounds.command("packing")
@click.option("--m", type=int, required=True)
@click.option("--d", type=float, required=True)
@click.pass_context
def bounds_packing(ctx, m, d):
    _emit(ctx, {"epsilon_lower": bounds_mod.packing_bound(m, d), "scaling": "unscaled Omega"})


@bounds.command("group")
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.option("--t", type=int, required=True)
@click.pass_context
def bounds_group(ctx, eps, delta, t):
    mult, add = bounds_mod.group_privacy_factor(PrivacyBudget(eps, delta), t)
    _emit(ctx, {"multiplier": mult, "additive": add})


@bounds.command("table")
@click.option("--problem", type=click.Choice(["kary_tv", "kary_l2", "product", "gmix"]), required=True)
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--alpha", type=float, required=True)
@click.option("--r", type=float, default=None)
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.pass_context
def bounds_table(ctx, problem, k, d, alpha, r, eps, delta):
    params = {"alpha": alpha}
    if k is not None:
        params["k"] = k
    if d is not None:
        params["d"] = d
    if r is not None:
        params["R"] = r
    rows = bounds_mod.sample_complexity_table(problem, params, PrivacyBudget(eps, delta))
    _emit(ctx, {"rows": rows})


# -- codes ------------------------------------------------------------------


@main.group()
def codes():
    """Construct and verify Gilbert-Varshamov codes."""


@codes.command("gen")
@click.option("--kind", type=click.Choice(["cw", "qary"]), required=True)
@click.option("--k", type=int, default=None, help="Length of the constant-weight code.")
@click.option("--l", type=int, default=None, help="Weight of the constant-weight code.")
@click.option("--h", type=int, default=None, help="Alphabet of the q-ary code.")
@click.option("--d", type=int, default=None, help="Length of the q-ary code.")
@click.option("--max-words", type=int, default=None)
@click.pass_context
def codes_gen(ctx, kind, k, l, h, d, max_words):
    if kind == "cw":
        if k is None or l is None:
            raise click.UsageError("cw needs --k and --l")
        code = gv_constant_weight(k, l, max_words=max_words, seed=ctx.obj["seed"])
    else:
        if h is None or d is None:
            raise click.UsageError("qary needs --h and --d")
        code = gv_qary(h, d, max_words=max_words, seed=ctx.obj["seed"])
    payload = code.to_json()
    payload["verification"] = code.verify()
    _emit(ctx, payload, ok=payload["verification"]["ok"])


# -- packings ---------------------------------------------------------------

_FAMILY_KEYS = {
    "kary-tv": ("k", "alpha"),
    "kary-l2": ("k", "alpha"),
    "product": ("k", "d", "alpha"),
    "gmix": ("k", "d", "alpha", "R"),
    "assouad-kary": ("k", "alpha", "n"),
    "assouad-product": ("d", "alpha", "n"),
}


@main.group()
def pack():
    """Build and verify hard-instance families."""


@pack.command("gen")
@click.option("--family", "family_kind", type=click.Choice(sorted(_FAMILY_KEYS)), required=True)
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--alpha", type=float, required=True)
@click.option("--r", type=float, default=None)
@click.option("--n", type=int, default=0)
@click.option("--balanced/--literal", default=True, show_default=True)
@click.option("--max-members", type=int, default=None)
@click.option("--verify/--no-verify", "do_verify", default=True, show_default=True)
@click.pass_context
def pack_gen(ctx, family_kind, k, d, alpha, r, n, balanced, max_members, do_verify):
    spec = {"kind": family_kind, "alpha": alpha, "seed": ctx.obj["seed"]}
    if k is not None:
        spec["k"] = k
    if d is not None:
        spec["d"] = d
    if r is not None:
        spec["R"] = r
    if family_kind.startswith("assouad"):
        spec["n"] = n
    if family_kind == "product":
        spec["balanced"] = balanced
    if max_members is not None:
        spec["max_members"] = max_members
    missing = [key for key in _FAMILY_KEYS[family_kind] if key.lower() not in {s.lower() for s in spec}]
    if missing:
        raise click.UsageError(f"{family_kind} needs --{', --'.join(m.lower() for m in missing)}")
    family = build_family(spec)
    payload = family.to_json()
    payload["spec"] = spec
    ok = True
    if do_verify:
        rng = np.random.default_rng(ctx.obj["seed"])
        report = (
            verify_hypercube(family, rng)
            if isinstance(family, HypercubeFamily)
            else verify_family(family, rng)
        )
        payload["verification"] = report
        ok = report["ok"]
    _emit(ctx, payload, ok=ok)


@pack.command("verify")
@click.argument("path", type=click.Path(exists=True))
@click.option("--mc-samples", type=int, default=20000, show_default=True)
@click.pass_context
def pack_verify(ctx, path, mc_samples):
    with open(path) as fh:
        obj = json.load(fh)
    rng = np.random.default_rng(ctx.obj["seed"])
    if obj.get("kind") in ("kary", "product") and "index_dim" in obj:
        family = HypercubeFamily(
            kind=obj["kind"],
            index_dim=obj["index_dim"],
            tau=obj["tau"],
            n=obj["n"],
            alpha=obj["alpha"],
            meta=obj.get("meta", {}),
        )
        report = verify_hypercube(family, rng)
    else:
        family = family_from_json(obj)
        report = verify_family(family, rng, mc_samples=mc_samples)
    _emit(ctx, report, ok=report["ok"])


# -- couplings ---------------------------------------------------------------


@main.group()
def couple():
    """Sample couplings and check their empirics."""


@couple.command("run")
@click.option("--kind", type=click.Choice(["maximal", "assouad-kary", "assouad-product"]), required=True)
@click.option("--trials", type=int, default=10000, show_default=True)
@click.option("--marginal-trials", type=int, default=100000, show_default=True)
@click.option("--p", "p_json", type=str, default=None, help="Left pmf as a JSON list (maximal).")
@click.option("--q", "q_json", type=str, default=None, help="Right pmf as a JSON list (maximal).")
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--n", type=int, required=True)
@click.option("--i", "coord", type=int, default=1, show_default=True)
@click.pass_context
def couple_run(ctx, kind, trials, marginal_trials, p_json, q_json, k, d, alpha, n, coord):
    if kind == "maximal":
        if not p_json or not q_json:
            raise click.UsageError("maximal needs --p and --q")
        sampler = maximal_coupling_iid(
            ProbVector(json.loads(p_json)), ProbVector(json.loads(q_json)), n
        )
    elif kind == "assouad-kary":
        if k is None or alpha is None:
            raise click.UsageError("assouad-kary needs --k and --alpha")
        sampler = assouad_kary_coupling(k, alpha, n, coord)
    else:
        if d is None or alpha is None:
            raise click.UsageError("assouad-product needs --d and --alpha")
        sampler = product_flip_coupling(d, alpha, n, coord)
    rng = np.random.default_rng(ctx.obj["seed"])
    mean, stderr = empirical_hamming(sampler, trials, rng)
    marginal_tv = max(
        marginal_check(sampler, "left", marginal_trials, rng),
        marginal_check(sampler, "right", marginal_trials, rng),
    )
    ok = abs(mean - sampler.expected_hamming) <= 4 * max(stderr, 1e-12) and marginal_tv <= 0.02
    _emit(
        ctx,
        {
            "mean": mean,
            "stderr": stderr,
            "bound": sampler.hamming_bound,
            "expected": sampler.expected_hamming,
            "marginal_tv": marginal_tv,
            "ok": ok,
        },
        ok=ok,
    )


# -- mechanisms ---------------------------------------------------------------


@main.group()
def mech():
    """Run estimators and audit finite mechanisms."""


@mech.command("estimate")
@click.option("--kind", type=click.Choice(["empirical", "laplace"]), required=True)
@click.option("--k", type=int, required=True)
@click.option("--eps", type=float, default=None)
@click.option("--in", "in_path", type=click.Path(exists=True), required=True)
@click.pass_context
def mech_estimate(ctx, kind, k, eps, in_path):
    with open(in_path) as fh:
        obj = json.load(fh)
    symbols = obj["symbols"] if isinstance(obj, dict) else obj
    data = Dataset(np.asarray(symbols, dtype=np.int64))
    if kind == "empirical":
        est = empirical_estimator(data, k)
    else:
        if eps is None:
            raise click.UsageError("laplace needs --eps")
        est = laplace_estimator(data, k, eps, np.random.default_rng(ctx.obj["seed"]))
    _emit(ctx, est.to_json())


@mech.command("audit")
@click.option("--mech", "mech_path", type=click.Path(exists=True), required=True)
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.option("--group", "group_t", type=int, default=None, help="Group distance cap t.")
@click.pass_context
def mech_audit(ctx, mech_path, eps, delta, group_t):
    with open(mech_path) as fh:
        mechanism = mechanism_from_json(json.load(fh))
    payload = {"delta_star": check_dp(mechanism, None, eps), "epsilon": eps}
    if group_t is not None:
        payload["group_t"] = group_t
        payload["worst_violation"] = group_dp_check(mechanism, eps, delta, group_t)
    _emit(ctx, payload)


# -- harness ------------------------------------------------------------------


@main.command("risk")
@click.option("--family", "family_kind", type=click.Choice(sorted(set(_FAMILY_KEYS) | {"uniform"})), required=True)
@click.option("--k", type=int, default=None)
@click.option("--d", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--r", type=float, default=None)
@click.option("--max-members", type=int, default=None)
@click.option("--estimator", type=click.Choice(["empirical", "laplace"]), default="laplace", show_default=True)
@click.option("--eps", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.option("--loss", type=click.Choice(["tv", "l2"]), default="tv", show_default=True)
@click.option("--n", "n_grid", type=int, multiple=True, required=True)
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--plot", type=click.Path(), default=None, help="Also render the risk figure here.")
@click.pass_context
def risk_cmd(ctx, family_kind, k, d, alpha, r, max_members, estimator, eps, delta, loss, n_grid, trials, plot):
    """One-off Monte Carlo risk evaluation from flags."""
    from .harness import ExperimentConfig, consistency_bands, monte_carlo_risk
    from .mechanisms import EstimatorConfig

    spec = {"kind": family_kind, "seed": ctx.obj["seed"]}
    for key, val in (("k", k), ("d", d), ("alpha", alpha), ("R", r), ("max_members", max_members)):
        if val is not None:
            spec[key] = val
    if family_kind.startswith("assouad"):
        spec["n"] = max(n_grid)
    family = build_family(spec)
    est = EstimatorConfig(estimator, k or 0, PrivacyBudget(eps if estimator == "laplace" else 0.0, delta))
    config = ExperimentConfig(
        family=family, estimator=est, loss=loss, n_grid=tuple(sorted(n_grid)),
        trials=trials, seed=ctx.obj["seed"], threads=ctx.obj["threads"], family_spec=spec,
    )
    report = monte_carlo_risk(config)
    bands = consistency_bands(report, est)
    ok = all(b["ok"] for b in bands)
    if plot:
        from .plots import risk_plot

        risk_plot(report, plot)
    _emit(ctx, {"report": report.to_json(), "bands": bands, "ok": ok}, ok=ok)


@main.command("experiment")
@click.argument("config", type=click.Path(exists=True))
@click.option("--plot/--no-plot", default=None)
@click.pass_context
def experiment_cmd(ctx, config, plot):
    """Run a schema-1 experiment config; writes JSON, CSV, and a figure."""
    prefix = ctx.obj["out"] or "experiment_report"
    if prefix.endswith(".json"):
        prefix = prefix[:-5]
    payload = run_experiment(config, prefix, plot=plot)
    click.echo(json.dumps({"paths": payload["paths"], "bands": payload["bands"], "ok": payload["ok"]}, indent=2))
    if not payload["ok"]:
        sys.exit(1)


@main.command("scaling")
@click.option("--problem", type=click.Choice(["kary_tv", "kary_l2", "assouad_product"]), required=True)
@click.option("--size", type=int, required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--eps", type=float, required=True)
@click.option("--factors", type=str, default="1,2,4", show_default=True)
@click.option("--axis", type=click.Choice(["size", "alpha", "epsilon"]), default="size", show_default=True)
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--plot", type=click.Path(), default=None, help="Also render the scaling figure here.")
@click.pass_context
def scaling_cmd(ctx, problem, size, alpha, eps, factors, axis, trials, plot):
    """Check how the required sample size scales along one axis."""
    result = scaling_check(
        problem,
        {
            "size": size,
            "alpha": alpha,
            "epsilon": eps,
            "trials": trials,
            "seed": ctx.obj["seed"],
            "axis": axis,
        },
        [float(f) for f in factors.split(",")],
    )
    if plot:
        from .plots import scaling_plot

        scaling_plot(result, plot)
    _emit(ctx, result, ok=result["ok"])


if __name__ == "__main__":
    main()
