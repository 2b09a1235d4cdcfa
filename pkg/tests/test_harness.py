import json
import math
from fractions import Fraction
from itertools import product as iproduct
from pathlib import Path

import numpy as np
import pytest

from dpminimax.core import PrivacyBudget, ProbVector, ProductDist
from dpminimax.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    build_family,
    consistency_bands,
    family_bounds,
    load_config,
    monte_carlo_risk,
    required_n,
    run_experiment,
    scaling_check,
)
from dpminimax.mechanisms import EstimatorConfig
from dpminimax.packings import assouad_kary_family, assouad_product_family, kary_tv_packing
from dpminimax import bounds as bounds_mod

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def exact_empirical_tv_risk(n: int, k: int) -> float:
    """Exact E[TV(empirical, uniform)] by enumerating multinomial outcomes."""
    p = Fraction(1, k)
    total = Fraction(0)
    fact = [math.factorial(i) for i in range(n + 1)]

    def rec(remaining, slots, counts):
        nonlocal total
        if slots == 1:
            c = counts + [remaining]
            weight = Fraction(fact[n], 1)
            for x in c:
                weight /= fact[x]
            weight *= p**n
            tv = sum(abs(Fraction(x, n) - p) for x in c) / 2
            total += weight * tv
            return
        for x in range(remaining + 1):
            rec(remaining - x, slots - 1, counts + [x])

    rec(n, k, [])
    return float(total)


def uniform_config(**kw):
    defaults = dict(
        family=[ProbVector.uniform(4)],
        estimator=EstimatorConfig("empirical", 4),
        loss="tv",
        n_grid=(8, 64, 512),
        trials=400,
        seed=3,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestMonteCarloRisk:
    def test_matches_exact_multinomial_oracle(self):
        rep = monte_carlo_risk(uniform_config())
        exact = exact_empirical_tv_risk(8, 4)
        assert abs(rep.mean_loss[0, 0] - exact) <= 3 * rep.stderr[0, 0]

    def test_risk_monotone_in_n(self):
        rep = monte_carlo_risk(uniform_config())
        for a, b in zip(rep.max_risk, rep.max_risk[1:]):
            assert b <= a + 3 * rep.stderr.max()

    def test_bit_reproducible(self):
        a = monte_carlo_risk(uniform_config())
        b = monte_carlo_risk(uniform_config())
        assert np.array_equal(a.mean_loss, b.mean_loss)
        assert a.max_risk == b.max_risk

    def test_thread_count_does_not_change_results(self):
        a = monte_carlo_risk(uniform_config())
        b = monte_carlo_risk(uniform_config(threads=4))
        assert np.array_equal(a.mean_loss, b.mean_loss)

    def test_max_dominates_members(self):
        fam = kary_tv_packing(10, 0.02, max_members=8)
        cfg = ExperimentConfig(
            family=fam,
            estimator=EstimatorConfig("laplace", 10, PrivacyBudget(1.0)),
            loss="tv",
            n_grid=(50, 200),
            trials=60,
            seed=0,
        )
        rep = monte_carlo_risk(cfg)
        for ni in range(2):
            assert all(rep.max_risk[ni] >= rep.mean_loss[mi, ni] for mi in range(fam.size))

    def test_l2_loss_path(self):
        cfg = uniform_config(loss="l2", n_grid=(64,))
        rep = monte_carlo_risk(cfg)
        assert 0 < rep.max_risk[0] < 1

    def test_product_member_risk_shrinks_with_n(self):
        fam = assouad_product_family(4, 0.01, 0)
        cfg = ExperimentConfig(
            family=fam,
            estimator=EstimatorConfig("empirical", 0),
            loss="tv",
            n_grid=(20, 2000),
            trials=60,
            seed=1,
        )
        rep = monte_carlo_risk(cfg)
        assert rep.max_risk[1] < rep.max_risk[0]

    def test_member_cap(self):
        fam = assouad_kary_family(24, 0.01, 0)  # 2^12 = 4096 members
        cfg_kw = dict(
            estimator=EstimatorConfig("empirical", 24),
            loss="tv",
            n_grid=(10,),
            trials=50,
            seed=0,
        )
        with pytest.raises(ValueError, match="cap"):
            monte_carlo_risk(ExperimentConfig(family=fam, **cfg_kw))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            uniform_config(n_grid=())
        with pytest.raises(ValueError):
            uniform_config(n_grid=(10, 10))
        with pytest.raises(ValueError):
            uniform_config(trials=10)
        with pytest.raises(ValueError):
            uniform_config(loss="hellinger")


class TestFamilyBounds:
    def test_hypercube_bounds_match_direct_evaluation(self):
        fam = assouad_kary_family(10, 0.1, 0)
        budget = PrivacyBudget(0.01, 0.0)
        vals = family_bounds(fam, 50, budget)
        direct = bounds_mod.assouad_bound(5, 0.1, 20 * 0.1 * 50 / 10, budget).value
        assert vals["assouad"] == pytest.approx(direct, rel=1e-12)
        assert vals["lecam"] is not None and vals["fano"] is None

    def test_packing_bounds_structure(self):
        fam = kary_tv_packing(10, 0.02, max_members=10)
        vals = family_bounds(fam, 100, PrivacyBudget(1.0, 0.0))
        assert vals["assouad"] is None
        assert vals["lecam"] is not None
        assert vals["fano"] is not None

    def test_fano_suppressed_for_approximate_dp(self):
        fam = kary_tv_packing(10, 0.02, max_members=10)
        vals = family_bounds(fam, 100, PrivacyBudget(1.0, 0.1))
        assert vals["fano"] is None

    def test_raw_member_lists_have_no_bounds(self):
        vals = family_bounds([ProbVector.uniform(3)], 10, PrivacyBudget(1.0))
        assert vals == {"lecam": None, "fano": None, "assouad": None}


class TestBands:
    def test_only_private_estimators_are_checked(self):
        rep = monte_carlo_risk(uniform_config())
        assert consistency_bands(rep, EstimatorConfig("empirical", 4)) == []

    def test_laplace_risk_dominates_bounds(self):
        fam = assouad_kary_family(10, 0.1, 0)
        est = EstimatorConfig("laplace", 10, PrivacyBudget(0.01, 0.0))
        cfg = ExperimentConfig(
            family=fam, estimator=est, loss="tv", n_grid=(50,), trials=120, seed=2
        )
        rep = monte_carlo_risk(cfg)
        bands = consistency_bands(rep, est)
        assert bands and all(b["ok"] for b in bands)


class TestRunExperiment:
    def test_golden_config_reproduces_frozen_report(self, tmp_path):
        payload = run_experiment(str(CONFIG_DIR / "golden.json"), str(tmp_path / "g"), plot=False)
        frozen = json.loads((CONFIG_DIR / "golden_expected.json").read_text())
        got = np.array(payload["report"]["mean_loss"])
        want = np.array(frozen["report"]["mean_loss"])
        band = 4 * (np.array(payload["report"]["stderr"]) + np.array(frozen["report"]["stderr"]))
        assert np.all(np.abs(got - want) <= np.maximum(band, 1e-12))
        assert payload["ok"] and frozen["ok"]

    def test_report_files_written(self, tmp_path):
        payload = run_experiment(str(CONFIG_DIR / "golden.json"), str(tmp_path / "exp"), plot=True)
        assert Path(payload["paths"]["json"]).exists()
        assert Path(payload["paths"]["csv"]).exists()
        assert Path(payload["paths"]["png"]).exists()
        header = Path(payload["paths"]["csv"]).read_text().splitlines()[0]
        assert header.split(",") == CSV_COLUMNS

    def test_seed_changes_keep_bands(self, tmp_path):
        base = json.loads((CONFIG_DIR / "golden.json").read_text())
        for seed in (11, 12, 13):
            base["seed"] = seed
            payload = run_experiment(base, str(tmp_path / f"s{seed}"), plot=False)
            assert payload["ok"], payload["bands"]

    def test_schema_rejects_empty_n_grid(self):
        raw = json.loads((CONFIG_DIR / "golden.json").read_text())
        raw["n_grid"] = []
        with pytest.raises(ValueError, match="n_grid"):
            load_config(raw)

    def test_schema_rejects_missing_field(self):
        raw = json.loads((CONFIG_DIR / "golden.json").read_text())
        del raw["trials"]
        with pytest.raises(ValueError, match="trials"):
            load_config(raw)

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"schema": 1,\n  "family": }')
        with pytest.raises(ValueError, match="line 2"):
            load_config(str(path))

    def test_build_family_kinds(self):
        assert len(build_family({"kind": "uniform", "k": 5})) == 1
        fam = build_family({"kind": "kary-tv", "k": 10, "alpha": 0.02, "max_members": 6})
        assert fam.size == 6
        with pytest.raises(ValueError, match="unknown family"):
            build_family({"kind": "mystery"})


class TestScaling:
    def test_size_doubling_kary_tv(self):
        res = scaling_check(
            "kary_tv",
            {"size": 8, "alpha": 0.25, "epsilon": 0.25, "trials": 100, "seed": 5},
            [1, 2],
        )
        assert res["ok"], res["steps"]
        step = res["steps"][0]
        assert step["band"][0] <= step["measured_ratio"] <= step["band"][1]

    def test_alpha_axis_statistical_regime(self):
        # large epsilon: halving alpha should quadruple the required n
        res = scaling_check(
            "kary_tv",
            {"size": 6, "alpha": 0.3, "epsilon": 10.0, "trials": 150, "seed": 6, "axis": "alpha"},
            [1, 0.5],
        )
        assert res["ok"], res["steps"]

    def test_epsilon_axis_privacy_regime(self):
        res = scaling_check(
            "kary_tv",
            {"size": 8, "alpha": 0.3, "epsilon": 0.02, "trials": 150, "seed": 7, "axis": "epsilon"},
            [1, 2],
        )
        assert res["ok"], res["steps"]

    def test_product_statistical_scaling(self):
        res = scaling_check(
            "assouad_product",
            {"size": 4, "alpha": 0.2, "epsilon": 50.0, "trials": 100, "seed": 8},
            [1, 2],
        )
        assert res["ok"], res["steps"]

    def test_bracket_failure_raises(self):
        with pytest.raises(RuntimeError, match="bracket"):
            required_n("kary_tv", 8, 0.05, 0.5, trials=60, seed=0, n_lo=2, n_hi=4)

    def test_unknown_axis(self):
        with pytest.raises(ValueError, match="axis"):
            scaling_check(
                "kary_tv",
                {"size": 8, "alpha": 0.3, "epsilon": 1.0, "axis": "temperature"},
                [1, 2],
            )
