import math

import numpy as np
import pytest

from mboot import DegenerateDesign, ModelSpec
from mboot.simulate import (
    StudyConfig,
    describe_rule,
    estimate_coverage,
    fit_m_scaling,
    fixed_m,
    load_studies,
    parse_tau,
    presets,
    run_study,
    worker_cap,
)
from mboot.rng import derive_seed


class TestConfig:
    def test_defaults(self):
        cfg = StudyConfig(model="power-mean", n_grid=[100])
        assert (cfg.statistic, cfg.level, cfg.N, cfg.R, cfg.ci_method) == ("mean", 0.95, 10_000, 1000, "basic")

    @pytest.mark.parametrize(
        "kw",
        [
            {"n_grid": []},
            {"n_grid": [200, 100]},
            {"N": 0},
            {"R": 0},
            {"ci_method": "bca"},
            {"kind": "power"},
            {"m_rule": "golden"},
            {"m_rule": {"nope": 1}},
            {"statistic": "median"},
        ],
    )
    def test_invalid(self, kw):
        base = {"model": "power-mean", "n_grid": [100]}
        with pytest.raises((ValueError, KeyError)):
            StudyConfig(**{**base, **kw})

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            StudyConfig.from_dict({"model": "power-mean", "n_grid": [10], "colour": 1})

    def test_rule_descriptions(self):
        assert describe_rule({"fixed": {"beta": 0.5, "c": 2}}) == "2*n^0.5"
        assert describe_rule("politis") == "politis"
        assert describe_rule({"selector": "bickel", "params": {"q": 0.7}}) == "bickel"
        assert describe_rule({"explicit": 12}) == "m=12"

    def test_fixed_m(self):
        assert fixed_m(1000, 2 / 3) == 100
        assert fixed_m(1000, 0.5) == 31
        assert fixed_m(100, 1 / 3, min_m=3) == 4
        assert fixed_m(10, 0.1, min_m=3) == 3
        assert fixed_m(10, 1.0, c=5.0) == 10

    def test_parse_tau(self):
        spec = ModelSpec("x", "mean", 0.0, 0.25)
        assert parse_tau(None, spec).beta == 0.25
        assert parse_tau("n^1/3").beta == pytest.approx(1 / 3)
        assert parse_tau("n^(0.5)").beta == 0.5
        assert parse_tau(0.75).beta == 0.75
        assert parse_tau("estimate") == "estimate"


class TestFit:
    def test_exact_power_law(self):
        c, beta = fit_m_scaling([(100, 2 * 100**0.5), (400, 2 * 400**0.5)])
        assert c == pytest.approx(2.0, rel=1e-14) and beta == pytest.approx(0.5, abs=1e-14)

    def test_constant(self):
        assert fit_m_scaling([(100, 7), (1000, 7), (5000, 7)])[1] == pytest.approx(0.0, abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateDesign):
            fit_m_scaling([(100, 3), (100, 4)])


class TestRunStudy:
    def test_degenerate_model_always_covers(self, monkeypatch):
        import mboot.simulate as sim

        monkeypatch.setattr(sim, "generate", lambda spec, n, rng: np.full(n, spec.true_theta))
        cfg = StudyConfig(model="power-mean", n_grid=[20, 40], m_rule={"fixed": {"beta": 0.5}}, N=15, R=50)
        for row in run_study(cfg).rows:
            assert row["coverage"] == 1.0 and row["covered"] == 15 and row["mean_length"] == 0.0

    def test_rows_and_counts(self):
        cfg = StudyConfig(model="unif-max", n_grid=[50, 100], m_rule={"fixed": {"beta": 0.5}}, N=40, R=100, seed=3)
        res = run_study(cfg)
        assert [r["n"] for r in res.rows] == [50, 100]
        for r in res.rows:
            assert r["coverage"] * r["N"] == r["covered"]
            assert r["half_width"] == pytest.approx(1.96 * math.sqrt(r["coverage"] * (1 - r["coverage"]) / 40))
            assert r["mean_m"] == fixed_m(r["n"], 0.5, min_m=3) and r["sd_m"] == 0.0
        assert res.fit is None

    def test_selector_rule_fits_m_scaling(self):
        cfg = StudyConfig(model="unif-max", n_grid=[60, 120], m_rule="bickel", N=10, R=100, seed=4)
        res = run_study(cfg)
        c, beta = res.fit
        expected = fit_m_scaling([(r["n"], r["mean_m"]) for r in res.rows])
        assert (c, beta) == expected

    def test_reproducible_and_worker_independent(self):
        cfg = StudyConfig(model="norm-shorth", n_grid=[60], m_rule="politis", N=6, R=100, seed=5)
        a = run_study(cfg)
        b = run_study(cfg, workers=2)
        strip = lambda rows: [{k: v for k, v in r.items() if k != "elapsed"} for r in rows]  # noqa: E731
        assert strip(a.rows) == strip(b.rows)

    def test_levels_nested(self):
        covs = []
        for level in (0.90, 0.95, 0.99):
            cfg = StudyConfig(model="power-mean", n_grid=[100], m_rule={"fixed": {"beta": 0.5}}, level=level,
                              N=200, R=200, seed=6)
            covs.append(run_study(cfg).rows[0]["coverage"])
        assert covs[0] <= covs[1] <= covs[2]

    def test_tau_kind(self):
        cfg = StudyConfig(model="power-mean", n_grid=[200], kind="tau", gamma=[0.2, 0.5, 5], N=5, R=200, seed=7)
        row = run_study(cfg).rows[0]
        assert 0.3 < row["beta_mean"] < 0.7 and row["warn_fraction"] == 0.0

    def test_estimated_tau_and_sherman(self):
        for kw in ({"tau": "estimate"}, {"ci_method": "sherman"}, {"ci_method": "norm", "tau": "n^0.5"}):
            cfg = StudyConfig(model="power-mean", n_grid=[80], m_rule={"fixed": {"beta": 0.5}}, N=5, R=100, seed=8, **kw)
            assert 0 <= run_study(cfg).rows[0]["coverage"] <= 1

    def test_repetition_error_has_context(self):
        cfg = StudyConfig(model="power-mean", n_grid=[10], m_rule={"explicit": 50}, N=3, R=10)
        with pytest.raises(RuntimeError, match=r"n=10, repetition 0"):
            run_study(cfg)

    def test_nout_of_n_baseline(self):
        cfg = StudyConfig(model="power-mean", n_grid=[1000], m_rule={"explicit": "n"}, replace=True, N=2000, seed=9)
        assert abs(run_study(cfg).rows[0]["coverage"] - 0.95) <= 0.02

    def test_shorth_small_m_beats_large_m(self):
        cov = {}
        for b in (1 / 3, 3 / 4):
            cfg = StudyConfig(model="norm-shorth", n_grid=[1000], m_rule={"fixed": {"beta": b}}, N=2000, seed=10)
            cov[b] = run_study(cfg).rows[0]["coverage"]
        assert cov[1 / 3] > cov[3 / 4]


class TestOracleInterval:
    @pytest.mark.parametrize("p", [0.5, 0.8, 0.95])
    def test_known_probability(self, p):
        N = 4000

        def interval(seed):
            u = np.random.default_rng(seed).random()
            return (0.0, 1.0) if u < p else (2.0, 3.0)

        cov = estimate_coverage(interval, 0.5, N=N, seed=12)["coverage"]
        assert abs(cov - p) <= 3 * math.sqrt(p * (1 - p) / N)

    def test_endpoints_count_as_covered(self):
        assert estimate_coverage(lambda s: (1.0, 1.0), 1.0, N=3)["coverage"] == 1.0

    def test_seeds_are_derived(self):
        seen = []
        estimate_coverage(lambda s: seen.append(s) or (0, 1), 0.5, N=3, seed=4)
        assert seen == [derive_seed(4, r) for r in range(3)]


class TestPresets:
    def test_names(self):
        assert set(presets()) == {"fig2", "fig3", "fig4", "fig5", "table2", "violation"}

    def test_desk_scale_repetitions(self):
        for name, studies in presets().items():
            for cfg in studies:
                if cfg.kind == "coverage":
                    assert cfg.N == (1000 if describe_rule(cfg.m_rule) == "goetze" else 2000), cfg.label
                else:
                    assert cfg.N == 100

    def test_load_forms(self):
        one = {"model": "power-mean", "n_grid": [10]}
        assert len(load_studies(one)) == 1
        assert len(load_studies([one, one])) == 2
        assert len(load_studies({"studies": [one]})) == 1
        assert load_studies({"preset": "fig4"})[0].label == "fig4-max-basic"
        for bad in ([], {"studies": []}, {"preset": "fig9"}):
            with pytest.raises(ValueError):
                load_studies(bad)


def test_worker_cap(monkeypatch):
    monkeypatch.delenv("MOONBOOT_THREADS", raising=False)
    assert worker_cap(4) == 4
    monkeypatch.setenv("MOONBOOT_THREADS", "2")
    assert worker_cap(4) == 2 and worker_cap(1) == 1
