import numpy as np
import pytest

from primalsvm.corpus import FeatureMode, synth_corpus
from primalsvm.evaluation import (DEFAULT_GRIDS, CvConfig, RunSpec, accuracy, best_cell,
                                  cross_validate, override, split_round, sweep)
from primalsvm.optim import CapExceededError, GdConfig, NewtonConfig, PegasosConfig

PEG = PegasosConfig(lam=1e-3, k=20, T=2000)


@pytest.fixture(scope="module")
def records():
    return synth_corpus(31, 1000)


class TestSplit:
    def test_sizes(self):
        train, test = split_round(10, 0, 0.1)
        assert (len(train), len(test)) == (9, 1)

    def test_minimum_one(self):
        train, test = split_round(5, 0, 0.1)
        assert (len(train), len(test)) == (4, 1)

    def test_deterministic(self):
        a, b = split_round(100, 3, 0.1), split_round(100, 3, 0.1)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    @pytest.mark.parametrize("n,frac", [(2, 0.5), (37, 0.1), (100, 0.9), (1000, 0.25)])
    def test_disjoint_exhaustive(self, n, frac):
        for seed in range(5):
            train, test = split_round(n, seed, frac)
            assert not set(train) & set(test)
            assert sorted(np.concatenate([train, test])) == list(range(n))
            assert len(train) >= 1 and len(test) >= 1

    def test_too_small(self):
        with pytest.raises(ValueError):
            split_round(1, 0, 0.1)


class TestAccuracy:
    @pytest.mark.parametrize("p,t,acc", [
        ([1, 2, 3, 4], [1, 2, 3, 0], 0.75),
        ([1, -1], [1, -1], 1.0),
        ([1, 1], [-1, -1], 0.0),
    ])
    def test_values(self, p, t, acc):
        assert accuracy(p, t) == acc

    def test_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            accuracy([1], [1, 2])
        with pytest.raises(ValueError):
            accuracy([], [])


class TestCrossValidate:
    def test_rounds_and_means(self, records):
        # the corpus is separable by counts; binary features lose repeated words
        rep = cross_validate(records, RunSpec(PEG, "bin", FeatureMode.FREQUENCY),
                             CvConfig(rounds=10, seed=1))
        assert len(rep.per_round) == 10
        assert rep.mean_accuracy == sum(r.accuracy for r in rep.per_round) / 10
        assert rep.mean_time == sum(r.train_time for r in rep.per_round) / 10
        assert all(0 <= r.accuracy <= 1 for r in rep.per_round)
        assert all(r.n_test == 100 and r.n_train == 900 for r in rep.per_round)
        assert rep.mean_accuracy >= 0.95

    def test_deterministic(self, records):
        spec = RunSpec(PegasosConfig(lam=1e-3, k=10, T=500), "multi", FeatureMode.FREQUENCY)
        cfg = CvConfig(rounds=3, seed=5)
        a = cross_validate(records, spec, cfg)
        b = cross_validate(records, spec, cfg)
        assert [r.accuracy for r in a.per_round] == [r.accuracy for r in b.per_round]
        assert a.config_echo == b.config_echo

    def test_threads_match_sequential(self, records):
        spec = RunSpec(GdConfig(eta=0.01, max_iters=50))
        cfg = CvConfig(rounds=4, seed=2)
        seq = cross_validate(records, spec, cfg, threads=0)
        par = cross_validate(records, spec, cfg, threads=3)
        assert [r.accuracy for r in seq.per_round] == [r.accuracy for r in par.per_round]

    def test_env_threads(self, records, monkeypatch):
        monkeypatch.setenv("PRIMAL_SVM_THREADS", "2")
        rep = cross_validate(records[:200], RunSpec(GdConfig(max_iters=5)), CvConfig(rounds=2))
        assert len(rep.per_round) == 2

    def test_newton_cap(self, records):
        spec = RunSpec(NewtonConfig(max_n=500))
        with pytest.raises(CapExceededError, match="cap of 500"):
            cross_validate(records, spec, CvConfig(rounds=1))

    def test_newton_small(self, records):
        rep = cross_validate(records[:300], RunSpec(NewtonConfig(lam=1.0)), CvConfig(rounds=2))
        assert rep.mean_accuracy > 0.5

    def test_multiclass_beats_chance(self, records):
        rep = cross_validate(records, RunSpec(PEG, "multi"), CvConfig(rounds=2))
        assert rep.mean_accuracy > 0.2

    def test_config_echo(self, records):
        rep = cross_validate(records[:100], RunSpec(GdConfig(max_iters=3)), CvConfig(rounds=1))
        assert rep.config_echo["alg"] == "GD"
        assert rep.config_echo["optimizer"]["max_iters"] == 3
        assert rep.config_echo["cv"]["rounds"] == 1

    def test_bad_config(self):
        with pytest.raises(ValueError):
            CvConfig(rounds=0)
        with pytest.raises(ValueError):
            CvConfig(holdout_fraction=1.0)
        with pytest.raises(ValueError):
            RunSpec(GdConfig(), mode="both")


class TestSweep:
    def test_default_grids(self):
        assert DEFAULT_GRIDS["eta"] == [.01, .02, .03, .04, .05, .1, .2, .3, .4, .5, 1, 2, 3, 4, 5]
        assert DEFAULT_GRIDS["lambda"] == [.001, .01, .1, 1, 10]

    def test_one_report_per_value(self, records):
        cells = sweep(records[:200], RunSpec(GdConfig(max_iters=20)), "eta",
                      DEFAULT_GRIDS["eta"], CvConfig(rounds=1))
        assert [c.value for c in cells] == DEFAULT_GRIDS["eta"]
        assert len(cells) == 15

    def test_lambda_grid(self, records):
        cells = sweep(records[:200], RunSpec(PegasosConfig(k=5, T=100)), "lambda",
                      DEFAULT_GRIDS["lambda"], CvConfig(rounds=1))
        assert len(cells) == 5 and all(c.report is not None for c in cells)

    def test_single_value_equals_cv(self, records):
        spec = RunSpec(PegasosConfig(lam=0.01, k=5, T=200))
        cfg = CvConfig(rounds=2, seed=4)
        (cell,) = sweep(records[:300], spec, "lambda", [0.01], cfg)
        plain = cross_validate(records[:300], spec, cfg)
        assert [r.accuracy for r in cell.report.per_round] == \
            [r.accuracy for r in plain.per_round]

    def test_cell_errors_recorded(self, records):
        # huge learning rates diverge; the sweep keeps going
        cells = sweep(records[:200], RunSpec(GdConfig(max_iters=200, rel_tol=0)), "eta",
                      [0.01, 1e8], CvConfig(rounds=1))
        assert cells[0].report is not None
        assert cells[1].report is None and "Divergence" in cells[1].error
        assert best_cell(cells) is cells[0]

    def test_unknown_param(self):
        with pytest.raises(ValueError, match="valid"):
            override(GdConfig(), "gamma", 1)
        with pytest.raises(ValueError, match="does not apply"):
            override(GdConfig(), "lambda", 1)

    def test_overrides(self):
        assert override(NewtonConfig(), "sigma", 2.0).kernel.sigma == 2.0
        assert override(PegasosConfig(), "T", 7.0).T == 7
        assert override(GdConfig(), "iters", 9).max_iters == 9

    def test_empty_grid(self, records):
        with pytest.raises(ValueError):
            sweep(records, RunSpec(GdConfig()), "eta", [], CvConfig())
