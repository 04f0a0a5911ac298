import numpy as np
import pytest

from genbl import AdjustedBeliefs, KernelSpec, monotone_chain, nonneg_cone, satisfies, simbench
from genbl.errors import ValidationError

SMALL = simbench.StudyConfig(functions=("flat", "step"), n_points=30, replicates=4, seed=7)


class TestFunctions:
    @pytest.mark.parametrize(
        "name, x, expected",
        [
            ("flat", 7.3, 3.0),
            ("step", 8.0, 3.0),
            ("step", 8.0001, 6.0),
            ("logistic", 5.0, 1.5),
            ("linear", 2.0, 0.6),
            ("exponential", 5.0, 0.15),
            ("sinusoidal", np.pi, 0.32 * np.pi),
        ],
    )
    def test_values(self, name, x, expected):
        assert simbench.test_function(name, x) == pytest.approx(expected, rel=1e-14)

    def test_unknown(self):
        with pytest.raises(ValidationError):
            simbench.test_function("cubic", 1.0)

    @pytest.mark.parametrize("name", simbench.FUNCTIONS)
    def test_monotone_on_grid(self, name):
        y = simbench.test_function(name, np.linspace(0, 10, 100))
        assert np.all(np.diff(y) >= 0.0)


class TestConfig:
    def test_defaults(self):
        cfg = simbench.StudyConfig()
        assert cfg.functions == simbench.FUNCTIONS
        assert (cfg.n_points, cfg.replicates, cfg.noise_sd, cfg.rejection_max_iters) == (100, 100, 1.0, 1000)
        assert cfg.x_range == (0.0, 10.0)

    def test_json_roundtrip(self):
        cfg = simbench.StudyConfig(kernel=KernelSpec("sqexp", 2.0, (1.5,), 1.0))
        assert simbench.StudyConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize(
        "doc", [{"n_points": 1}, {"replicates": 0}, {"noise_sd": 0.0}, {"functions": ["cubic"]}, {"sigma": 1}]
    )
    def test_rejects(self, doc):
        with pytest.raises(ValidationError):
            simbench.StudyConfig.from_dict(doc)

    def test_default_kernel(self):
        y = np.array([1.0, -2.0, 3.0])
        k = SMALL.kernel_for(y)
        assert k.amplitude == pytest.approx(14.0 / 3.0)
        assert k.length_scales == (SMALL.length_scale,)
        assert k.nugget == 1.0


class TestSimulation:
    def test_deterministic(self):
        x1, y1 = simbench.simulate_dataset(SMALL, "step", 3)
        x2, y2 = simbench.simulate_dataset(SMALL, "step", 3)
        np.testing.assert_array_equal(y1, y2)
        _, y3 = simbench.simulate_dataset(SMALL, "step", 2)
        assert not np.array_equal(y1, y3)
        _, y4 = simbench.simulate_dataset(SMALL, "flat", 3)
        assert not np.array_equal(y1 - 3.0 * (x1 <= 8) - 6.0 * (x1 > 8), y4 - 3.0)

    def test_noise_limit(self):
        cfg = simbench.StudyConfig(noise_sd=1e-300, n_points=20)
        x, y = simbench.simulate_dataset(cfg, "logistic", 0)
        np.testing.assert_array_equal(y, simbench.test_function("logistic", x))

    def test_noise_mean_clt(self):
        cfg = simbench.StudyConfig()
        resid = [simbench.simulate_dataset(cfg, "linear", r)[1] - 0.3 * cfg.grid() for r in range(cfg.replicates)]
        resid = np.concatenate(resid)
        assert abs(resid.mean()) <= 4.0 / np.sqrt(cfg.n_points * cfg.replicates)
        assert resid.std() == pytest.approx(1.0, abs=0.05)


class TestFits:
    def test_gp_structure(self):
        x = np.linspace(0, 1, 5)
        spec = KernelSpec("sqexp", 2.0, (0.5,), 0.3)
        bs = simbench.gp_belief_structure(x, np.zeros(5), spec)
        np.testing.assert_allclose(np.diag(bs.var_x), 2.0)
        np.testing.assert_allclose(np.diag(bs.var_d), 2.3)
        np.testing.assert_allclose(bs.cov_xd, bs.var_x)

    def test_monotone_data_short_circuit(self):
        x = np.linspace(0, 10, 20)
        y = 0.5 * x
        spec = KernelSpec("sqexp", 25.0, (3.0,), 0.01)
        adj = simbench.fit_gp(x, y, spec)
        assert satisfies(monotone_chain(range(20)), adj.expectation)
        gbl = simbench.fit_gbl_monotone(x, y, spec, adj=adj)
        np.testing.assert_array_equal(gbl.expectation, adj.expectation)

    def test_violating_fit_becomes_monotone(self):
        x = np.linspace(0, 10, 30)
        y = 3.0 - 0.2 * x + np.sin(3 * x)
        spec = KernelSpec("sqexp", 9.0, (1.0,), 0.25)
        adj = simbench.fit_gp(x, y, spec)
        assert not satisfies(monotone_chain(range(30)), adj.expectation)
        gbl = simbench.fit_gbl_monotone(x, y, spec, adj=adj)
        assert satisfies(monotone_chain(range(30)), gbl.expectation, 1e-9)

    def test_rejection_one_dim(self):
        adj = AdjustedBeliefs(np.array([0.0]), np.array([[1.0]]), np.zeros(1), np.zeros((1, 1)))
        res = simbench.rejection_sample_monotone(adj, 1000, 0)
        assert not res.na and res.iterations == 1

    def test_rejection_exhausts(self):
        adj = AdjustedBeliefs(np.array([1.0, 0.0, -1.0]), 1e-6 * np.eye(3), np.zeros(3), np.zeros((3, 3)))
        res = simbench.rejection_sample_monotone(adj, 1000, 0)
        assert res.na and res.iterations == 1000

    def test_rejection_deterministic_and_batch_free(self):
        adj = AdjustedBeliefs(np.array([0.0, 0.1, 0.2, 0.3]), 0.05 * np.eye(4), np.zeros(4), np.zeros((4, 4)))
        a = simbench.rejection_sample_monotone(adj, 1000, 5, batch=1)
        b = simbench.rejection_sample_monotone(adj, 1000, 5, batch=100)
        assert a.iterations == b.iterations
        np.testing.assert_array_equal(a.sample, b.sample)
        assert np.all(np.diff(a.sample) >= 0.0)

    def test_rejection_custom_constraints(self):
        adj = AdjustedBeliefs(np.array([-1.0, 1.0]), np.eye(2), np.zeros(2), np.zeros((2, 2)))
        res = simbench.rejection_sample_monotone(adj, 1000, 1, constraints=nonneg_cone(2))
        assert not res.na and np.all(res.sample >= 0.0)


class TestStudy:
    def test_reproducible_and_feasible(self):
        r1 = simbench.run_study(SMALL)
        r2 = simbench.run_study(SMALL)
        for a, b in zip(r1.rows, r2.rows):
            assert (a.gp.rmse_mean_x100, a.gbl.rmse_mean_x100, a.na_pct) == (b.gp.rmse_mean_x100, b.gbl.rmse_mean_x100, b.na_pct)
            assert a.gbl_feasible
            assert 0.0 <= a.na_pct <= 100.0
            assert a.gp.rmse_mean_x100 >= 0.0 and a.gbl.rmse_mean_x100 >= 0.0

    def test_order_and_threads_do_not_matter(self):
        base = simbench.run_study(SMALL)
        n = len(SMALL.functions) * SMALL.replicates
        shuffled = simbench.run_study(SMALL, threads=3, order=np.random.default_rng(0).permutation(n))
        for a, b in zip(base.replicates, shuffled.replicates):
            assert (a.function, a.replicate, a.rmse_gp, a.rmse_gbl, a.na) == (b.function, b.replicate, b.rmse_gp, b.rmse_gbl, b.na)

    def test_single_replicate(self):
        cfg = simbench.StudyConfig(functions=("flat",), replicates=1, n_points=20, seed=3)
        a, b = simbench.run_study(cfg), simbench.run_study(cfg)
        assert a.rows[0].gbl.rmse_mean_x100 == b.rows[0].gbl.rmse_mean_x100
        assert a.rows[0].gbl.rmse_sd_x100 == 0.0

    def test_csv_and_table(self):
        rep = simbench.run_study(SMALL)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "function,method,rmse_mean_x100,rmse_sd_x100,time_mean_cs,time_sd_cs,na_pct"
        assert len(lines) == 1 + 2 * len(SMALL.functions)
        table = rep.to_table()
        assert table.startswith("# kernel: sqexp")
        assert "Flat" in table and "% NA" in table


class TestSpatial:
    def test_sample(self):
        s = simbench.synth_spatial_counts(30, seed=4)
        assert s.counts.dtype.kind == "i" and np.all(s.counts >= 0)
        lat_box, lon_box = simbench.UK_BOX
        assert np.all((s.lat >= lat_box[0]) & (s.lat <= lat_box[1]))
        again = simbench.synth_spatial_counts(30, seed=4)
        np.testing.assert_array_equal(s.counts, again.counts)

    def test_fit_nonnegative(self):
        for seed in range(5):
            s = simbench.synth_spatial_counts(40, seed=seed)
            fit = simbench.fit_spatial(s.lat, s.lon, s.counts)
            assert satisfies(nonneg_cone(40), fit.generalised.expectation, 1e-9)

    def test_too_few_regions(self):
        with pytest.raises(ValidationError):
            simbench.synth_spatial_counts(1)
