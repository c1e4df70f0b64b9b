import json
import math

import numpy as np
import pytest
from scipy.special import ndtri

from bartree.bar_model import BarModel, GaussianInitial
from bartree.harness import (
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    ecdf,
    export,
    export_ecdf,
    export_histogram,
    histogram,
    independence_report,
    ks_distance,
    monte_carlo_generation_sums,
    run_clt_experiment,
)
from bartree import tree_sim
from bartree.tree_sim import GENERATION_SCOPE, TREE_SCOPE, NodeAddress, ReplicateSeed

VAR_GEN_A05_X13 = 0.051713226787030620


def _config(**kw):
    base = dict(a=0.5, sigma=1.0, n=6, gamma=0.201, x=-1.3, n0=17, master_seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


# -- config validation ---------------------------------------------------------

def test_config_validation_errors():
    with pytest.raises(ValueError, match="kernel"):
        run_clt_experiment(_config(kernel_name="epanechnikov"))
    with pytest.raises(ValueError, match="scope"):
        run_clt_experiment(_config(scope="forest"))
    with pytest.raises(ValueError):
        run_clt_experiment(_config(n0=0))
    with pytest.raises(ValueError):
        run_clt_experiment(_config(n=-1))
    with pytest.raises(ValueError):
        run_clt_experiment(_config(n=63))
    with pytest.raises(ValueError):
        run_clt_experiment(_config(gamma=1.0))
    with pytest.raises(ValueError):
        run_clt_experiment(_config(sigma=0.0))
    with pytest.raises(ValueError, match="record"):
        run_clt_experiment(_config(n=0, record_previous_generation=True))
    with pytest.raises(ValueError, match="initial"):
        run_clt_experiment(_config(initial="point_mass"))


def test_single_replicate_run():
    res = run_clt_experiment(_config(n0=1))
    assert len(res.samples) == 1
    assert res.sample_variance == 0.0
    assert 0.0 <= res.ks_distance <= 1.0


# -- a standard run ------------------------------------------------------------

@pytest.fixture(scope="module")
def std_run():
    cfg = ExperimentConfig(a=0.5, sigma=1.0, n=12, gamma=0.201, x=-1.3, n0=300, master_seed=0)
    return run_clt_experiment(cfg)


def test_std_run_matches_limit(std_run):
    v = std_run.theoretical.variance
    assert math.isclose(v, VAR_GEN_A05_X13, rel_tol=1e-13)
    assert std_run.ks_distance < 1.6276 / math.sqrt(300)
    assert abs(std_run.sample_mean) <= 4 * math.sqrt(v / 300)
    assert 0.03 < std_run.sample_variance < 0.08
    assert std_run.admissibility.admissible
    assert std_run.wall_time_seconds > 0.0


def test_std_run_sample_metadata(std_run):
    assert [s.replicate_index for s in std_run.samples] == list(range(300))
    s = std_run.samples[17]
    assert s.scope == GENERATION_SCOPE
    assert s.n == 12 and s.gamma == 0.201 and s.x == -1.3 and s.seed == 0
    assert std_run.prev_samples is None


def test_ks_is_self_consistent(std_run):
    zetas = [s.zeta for s in std_run.samples]
    again = ks_distance(zetas, std_run.theoretical.variance)
    assert again == std_run.ks_distance


# -- determinism ---------------------------------------------------------------

def test_rerun_is_bit_identical():
    r1 = run_clt_experiment(_config())
    r2 = run_clt_experiment(_config())
    assert [s.zeta for s in r1.samples] == [s.zeta for s in r2.samples]
    assert r1.ks_distance == r2.ks_distance
    assert r1.sample_mean == r2.sample_mean


def test_chunk_size_is_invisible():
    runs = [run_clt_experiment(_config(), chunk_size=c) for c in (1, 7, 125, 500)]
    ref = [s.zeta for s in runs[0].samples]
    for r in runs[1:]:
        assert [s.zeta for s in r.samples] == ref


def test_master_seed_changes_everything():
    r1 = run_clt_experiment(_config(master_seed=3))
    r2 = run_clt_experiment(_config(master_seed=4))
    z1 = np.array([s.zeta for s in r1.samples])
    z2 = np.array([s.zeta for s in r2.samples])
    assert not np.any(z1 == z2)


# -- previous-generation recording ----------------------------------------------

def test_record_previous_generation():
    res = run_clt_experiment(_config(record_previous_generation=True))
    assert res.prev_samples is not None and len(res.prev_samples) == 17
    for s in res.prev_samples:
        assert s.n == 5
        assert s.scope == GENERATION_SCOPE
        assert math.isfinite(s.zeta)
    # recording must not perturb the main samples
    plain = run_clt_experiment(_config())
    assert [s.zeta for s in res.samples] == [s.zeta for s in plain.samples]


# -- tree scope ------------------------------------------------------------------

def test_tree_scope_run():
    res = run_clt_experiment(_config(scope=TREE_SCOPE))
    assert all(s.scope == TREE_SCOPE for s in res.samples)
    assert all(math.isfinite(s.zeta) for s in res.samples)
    gen = run_clt_experiment(_config())
    assert [s.zeta for s in res.samples] != [s.zeta for s in gen.samples]


# -- ecdf ------------------------------------------------------------------------

def test_ecdf_examples():
    e = ecdf([0.0])
    assert e.evaluate(0.0) == 1.0
    assert e.evaluate(-1e-9) == 0.0
    e = ecdf([1.0, 2.0, 3.0])
    assert e.evaluate(2.0) == pytest.approx(2.0 / 3.0)
    assert e.evaluate(0.5) == 0.0
    assert e.evaluate(3.5) == 1.0
    np.testing.assert_allclose(e.evaluate(np.array([0.5, 2.0])), [0.0, 2.0 / 3.0])


def test_ecdf_empty():
    with pytest.raises(ValueError):
        ecdf([])


# -- KS distance -----------------------------------------------------------------

def test_ks_quantile_self_consistency():
    n0, v = 500, VAR_GEN_A05_X13
    quantiles = math.sqrt(v) * ndtri(np.arange(1, n0 + 1) / (n0 + 1))
    d = ks_distance(quantiles, v)
    assert abs(d - 1.0 / (n0 + 1)) < 1e-9
    assert d <= 1.0 / n0 + 1e-12


def test_ks_point_mass_is_half():
    assert ks_distance(np.zeros(10), 1.0) == 0.5


def test_ks_detects_wrong_scale():
    # N(0,4) against variance 1: the population distance is
    # sup_t |Phi(t/2) - Phi(t)| = 0.1613..., attained near t = 1.36
    rng = np.random.default_rng(7)
    d = ks_distance(rng.normal(0.0, 2.0, size=500), 1.0)
    assert 0.12 < d < 0.21


def test_ks_validation():
    with pytest.raises(ValueError):
        ks_distance([0.1, 0.2], 0.0)
    with pytest.raises(ValueError):
        ks_distance([], 1.0)


# -- histogram -------------------------------------------------------------------

def test_histogram_known_answer():
    h = histogram([0.0, 0.0, 1.0, 1.0], 2)
    assert not h.degenerate
    np.testing.assert_allclose(h.edges, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(h.densities, [1.0, 1.0])


def test_histogram_unit_area():
    rng = np.random.default_rng(8)
    h = histogram(rng.normal(size=1000), 31)
    area = np.sum(h.densities * np.diff(h.edges))
    assert abs(area - 1.0) < 1e-12


def test_histogram_degenerate():
    h = histogram([2.5, 2.5, 2.5], 4)
    assert h.degenerate
    assert h.densities.size == 0


def test_histogram_recovers_gaussian_shape():
    rng = np.random.default_rng(9)
    h = histogram(rng.normal(size=100_000), 50)
    mids = 0.5 * (h.edges[:-1] + h.edges[1:])
    phi = np.exp(-0.5 * mids**2) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(h.densities - phi)) < 0.02


def test_histogram_validation():
    with pytest.raises(ValueError):
        histogram([], 4)
    with pytest.raises(ValueError):
        histogram([1.0], 0)


# -- independence report ----------------------------------------------------------

def test_independence_validation():
    with pytest.raises(ValueError):
        independence_report(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        independence_report(np.zeros((10, 3)))


def test_independence_degenerate():
    pairs = np.column_stack([np.ones(10), np.arange(10.0)])
    rep = independence_report(pairs)
    assert rep.degenerate and not rep.passed
    assert math.isnan(rep.correlation)


def test_independence_accepts_independent_columns():
    rng = np.random.default_rng(10)
    rep = independence_report(rng.normal(size=(1000, 2)))
    assert not rep.degenerate
    assert rep.threshold == pytest.approx(3.0 / math.sqrt(1000))
    assert rep.passed


def test_independence_rejects_perfect_correlation():
    z = np.linspace(-1, 1, 50)
    rep = independence_report(np.column_stack([z, 2 * z]))
    assert abs(rep.correlation - 1.0) < 1e-12
    assert not rep.passed


def test_independence_threshold_override():
    z = np.linspace(-1, 1, 50)
    noisy = np.column_stack([z, z + 0.0])
    rep = independence_report(noisy, threshold=1.1)
    assert rep.passed  # |corr| = 1 < 1.1: the flag honors the override


# -- export ----------------------------------------------------------------------

@pytest.fixture()
def tiny_run():
    return run_clt_experiment(_config(n=4, n0=2))


def test_export_csv_layout(tiny_run, tmp_path):
    out = export(tiny_run, "csv", str(tmp_path))
    raw = open(out, "rb").read()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "replicate,zeta,scope,n,gamma,x,seed"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "0" and first[2] == GENERATION_SCOPE and first[3] == "4"
    assert float(first[1]) == tiny_run.samples[0].zeta


def test_export_csv_is_byte_stable(tiny_run, tmp_path):
    p1 = export(tiny_run, "csv", str(tmp_path / "a"))
    rerun = run_clt_experiment(_config(n=4, n0=2))
    p2 = export(rerun, "csv", str(tmp_path / "b"))
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_export_json_roundtrip(tiny_run, tmp_path):
    out = export(tiny_run, "json", str(tmp_path))
    summary = json.load(open(out))
    assert config_from_dict(summary["config"]) == tiny_run.config
    assert summary["ks_distance"] == tiny_run.ks_distance
    assert summary["admissible"] is True

    rerun = run_clt_experiment(_config(n=4, n0=2))
    out2 = export(rerun, "json", str(tmp_path / "again"))
    s2 = json.load(open(out2))
    summary.pop("wall_time_seconds")
    s2.pop("wall_time_seconds")
    assert summary == s2


def test_export_unknown_format(tiny_run, tmp_path):
    with pytest.raises(ValueError, match="format"):
        export(tiny_run, "parquet", str(tmp_path))


def test_export_ecdf_file(tiny_run, tmp_path):
    out = export_ecdf(tiny_run, str(tmp_path))
    lines = open(out).read().splitlines()
    assert lines[0] == "zeta,ecdf"
    assert len(lines) == 3
    assert float(lines[2].split(",")[1]) == 1.0


def test_export_histogram_default_bins(std_run, tmp_path):
    out = export_histogram(std_run, str(tmp_path))
    lines = open(out).read().splitlines()
    assert lines[0] == "bin_left,bin_right,density"
    assert len(lines) == 1 + math.ceil(math.sqrt(300))


def test_export_histogram_degenerate_writes_header_only(tmp_path):
    res = run_clt_experiment(_config(n=4, n0=1))
    out = export_histogram(res, str(tmp_path))
    lines = open(out).read().splitlines()
    assert lines == ["bin_left,bin_right,density"]


# -- config dict round trip --------------------------------------------------------

def test_config_dict_roundtrip():
    cfg = _config(initial=GaussianInitial(m0=0.4, rho0=0.9))
    d = config_to_dict(cfg)
    assert d["initial"] == {"m0": 0.4, "rho0": 0.9}
    assert config_from_dict(d) == cfg
    assert json.loads(json.dumps(d)) == d

    cfg2 = _config()
    assert config_from_dict(config_to_dict(cfg2)) == cfg2


# -- Monte Carlo generation sums ----------------------------------------------------

def test_monte_carlo_sums_match_scalar_recursion(model_half):
    n, reps, ms = 3, 4, 21
    x = 0.8
    f0 = lambda y: np.asarray(y, dtype=float)
    f3 = lambda y: np.asarray(y, dtype=float) ** 2
    sums = monte_carlo_generation_sums({0: f0, 3: f3}, n, x, model_half, reps, master_seed=ms)
    assert set(sums.keys()) == {0, 3}
    assert sums[0].shape == (reps,) and sums[3].shape == (reps,)
    np.testing.assert_array_equal(sums[0], np.full(reps, x))

    for r in range(reps):
        seed = ReplicateSeed(ms, r)
        gen = [np.float64(x)]
        for g in range(n):
            nxt = []
            for i, xp in enumerate(gen):
                stream = tree_sim.node_randomness(seed, NodeAddress(g, i))
                e0, e1 = stream.normal_pair(0)
                nxt.append(model_half.a * xp + model_half.sigma * e0)
                nxt.append(model_half.a * xp + model_half.sigma * e1)
            gen = nxt
        want = float(np.sum(f3(np.array(gen))))
        assert sums[3][r] == want
