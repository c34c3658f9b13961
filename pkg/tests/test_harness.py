import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edlab.convex_body import ConvexBody
from edlab.ergodic import (ActionConfig, axis_discrepancy, delta_ladder_batch,
                           discrepancy_direct)
from edlab.harness import (ConfigError, EmpiricalCDF, STREAM_FINITE, derive_rng, dkw_bound,
                           en_measure, finite_n_d2_values, ks_distance, parse_config,
                           phase_uniformity_test, replay, run_experiment)

ELL = ConvexBody.ellipse(1.0, 0.7)
samples = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=40)


def ks_quadratic(a, b):
    """Sup of |F - G| over every sample point, counted by brute force."""
    best = 0.0
    for z in list(a) + list(b):
        fa = sum(v <= z for v in a) / len(a)
        fb = sum(v <= z for v in b) / len(b)
        best = max(best, abs(fa - fb))
    return best


def test_ks_examples():
    F = EmpiricalCDF([0.0, 1.0])
    assert ks_distance(F, F) == 0.0
    assert ks_distance(F, EmpiricalCDF([5.0, 6.0])) == 1.0
    assert ks_distance(EmpiricalCDF([1, 2, 3, 4]), EmpiricalCDF([1, 2])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        ks_distance(F, EmpiricalCDF([]))


@given(samples, samples)
def test_ks_matches_quadratic_count(a, b):
    assert ks_distance(EmpiricalCDF(a), EmpiricalCDF(b)) == pytest.approx(ks_quadratic(a, b), abs=1e-12)


@given(samples)
def test_ecdf_properties(a):
    F = EmpiricalCDF(a)
    assert F.count == len(a)
    assert F(min(a) - 1) == 0 and F(max(a)) == 1
    grid = np.linspace(min(a) - 1, max(a) + 1, 50)
    assert np.all(np.diff(F(grid)) >= 0)
    assert not F.values.flags.writeable
    assert ks_distance(F.reflect().reflect(), F) == 0


def test_dkw_radius_controls_self_distance():
    rng = np.random.default_rng(0)
    n = 2000
    eps = dkw_bound(n, 0.01)
    assert eps == pytest.approx(math.sqrt(math.log(200) / (2 * n)))
    fails = 0
    for _ in range(50):
        x = rng.random(n)
        grid = np.sort(x)
        F = EmpiricalCDF(x)
        fails += np.max(np.abs(F(grid) - grid)) > eps
    assert fails <= 3


def test_derived_streams_are_reproducible_and_distinct():
    assert derive_rng(1, 2, 3).random() == derive_rng(1, 2, 3).random()
    assert derive_rng(1, 2, 3).random() != derive_rng(1, 2, 4).random()
    assert derive_rng(1, 2).random() != derive_rng(2, 2).random()


def test_single_step_values_are_bounded():
    a, b = 0.2, 0.4
    vals, _ = finite_n_d2_values(ELL, (a, b), 1, 300, seed=2)
    # |count - vol| <= 1 and |axis part| <= 4r + 2 vol at N = 1
    assert np.all(np.abs(vals) <= (1 + 4 * b + 3 * math.pi * b * b) / math.sqrt(a))


def test_sampler_modes_match_their_definitions():
    N, seed = 24, 6
    exact, info = finite_n_d2_values(ELL, (0.2, 0.4), N, 5, seed)
    ladder, _ = finite_n_d2_values(ELL, (0.2, 0.4), N, 5, seed, mode="ladder")
    assert set(info) >= {"en_hits", "en_rate", "redraws", "exhausted", "en_bound"}
    for j in range(5):
        rng = derive_rng(seed, STREAM_FINITE, N, j)
        r, x, al = rng.uniform(0.2, 0.4), rng.random(2), rng.random(2)
        cfg = ActionConfig(r, tuple(x), tuple(al), N)
        d2 = discrepancy_direct(cfg, ELL) - axis_discrepancy(cfg, ELL)
        assert exact[j] == pytest.approx(d2 / math.sqrt(r * N), abs=1e-9)
        lad = delta_ladder_batch([cfg], ELL, members=("delta_prime",)).delta_prime[0]
        assert ladder[j] == pytest.approx(lad, abs=1e-12)


def test_exclusion_is_reported():
    _, info = finite_n_d2_values(ELL, (0.2, 0.4), 64, 3, seed=1, exclude_en=True, max_resample=2)
    assert info["en_hits"] == 3 and info["exhausted"] == 3 and info["redraws"] == 6


def test_en_measure_report():
    row = en_measure(64, 0.1, 50, seed=0)
    assert 0 <= row["measure"] <= 1 and row["bound"] == pytest.approx(2 * 0.1**0.25)


def test_phases_are_uniform_at_large_n():
    rep = phase_uniformity_test(ELL, (0.2, 0.4), [4096], 10_000, seed=3)[4096]
    assert rep["ks_index_a"] < 0.05 and rep["ks_index_b"] < 0.05
    assert max(rep["ks_gamma"]) < 0.05
    assert rep["chi2_pair_pvalue"] > 0.01


def test_config_parsing_and_errors():
    cfg = parse_config("pipeline = theorem1b\nbody = ellipse:a=1,b=0.7  # comment\nN = 32, 64\n")
    assert cfg.N == (32, 64) and cfg.eps == (0.1,)
    with pytest.raises(ConfigError) as e:
        parse_config("pipeline = theorem1b\n")
    assert e.value.field == "body"
    with pytest.raises(ConfigError) as e:
        parse_config("pipeline = theorem1b\nbody = disk\nsamples = ten\n")
    assert e.value.field == "samples"
    with pytest.raises(ConfigError) as e:
        parse_config("pipeline = theorem1b\nbody = disk\nr_interval = 0.2, 0.9\n")
    assert e.value.field == "r_interval"
    with pytest.raises(ConfigError) as e:
        parse_config("pipeline = nope\nbody = disk\n")
    assert e.value.field == "pipeline"
    with pytest.raises(ConfigError) as e:
        parse_config("pipeline = phases\nbody = blob\n")
    assert e.value.field == "body"


TINY = """pipeline = theorem1b
body = ellipse:a=1,b=0.7
N = 32
eps = 0.3
samples = 100
pcheck_max = 3
z_max = 4
seed = 4
"""


def test_tiny_run_and_replay(tmp_path):
    out = tmp_path / "run"
    cfg = parse_config(TINY, out=str(out))
    res = run_experiment(cfg)
    assert res["manifest"]["wall_time_s"] < 60
    assert set(res["outputs"]) == {"limit.csv", "finite_N32.csv", "summary.json"}
    entry = json.loads((out / "manifest.jsonl").read_text().splitlines()[-1])
    assert entry["config"]["seed"] == 4 and entry["versions"]["backend"] in ("compiled", "python")
    again = replay(str(out / "manifest.jsonl"), out=str(tmp_path / "again"))
    assert again["outputs"] == res["outputs"]
    assert 0 <= res["result"]["ks"][32] <= 1
    assert os.path.getsize(out / "limit.csv") > 0


def test_sampler_modes_agree_in_law():
    from scipy.stats import ks_2samp

    disk = ConvexBody.disk()
    exact, _ = finite_n_d2_values(disk, (0.2, 0.4), 128, 300, seed=12, eps=0.2)
    ladder, _ = finite_n_d2_values(disk, (0.2, 0.4), 128, 300, seed=12, eps=0.2, mode="ladder")
    assert ks_2samp(exact, ladder).pvalue > 0.01
