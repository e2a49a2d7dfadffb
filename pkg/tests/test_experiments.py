import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bergzeros import experiments as ex
from bergzeros.errors import CertificateVacuous, ConfigError
from bergzeros.experiments import ExperimentConfig, run_experiment


def _strict_json(text):
    def bad(tok):
        raise ValueError(f"non-finite token {tok}")

    return json.loads(text, parse_constant=bad)


def test_config_round_trip_and_hash():
    cfg = ExperimentConfig(kind="hole", p_list=[1, 4], trials=10, threads=3)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert ExperimentConfig(kind="hole", p_list=[1, 4], trials=10, threads=8).config_hash() == cfg.config_hash()
    assert ExperimentConfig(kind="hole", p_list=[1, 4], trials=11).config_hash() != cfg.config_hash()


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(ex.KINDS),
    p=st.integers(1, 50),
    trials=st.integers(0, 10**6),
    seed=st.integers(0, 2**63),
    radius=st.floats(0.01, 5.0),
    delta=st.floats(0.01, 10.0),
)
def test_config_round_trip_property(kind, p, trials, seed, radius, delta):
    cfg = ExperimentConfig(kind=kind, p=p, trials=trials, seed=seed, radius=radius, delta=delta)
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize(
    "kwargs,code",
    [
        (dict(kind="nope"), "config.invalid_value"),
        (dict(trials=-1), "config.invalid_value"),
        (dict(p=0), "config.invalid_value"),
        (dict(radius=-1.0), "config.invalid_value"),
        (dict(model="disc", radius=1.2), "config.infeasible_radius"),
        (dict(kind="zero_count", radius=60.0), "config.infeasible_radius"),
    ],
)
def test_config_errors(kwargs, code):
    with pytest.raises(ConfigError) as exc:
        cfg = ExperimentConfig(**kwargs)
        run_experiment(cfg)
    assert exc.value.code == code


def test_unknown_key():
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig.from_dict({"kind": "hole", "bogus": 1})
    assert exc.value.code == "config.unknown_key"


def test_threads_env(monkeypatch):
    monkeypatch.setenv("THREADS", "3")
    assert ExperimentConfig().worker_count() == 3
    monkeypatch.setenv("THREADS", "x")
    with pytest.raises(ConfigError):
        ExperimentConfig().worker_count()


@pytest.mark.parametrize("k,n", [(0, 100), (5, 100), (50, 100), (100, 100), (3, 7)])
def test_wilson_interval(k, n):
    lo, hi = ex.wilson_interval(k, n)
    z = 1.959963984540054
    ph = k / n
    centre = (ph + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n))
    if k == 0:
        assert lo == 0.0
        zc = 1.6448536269514722
        assert hi == pytest.approx(zc * zc / n / (1 + zc * zc / n), rel=1e-9)
    else:
        assert (lo, hi) == pytest.approx((centre - half, centre + half), rel=1e-9)


def test_zero_count_scaling():
    rep = run_experiment(ExperimentConfig(kind="zero_count", p=4, radius=0.75, trials=4000, seed=1))
    assert abs(rep.results["mean"] - 2.25) <= 4 * rep.results["se"]
    small = run_experiment(ExperimentConfig(kind="zero_count", p=1, radius=0.05, trials=2000, seed=1))
    assert small.results["mean"] < 0.02


def test_hole_near_one_for_small_disc():
    rep = run_experiment(ExperimentConfig(kind="hole", p_list=[1], r0=0.3, trials=4000, seed=2))
    row = rep.table[0]
    assert row["ci_hi"] >= 1 - 0.09
    assert row["coupled_mismatches"] == 0


def test_hole_unresolved_flag():
    rep = run_experiment(ExperimentConfig(kind="hole", p_list=[1, 36], r0=0.3, trials=500, seed=2))
    assert "UNRESOLVED" in rep.flags
    assert rep.table[1]["resolved"] is False


def test_hole_fixed_mode_roots_agree():
    base = dict(kind="hole", mode="fixed", p=1, radii=[0.4, 0.8], trials=300, seed=5)
    a = run_experiment(ExperimentConfig(**base))
    b = run_experiment(ExperimentConfig(detection="roots", **base))
    assert [r["events"] for r in a.table] == [r["events"] for r in b.table]
    assert a.results["fit"]["target"] == 4.0


def test_certificate_values():
    v, diag = ex.hole_lower_bound_certificate(25, 0.3, 0.2, detail=True)
    assert v < 0 and math.isfinite(v)
    assert diag["nine_C_over_p"] < 1
    vals = [ex.hole_lower_bound_certificate(p, 0.3, 0.2) for p in (16, 25, 36, 49)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(CertificateVacuous) as exc:
        ex.hole_lower_bound_certificate(1, 0.3, 1e-3)
    assert exc.value.code == "experiments.cert_vacuous"
    assert "nine_C_over_p" in exc.value.details


def test_linear_statistic_zero_form():
    rep = run_experiment(ExperimentConfig(kind="linear_statistic", p_list=[1], form="zero", form_radius=1.0, trials=50, seed=0))
    assert rep.table[0]["mean"] == 0.0 and rep.table[0]["variance"] == 0.0


def test_tails_events():
    rep = run_experiment(ExperimentConfig(kind="tails", p_list=[1], form_radius=1.0, radius=1.0, delta=1e3, trials=100, seed=0))
    row = rep.table[0]
    assert all(row[f"{n}_freq"] == 0 for n in ("dev", "sup_large", "sup_small", "log_mean"))
    assert row["dev_ci_lo"] == 0.0 and row["dev_ci_hi"] > 0
    incl = run_experiment(ExperimentConfig(kind="tails", p_list=[2], form_radius=1.0, radius=1.0, delta=1 / 3, trials=200, seed=0))
    row = incl.table[0]
    assert row["inclusion_violations"] == 0
    assert row["hole_freq"] <= row["dev_freq"]


def test_density_map_standard():
    rep = run_experiment(ExperimentConfig(kind="density_map", p=1, edges=[0, 0.5, 1.0, 1.5, 2.0], trials=3000, seed=4))
    assert rep.results["max_abs_z"] <= 4
    np.testing.assert_allclose(rep.results["expected"], [0.25, 0.75, 1.25, 1.75])


def test_density_map_zero_trials():
    rep = run_experiment(ExperimentConfig(kind="density_map", trials=0))
    assert rep.table == [] and rep.results["chi2"] is None
    _strict_json(rep.to_json())


def test_wiener_covariance_small():
    rep = run_experiment(ExperimentConfig(kind="wiener_covariance", trials=20_000, seed=1))
    assert rep.results["max_abs_z"] <= 4
    assert rep.results["l2_bound_ok"]
    assert rep.results["hs_norm_sq"] == pytest.approx(1 / 3, rel=1e-10)


def test_disc_zero_count():
    rep = run_experiment(ExperimentConfig(kind="zero_count", model="disc", radius=0.5, trials=3000, seed=3))
    # integral of 2/(pi (1-r^2)^2) over |z| < 0.5
    expected = 2 * 0.25 / (1 - 0.25)
    assert rep.results["expected"] == pytest.approx(expected)
    assert abs(rep.results["mean"] - expected) <= 4 * rep.results["se"]


@pytest.mark.parametrize("kind", ["zero_count", "hole", "density_map", "wiener_covariance"])
def test_parallel_bit_identical(kind):
    base = dict(kind=kind, p_list=[1, 4] if kind == "hole" else None, trials=4500, seed=9)
    outs = {run_experiment(ExperimentConfig(threads=t, **base)).to_json() for t in (1, 4, 8)}
    assert len(outs) == 1
    _strict_json(outs.pop())


def test_report_csv_and_timing():
    rep = run_experiment(ExperimentConfig(kind="zero_count", trials=100))
    lines = rep.to_csv().splitlines()
    assert lines[0].split(",") == rep.columns and len(lines) == 2
    assert "wall_clock" not in rep.to_dict()
    assert rep.to_dict(include_timing=True)["wall_clock"] >= 0
    assert rep.provenance["version"]
