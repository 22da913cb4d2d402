import math
from pathlib import Path

import numpy as np
import pytest

from multirev import config, harness
from multirev import randomkernel as rk
from multirev.errors import ConfigError


def _cfg(study, tmp_path, **kw):
    return config.resolve(study, kw, out_dir=str(tmp_path))


# ---------------------------------------------------------------------------
# configuration


def test_defaults_and_overrides(tmp_path):
    cfg = config.resolve("weak-convergence", {"trajectories": 10}, seed=7, threads=None)
    assert cfg["trajectories"] == 10 and cfg["seed"] == 7 and cfg["threads"] == 1
    assert cfg["problem"] == {"name": "kubo", "a": 1.0, "epsilon": 1e-3, "y0": [1.0, 0.0]}


@pytest.mark.parametrize(
    "study, raw",
    [
        ("tn-clt", {"samplez": 3}),
        ("weak-convergence", {"problem": {"name": "kubo", "sigma": 2}}),
        ("weak-convergence", {"problem": {"name": "duffing"}}),
        ("weak-convergence", {"problem": "kubo"}),
        ("simulate", [1, 2]),
    ],
)
def test_strict_keys(study, raw):
    with pytest.raises(ConfigError):
        config.resolve(study, raw)


def test_load_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("problem:\n  name: nls\n  sigma: 4\nm_steps: 3\n")
    cfg = config.load(p, "norm-evolution")
    assert cfg["problem"]["sigma"] == 4 and cfg["problem"]["K_x"] == 64 and cfg["m_steps"] == 3
    with pytest.raises(ConfigError):
        config.load(tmp_path / "missing.yaml", "tn-clt")
    (tmp_path / "bad.yaml").write_text("a: [1,\n")
    with pytest.raises(ConfigError):
        config.load(tmp_path / "bad.yaml", "tn-clt")


# ---------------------------------------------------------------------------
# output format


def test_csv_round_trip(tmp_path):
    x = 0.1 + 0.2
    text = harness.csv_text("demo", ["a", "b", "c"], [["m", 3, x], ["n", np.int64(4), np.float64(1e-300)]])
    p = tmp_path / "d.csv"
    p.write_text(text)
    schema, cols, rows = harness.read_csv(p)
    assert schema == "demo" and cols == ["a", "b", "c"]
    assert float(rows[0][2]) == x and float(rows[1][2]) == 1e-300
    assert text.splitlines()[0] == "# multirev-csv v1 schema=demo"


def test_fit_slope_excludes_noise():
    H = np.array([0.1, 0.2, 0.4, 0.8])
    err = 3.0 * H**2
    se = np.array([1.0, 1e-6, 1e-6, 1e-6])
    slope, keep = harness.fit_slope(H, err, se)
    assert keep.tolist() == [False, True, True, True]
    assert abs(slope - 2.0) < 1e-12
    assert math.isnan(harness.fit_slope(H, err, np.ones(4))[0])


# ---------------------------------------------------------------------------
# weak convergence


def test_kubo_reference_matches_transform():
    ref = harness.kubo_reference(1.0, 1e-3, 256, [1.0, 0.0], [2.0, 4.0])
    z = complex(rk.t1_mgf(1e-3j)) ** 256
    assert abs(ref - (2 * z.real + 4 * z.imag)) < 1e-15
    # mean revolution time 1: close to the deterministic rotation e^{i a eps Nm}
    assert abs(ref - (2 * math.cos(0.256) + 4 * math.sin(0.256))) < 1e-3


def test_weak_convergence_orders(tmp_path):
    cfg = _cfg("weak-convergence", tmp_path, trajectories=2000, block_size=1000)
    res = harness.run_weak_convergence(cfg)
    s = res.summary["slopes"]
    assert 1.7 <= s["method-a"] <= 2.3 and 1.7 <= s["method-b"] <= 2.3
    assert 0.8 <= s["euler-limit"] <= 1.2
    assert res.summary["points_used"]["method-a"] >= 3
    for ext in ("csv", "metadata", "plot"):
        assert Path(res.files[ext]).exists()
    assert len(res.rows) == 12


def test_weak_convergence_thread_independent(tmp_path):
    kw = dict(trajectories=400, block_size=100, N_grid=[64, 128], methods=["method-a", "method-b"])
    a = harness.run_weak_convergence(config.resolve("weak-convergence", kw, out_dir=str(tmp_path / "a")))
    b = harness.run_weak_convergence(config.resolve("weak-convergence", kw, out_dir=str(tmp_path / "b"), threads=8))
    assert Path(a.files["csv"]).read_bytes() == Path(b.files["csv"]).read_bytes()


@pytest.mark.slow
def test_exact_rv_consistent_with_closed_form(tmp_path):
    cfg = _cfg("weak-convergence", tmp_path, methods=["exact-rv"], N_grid=[32], trajectories=200, oracle_dt=1e-3)
    row = harness.run_weak_convergence(cfg).records()[0]
    assert row["abs_error"] < 3 * row["std_err"]


def test_reference_selection_errors(tmp_path):
    with pytest.raises(ConfigError):
        harness.run_weak_convergence(_cfg("weak-convergence", tmp_path, problem={"name": "nonlinear-kubo"}))
    with pytest.raises(ConfigError):
        harness.run_weak_convergence(_cfg("weak-convergence", tmp_path, N_grid=[3]))
    with pytest.raises(ConfigError):
        harness.run_weak_convergence(_cfg("weak-convergence", tmp_path, reference="oracle"))


def test_method_b_fine_reference(tmp_path):
    cfg = _cfg(
        "weak-convergence",
        tmp_path,
        problem={"name": "nonlinear-kubo", "epsilon": 1e-2},
        reference="method-b-fine",
        methods=["method-a"],
        N_grid=[8, 16],
        total_revolutions=16,
        trajectories=400,
        block_size=200,
    )
    res = harness.run_weak_convergence(cfg)
    assert res.summary["reference_std_err"] > 0
    assert "reference_note" in res.metadata
    errs = [r["abs_error"] for r in res.records()]
    assert errs[0] < errs[1]


# ---------------------------------------------------------------------------
# NLS norms


def test_norm_evolution_small(tmp_path):
    cfg = _cfg(
        "norm-evolution",
        tmp_path,
        problem={"name": "nls", "K_x": 16, "sigma": 2},
        m_steps=4,
        K_t=16,
        snapshot_every=2,
        snapshot_points=50,
    )
    res = harness.run_norm_evolution(cfg)
    meth = res.summary["methods"]
    assert meth["method-b"]["max_abs_l2_drift"] < 1e-12
    assert meth["method-a"]["max_abs_l2_drift"] > 1e-12
    assert all(m["steps_completed"] == 4 for m in meth.values())
    _, cols, rows = harness.read_csv(res.files["snapshots"])
    assert cols == ["step", "x", "re_u", "im_u", "abs_u"] and len(rows) == 100
    assert res.metadata["nls_mode_range"] == [-8, 7]


def test_norm_evolution_records_blowup(tmp_path):
    cfg = _cfg(
        "norm-evolution",
        tmp_path,
        problem={"name": "nls", "K_x": 16, "sigma": 2},
        methods=["method-a"],
        m_steps=20,
        K_t=16,
        blowup_threshold=1.0 + 1e-9,
    )
    res = harness.run_norm_evolution(cfg)
    info = res.summary["methods"]["method-a"]
    assert info["blowup_step"] is not None and info["steps_completed"] < 20
    assert len(res.rows) == info["steps_completed"] + 1


def test_norm_evolution_needs_nls(tmp_path):
    with pytest.raises(ConfigError):
        harness.run_norm_evolution(_cfg("norm-evolution", tmp_path, problem={"name": "kubo"}))


# ---------------------------------------------------------------------------
# T_N law


def test_tn_clt_n1_centered(tmp_path):
    res = harness.run_tn_clt(_cfg("tn-clt", tmp_path, N=1))
    assert abs(res.summary["mean"]) < 3 * res.summary["mean_std_err"]


def test_tn_clt_n100(tmp_path):
    res = harness.run_tn_clt(_cfg("tn-clt", tmp_path, N=100))
    # the skewness 1.96/sqrt(N) is still visible: test against its Edgeworth law
    assert res.summary["ks_edgeworth_pvalue"] > 0.01
    assert abs(res.summary["skewness_sample"] - res.summary["skewness_theory"]) < 0.1
    assert abs(res.summary["variance"] - 1.0) < 0.05


def test_tn_clt_n1000_normal(tmp_path):
    res = harness.run_tn_clt(_cfg("tn-clt", tmp_path, N=1000))
    assert res.summary["ks_pvalue"] > 0.01


def test_tn_clt_reproducible(tmp_path):
    a = harness.run_tn_clt(config.resolve("tn-clt", {"samples": 500}, out_dir=str(tmp_path / "a")))
    b = harness.run_tn_clt(config.resolve("tn-clt", {"samples": 500}, out_dir=str(tmp_path / "b")))
    assert Path(a.files["csv"]).read_bytes() == Path(b.files["csv"]).read_bytes()
    c = harness.run_tn_clt(config.resolve("tn-clt", {"samples": 500}, out_dir=str(tmp_path / "c"), seed=1))
    assert Path(a.files["csv"]).read_bytes() != Path(c.files["csv"]).read_bytes()


# ---------------------------------------------------------------------------
# moments, single trajectories, strong order


def test_moment_targets_values():
    names = [t[0] for t in harness.moment_targets(4)]
    assert len(names) == 31 and names[0] == "E[alpha_0]"
    vals = {n: v for n, _, v in harness.moment_targets(4)}
    assert vals["E[alpha_0^2]"] == pytest.approx(1 + 2 / 12)
    assert vals["E[alpha_2 alpha_-2]"] == pytest.approx(1 / (math.pi**2 * 4 * 4))
    assert vals["E[Re beta_3,0]"] == pytest.approx(-1 / (2 * math.pi**2 * 9 * 4))


def test_moment_validation_small(tmp_path):
    res = harness.run_moment_validation(_cfg("validate-moments", tmp_path, paths=300, block_size=100))
    assert res.summary["passed"] and len(res.rows) == 3 * 31
    a = harness.run_moment_validation(
        config.resolve("validate-moments", {"paths": 60, "block_size": 20}, out_dir=str(tmp_path / "a"))
    )
    b = harness.run_moment_validation(
        config.resolve("validate-moments", {"paths": 60, "block_size": 20}, out_dir=str(tmp_path / "b"), threads=8)
    )
    assert Path(a.files["csv"]).read_bytes() == Path(b.files["csv"]).read_bytes()


def test_simulate(tmp_path):
    res = harness.run_simulate(_cfg("simulate", tmp_path, m_steps=5))
    assert len(res.rows) == 6 and res.columns[:3] == ["step", "t", "y0"]
    assert res.summary["max_invariant_drift"] < 1e-12


def test_local_strong_order_small():
    from multirev.problem import make_nonlinear_kubo

    rows, slope = harness.local_strong_order(make_nonlinear_kubo(0.0025), [1.0, 0.0], [8, 16], paths=20, chunk=10)
    assert [r[0] for r in rows] == [8, 16]
    assert rows[0][2] < rows[1][2] and slope > 2.0
