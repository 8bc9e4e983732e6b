import csv
import numpy as np
import pytest

from needlet_whittle.asymptotics import variance_constants
from needlet_whittle.estimator import EstimateResult
from needlet_whittle.montecarlo import (
    Estimator,
    ExperimentConfig,
    NarrowSpec,
    ReplicationRecord,
    predicted_variance,
    run_experiment,
    summarize,
    write_replications_csv,
    write_summary_csv,
)
from needlet_whittle.spectrum import SpectrumModel

ALL = tuple(Estimator)


def config(**kw):
    base = dict(model=SpectrumModel(3.0), B=2.0, L=128, estimators=ALL, replications=12, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def fake(alpha, rep=0, kind=Estimator.NEEDLET_FULL, boundary=False):
    res = EstimateResult(alpha, 1.0, 0.0, 0.0, 1.0, (0, 5), boundary)
    return ReplicationRecord(rep, kind, res)


def test_deterministic_and_worker_independent():
    cfg = config()
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    c = run_experiment(cfg, workers=3)
    assert a == b == c
    assert len(a) == cfg.replications * len(ALL)
    assert [r.rep for r in a[:4]] == [0, 0, 0, 0]


def test_seed_changes_results():
    a = run_experiment(config(replications=2))
    b = run_experiment(config(replications=2, seed=6))
    assert a[0].result.alpha_hat != b[0].result.alpha_hat


def test_config_validation():
    with pytest.raises(ValueError):
        config(replications=1)
    with pytest.raises(ValueError):
        config(B=1.0)
    with pytest.raises(ValueError):
        config(estimators=())
    with pytest.raises(ValueError, match="too few"):
        config(L=4)
    with pytest.raises(ValueError):
        NarrowSpec(g=1.5)
    with pytest.raises(ValueError):
        NarrowSpec(J1=3, L1=100)


def test_narrow_schedule_resolution():
    B8 = 2 ** 0.125
    cfg = config(B=B8, L=1024, narrow=NarrowSpec(L1=724))
    assert cfg.J_L == 79
    assert cfg.narrow_scales() == (75, 79)
    assert cfg.narrow_multipoles() == (724, 1024)
    cfg = config(B=B8, L=1024, narrow=NarrowSpec(g=1 - B8**-4))
    assert cfg.narrow_scales() == (75, 79)
    assert cfg.narrow_multipoles() == (724, 1024)
    assert cfg.schedule_value(Estimator.NEEDLET_NARROW) == pytest.approx(1 - B8**-4)
    cfg = config(narrow=NarrowSpec(J1=3))
    assert cfg.narrow_scales() == (3, 6)
    assert cfg.narrow_multipoles() == (16, 128)
    with pytest.raises(ValueError):
        config(narrow=NarrowSpec(J1=6)).narrow_scales()


def test_summary_degenerate_constant_records():
    cfg = config(estimators=(Estimator.NEEDLET_FULL,))
    rows = summarize([fake(3.0, r) for r in range(5)], cfg)
    assert rows[0].sd == 0 and rows[0].normalized_ratio == 0
    assert rows[0].mean == 3.0


def test_summary_counts_failures_and_boundaries():
    cfg = config(estimators=(Estimator.NEEDLET_FULL,))
    recs = [fake(3.0 + 0.01 * r, r) for r in range(6)]
    recs.append(fake(10.0, 6, boundary=True))
    recs.append(ReplicationRecord(7, Estimator.NEEDLET_FULL, None, "boom"))
    row = summarize(recs, cfg)[0]
    assert (row.n, row.n_boundary, row.n_failed) == (6, 1, 1)
    assert row.mean == pytest.approx(3.025)
    with pytest.raises(ValueError):
        summarize(recs[:1], cfg)


def test_summary_ratio_direct_simulation_oracle():
    cfg = config(L=1024, estimators=(Estimator.NEEDLET_FULL, Estimator.FOURIER_FULL))
    const = variance_constants(2.0, 3.0)
    rng = np.random.default_rng(0)
    R = 4000
    recs = []
    for kind in cfg.estimators:
        sd = np.sqrt(predicted_variance(kind, cfg, const))
        recs += [fake(x, r, kind) for r, x in enumerate(3.0 + sd * rng.standard_normal(R))]
    for row in summarize(recs, cfg, const):
        assert row.normalized_ratio == pytest.approx(1.0, abs=5 * np.sqrt(2 / R))
        assert 0 < row.sw_w <= 1 and 0 <= row.sw_p <= 1


def test_predicted_variances():
    cfg = config(L=1024)
    const = variance_constants(2.0, 3.0)
    assert predicted_variance(Estimator.NEEDLET_FULL, cfg, const) == pytest.approx(const.b2d / 1024**2)
    assert predicted_variance(Estimator.FOURIER_FULL, cfg, const) == pytest.approx(8 / 1024**2)
    assert predicted_variance(Estimator.NEEDLET_NARROW, cfg, const) > 0
    assert predicted_variance(Estimator.FOURIER_NARROW, cfg, const) > 8 / 1024**2


def test_csv_outputs(tmp_path):
    cfg = config(replications=3)
    recs = run_experiment(cfg)
    write_replications_csv([({"L": 128}, recs)], tmp_path / "r.csv", {"seed": 5})
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "# seed: 5"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 12
    assert set(rows[0]) >= {"L", "rep", "estimator", "alpha_hat", "g_hat", "boundary_flag"}
    assert float(rows[0]["alpha_hat"]) == recs[0].result.alpha_hat
    summary = [{"L": 128, **r.to_dict()} for r in summarize(recs, cfg)]
    write_summary_csv(summary, tmp_path / "s.csv", {"seed": 5})
    rows = list(csv.DictReader((tmp_path / "s.csv").read_text().splitlines()[1:]))
    assert [r["estimator"] for r in rows] == [e.value for e in ALL]
    # full precision floats
    assert len(rows[0]["mean"].split(".")[1]) >= 12


def test_config_to_dict():
    d = config(narrow=NarrowSpec(g=0.5)).to_dict()
    assert d["narrow"] == {"g": 0.5}
    assert d["estimators"] == [e.value for e in ALL]
    assert d["model"]["alpha0"] == 3.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_error_recorded_per_row():
    # a denormal G0 underflows the top multipoles to zero, which the narrow estimators reject
    cfg = config(replications=2, model=SpectrumModel(3.0, G0=1e-320))
    recs = run_experiment(cfg)
    assert len(recs) == 8
    bad = [r for r in recs if r.error]
    assert {r.estimator for r in bad} == {Estimator.NEEDLET_NARROW, Estimator.FOURIER_NARROW}
    assert all(r.result is None and "EstimationError" in r.error for r in bad)
