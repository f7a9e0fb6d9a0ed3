import statistics
from pathlib import Path

import numpy as np
import pytest
import yaml

from irs_wsr import cli
from irs_wsr.channel import sample_scenario
from irs_wsr.exceptions import ConfigError
from irs_wsr.experiment import (
    ExperimentConfig,
    ResultRow,
    SummaryRow,
    aggregate,
    config_from_dict,
    emit_csv,
    load_config,
    read_csv,
    run_experiment,
    summary_path,
    trial_seed,
    trial_streams,
)
from irs_wsr.system import SystemConfig

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

SMALL = {
    "system": {"antennas": 4, "elements": 4, "users": 2},
    "solver": {"outer_max_iters": 5, "beamformer": {"max_iters": 30}, "reflection": {"max_iters": 30}},
    "experiment": {"sweep": "N", "values": [4], "trials": 2, "methods": ["dmao", "random"]},
}


def small_config(**experiment):
    doc = yaml.safe_load(yaml.safe_dump(SMALL))
    doc["experiment"].update(experiment)
    return config_from_dict(doc)


def write_yaml(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def test_reference_config_loads():
    cfg = load_config(CONFIG_DIR / "reference.yaml")
    s = cfg.system
    assert (s.n_antennas, s.n_elements, s.n_irs, s.n_users) == (20, 20, 2, 4)
    assert s.power == 1.0
    np.testing.assert_allclose(s.noise_power, 1e-11, rtol=1e-12)
    np.testing.assert_array_equal(s.weights, 1.0)
    assert cfg.geometry.carrier_frequency == 3e9
    assert cfg.geometry.irs_positions == [(10.0, 24.0), (24.0, 10.0)]
    assert cfg.geometry.user_center == (20.0, 0.0)
    assert cfg.trials == 50 and cfg.methods == ["dmao", "random", "mrt", "zf"]
    assert cfg.options.outer_rel_tol == 1e-4 and cfg.options.outer_max_iters == 100


def test_empty_document_gives_defaults():
    cfg = config_from_dict({})
    assert cfg.system.n_antennas == 20 and cfg.sweep == "N" and cfg.values == [8, 12, 16, 20, 24]
    assert config_from_dict({"experiment": {"sweep": "Q"}}).values == [2, 4, 8, 16, 32]


@pytest.mark.parametrize(
    "doc,field",
    [
        ({"experiment": {"trials": 0}}, "experiment.trials"),
        ({"experiment": {"sweep": "K"}}, "experiment.sweep"),
        ({"experiment": {"values": [8, -4]}}, "experiment.values[1]"),
        ({"experiment": {"values": [8, 9]}}, "experiment.values"),
        ({"experiment": {"methods": ["dmao", "sdr"]}}, "experiment.methods"),
        ({"system": {"antennas": "many"}}, "system.antennas"),
        ({"system": {"elements": 7}}, "system.elements"),
        ({"system": {"users": 3, "weights": [1, 1]}}, "system.weights"),
        ({"system": {"power_w": 0}}, "system"),
        ({"geometry": {"irs": [[1, 2]]}}, "geometry.irs"),
        ({"geometry": {"irs": [[1, 2], [3]]}}, "geometry.irs[1]"),
        ({"solver": {"beamformer": {"armijo_contraction": 2.0}}}, "solver.beamformer"),
        ({"solver": {"reflection": {"max_iter": 5}}}, "solver.reflection.max_iter"),
        ({"system": {"antenna": 8}}, "system.antenna"),
        ({"experimnt": {}}, "experimnt"),
    ],
)
def test_config_errors_carry_field_path(doc, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(doc)
    assert info.value.field == field
    assert str(info.value).startswith(field + ":")


def test_invalid_yaml_is_config_error(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("system: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_trial_seeds_distinct_and_stable():
    seeds = [trial_seed(0, t) for t in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [trial_seed(0, t) for t in range(100)]
    assert trial_seed(1, 0) != trial_seed(0, 0)
    a, b = trial_streams(5), trial_streams(5)
    assert set(a) == {"channel", "dmao", "random", "mrt", "zf"}
    for name in a:
        assert a[name].random() == b[name].random()


def test_single_row_run():
    cfg = small_config(trials=1, methods=["dmao"])
    rows = run_experiment(cfg)
    assert len(rows) == 1
    r = rows[0]
    assert (r.method, r.axis_value, r.trial, r.status) == ("dmao", 4, 0, "ok")
    assert r.seed == trial_seed(cfg.seed, 0)
    assert r.sum_rate >= 0 and r.elapsed_s is None


def test_rows_sorted_and_complete():
    rows = run_experiment(small_config(values=[4, 6], trials=2, methods=["random", "dmao"]))
    keys = [(r.method, r.axis_value, r.trial) for r in rows]
    assert keys == sorted(keys)
    assert len(rows) == 2 * 2 * 2


def test_paired_channels_across_methods(monkeypatch):
    import irs_wsr.experiment as ex

    seen = []
    real = dict(ex.METHODS)

    def spy(name):
        def run(channels, system, opts, rng):
            seen.append((name, channels.H.copy(), channels.G.copy()))
            return real[name](channels, system, opts, rng)
        return run

    monkeypatch.setattr(ex, "METHODS", {k: spy(k) for k in real})
    run_experiment(small_config(trials=1, methods=["dmao", "random", "mrt", "zf"]))
    assert [s[0] for s in seen] == ["dmao", "random", "mrt", "zf"]
    for _, H, G in seen[1:]:
        np.testing.assert_array_equal(H, seen[0][1])
        np.testing.assert_array_equal(G, seen[0][2])


def test_trial_channel_depends_only_on_seed_and_trial():
    cfg = small_config()
    streams = trial_streams(trial_seed(cfg.seed, 1))
    a = sample_scenario(cfg.geometry, cfg.system, streams["channel"])
    b = sample_scenario(cfg.geometry, cfg.system, trial_streams(trial_seed(cfg.seed, 1))["channel"])
    np.testing.assert_array_equal(a.H, b.H)


def test_zf_singular_trials_are_skipped():
    # K > N makes ZF infeasible for every trial
    doc = yaml.safe_load(yaml.safe_dump(SMALL))
    doc["system"].update(users=6)
    doc["experiment"].update(methods=["zf", "mrt"], trials=1)
    rows = run_experiment(config_from_dict(doc))
    status = {r.method: r.status for r in rows}
    assert status == {"mrt": "ok", "zf": "skipped_singular"}
    zf = next(r for r in rows if r.method == "zf")
    assert zf.sum_rate is None
    summary = aggregate(rows)
    assert [s.status for s in summary] == ["ok", "empty"]


def test_quantization_sweep_rows():
    doc = yaml.safe_load(yaml.safe_dump(SMALL))
    doc["experiment"].update(sweep="Q", values=[2, 4, 1024], methods=["dmao"], trials=1)
    rows = run_experiment(config_from_dict(doc))
    assert [r.axis_value for r in rows] == [2, 4, 1024]
    assert all(r.status == "ok" for r in rows)


def test_reruns_are_byte_identical(tmp_path):
    cfg = small_config()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_experiment(cfg), a)
    emit_csv(run_experiment(cfg), b)
    assert a.read_bytes() == b.read_bytes()


def test_empty_rows_write_header_only(tmp_path):
    path = emit_csv([], tmp_path / "empty.csv")
    assert path.read_text(encoding="utf-8") == (
        "method,axis_value,trial,seed,sum_rate,outer_iterations,elapsed_s,status\n"
    )
    path = emit_csv([], tmp_path / "s.csv", SummaryRow)
    assert path.read_text().splitlines() == ["method,axis_value,mean,stderr,trials,status"]


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    rows = [
        ResultRow("dmao", 8, t, 1000 + t, float(rng.uniform(0, 40)), t + 1, float(rng.uniform(0, 2)), "ok")
        for t in range(10)
    ]
    rows.append(ResultRow("zf", 8, 0, 5, None, 0, None, "skipped_singular"))
    path = emit_csv(rows, tmp_path / "rows.csv")
    back = read_csv(path)
    # nine significant digits bound the relative rounding error by 5e-9
    tol = 5e-9
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert (a.method, a.axis_value, a.trial, a.seed, a.status) == (b.method, b.axis_value, b.trial, b.seed, b.status)
        if a.sum_rate is None:
            assert b.sum_rate is None
        else:
            assert b.sum_rate == pytest.approx(a.sum_rate, rel=tol)
            assert b.elapsed_s == pytest.approx(a.elapsed_s, rel=tol)
            assert b.sum_rate == float(format(a.sum_rate, ".9g"))


def test_unwritable_output_reports_path(tmp_path):
    target = tmp_path / "missing" / "rows.csv"
    with pytest.raises(OSError, match="missing"):
        emit_csv([], target)


def test_aggregate_examples():
    one = [ResultRow("dmao", 8, 0, 1, 3.5, 4, None, "ok")]
    assert aggregate(one) == [SummaryRow("dmao", 8, 3.5, 0.0, 1, "ok")]
    two = one + [ResultRow("dmao", 8, 1, 2, 4.5, 4, None, "ok")]
    assert aggregate(two)[0].mean == 4.0


def test_aggregate_matches_independent_recomputation():
    rng = np.random.default_rng(3)
    rows = []
    for method in ("dmao", "mrt"):
        for value in (8, 12):
            for t in range(5):
                rows.append(ResultRow(method, value, t, t, float(rng.uniform(5, 30)), 3, None, "ok"))
    rows[3] = ResultRow("dmao", 8, 3, 3, None, 0, None, "skipped_singular")
    assert len(rows) == 20
    summary = aggregate(rows)
    assert [(s.method, s.axis_value) for s in summary] == [("dmao", 8), ("dmao", 12), ("mrt", 8), ("mrt", 12)]
    for s in summary:
        vals = [r.sum_rate for r in rows if (r.method, r.axis_value) == (s.method, s.axis_value) and r.status == "ok"]
        assert s.trials == len(vals)
        assert s.mean == pytest.approx(statistics.fmean(vals), rel=1e-12)
        assert s.stderr == pytest.approx(statistics.stdev(vals) / len(vals) ** 0.5, rel=1e-12)
    assert summary[0].trials == 4


def test_summary_path():
    assert summary_path("out/results.csv") == Path("out/results_summary.csv")
    assert summary_path("res") == Path("res_summary.csv")


def test_cli_run_writes_rows_and_summary(tmp_path, capsys):
    cfg_path = write_yaml(tmp_path, SMALL)
    out = tmp_path / "r.csv"
    code = cli.main(["run", "--config", str(cfg_path), "--trials", "2", "--values", "4", "6", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 2 * 2 * 2
    summary = read_csv(summary_path(out), SummaryRow)
    assert len(summary) == 4
    assert "dmao" in capsys.readouterr().out


def test_cli_overrides(tmp_path):
    cfg = small_config()
    args = cli.build_parser().parse_args(
        ["run", "--config", "x", "--sweep", "M", "--methods", "mrt, zf", "--seed", "9", "--workers", "2"]
    )
    new = cli.apply_overrides(cfg, args)
    assert new.sweep == "M" and new.values == [8, 12, 16, 20, 24]
    assert new.methods == ["mrt", "zf"] and new.seed == 9 and new.workers == 2
    assert new.trials == cfg.trials


def test_cli_exit_codes(tmp_path, capsys):
    bad = write_yaml(tmp_path, {"experiment": {"trials": -1}})
    assert cli.main(["run", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "experiment.trials" in capsys.readouterr().err
    good = write_yaml(tmp_path, SMALL, "good.yaml")
    assert cli.main(["run", "--config", str(good), "--methods", "dmao,nope"]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--config", str(tmp_path / "absent.yaml")]) == cli.EXIT_IO
    out = tmp_path / "no_such_dir" / "r.csv"
    assert cli.main(["run", "--config", str(good), "--trials", "1", "--out", str(out)]) == cli.EXIT_IO
    with pytest.raises(SystemExit):
        cli.main(["run"])


def test_experiment_config_validates_directly():
    with pytest.raises(ConfigError):
        ExperimentConfig(system=SystemConfig(8, 8, 2, 4), trials=0)
