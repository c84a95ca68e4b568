"""Config handling, grid execution, results persistence, CLI surface."""

import dataclasses

import pytest

from efcilab.cli import main
from efcilab.config import (
    ConfigError,
    DatasetSpec,
    GridConfig,
    StrategySpec,
    config_from_dict,
    config_hash,
    config_to_dict,
    default_config,
    load_config,
    stable_seed,
    write_config,
)
from efcilab.grid import enumerate_runs, load_results, run_grid, run_single, write_results


def toy_config(**overrides) -> GridConfig:
    base = dict(
        datasets=(
            DatasetSpec(name="tiny1", n_classes=10, dim=6, n_train=6, n_test=3),
            DatasetSpec(name="tiny2", n_classes=10, dim=8, n_train=5, n_test=3),
        ),
        strategies=(
            StrategySpec(name="s-lo", separation=1.5),
            StrategySpec(name="s-mid", separation=3.0),
            StrategySpec(name="s-hi", separation=4.5),
        ),
        learners=("dslda", "ncm", "fetril"),
        scenarios=("equal", "half"),
        n_incr_steps=5,
        repetitions=1,
        base_seed=77,
        hyperparams={"fetril": {"epochs": 25}},
    )
    base.update(overrides)
    return GridConfig(**base)


def test_grid_row_count_is_the_product():
    cfg = toy_config()
    assert len(enumerate_runs(cfg)) == 2 * 3 * 3 * 2 * 1


def test_stable_seed_is_deterministic_and_spread():
    a = stable_seed(7, "dataset", "d", "s", 0)
    assert a == stable_seed(7, "dataset", "d", "s", 0)
    assert a != stable_seed(7, "dataset", "d", "s", 1)
    assert 0 <= a < 2**63


def test_config_yaml_json_round_trip(tmp_path):
    cfg = toy_config()
    for name in ("cfg.yaml", "cfg.json"):
        path = tmp_path / name
        write_config(cfg, path)
        back = load_config(path)
        assert back == cfg
        assert config_hash(back) == config_hash(cfg)


def test_config_hash_changes_with_content():
    cfg = toy_config()
    assert config_hash(cfg) != config_hash(dataclasses.replace(cfg, base_seed=78))


def test_config_validation_errors():
    with pytest.raises(ConfigError, match="duplicate dataset"):
        config_from_dict(
            config_to_dict(toy_config(datasets=(
                DatasetSpec(name="x", n_classes=4, dim=2, n_train=2, n_test=1),
                DatasetSpec(name="x", n_classes=4, dim=2, n_train=2, n_test=1),
            )))
        )
    with pytest.raises(ConfigError, match="unknown learner"):
        config_from_dict(config_to_dict(toy_config(learners=("dslda", "icarl"))))
    with pytest.raises(ConfigError, match="unknown scenario"):
        config_from_dict(config_to_dict(toy_config(scenarios=("equal", "thirds"))))
    with pytest.raises(ConfigError, match="repetitions"):
        config_from_dict(config_to_dict(toy_config(repetitions=0)))
    with pytest.raises(ConfigError, match="lacks a feature file"):
        config_from_dict(
            config_to_dict(toy_config(datasets=(DatasetSpec(name="ext", kind="file"),)))
        )


def test_default_config_is_valid_and_sized_as_shipped():
    cfg = default_config()
    assert len(cfg.datasets) == 3
    assert len(cfg.strategies) == 3
    assert len(cfg.learners) == 4
    assert len(cfg.scenarios) == 2
    assert cfg.repetitions == 3
    assert len(enumerate_runs(cfg)) == 216


def test_run_single_produces_consistent_record():
    cfg = toy_config()
    spec = enumerate_runs(cfg)[0]
    record, matrix = run_single(cfg, spec)
    assert record.run_id == spec.run_id
    assert record.n == 10
    assert matrix.n_steps == (6 if spec.scenario == "half" else 5)
    assert 0.0 <= record.avg_acc <= 1.0
    # N1 = train samples in the first step
    classes_step1 = 5 if spec.scenario == "half" else 2
    n_train = 6 if spec.data == "tiny1" else 5
    assert record.n1 == classes_step1 * n_train


def test_grid_results_deterministic_and_parallel_equivalent(tmp_path):
    cfg = toy_config()
    t1 = run_grid(cfg, jobs=1)
    t2 = run_grid(cfg, jobs=1)
    p1 = write_results(t1, tmp_path / "a")
    p2 = write_results(t2, tmp_path / "b")
    assert p1.read_bytes() == p2.read_bytes()
    t3 = run_grid(cfg, jobs=2)
    p3 = write_results(t3, tmp_path / "c")
    assert p1.read_bytes() == p3.read_bytes()
    ma = sorted((tmp_path / "a" / "matrices").iterdir())
    mc = sorted((tmp_path / "c" / "matrices").iterdir())
    assert [m.name for m in ma] == [m.name for m in mc]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(ma, mc))


def test_results_csv_round_trip(tmp_path):
    cfg = toy_config(repetitions=1, learners=("ncm",))
    table = run_grid(cfg)
    path = write_results(table, tmp_path)
    back = load_results(path)
    assert back.config_hash == table.config_hash
    assert back.base_seed == cfg.base_seed
    assert back.records == sorted(table.records, key=lambda r: r.run_id)


def test_grid_records_failures_without_aborting(tmp_path):
    cfg = toy_config(hyperparams={"dslda": {"shrinkage": -2.0}, "fetril": {"epochs": 25}})
    table = run_grid(cfg)
    assert len(table.failures) == 12  # every dslda cell
    assert len(table.records) == 24
    assert all("shrinkage" in f.error for f in table.failures)
    write_results(table, tmp_path)
    assert (tmp_path / "failures.csv").exists()


# ---------------------------------------------------------------------------
# CLI


def write_toy_config(tmp_path, **overrides):
    path = tmp_path / "config.yaml"
    write_config(toy_config(**overrides), path)
    return path


def test_cli_grid_then_analyze_then_report(tmp_path, capsys):
    cfg_path = write_toy_config(tmp_path)
    out = tmp_path / "out"
    assert main(["grid", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert (out / "results.csv").exists()
    assert (out / "config.used.yaml").exists()

    rep = tmp_path / "report"
    code = main(["analyze", "--results", str(out / "results.csv"), "--out", str(rep)])
    assert code == 0
    assert (rep / "bundle.json").exists()
    assert (rep / "summary.md").exists()
    assert (rep / "correlations.csv").exists()
    svgs = list(rep.glob("pairwise_*.svg"))
    assert svgs

    rep2 = tmp_path / "report2"
    assert main(["report", "--bundle", str(rep / "bundle.json"), "--out", str(rep2)]) == 0
    for produced in rep2.iterdir():
        assert produced.read_bytes() == (rep / produced.name).read_bytes()


def test_cli_grid_partial_failure_exit_code(tmp_path):
    cfg_path = write_toy_config(tmp_path, hyperparams={"dslda": {"shrinkage": -2.0}})
    out = tmp_path / "out"
    assert main(["grid", "--config", str(cfg_path), "--out", str(out)]) == 2


def test_cli_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("datasets: []\n")
    assert main(["grid", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_cli_run_single_cell(tmp_path, capsys):
    cfg_path = write_toy_config(tmp_path)
    code = main([
        "run", "--config", str(cfg_path), "--data", "tiny1", "--train", "s-hi",
        "--incr", "ncm", "--scenario", "equal", "--out", str(tmp_path / "runout"),
    ])
    assert code == 0
    assert "avg_acc=" in capsys.readouterr().out
    produced = load_results(tmp_path / "runout" / "results.csv")
    assert len(produced.records) == 1
    assert produced.records[0].run_id == "tiny1__s-hi__ncm__equal__r0"
    assert list((tmp_path / "runout" / "matrices").glob("*.csv"))


def test_cli_synth_writes_feature_files(tmp_path):
    cfg_path = write_toy_config(tmp_path)
    out = tmp_path / "s"
    assert main(["synth", "--config", str(cfg_path), "--out", str(out)]) == 0
    files = sorted(p.name for p in (out / "features").iterdir())
    assert files == [
        "tiny1__s-hi.csv", "tiny1__s-lo.csv", "tiny1__s-mid.csv",
        "tiny2__s-hi.csv", "tiny2__s-lo.csv", "tiny2__s-mid.csv",
    ]


def test_cli_analyze_refuses_mixed_hashes(tmp_path):
    out1, out2 = tmp_path / "g1", tmp_path / "g2"
    write_results(run_grid(toy_config(learners=("ncm",))), out1)
    write_results(run_grid(toy_config(learners=("ncm",), base_seed=99)), out2)
    args = ["analyze", "--results", str(out1 / "results.csv"), str(out2 / "results.csv"),
            "--out", str(tmp_path / "r")]
    assert main(args) == 1
    assert main(args + ["--force-mixed"]) == 0


def test_cli_analyze_too_few_rows_is_infeasible(tmp_path):
    out = tmp_path / "g"
    cfg = toy_config(learners=("ncm",), scenarios=("equal",), strategies=(
        StrategySpec(name="only", separation=2.0),), datasets=(
        DatasetSpec(name="tiny1", n_classes=10, dim=6, n_train=6, n_test=3),))
    write_results(run_grid(cfg), out)
    assert main(["analyze", "--results", str(out / "results.csv"), "--out", str(tmp_path / "r")]) == 3


def test_cli_run_seed_override_changes_results(tmp_path, capsys):
    cfg_path = write_toy_config(tmp_path)
    base = ["run", "--config", str(cfg_path), "--data", "tiny1", "--train", "s-lo",
            "--incr", "ncm", "--scenario", "equal"]
    main(base)
    first = capsys.readouterr().out
    main(base + ["--seed", "123456"])
    second = capsys.readouterr().out
    assert first != second
