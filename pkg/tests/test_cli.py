import numpy as np
import pytest

from scripts import cli
from src.config import SHOPPER_THREADS
from src.evaluation.reports import read_report_csv
from src.exceptions import OptimizationError
from src.inference.checkpoint import save_checkpoint
from src.inference.config import OptimizerConfig
from src.inference.variational import init_variational_state
from src.ingestion.csv_loader import load_dataset_pair
from src.simulation.toy_world import TEST_FILES, TRAIN_FILES
from tests.factories import small_config

TINY_WORLD = """
[model]
k_items = 3
k_price = 2
use_season = false

[optimizer]
batch_trips = 10
batch_negatives = 3
max_iterations = 6
check_every = 3
validation_trips = 10

[simulate]
n_customers_per_segment = 2
n_trips_per_customer = 25
n_test_trips_per_customer = 4
"""


@pytest.fixture
def workspace(tmp_path):
    config = tmp_path / "run.ini"
    config.write_text(TINY_WORLD, encoding="utf-8")
    data = tmp_path / "data"
    assert cli.main(["--config", str(config), "simulate", "--out", str(data)]) == cli.EXIT_OK
    return config, data


def _write_checkpoint(data, path):
    catalog, _, _ = load_dataset_pair(
        (data / TRAIN_FILES[0], data / TRAIN_FILES[1]),
        (data / TEST_FILES[0], data / TEST_FILES[1]),
    )
    config = small_config(k_items=3, use_season=False)
    v = init_variational_state(config, catalog, OptimizerConfig(init_std=0.5), np.random.default_rng(0))
    save_checkpoint(path, v, config, catalog, seed=0, extra={"config_hash": "feedbeef0000"})
    return catalog


def test_no_command_prints_help(capsys):
    assert cli.main([]) == 1
    assert "simulate" in capsys.readouterr().out


def test_simulate_writes_the_world(workspace):
    _, data = workspace

    for name in TRAIN_FILES + TEST_FILES + ("manifest.json",):
        assert (data / name).exists()


def test_fit_writes_checkpoint_and_trace(workspace, capsys):
    config, data = workspace
    checkpoint = data / "model.ckpt"

    code = cli.main(["--config", str(config), "fit", "--data-dir", str(data),
                     "--checkpoint", str(checkpoint), "--seed", "3"])

    assert code == cli.EXIT_OK
    assert checkpoint.exists()
    trace_path = checkpoint.with_suffix(".trace.csv")
    assert trace_path.read_text(encoding="utf-8").startswith("# config_hash=")
    trace = read_report_csv(trace_path)
    assert list(trace["iteration"]) == [1, 2, 3, 4, 5, 6]
    assert "Fit Complete!" in capsys.readouterr().out


def test_fit_divergence_exits_with_optimization_code(workspace, monkeypatch):
    config, data = workspace

    def _diverge(*args, **kwargs):
        raise OptimizationError(4)

    monkeypatch.setattr(cli, "fit", _diverge)

    code = cli.main(["--config", str(config), "fit", "--data-dir", str(data),
                     "--checkpoint", str(data / "model.ckpt")])
    assert code == cli.EXIT_OPTIMIZATION


def test_missing_data_files_are_input_errors(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()

    code = cli.main(["fit", "--data-dir", str(empty), "--checkpoint", str(tmp_path / "m.ckpt")])

    assert code == cli.EXIT_INPUT
    assert "trips.csv" in capsys.readouterr().out


def test_eval_writes_table(workspace, capsys):
    config, data = workspace
    checkpoint = data / "model.ckpt"
    _write_checkpoint(data, checkpoint)
    out = data / "eval.csv"

    code = cli.main(["--config", str(config), "eval", "--checkpoint", str(checkpoint),
                     "--data-dir", str(data), "--skew", "2.5,50", "--mode", "basket", "--out", str(out)])

    assert code == cli.EXIT_OK
    assert out.read_text(encoding="utf-8").startswith("# config_hash=feedbeef0000")
    table = read_report_csv(out)
    assert "All mean" in table.columns
    assert "Price +/-2.5% mean" in table.columns
    assert "basket mean" in table.columns
    assert "All (n=" in capsys.readouterr().out


def test_eval_trip_mode_adds_a_per_trip_column(workspace):
    config, data = workspace
    checkpoint = data / "model.ckpt"
    _write_checkpoint(data, checkpoint)
    out = data / "nested" / "eval.csv"

    code = cli.main(["--config", str(config), "eval", "--checkpoint", str(checkpoint),
                     "--data-dir", str(data), "--mode", "trip", "--out", str(out)])

    assert code == cli.EXIT_OK
    table = read_report_csv(out)
    assert "trip mean" in table.columns
    assert (table["trip mean"].dropna() < 0).all()

def test_eval_with_foreign_checkpoint_is_a_compatibility_error(workspace, tmp_path):
    config, data = workspace
    checkpoint = tmp_path / "model.ckpt"
    _write_checkpoint(data, checkpoint)
    # a world with fewer customers has a different user registry
    small = tmp_path / "small.ini"
    small.write_text(TINY_WORLD.replace("n_customers_per_segment = 2", "n_customers_per_segment = 1"),
                     encoding="utf-8")
    other = tmp_path / "other"
    assert cli.main(["--config", str(small), "simulate", "--out", str(other)]) == cli.EXIT_OK

    code = cli.main(["--config", str(config), "eval", "--checkpoint", str(checkpoint), "--data-dir", str(other)])
    assert code == cli.EXIT_COMPATIBILITY


def test_metrics_for_all_items(workspace):
    _, data = workspace
    checkpoint = data / "model.ckpt"
    catalog = _write_checkpoint(data, checkpoint)

    code = cli.main(["metrics", "--checkpoint", str(checkpoint), "--all-pairs-top", "3", "--out", str(data)])

    assert code == cli.EXIT_OK
    table = read_report_csv(data / "metrics.csv")
    assert len(table) == catalog.n_items - 1
    assert {"complement_3", "exchangeable_3"} <= set(table.columns)
    assert len(read_report_csv(data / "complementarity.csv")) == 3 * (catalog.n_items - 1)


def test_metrics_unknown_item_suggests_near_matches(workspace, capsys):
    _, data = workspace
    checkpoint = data / "model.ckpt"
    _write_checkpoint(data, checkpoint)

    code = cli.main(["metrics", "hot_dog", "--checkpoint", str(checkpoint)])

    assert code == cli.EXIT_INPUT
    assert "hot_dogs" in capsys.readouterr().out


def test_metrics_rejects_checkout(workspace):
    _, data = workspace
    checkpoint = data / "model.ckpt"
    catalog = _write_checkpoint(data, checkpoint)

    assert cli.main(["metrics", catalog.items[catalog.checkout], "--checkpoint", str(checkpoint)]) == cli.EXIT_INPUT


def test_export_writes_vectors_and_neighbours(workspace):
    _, data = workspace
    checkpoint = data / "model.ckpt"
    catalog = _write_checkpoint(data, checkpoint)

    assert cli.main(["export", "--checkpoint", str(checkpoint), "--top", "2"]) == cli.EXIT_OK

    vectors = read_report_csv(data / "item_vectors.csv")
    similar = read_report_csv(data / "similar_items.csv")
    assert list(vectors["item_id"]) == list(catalog.items)
    assert len(similar) == 2 * (catalog.n_items - 1)


@pytest.mark.slow
def test_fit_and_eval_end_to_end(workspace):
    config, data = workspace
    checkpoint = data / "model.ckpt"

    assert cli.main(["--config", str(config), "fit", "--data-dir", str(data), "--checkpoint", str(checkpoint),
                     "--max-iterations", "200", "--threads", "2"]) == cli.EXIT_OK
    assert cli.main(["--config", str(config), "eval", "--checkpoint", str(checkpoint),
                     "--data-dir", str(data), "--mode", "triplets"]) == cli.EXIT_OK
    assert checkpoint.with_suffix(".eval.csv").exists()


def test_unwritable_checkpoint_fails_before_fitting(workspace, monkeypatch, capsys):
    config, data = workspace
    calls = []
    monkeypatch.setattr(cli, "fit", lambda *args, **kwargs: calls.append(args))
    blocker = data / "not_a_dir"
    blocker.write_text("", encoding="utf-8")

    code = cli.main(["--config", str(config), "fit", "--data-dir", str(data),
                     "--checkpoint", str(blocker / "m.ckpt")])

    assert code == cli.EXIT_INPUT
    assert calls == []
    assert "✗" in capsys.readouterr().out


def test_trace_path_that_is_a_directory_fails_before_fitting(workspace, monkeypatch):
    config, data = workspace
    calls = []
    monkeypatch.setattr(cli, "fit", lambda *args, **kwargs: calls.append(args))

    code = cli.main(["--config", str(config), "fit", "--data-dir", str(data),
                     "--checkpoint", str(data / "m.ckpt"), "--out", str(data)])

    assert code == cli.EXIT_INPUT
    assert calls == []


@pytest.mark.parametrize("argv, expected", [
    (["--threads", "3", "fit"], 3),
    (["fit", "--threads", "2"], 2),
    (["fit"], SHOPPER_THREADS),
])
def test_threads_flag_before_or_after_the_command(workspace, monkeypatch, argv, expected):
    config, data = workspace
    seen = []

    def _record(catalog, train, validation, model_config, opt, *args, **kwargs):
        seen.append(opt.threads)
        raise OptimizationError(1)

    monkeypatch.setattr(cli, "fit", _record)
    command = argv.index("fit")
    full = (["--config", str(config)] + argv[:command + 1] + ["--data-dir", str(data),
            "--checkpoint", str(data / "m.ckpt")] + argv[command + 1:])

    assert cli.main(full) == cli.EXIT_OPTIMIZATION
    assert seen == [expected]
