import csv

import pytest

import kdml.cli as cli
from kdml.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, main
from kdml.errors import NumericalError
from kdml.io import read_dataset_header, read_results
from kdml.learn import FlopsModel, flops

TINY = "hidden=8\nn_steps=4\nepochs=1\nbatch_size=100\nsymbols_per_frame=16\nwindows_per_frame=100\n"


@pytest.fixture
def run(tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY)
    out = tmp_path / "out"

    def _run(*args):
        return main([*args, "--config", str(cfg), "--out", str(out), "--scale", "0.02",
                     "--snr", "10,20", "--nps", "4", "--seed", "5"])

    _run.out = out
    return _run


def csv_rows(path):
    return [r for r in csv.reader(l for l in path.read_text().splitlines() if not l.startswith("#"))]


class TestCli:
    def test_generate_counts(self, run):
        assert run("generate") == EXIT_OK
        header = read_dataset_header(run.out / "datasets" / "snr10_nps4_seed5.kdd")
        assert header["counts"] == {"train": 540, "test": 60}
        assert header["seed"] == 5

    def test_generate_is_byte_identical(self, run):
        run("generate")
        first = (run.out / "datasets" / "snr20_nps4_seed5.kdd").read_bytes()
        run("generate")
        assert (run.out / "datasets" / "snr20_nps4_seed5.kdd").read_bytes() == first

    def test_knowledge_only_evaluate(self, run):
        run("generate")
        assert run("evaluate", "--no-plot") == EXIT_OK
        rows, meta = read_results(run.out / "results.csv")
        assert len(rows) == 2 * 1 * 2
        assert {r.estimator for r in rows} == {"LS", "MMSE-Sim"}
        assert "config_hash" in meta and meta["seeds"] == "5"

    def test_train_then_evaluate(self, run, capsys):
        run("generate")
        assert run("train", "--variant", "kdml-ls") == EXIT_OK
        trained = capsys.readouterr().out
        assert run("evaluate", "--variant", "ls", "--variant", "kdml-ls") == EXIT_OK
        rows, _ = read_results(run.out / "results.csv")
        assert len(rows) == 4
        kdml = [r for r in rows if r.estimator == "KDML(LS)"]
        # evaluate reloads the checkpoint and reproduces the train-time score
        for r in kdml:
            assert f"test mse {r.mse:.4e}" in trained
        assert (run.out / "mse_vs_snr_nps4.svg").read_text().lstrip().startswith("<?xml")
        loss = csv_rows(run.out / "losses" / "kdml-ls_snr10_nps4_seed5.csv")
        assert loss[0] == ["epoch", "loss"] and len(loss) == 2

    def test_missing_checkpoint(self, run, capsys):
        run("generate")
        assert run("evaluate", "--variant", "kdml-h") == EXIT_IO
        err = capsys.readouterr().err
        assert "kdml-h_snr10_nps4_seed5.ckpt" in err and "kdml-h_snr20_nps4_seed5.ckpt" in err

    def test_missing_dataset(self, run):
        assert run("evaluate") == EXIT_IO

    def test_bad_config(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("hidden=zero\n")
        assert main(["generate", "--config", str(bad)]) == EXIT_CONFIG
        assert main(["generate", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG

    def test_divergence_removes_checkpoint(self, run, monkeypatch):
        run("generate")
        stale = run.out / "checkpoints" / "kdml-ls_snr10_nps4_seed5.ckpt"
        stale.parent.mkdir(parents=True)
        stale.write_bytes(b"partial")

        def boom(*args, **kwargs):
            raise NumericalError("diverged")

        monkeypatch.setattr(cli, "run_kdml", boom)
        assert run("train", "--variant", "kdml-ls") == EXIT_NUMERICAL
        assert not stale.exists()

    def test_sweep_rows(self, run):
        assert run("sweep", "--variant", "ls", "--variant", "mmse", "--variant", "mlp", "--no-plot") == EXIT_OK
        rows, _ = read_results(run.out / "results.csv")
        assert len(rows) == 2 * 3

    def test_sweep_reproducible(self, run):
        run("sweep", "--variant", "ls", "--variant", "kdml-ls", "--no-plot")
        first = [r[3] for r in csv_rows(run.out / "results.csv")]
        run("sweep", "--variant", "ls", "--variant", "kdml-ls", "--no-plot")
        assert [r[3] for r in csv_rows(run.out / "results.csv")] == first

    def test_flops_report(self, run, capsys):
        assert run("flops", "--repeats", "1") == EXIT_OK
        out = capsys.readouterr().out
        assert str(flops(FlopsModel(1, 2, 8, 2))) in out
        lines = csv_rows(run.out / "flops.csv")
        assert lines[0] == ["kind", "size", "seconds"]
        assert {r[0] for r in lines[1:]} == {"ls", "mmse", "lstm_n", "lstm_m"}

    def test_flops_default_config(self, tmp_path, capsys):
        assert main(["flops", "--out", str(tmp_path), "--repeats", "1"]) == EXIT_OK
        assert "67328" in capsys.readouterr().out
