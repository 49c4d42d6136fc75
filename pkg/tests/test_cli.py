"""End-to-end CLI tests, including the exit-code contract."""

import json
import os

import pytest

from mlncla.cli import EXIT_OK, EXIT_RESOURCE, EXIT_VALIDATION, main
from mlncla.knowledge import deserialize

from conftest import CUTLERY_DB, CUTLERY_MLN


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "model.mln").write_text(CUTLERY_MLN)
    (tmp_path / "train.db").write_text(CUTLERY_DB)
    return tmp_path


def run(*args):
    return main([str(a) for a in args])


class TestLearn:
    def test_generative(self, workdir):
        out = workdir / "trained.mln"
        code = run("learn", "--mln", workdir / "model.mln",
                   "--db", workdir / "train.db", "--out", out)
        assert code == EXIT_OK
        assert out.exists()
        sidecar = json.loads((workdir / "trained.mln.z.json").read_text())
        assert all(isinstance(z, int) for z in sidecar.values())

    def test_discriminative(self, workdir):
        code = run("learn", "--mln", workdir / "model.mln",
                   "--db", workdir / "train.db",
                   "--method", "discriminative", "--query", "Affordance",
                   "--max-iters", "5", "--out", workdir / "d.mln")
        assert code == EXIT_OK

    def test_missing_file_is_validation_error(self, workdir):
        code = run("learn", "--mln", workdir / "nope.mln",
                   "--db", workdir / "train.db", "--out", workdir / "o.mln")
        assert code == EXIT_VALIDATION

    def test_bad_mln_is_validation_error(self, workdir):
        (workdir / "bad.mln").write_text("P(d)\n1.0 P(x) =>\n")
        code = run("learn", "--mln", workdir / "bad.mln",
                   "--db", workdir / "train.db", "--out", workdir / "o.mln")
        assert code == EXIT_VALIDATION


class TestInfer:
    def test_prints_marginals(self, workdir, capsys):
        code = run("infer", "--mln", workdir / "model.mln",
                   "--db", workdir / "train.db", "--query", "Affordance",
                   "--method", "exact")
        assert code == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 4
        for line in lines:
            atom, prob = line.split("\t")
            assert atom.startswith("Affordance(")
            assert 0.0 <= float(prob) <= 1.0

    def test_grounding_cap_exit_code(self, workdir, monkeypatch):
        monkeypatch.setenv("MLNCLA_GROUNDING_CAP", "3")
        code = run("infer", "--mln", workdir / "model.mln",
                   "--db", workdir / "train.db", "--query", "Affordance")
        assert code == EXIT_RESOURCE


class TestKnowledgeCommands:
    def test_init_and_cla_step(self, workdir):
        kl_path = workdir / "kl.json"
        assert run("init-kl", "--mln", workdir / "model.mln",
                   "--out", kl_path) == EXIT_OK
        out_path = workdir / "kl2.json"
        (workdir / "new.db").write_text(CUTLERY_DB +
                                        "SharpEdge(O3)\nAffordance(O3, Cutting)\n")
        assert run("cla-step", "--kl", kl_path, "--db", workdir / "new.db",
                   "--strategy", "balanced", "--max-iters", "50",
                   "--out", out_path) == EXIT_OK
        kl = deserialize(out_path.read_text())
        assert kl.categories
        assert any(t.z > 0 for c in kl.categories for t in c.triplets)

    def test_fully_known_input_needs_allow_known(self, workdir):
        kl_path = workdir / "kl.json"
        run("init-kl", "--mln", workdir / "model.mln",
            "--db", workdir / "train.db", "--out", kl_path)
        args = ["cla-step", "--kl", kl_path, "--db", workdir / "train.db",
                "--strategy", "naive", "--max-iters", "20",
                "--out", workdir / "kl3.json"]
        assert run(*args) == EXIT_VALIDATION
        assert run(*args, "--allow-known") == EXIT_OK

    def test_corrupt_kl_is_validation_error(self, workdir):
        (workdir / "bad.json").write_text("{broken")
        code = run("cla-step", "--kl", workdir / "bad.json",
                   "--strategy", "naive", "--db", workdir / "train.db",
                   "--out", workdir / "o.json")
        assert code == EXIT_VALIDATION


class TestGenDataAndExperiment:
    def test_gen_data(self, tmp_path):
        code = run("gen-data", "--seed", 5, "--train-objects", 6,
                   "--test-objects", 3, "--out-dir", tmp_path / "data")
        assert code == EXIT_OK
        for name in ("model.mln", "train.db", "test.db"):
            assert (tmp_path / "data" / name).exists()

    def test_experiment_constants(self, tmp_path):
        assert run("gen-data", "--seed", 5, "--train-objects", 6,
                   "--test-objects", 3, "--out-dir", tmp_path / "data") == EXIT_OK
        code = run("experiment", "constants", "--data-dir", tmp_path / "data",
                   "--runs", 1, "--steps", 2, "--max-iters", 40,
                   "--burn-in", 100, "--samples", 1000,
                   "--out-dir", tmp_path / "results")
        assert code == EXIT_OK
        for name in ("per_run.csv", "aggregate.csv", "trajectories.csv"):
            assert (tmp_path / "results" / name).exists()
