import subprocess
import sys

import numpy as np
import pytest

from influence_partition.experiment import (
    ALL_METHODS,
    ConfigError,
    ExperimentConfig,
    emit_csv,
    parse_config_file,
    read_csv,
    run_experiment,
    ResultRow,
)
from influence_partition.graph import save_edge_list

from conftest import random_lt_graph


@pytest.fixture
def small_dataset(tmp_path):
    g = random_lt_graph(31415, n=10, e_max=20)
    path = tmp_path / "small.txt"
    save_edge_list(g, path)
    return path


def small_config(small_dataset, tmp_path, **kw):
    defaults = dict(
        dataset=str(small_dataset),
        weighting="explicit",
        m_values=(1, 2),
        methods=("random", "mamkcp", "greedy"),
        delta_t=0.5,
        mc_runs=60,
        grad_samples=10,
        master_seed=5,
        repetitions=2,
        output=str(tmp_path / "out.csv"),
        timing=False,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestConfig:
    def test_unknown_method_rejected(self, small_dataset, tmp_path):
        with pytest.raises(ConfigError, match="unknown methods"):
            small_config(small_dataset, tmp_path, methods=("bogus",))

    def test_bad_delta_t_rejected(self, small_dataset, tmp_path):
        with pytest.raises(ConfigError):
            small_config(small_dataset, tmp_path, delta_t=0.3)

    def test_parse_config_file(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(
            "# comment\n"
            "dataset = collab-379\n"
            "m_values = 1,2,3\n"
            "methods = sandwich, random\n"
            "mc_runs = 100\n"
            "timing = off\n"
        )
        parsed = parse_config_file(cfg_file)
        assert parsed["m_values"] == (1, 2, 3)
        assert parsed["methods"] == ("sandwich", "random")
        assert parsed["timing"] is False

    def test_parse_rejects_unknown_key(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("no_such_key = 3\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config_file(cfg_file)


class TestRunExperiment:
    def test_rows_cover_matrix_and_sort(self, small_dataset, tmp_path):
        cfg = small_config(small_dataset, tmp_path)
        rows = run_experiment(cfg)
        assert len(rows) == 2 * 3 * 2
        keys = [(r.method, r.m, r.repetition) for r in rows]
        assert keys == sorted(keys)

    def test_m1_rows_agree_across_methods(self, small_dataset, tmp_path):
        cfg = small_config(small_dataset, tmp_path)
        rows = [r for r in run_experiment(cfg) if r.m == 1]
        by_rep = {}
        for r in rows:
            by_rep.setdefault(r.repetition, []).append(r.f_ic)
        for vals in by_rep.values():
            assert max(vals) - min(vals) < 1e-9  # same partition, shared scoring stream

    def test_byte_identical_rerun(self, small_dataset, tmp_path):
        cfg = small_config(small_dataset, tmp_path)
        emit_csv(run_experiment(cfg), tmp_path / "a.csv")
        emit_csv(run_experiment(cfg), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_sandwich_rows_dominate_greedy_rows(self, small_dataset, tmp_path):
        cfg = small_config(small_dataset, tmp_path, methods=("sandwich", "greedy"),
                           m_values=(2,), mc_runs=150)
        rows = run_experiment(cfg)
        by = {(r.method, r.repetition): r for r in rows}
        for rep in range(cfg.repetitions):
            s = by[("sandwich", rep)]
            gr = by[("greedy", rep)]
            assert s.ratio_upper is not None and s.ratio_lower_value is not None
            assert s.f_ic >= gr.f_ic - 3.0 * np.hypot(s.std_err, gr.std_err)


class TestCsv:
    def test_empty_rows_header_only(self, tmp_path):
        emit_csv([], tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text().strip() == (
            "method,m,repetition,f_ic,std_err,wall_ms,ratio_upper,ratio_lower_value"
        )

    def test_single_row_two_lines(self, tmp_path):
        emit_csv([ResultRow("random", 1, 0, 1.5, 0.1, 12.0)], tmp_path / "one.csv")
        assert len((tmp_path / "one.csv").read_text().splitlines()) == 2

    def test_round_trip(self, tmp_path):
        rows = [
            ResultRow("sandwich", 2, 0, 123.456789, 0.0123456, 0.0, 0.875, 50.25),
            ResultRow("random", 1, 1, 3.25, 0.5, 0.0),
        ]
        emit_csv(rows, tmp_path / "rt.csv")
        back = read_csv(tmp_path / "rt.csv")
        assert back[0].method == "sandwich"
        assert back[0].f_ic == pytest.approx(123.456789, rel=1e-5)
        assert back[0].ratio_upper == pytest.approx(0.875)
        assert back[1].ratio_upper is None


class TestCli:
    def test_end_to_end(self, small_dataset, tmp_path):
        out = tmp_path / "cli.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "influence_partition.cli",
             "--dataset", str(small_dataset), "--weighting", "explicit",
             "--m", "1,2", "--method", "random,mamkcp",
             "--mc-runs", "50", "--grad-samples", "10", "--repetitions", "1",
             "--seed", "3", "--out", str(out), "--no-timing"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        rows = read_csv(out)
        assert len(rows) == 4

    def test_config_error_exit_code(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "influence_partition.cli",
             "--dataset", "does-not-exist.txt", "--m", "1"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
        assert "error" in proc.stderr

    def test_unknown_method_error(self, small_dataset, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "influence_partition.cli",
             "--dataset", str(small_dataset), "--method", "nope"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
