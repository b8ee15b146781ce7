"""Command-line contract: exit codes, report formats, determinism."""

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from causalcov import ExperimentConfig, load_config
from causalcov.cli import SWEEP_COLUMNS, VERIFY_COLUMNS, main


def write_config(path, payload) -> str:
    path.write_text(json.dumps(payload))
    return str(path)


def base_config(**overrides) -> dict:
    cfg = {
        "model": {"type": "var", "a_lags": [[[0.5]]], "h": [[1.0]]},
        "T": 24,
        "k": 1,
        "replicates": 400,
        "seed": 13,
        "events": ["chernoff-direction"],
    }
    cfg.update(overrides)
    return cfg


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# config parsing


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg_path = write_config(tmp_path / "c.json", base_config())
        config = load_config(cfg_path)
        again = ExperimentConfig.from_dict(config.to_dict())
        assert again.to_dict() == config.to_dict()

    def test_unknown_key_rejected(self, tmp_path):
        cfg = base_config(bogus=1)
        with pytest.raises(Exception, match="unknown config keys"):
            load_config(write_config(tmp_path / "c.json", cfg))

    def test_operator_model(self, tmp_path):
        cfg = {
            "model": {
                "type": "operator",
                "d": 1,
                "p": 1,
                "k": 1,
                "blocks": [[[[1.0]]], [[[0.3]], [[1.0]]]],
            },
            "T": 2,
            "replicates": 16,
            "events": ["lower-tail-eigenvalue"],
        }
        config = load_config(write_config(tmp_path / "c.json", cfg))
        assert config.k == 1 and config.T == 2
        spec = config.process_spec()
        assert spec.operator().n_blocks == 2

    def test_auto_k_resolves_to_excitation_index(self, tmp_path):
        cfg = base_config(
            model={
                "type": "var",
                "a_lags": [[[0.0, 0.0], [1.0, 0.0]]],
                "h": [[1.0], [0.0]],
            },
            k="auto",
        )
        config = load_config(write_config(tmp_path / "c.json", cfg))
        assert config.k == 2 and config.k_auto

    def test_event_validation(self, tmp_path):
        with pytest.raises(Exception, match="unknown event"):
            load_config(write_config(tmp_path / "c.json", base_config(events=["nope"])))
        with pytest.raises(Exception, match="requires a 'q'"):
            load_config(
                write_config(
                    tmp_path / "c.json", base_config(events=[{"event": "upper-tail-opnorm"}])
                )
            )


# ---------------------------------------------------------------------------
# subcommands


class TestBounds:
    def test_report_contents(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config(T=10, k=3))
        out = tmp_path / "out"
        assert main(["bounds", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "bounds.json").read_text())
        assert report["effective_horizon"] == 9
        assert "truncation_notice" in report
        assert report["kappa"] == 1
        assert report["psi_k"] > 0.0
        assert report["anticonc_bound"] > 0.0
        assert report["gamma_k_spectrum"]
        assert report["c_sys"] > 1.0
        assert "arma_corollary_bound" in report
        assert (out / "bounds.meta.json").exists()

    def test_iid_psi_is_one(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.json",
            base_config(model={"type": "var", "a_lags": [[[0.0]]], "h": [[1.0]]}),
        )
        out = tmp_path / "out"
        assert main(["bounds", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "bounds.json").read_text())
        assert report["psi_k"] == pytest.approx(1.0, abs=1e-8)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config())
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["bounds", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["bounds", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "bounds.json").read_bytes() == (out2 / "bounds.json").read_bytes()

    def test_insufficient_excitation_exit_2(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.json",
            base_config(
                model={
                    "type": "var",
                    "a_lags": [[[0.0, 0.0], [0.0, 0.0]]],
                    "h": [[1.0], [0.0]],
                },
                k="auto",
            ),
        )
        assert main(["bounds", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


class TestVerify:
    def test_pass_and_column_order(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config())
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
        with open(out / "verify.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert tuple(header) == VERIFY_COLUMNS
        rows = read_rows(out / "verify.csv")
        assert len(rows) == 1
        assert rows[0]["event"] == "chernoff-direction"
        assert rows[0]["certified"] == "true"
        summary = json.loads((out / "verify.json").read_text())
        assert summary["overall_pass"] is True

    def test_negative_control_exit_1(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config(bound_scale=1e-12))
        out = tmp_path / "out"
        assert main(["verify", "--config", cfg, "--out", str(out)]) == 1
        summary = json.loads((out / "verify.json").read_text())
        assert summary["overall_pass"] is False

    def test_thread_cap_determinism(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path / "c.json", base_config(replicates=2100))
        outs = []
        for threads, name in (("1", "t1"), ("4", "t4")):
            monkeypatch.setenv("CAUSALCOV_THREADS", threads)
            out = tmp_path / name
            assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
            outs.append(out)
        assert (outs[0] / "verify.csv").read_bytes() == (outs[1] / "verify.csv").read_bytes()
        assert (outs[0] / "verify.json").read_bytes() == (outs[1] / "verify.json").read_bytes()

    def test_seed_and_replicates_overrides(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config())
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        main(["verify", "--config", cfg, "--out", str(out1), "--seed", "99", "--replicates", "128"])
        main(["verify", "--config", cfg, "--out", str(out2), "--seed", "99", "--replicates", "128"])
        rows = read_rows(out1 / "verify.csv")
        assert rows[0]["replicates"] == "128"
        assert (out1 / "verify.csv").read_bytes() == (out2 / "verify.csv").read_bytes()


class TestIdentify:
    def test_report_and_csv(self, tmp_path):
        # 60 replicates: enough for a zero-hit Wilson edge to clear the 0.2 budget
        cfg = write_config(tmp_path / "c.json", base_config(T=512, replicates=60))
        out = tmp_path / "out"
        assert main(["identify", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "identify.json").read_text())
        assert report["burnin_satisfied"] is True
        assert report["certified"] is True
        assert report["exceedance"]["hits"] == 0
        rows = read_rows(out / "identify.csv")
        assert len(rows) == 60
        assert float(rows[0]["op_error"]) > 0.0

    def test_burnin_unsatisfied_omits_certification(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config(T=16, replicates=10))
        out = tmp_path / "out"
        assert main(["identify", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "identify.json").read_text())
        assert report["burnin_satisfied"] is False
        assert "certified" not in report


class TestSweep:
    def test_one_by_one_grid_matches_verify(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config(grid={"T": [24]}))
        out_s, out_v = tmp_path / "s", tmp_path / "v"
        assert main(["sweep", "--config", cfg, "--out", str(out_s)]) == 0
        cfg_v = write_config(tmp_path / "cv.json", base_config())
        assert main(["verify", "--config", cfg_v, "--out", str(out_v)]) == 0
        srow = read_rows(out_s / "sweep.csv")[0]
        vrow = read_rows(out_v / "verify.csv")[0]
        for col in VERIFY_COLUMNS:
            assert srow[col] == vrow[col]

    def test_grid_shape_and_psi_column(self, tmp_path):
        cfg = write_config(
            tmp_path / "c.json",
            base_config(T=24, events=["lower-tail-eigenvalue"], replicates=64,
                        grid={"T": [12, 24], "k": [1, 2, 4]}),
        )
        out = tmp_path / "out"
        main(["sweep", "--config", cfg, "--out", str(out)])
        with open(out / "sweep.csv", newline="") as fh:
            header = next(csv.reader(fh))
        assert tuple(header) == SWEEP_COLUMNS
        rows = read_rows(out / "sweep.csv")
        assert len(rows) == 6
        # identical diagonal blocks here, so psi_k >= 1/k on every row
        for row in rows:
            assert float(row["psi_k"]) >= 1.0 / float(row["k"]) - 1e-9


class TestSimulate:
    def test_paths_csv(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config(replicates=3, T=6))
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        rows = read_rows(out / "simulate.csv")
        assert len(rows) == 18
        assert set(rows[0]) == {"replicate", "t", "x0"}
        again = tmp_path / "again"
        main(["simulate", "--config", cfg, "--out", str(again)])
        assert (out / "simulate.csv").read_bytes() == (again / "simulate.csv").read_bytes()


class TestErrors:
    def test_missing_config_exit_2(self, tmp_path):
        assert main(["verify", "--config", str(tmp_path / "none.json")]) == 2

    def test_invalid_json_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["verify", "--config", str(bad)]) == 2

    def test_unknown_key_exit_2(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config(typo_key=True))
        assert main(["verify", "--config", cfg]) == 2

    def test_horizon_shorter_than_block_exit_2(self, tmp_path):
        cfg = write_config(tmp_path / "c.json", base_config(T=2, k=4))
        assert main(["bounds", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "causalcov.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "causalcov" in proc.stdout
