"""Command-line front-end: config parsing, command determinism, exit codes."""

import json
import shutil
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from gdnet.cli import (
    ConfigError,
    cmd_degrade,
    cmd_synth,
    main,
    parse_config,
    worker_count,
)
from gdnet.imaging.manifest import read_manifest, sr_path


def _tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


def _write_config(path, **kw):
    cfg = {"manifest": "m.jsonl", "out": "run"}
    cfg.update(kw)
    Path(path).write_text(json.dumps(cfg), encoding="utf-8")
    return path


class TestParseConfig:
    def test_paper_preset_materializes_published_settings(self, tmp_path):
        p = _write_config(tmp_path / "c.json", preset="paper", scale=4)
        cfg = parse_config(p)
        assert cfg["model"]["embed_dim"] == 96
        assert cfg["model"]["window"] == 8
        assert cfg["model"]["heads"] == 6

    def test_flag_overrides_file_seed(self, tmp_path):
        p = _write_config(tmp_path / "c.json", seed=1)
        assert parse_config(p, {"seed": 7})["seed"] == 7
        assert parse_config(p)["seed"] == 1

    def test_none_override_keeps_file_value(self, tmp_path):
        p = _write_config(tmp_path / "c.json", seed=5)
        assert parse_config(p, {"seed": None})["seed"] == 5

    def test_invalid_scale_rejected(self, tmp_path):
        p = _write_config(tmp_path / "c.json", scale=5)
        with pytest.raises(ConfigError, match="scale"):
            parse_config(p)

    def test_unknown_key_named(self, tmp_path):
        p = _write_config(tmp_path / "c.json", n_layers=3)
        with pytest.raises(ConfigError, match="n_layers"):
            parse_config(p)

    def test_type_mismatch_named(self, tmp_path):
        p = _write_config(tmp_path / "c.json", steps="many")
        with pytest.raises(ConfigError, match="steps"):
            parse_config(p)

    def test_bool_is_not_an_int(self, tmp_path):
        p = _write_config(tmp_path / "c.json", batch_size=True)
        with pytest.raises(ConfigError, match="batch_size"):
            parse_config(p)

    def test_missing_required_named(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"manifest": "m.jsonl"}))
        with pytest.raises(ConfigError, match="out"):
            parse_config(p)

    def test_unknown_preset_rejected(self, tmp_path):
        p = _write_config(tmp_path / "c.json", preset="huge")
        with pytest.raises(ConfigError, match="preset"):
            parse_config(p)

    def test_unknown_stage_rejected(self, tmp_path):
        p = _write_config(tmp_path / "c.json", stage="4")
        with pytest.raises(ConfigError, match="stage"):
            parse_config(p)

    def test_int_promotes_to_float(self, tmp_path):
        p = _write_config(tmp_path / "c.json", base_lr=1)
        assert parse_config(p)["base_lr"] == 1.0

    def test_malformed_json_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            parse_config(p)


class TestWorkerCount:
    def test_env_caps_workers(self, monkeypatch):
        monkeypatch.setenv("GDNET_THREADS", "3")
        assert worker_count() == 3

    def test_default_is_positive(self, monkeypatch):
        monkeypatch.delenv("GDNET_THREADS", raising=False)
        assert worker_count() >= 1

    def test_bad_env_rejected(self, monkeypatch):
        monkeypatch.setenv("GDNET_THREADS", "lots")
        with pytest.raises(ConfigError, match="GDNET_THREADS"):
            worker_count()
        monkeypatch.setenv("GDNET_THREADS", "0")
        with pytest.raises(ConfigError, match="GDNET_THREADS"):
            worker_count()


class TestSynth:
    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cmd_synth(a, n=4, seed=1, size=32) == 0
        assert cmd_synth(b, n=4, seed=1, size=32) == 0
        assert _tree_bytes(a) == _tree_bytes(b)

    def test_different_seed_different_pixels(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        cmd_synth(a, n=1, seed=1, size=32)
        cmd_synth(b, n=1, seed=2, size=32)
        assert (a / "hr/00000.pgm").read_bytes() != (b / "hr/00000.pgm").read_bytes()

    def test_attribute_ratio_one_to_one_to_one(self, tmp_path):
        out = tmp_path / "d"
        cmd_synth(out, n=12, seed=3, size=32)
        counts = Counter(r.attr for r in read_manifest(out / "manifest.jsonl"))
        assert counts == {"normal": 4, "fog": 4, "lowlight": 4}


class TestDegrade:
    def test_worker_count_invariant_outputs(self, dataset, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for dst in (a, b):
            shutil.copytree(dataset, dst, ignore=shutil.ignore_patterns(
                "guide", "lr_*"))
        cmd_degrade(a / "manifest.jsonl", scale=4, mode="BI", seed=9, workers=1)
        cmd_degrade(b / "manifest.jsonl", scale=4, mode="BI", seed=9, workers=3)
        assert _tree_bytes(a) == _tree_bytes(b)

    def test_manifest_updated_with_mode_and_scale(self, dataset, tmp_path):
        dst = tmp_path / "bd"
        shutil.copytree(dataset, dst, ignore=shutil.ignore_patterns(
            "guide", "lr_*"))
        cmd_degrade(dst / "manifest.jsonl", scale=8, mode="BD", seed=4, workers=1)
        recs = read_manifest(dst / "manifest.jsonl")
        assert all(r.mode == "BD" and r.scale == 8 for r in recs)
        assert (dst / "lr_bd_x8" / "00000.pgm").exists()


class TestTrainCommand:
    def _config(self, tmp_path, dataset, **kw):
        cfg = {
            "manifest": str(dataset / "manifest.jsonl"),
            "out": str(tmp_path / "run"),
            "preset": "tiny",
            "scale": 4,
            "seed": 3,
            "steps": 2,
            "batch_size": 2,
        }
        cfg.update(kw)
        path = tmp_path / "train.json"
        path.write_text(json.dumps(cfg), encoding="utf-8")
        return path

    def test_single_stage_outputs(self, dataset, tmp_path):
        cfg = self._config(tmp_path, dataset)
        assert main(["train", "--config", str(cfg), "--stage", "1"]) == 0
        run = tmp_path / "run"
        assert (run / "stage1.ckpt").exists()
        assert (run / "final.ckpt").exists()
        log = (run / "loss_log.csv").read_text().splitlines()
        assert log[0] == "step,stage,lr,loss"
        assert len(log) == 3
        assert (run / "loss_curve.png").read_bytes()[:4] == b"\x89PNG"

    def test_rerun_bit_identical_checkpoint(self, dataset, tmp_path):
        cfg = self._config(tmp_path, dataset)
        main(["train", "--config", str(cfg), "--stage", "1"])
        first = (tmp_path / "run" / "final.ckpt").read_bytes()
        main(["train", "--config", str(cfg), "--stage", "1"])
        assert (tmp_path / "run" / "final.ckpt").read_bytes() == first

    def test_init_checkpoint_chains_stages(self, dataset, tmp_path):
        cfg1 = self._config(tmp_path, dataset)
        main(["train", "--config", str(cfg1), "--stage", "1"])
        stage1 = tmp_path / "run" / "stage1.ckpt"
        cfg2 = self._config(tmp_path, dataset,
                            init_checkpoint=str(stage1),
                            out=str(tmp_path / "run2"))
        assert main(["train", "--config", str(cfg2), "--stage", "2nc"]) == 0
        assert (tmp_path / "run2" / "stage2nc.ckpt").exists()

    def test_bad_config_exits_nonzero(self, dataset, tmp_path, capsys):
        cfg = self._config(tmp_path, dataset, scale=5)
        assert main(["train", "--config", str(cfg), "--stage", "1"]) == 1
        assert "scale" in capsys.readouterr().err


class TestInferEval:
    def test_missing_checkpoint_errors(self, dataset, tmp_path, capsys):
        rc = main([
            "infer", "--checkpoint", str(tmp_path / "no.ckpt"),
            "--manifest", str(dataset / "manifest.jsonl"),
            "--out", str(tmp_path / "sr"),
        ])
        assert rc == 1
        assert "missing checkpoint" in capsys.readouterr().err

    def test_infer_then_eval_round(self, dataset, tmp_path):
        cfg = {
            "manifest": str(dataset / "manifest.jsonl"),
            "out": str(tmp_path / "run"),
            "preset": "tiny", "scale": 4, "seed": 0,
            "steps": 1, "batch_size": 1,
        }
        cfg_path = tmp_path / "t.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["train", "--config", str(cfg_path), "--stage", "1"]) == 0
        sr = tmp_path / "sr"
        assert main([
            "infer", "--checkpoint", str(tmp_path / "run" / "final.ckpt"),
            "--manifest", str(dataset / "manifest.jsonl"),
            "--out", str(sr),
        ]) == 0
        pgms = sorted(sr.glob("*.pgm"))
        assert len(pgms) == 6
        report = tmp_path / "report.csv"
        assert main([
            "eval", "--manifest", str(dataset / "manifest.jsonl"),
            "--sr", str(sr), "--report", str(report),
        ]) == 0
        assert report.exists()
        assert report.with_suffix(".png").exists()

    def test_eval_missing_sr_nonzero_exit(self, dataset, tmp_path):
        sr = tmp_path / "sr_partial"
        sr.mkdir()
        records = read_manifest(dataset / "manifest.jsonl")
        for rec in records[:-1]:
            shutil.copy(dataset / rec.thermal, sr_path(sr, rec))
        report = tmp_path / "report.csv"
        rc = main([
            "eval", "--manifest", str(dataset / "manifest.jsonl"),
            "--sr", str(sr), "--report", str(report),
        ])
        assert rc == 1
        assert "missing:" in report.read_text()


class TestParser:
    def test_unknown_command_exits(self):
        with pytest.raises(SystemExit):
            main(["explode"])

    def test_degrade_validates_choices(self):
        with pytest.raises(SystemExit):
            main(["degrade", "--manifest", "m", "--scale", "3",
                  "--mode", "BI", "--seed", "0"])

    def test_train_stage_choices(self):
        with pytest.raises(SystemExit):
            main(["train", "--config", "c.json", "--stage", "9"])
