import json

import numpy as np
import pytest

from imgcritic.cli import emit_report, main
from imgcritic.core import EvaluationRecord
from imgcritic.formats import decode_hmf

from conftest import (
    CANONICAL_RESPONSE,
    perfect_record_pair,
    random_heatmap,
    random_scores,
    write_manifest,
)


def run_cli(args, capsys):
    try:
        main(list(args))
        code = 0
    except SystemExit as exc:
        code = exc.code or 0
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def manifests(tmp_path):
    pred, gt = perfect_record_pair()
    pred_manifest = write_manifest(tmp_path / "pred", [pred])
    gt_manifest = write_manifest(tmp_path / "gt", [gt])
    return str(pred_manifest), str(gt_manifest)


class TestReward:
    def test_identical_records_total_seven(self, manifests, capsys):
        pred, gt = manifests
        code, out, err = run_cli(
            ["reward", "--predictions", pred, "--ground-truth", gt], capsys
        )
        assert code == 0, err
        reports = json.loads(out)
        assert reports[0]["total"] == 7.0
        assert reports[0]["grounding"]["value"] == 1.0

    def test_output_file(self, manifests, tmp_path, capsys):
        pred, gt = manifests
        out_path = tmp_path / "rewards.json"
        code, out, _ = run_cli(
            ["reward", "--predictions", pred, "--ground-truth", gt, "-o", str(out_path)],
            capsys,
        )
        assert code == 0
        assert out == ""
        assert json.loads(out_path.read_text())[0]["total"] == 7.0

    def test_missing_manifest_is_io_error(self, capsys):
        code, _, err = run_cli(
            ["reward", "--predictions", "/nope.json", "--ground-truth", "/nope.json"], capsys
        )
        assert code == 2
        assert "error:" in err


class TestMetrics:
    def test_json_report(self, manifests, capsys):
        pred, gt = manifests
        code, out, _ = run_cli(
            ["metrics", "--predictions", pred, "--ground-truth", gt], capsys
        )
        assert code == 0
        report = json.loads(out)
        assert report["heatmaps"]["artifact"]["mse_all"] == 0.0

    def test_identical_multi_record_dataset_is_perfect(self, tmp_path, capsys):
        rng = np.random.default_rng(17)
        records = [
            EvaluationRecord(
                id=f"r{i}", scores=random_scores(rng), artifact_heatmap=random_heatmap(rng, 6, 6)
            )
            for i in range(8)
        ]
        manifest = str(write_manifest(tmp_path / "both", records))
        code, out, _ = run_cli(
            ["metrics", "--predictions", manifest, "--ground-truth", manifest], capsys
        )
        assert code == 0
        report = json.loads(out)
        assert report["scores"]["average"]["plcc"] == 1.0
        assert report["heatmaps"]["artifact"]["mse_all"] == 0.0

    def test_emit_report_json_round_trip(self, manifests, capsys):
        pred, gt = manifests
        code, out, _ = run_cli(
            ["metrics", "--predictions", pred, "--ground-truth", gt], capsys
        )
        assert code == 0
        report = json.loads(out)
        assert json.loads(emit_report(report, "json")) == report
        assert emit_report(report, "json") == emit_report(json.loads(out), "json")

    def test_tsv_layout(self, manifests, capsys):
        pred, gt = manifests
        code, out, _ = run_cli(
            ["metrics", "--predictions", pred, "--ground-truth", gt, "--format", "tsv"],
            capsys,
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "type\tmse_all\tmse_gt0\tcc\tkld\tsim\tnss\tauc_judd"
        assert lines[1].startswith("artifact\t")
        assert lines[2].startswith("misalignment\t")


class TestParse:
    def test_parse_file(self, tmp_path, capsys):
        path = tmp_path / "resp.txt"
        path.write_text(CANONICAL_RESPONSE)
        code, out, _ = run_cli(["parse", str(path), "--strict"], capsys)
        assert code == 0
        parsed = json.loads(out)
        assert parsed["scores"]["plausibility"] == 0.9
        assert len(parsed["proposed_regions"]) == 2

    def test_parse_failure_exit_one(self, tmp_path, capsys):
        path = tmp_path / "resp.txt"
        path.write_text("garbage")
        code, _, err = run_cli(["parse", str(path)], capsys)
        assert code == 1
        assert "answer" in err


class TestSelect:
    def test_select_with_weights(self, tmp_path, capsys):
        path = tmp_path / "cands.json"
        path.write_text(
            json.dumps(
                [
                    {"alignment": 0.9, "aesthetics": 0.9, "plausibility": 0.9, "overall": 0.2},
                    {"alignment": 0.1, "aesthetics": 0.1, "plausibility": 0.1, "overall": 0.9},
                ]
            )
        )
        code, out, _ = run_cli(["select", str(path), "--weights", "0,0,0,1"], capsys)
        assert code == 0
        assert json.loads(out)["best_index"] == 1

    def test_bad_weights_exit_one(self, tmp_path, capsys):
        path = tmp_path / "cands.json"
        path.write_text(json.dumps([{"alignment": 1, "aesthetics": 1, "plausibility": 1, "overall": 1}]))
        code, _, err = run_cli(["select", str(path), "--weights", "1,2"], capsys)
        assert code == 1
        assert "weights" in err


class TestGrpoDemo:
    def test_small_run_with_outputs(self, tmp_path, capsys):
        curve_path = tmp_path / "curve.json"
        dump_path = tmp_path / "x0.hmf"
        code, out, _ = run_cli(
            [
                "grpo-demo", "--grid", "6x6", "--steps", "1", "--group-size", "4",
                "--iterations", "5", "--seed", "7",
                "-o", str(curve_path), "--dump-x0", str(dump_path),
            ],
            capsys,
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["mode"] == "dense"
        assert "final_region_mse" in summary
        assert len(json.loads(curve_path.read_text())["curve"]) == 5
        dumped = decode_hmf(dump_path.read_bytes())
        assert (dumped.width, dumped.height) == (6, 6)

    def test_bad_grid_exit_one(self, capsys):
        code, _, err = run_cli(["grpo-demo", "--grid", "16by16"], capsys)
        assert code == 1
        assert "grid" in err


class TestErrorMapping:
    def test_unknown_subcommand_exit_one(self, capsys):
        code, _, err = run_cli(["frobnicate"], capsys)
        assert code == 1
        assert "error:" in err

    def test_unknown_flag_exit_one(self, capsys):
        code, _, err = run_cli(["parse", "--bogus"], capsys)
        assert code == 1

    def test_help_exits_zero(self, capsys):
        code, out, _ = run_cli(["--help"], capsys)
        assert code == 0
        for sub in ("reward", "metrics", "parse", "select", "grpo-demo", "serve"):
            assert sub in out
