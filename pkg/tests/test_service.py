import pytest

from imgcritic import __version__
from imgcritic.client import ServiceClient, ServiceError, heatmap_to_wire, record_to_wire

from conftest import CANONICAL_RESPONSE, perfect_record_pair, random_heatmap


@pytest.fixture(scope="module")
def client():
    with ServiceClient() as c:
        yield c


SCORES = {"alignment": 0.8, "aesthetics": 0.7, "plausibility": 0.9, "overall": 0.8}


class TestVersion:
    def test_reports_name_and_version(self, client):
        assert client.get("/version") == {"name": "imgcritic", "version": __version__}


class TestRewardEndpoints:
    def test_score_reward(self, client):
        result = client.post("/rewards/score", {"prediction": SCORES, "ground_truth": SCORES})
        assert result == {"value": 4.0}

    def test_score_validation_maps_to_422(self, client):
        bad = dict(SCORES, overall=1.4)
        with pytest.raises(ServiceError) as exc:
            client.post("/rewards/score", {"prediction": bad, "ground_truth": SCORES})
        assert exc.value.status_code == 422

    def test_heatmap_reward_dimension_mismatch_is_422(self, client, rng):
        a = heatmap_to_wire(random_heatmap(rng, 4, 4))
        b = heatmap_to_wire(random_heatmap(rng, 5, 4))
        with pytest.raises(ServiceError) as exc:
            client.post(
                "/rewards/heatmap",
                {
                    "prediction_artifact": a,
                    "ground_truth_artifact": b,
                    "prediction_misalignment": a,
                    "ground_truth_misalignment": a,
                },
            )
        assert exc.value.status_code == 422
        assert "dimensions" in str(exc.value.detail)

    def test_grounding_blank_rules(self, client):
        result = client.post("/rewards/grounding", {})
        assert result["artifact"]["edge_case"] == "blank_match"
        assert result["value"] == 1.0
        result = client.post("/rewards/grounding", {"artifact_boxes": [[0, 0, 1, 1]]})
        assert result["artifact"]["edge_case"] == "blank_mismatch"
        assert result["value"] == 0.5

    def test_total_reward_perfect_pair(self, client):
        pred, gt = perfect_record_pair()
        result = client.post(
            "/rewards/total",
            {"prediction": record_to_wire(pred), "ground_truth": record_to_wire(gt)},
        )
        assert result["total"] == 7.0
        assert result["grounding"]["value"] == 1.0

    def test_batch_matches_single(self, client):
        pred, gt = perfect_record_pair()
        batch = client.post(
            "/rewards/batch",
            {"predictions": [record_to_wire(pred)], "ground_truth": [record_to_wire(gt)]},
        )
        single = client.post(
            "/rewards/total",
            {"prediction": record_to_wire(pred), "ground_truth": record_to_wire(gt)},
        )
        assert batch == [single]


class TestMetricEndpoints:
    def test_plcc_and_srcc(self, client):
        assert client.post("/metrics/plcc", {"xs": [1, 2, 3], "ys": [3, 2, 1]}) == {"value": -1.0}
        assert client.post("/metrics/srcc", {"xs": [1, 2, 3], "ys": [2, 5, 9]}) == {"value": 1.0}

    def test_heatmap_metric_dispatch(self, client, rng):
        pred = heatmap_to_wire(random_heatmap(rng, 8, 8))
        gt = heatmap_to_wire(random_heatmap(rng, 8, 8, sparse=True))
        for metric in ("mse", "cc", "kld", "sim", "nss", "auc_judd"):
            value = client.post(
                "/metrics/heatmap",
                {"metric": metric, "prediction": pred, "ground_truth": gt},
            )["value"]
            assert isinstance(value, float)

    def test_unknown_metric_rejected(self, client, rng):
        h = heatmap_to_wire(random_heatmap(rng, 2, 2))
        with pytest.raises(ServiceError) as exc:
            client.post(
                "/metrics/heatmap", {"metric": "emd", "prediction": h, "ground_truth": h}
            )
        assert exc.value.status_code == 422

    def test_evaluate_identical_dataset(self, client):
        pred, gt = perfect_record_pair()
        report = client.post(
            "/metrics/evaluate",
            {"predictions": [record_to_wire(pred)], "ground_truth": [record_to_wire(gt)]},
        )
        # correlations undefined on a single record; errors say so
        assert report["record_count"] == 1
        assert report["heatmaps"]["artifact"]["mse_all"] == 0.0
        assert any("at least 2" in e for e in report["errors"])


class TestParseEndpoint:
    def test_canonical_fixture(self, client):
        parsed = client.post("/parse", {"text": CANONICAL_RESPONSE, "strict": True})
        assert parsed["scores"] == SCORES
        assert parsed["proposed_regions"] == [
            [12.0, 34.0, 156.0, 198.0],
            [200.0, 40.0, 260.0, 120.0],
        ]
        assert parsed["artifact_locations"] == [[12.0, 34.0, 156.0, 198.0]]

    def test_parse_error_is_422(self, client):
        with pytest.raises(ServiceError) as exc:
            client.post("/parse", {"text": "no answer here"})
        assert exc.value.status_code == 422
        assert "answer" in str(exc.value.detail)


class TestSelectEndpoint:
    def test_select_with_weights(self, client):
        result = client.post(
            "/select",
            {
                "candidates": [SCORES, dict(SCORES, overall=0.9)],
                "weights": [0.0, 0.0, 0.0, 1.0],
            },
        )
        assert result["best_index"] == 1
        assert result["ranking"] == [1, 0]
        assert result["aggregates"] == [0.8, 0.9]

    def test_empty_candidates_rejected(self, client):
        with pytest.raises(ServiceError) as exc:
            client.post("/select", {"candidates": []})
        assert exc.value.status_code == 422


class TestGrpoDemoEndpoint:
    def test_small_run_deterministic(self, client):
        body = {
            "width": 6,
            "height": 6,
            "num_steps": 1,
            "group_size": 4,
            "iterations": 5,
            "seed": 42,
        }
        a = client.post("/grpo/demo", body)
        b = client.post("/grpo/demo", body)
        assert a == b
        assert len(a["curve"]) == 5
        assert a["mode"] == "dense"

    def test_invalid_epsilon_rejected(self, client):
        with pytest.raises(ServiceError) as exc:
            client.post("/grpo/demo", {"iterations": 1, "epsilon": 1.5})
        assert exc.value.status_code == 422
