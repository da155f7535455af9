import json

import numpy as np
import pytest

from src.constants import FUTURE_STEPS
from src.ensemble import (
    aggregate_scores,
    decode_record,
    predict_scenes,
    read_predictions,
    rip_predict,
    score_candidates,
    score_under_model,
    write_predictions,
)
from src.errors import ConfigurationError, FormatError, IncompatibleModelsError, ShapeError
from src.model import TrajectoryModel


@pytest.fixture
def raster(tiny_model_cfg, rng):
    return rng.random((tiny_model_cfg.channels, 16, 16))


@pytest.fixture
def ensemble(tiny_model_cfg):
    return [TrajectoryModel(tiny_model_cfg, seed=s) for s in (1, 2, 3)]


# --- aggregate_scores --------------------------------------------------------------

def test_worst_case_aggregation_example():
    aggregated, chosen = aggregate_scores(np.array([[-1.0, -2.0], [-3.0, -2.0]]))
    np.testing.assert_array_equal(aggregated, [-2.0, -3.0])
    assert chosen == 0
    assert -aggregated[chosen] == 2.0


def test_min_selection_and_unknown_names():
    scores = np.array([[-1.0, -2.0], [-3.0, -2.0]])
    assert aggregate_scores(scores, selection="min")[1] == 1
    with pytest.raises(ConfigurationError):
        aggregate_scores(scores, aggregator="mean")
    with pytest.raises(ConfigurationError):
        aggregate_scores(scores, selection="median")
    with pytest.raises(ShapeError):
        aggregate_scores(np.zeros((0, 2)))


def test_ties_pick_the_lowest_index():
    assert aggregate_scores(np.array([[-1.0], [-1.0], [-1.0]]))[1] == 0


@pytest.mark.parametrize("seed", range(5))
def test_aggregation_properties(seed):
    r = np.random.default_rng(seed)
    scores = r.standard_normal((6, 3))
    aggregated, chosen = aggregate_scores(scores)

    # a candidate that dominates another under every member aggregates at least as high
    dominated = scores[0] - np.abs(r.standard_normal(3))
    agg2, _ = aggregate_scores(np.vstack([scores[:1], dominated[None]]))
    assert agg2[0] >= agg2[1]

    # an extra member can only lower each aggregate
    widened, _ = aggregate_scores(np.hstack([scores, r.standard_normal((6, 1))]))
    assert np.all(widened <= aggregated)

    # strictly increasing transforms keep the choice
    assert aggregate_scores(np.exp(scores))[1] == chosen
    assert aggregate_scores(3.0 * scores - 1.0)[1] == chosen


# --- scoring ---------------------------------------------------------------------

def test_score_candidates_shapes_and_single(tiny_model_cfg, raster, rng):
    model = TrajectoryModel(tiny_model_cfg, seed=0)
    cands = rng.standard_normal((3, FUTURE_STEPS, 2))
    scores = score_candidates(model, raster, cands)
    assert scores.shape == (3,)
    assert score_under_model(model, raster, cands[1]) == pytest.approx(scores[1], abs=1e-10)


def test_mean_plan_outscores_a_shifted_plan(tiny_model_cfg, raster):
    model = TrajectoryModel(tiny_model_cfg, seed=0)
    model.head.weight.data[:] = 0.0
    model.head.bias.data[:] = [1.0, 0.5, 0.2, 0.2]
    _, mean = model.predict(raster[None])
    mean = mean.data[0]
    scores = score_candidates(model, raster, np.stack([mean, mean + 10.0]))
    assert scores[0] > scores[1]


# --- rip_predict -------------------------------------------------------------------

def test_single_model_without_samples_is_deterministic(tiny_model_cfg, raster):
    model = TrajectoryModel(tiny_model_cfg, seed=0)
    pred = rip_predict([model], raster, samples_per_model=0)
    assert pred.candidates.shape == (1, FUTURE_STEPS, 2)
    assert pred.chosen_index == 0
    np.testing.assert_allclose(pred.confidences, [1.0])
    _, mean = model.predict(raster[None])
    np.testing.assert_allclose(pred.chosen, mean.data[0], atol=1e-12)
    assert pred.scene_uncertainty == pytest.approx(-pred.aggregated[0])


def test_pool_size_and_sources(ensemble, raster):
    pred = rip_predict(ensemble, raster, samples_per_model=2, seed=4)
    assert pred.candidates.shape == (9, FUTURE_STEPS, 2)
    assert pred.per_candidate_scores.shape == (9, 3)
    assert pred.source_model.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    assert pred.chosen_index == int(np.argmax(pred.aggregated))
    assert pred.scene_uncertainty == pytest.approx(-pred.aggregated.max())
    assert pred.confidences.sum() == pytest.approx(1.0)
    np.testing.assert_array_equal(pred.aggregated, pred.per_candidate_scores.min(axis=1))


def test_rip_is_seeded(ensemble, raster):
    a = rip_predict(ensemble, raster, samples_per_model=2, seed=4)
    b = rip_predict(ensemble, raster, samples_per_model=2, seed=4)
    c = rip_predict(ensemble, raster, samples_per_model=2, seed=5)
    np.testing.assert_array_equal(a.candidates, b.candidates)
    assert not np.array_equal(a.candidates, c.candidates)


def test_identical_members_score_identically(tiny_model_cfg, raster):
    twins = [TrajectoryModel(tiny_model_cfg, seed=0), TrajectoryModel(tiny_model_cfg, seed=0)]
    pred = rip_predict(twins, raster, samples_per_model=1)
    np.testing.assert_array_equal(pred.per_candidate_scores[:, 0], pred.per_candidate_scores[:, 1])


def test_member_order_does_not_change_the_plan(ensemble, raster):
    forward = rip_predict(ensemble, raster, samples_per_model=0)
    backward = rip_predict(ensemble[::-1], raster, samples_per_model=0)
    np.testing.assert_allclose(forward.chosen, backward.chosen, atol=1e-12)
    assert forward.scene_uncertainty == pytest.approx(backward.scene_uncertainty, abs=1e-12)


def test_rip_argument_errors(tiny_model_cfg, ensemble, raster):
    with pytest.raises(ConfigurationError):
        rip_predict(ensemble, raster, samples_per_model=-1)
    with pytest.raises(IncompatibleModelsError):
        rip_predict([], raster)
    odd = TrajectoryModel(tiny_model_cfg.model_copy(update={"channels": 2}), seed=0)
    with pytest.raises(IncompatibleModelsError):
        rip_predict([ensemble[0], odd], raster)
    with pytest.raises(ShapeError):
        rip_predict(ensemble, np.stack([raster, raster]))


def test_predict_scenes_matches_per_scene_calls(ensemble, raster, rng):
    rasters = [raster, rng.random(raster.shape)]
    preds = predict_scenes(ensemble, rasters, [7, 8], samples_per_model=1, seed=2)
    again = predict_scenes(ensemble, rasters, [7, 8], samples_per_model=1, seed=2)
    assert len(preds) == 2
    for a, b in zip(preds, again):
        np.testing.assert_array_equal(a.candidates, b.candidates)
        assert a.chosen_index == b.chosen_index


# --- prediction files -----------------------------------------------------------------

def test_prediction_file_round_trip(ensemble, raster, tmp_path):
    pred = rip_predict(ensemble, raster, samples_per_model=1, seed=1)
    path = write_predictions([(11, pred), (12, pred)], tmp_path / "p.jsonl")
    records = read_predictions(path)

    assert [r.scene_id for r in records] == [11, 12]
    cset = records[0].candidates
    assert cset.size == 6
    np.testing.assert_allclose(cset.trajectories, pred.candidates, atol=1e-6)
    np.testing.assert_allclose(cset.scales, pred.scales, atol=1e-6)
    np.testing.assert_allclose(cset.confidences, pred.confidences, atol=1e-9)
    assert cset.scene_uncertainty == pytest.approx(pred.scene_uncertainty)

    first = json.loads(path.read_text().splitlines()[0])
    assert list(first) == ["scene_id", "G", "candidates", "scene_uncertainty"]


def test_malformed_prediction_records(tmp_path):
    points = [[0.0, 0.0]] * FUTURE_STEPS
    good = {"scene_id": 1, "G": 1, "candidates": [{"confidence": 1.0, "points": points}], "scene_uncertainty": 0.5}
    assert decode_record(json.dumps(good)).candidates.scales is None

    with pytest.raises(FormatError):
        decode_record(json.dumps({**good, "G": 2}))
    with pytest.raises(FormatError):
        decode_record("{not json")
    with pytest.raises(FormatError):
        decode_record(json.dumps({"scene_id": 1}))
    with pytest.raises(FormatError):
        read_predictions(tmp_path / "missing.jsonl")
