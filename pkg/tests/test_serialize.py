import json

import numpy as np
import pytest

import flowbench as fb
from flowbench.errors import DataError, SchemaError


def _small(kind, train):
    from flowbench.models import params_to_dict

    params = fb.default_params(kind)
    params = type(params)(**{**params_to_dict(params), "n_estimators": 6})
    return fb.train_model(train, kind, params, seed=21)


@pytest.mark.parametrize("kind", fb.MODEL_KINDS)
class TestRoundTrip:
    def test_save_load_save_byte_identical(self, kind, split_pair):
        train, _ = split_pair
        model = _small(kind, train)
        first = fb.save_model(model)
        second = fb.save_model(fb.load_model(first))
        assert first == second

    def test_round_trip_predictions_identical(self, kind, split_pair):
        train, _ = split_pair
        model = _small(kind, train)
        clone = fb.load_model(fb.save_model(model))
        rng = np.random.default_rng(5)
        X = rng.uniform(0, 20, size=(1000, 24))
        assert np.array_equal(model.predict_proba(X), clone.predict_proba(X))
        assert np.array_equal(model.predict_label(X), clone.predict_label(X))


class TestErrors:
    def test_truncated_document(self, split_pair):
        train, _ = split_pair
        text = fb.save_model(_small(fb.RANDOM_FOREST, train))
        with pytest.raises(DataError, match="parse error"):
            fb.load_model(text[: len(text) // 2])

    def test_version_mismatch(self, split_pair):
        train, _ = split_pair
        doc = json.loads(fb.save_model(_small(fb.RANDOM_FOREST, train)))
        doc["format_version"] = 99
        with pytest.raises(DataError, match="format_version"):
            fb.load_model(json.dumps(doc))

    def test_schema_mismatch(self, split_pair):
        train, _ = split_pair
        doc = json.loads(fb.save_model(_small(fb.LEVEL_BOOST, train)))
        doc["schema_version"] = "flow-99-v0"
        with pytest.raises(SchemaError):
            fb.load_model(json.dumps(doc))

    def test_unknown_kind(self, split_pair):
        train, _ = split_pair
        doc = json.loads(fb.save_model(_small(fb.RANDOM_FOREST, train)))
        doc["model_kind"] = "gradient_hedgehog"
        with pytest.raises(DataError, match="unknown model kind"):
            fb.load_model(json.dumps(doc))

    def test_metadata_round_trips(self, split_pair):
        train, _ = split_pair
        model = _small(fb.LEVEL_BOOST, train)
        clone = fb.load_model(fb.save_model(model))
        assert clone.metadata == model.metadata
        assert clone.metadata["training_mode"] == "regular"
        assert clone.metadata["lambda_l2"] == 1.0
