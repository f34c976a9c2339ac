import numpy as np
import pytest

from concertml.bundle import (
    bundle_from_json_dict,
    dumps_canonical,
    load_bundle,
    save_bundle,
)
from concertml.city_cluster import kmeans_fit
from concertml.evaluation import generate_cities
from concertml.pipeline import (
    PipelineSettings,
    bundle_predict_location,
    bundle_predict_price,
    bundle_transform,
    make_bundle,
    train_task,
)


@pytest.fixture(scope="module", params=["forest", "logistic", "svc", "mlp"])
def location_bundle(request, small_synthetic):
    params = {
        "forest": {"n_trees": 10, "max_depth": 8},
        "logistic": {"epochs": 80},
        "svc": {},
        "mlp": {"epochs": 15, "hidden_sizes": (8, 4)},
    }[request.param]
    outcome = train_task(
        small_synthetic.table,
        PipelineSettings(task="location", family=request.param, seed=3,
                         model_params=params),
    )
    kmeans = kmeans_fit(generate_cities(40, seed=2), k=5, seed=0, n_restarts=3)
    return make_bundle(outcome, data_fingerprint="abc123", kmeans=kmeans)


@pytest.fixture(scope="module", params=["constant", "sgd", "svr"])
def price_bundle(request, small_synthetic):
    params = {"constant": {}, "sgd": {"epochs": 40}, "svr": {}}[request.param]
    outcome = train_task(
        small_synthetic.table,
        PipelineSettings(task="price", family=request.param, seed=3,
                         model_params=params),
    )
    return make_bundle(outcome, data_fingerprint="def456")


def test_location_bundle_round_trip(location_bundle, small_synthetic, tmp_path):
    path = tmp_path / "bundle.json"
    save_bundle(location_bundle, path)
    loaded = load_bundle(path)

    X = bundle_transform(location_bundle, small_synthetic.table)
    before = bundle_predict_location(location_bundle, X)
    after = bundle_predict_location(loaded, X)
    assert np.array_equal(before["classes"], after["classes"])
    assert np.allclose(before["probabilities"], after["probabilities"], atol=1e-12)


def test_price_bundle_round_trip(price_bundle, small_synthetic, tmp_path):
    path = tmp_path / "bundle.json"
    save_bundle(price_bundle, path)
    loaded = load_bundle(path)
    X = bundle_transform(price_bundle, small_synthetic.table)
    before = bundle_predict_price(price_bundle, X)
    after = bundle_predict_price(loaded, X)
    assert np.allclose(before["price"], after["price"], atol=1e-12)


def test_reserialization_is_byte_stable(location_bundle, tmp_path):
    p1 = tmp_path / "b1.json"
    p2 = tmp_path / "b2.json"
    save_bundle(location_bundle, p1)
    save_bundle(load_bundle(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_price_reserialization_byte_stable(price_bundle, tmp_path):
    p1 = tmp_path / "b1.json"
    p2 = tmp_path / "b2.json"
    save_bundle(price_bundle, p1)
    save_bundle(load_bundle(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_unrecognized_version_rejected(location_bundle):
    payload = location_bundle.to_json_dict()
    payload["format_version"] = 99
    with pytest.raises(ValueError, match="version"):
        bundle_from_json_dict(payload)


def test_corrupt_bundle_rejected(tmp_path):
    path = tmp_path / "corrupt.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValueError, match="corrupt"):
        load_bundle(path)


def test_missing_bundle_file():
    with pytest.raises(FileNotFoundError):
        load_bundle("/nonexistent/bundle.json")


def test_metadata_carried(location_bundle):
    md = location_bundle.metadata
    assert md["data_fingerprint"] == "abc123"
    assert md["task"] == "location"
    assert "scores" in md and "hyperparameters" in md
    assert location_bundle.kmeans is not None


def test_canonical_dump_sorted_keys():
    text = dumps_canonical({"b": 1, "a": 2})
    assert text == '{"a":2,"b":1}\n'
