import numpy as np
import pytest

from ginvnet.models import (
    KINDS,
    ModelSpec,
    build_conv_gavg,
    build_conv_ginv,
    build_fc_gavg,
    build_fc_ginv,
    build_maron,
    build_model,
    param_count,
)
from ginvnet.permgroup import GroupError, parse_group
from ginvnet.tensor import Tensor, abs_, mean, parameters_grad_check


def dense(a, b):
    return a * b + b


def conv(k, a, b):
    return k * a * b + b


def test_fc_ginv_counts():
    assert param_count(build_fc_ginv(parse_group("Z4"), 4, 2, 2)) == 1785
    assert 1785 == dense(2, 16) + dense(16, 64) + dense(64, 8) + dense(2, 32) + dense(32, 1)
    poly = dense(1, 16) + dense(16, 64) + dense(64, 5 * 64) + dense(64, 32) + dense(32, 1)
    assert param_count(build_fc_ginv(parse_group("Z5"), 5, 1, 64)) == poly == 24033


def test_conv_ginv_counts():
    assert param_count(build_conv_ginv(parse_group("Z4"), 4, 2, 2)) == 1673
    assert 1673 == conv(3, 2, 32) + conv(1, 32, 8) + dense(2, 32) + dense(32, 32) + dense(32, 1)
    poly = conv(3, 1, 32) + conv(1, 32, 5 * 118) + dense(118, 32) + dense(32, 32) + dense(32, 1)
    assert param_count(build_conv_ginv(parse_group("Z5"), 5, 1, 118)) == poly == 24495


def test_gavg_counts():
    assert param_count(build_fc_gavg("area", parse_group("Z4"))) == 1765 == 576 + 1170 + 19
    assert param_count(build_fc_gavg("poly", parse_group("Z5"))) == 24023 == 534 + 17280 + 6176 + 33
    conv_poly = conv(3, 1, 32) + conv(1, 32, 118) + dense(5 * 118, 32) + dense(32, 1)
    assert param_count(build_conv_gavg("poly", parse_group("Z5"))) == conv_poly
    assert abs(conv_poly - 24000) <= 0.05 * 24000
    area = conv(3, 2, 32) + conv(1, 32, 2) + dense(8, 32) + dense(32, 1)
    assert param_count(build_conv_gavg("area", parse_group("Z4"))) == area == 611


def test_maron_counts_follow_feature_count():
    m = build_maron(parse_group("Z5"), 5, 1, "poly")
    f = m.features.n_features
    assert f == 51
    assert param_count(m) == dense(f, 48) + dense(48, 192) + dense(192, 32) + dense(32, 1)
    a = build_maron(parse_group("Z4"), 4, 2, "area")
    assert param_count(a) == dense(a.features.n_features, 40) + dense(40, 1)


def test_conv_ginv_rejects_non_rotation_groups():
    for spec in ("D8", "S4", "A4"):
        with pytest.raises(GroupError):
            build_conv_ginv(parse_group(spec), 4, 1, 2)


def test_degree_mismatch():
    with pytest.raises(GroupError):
        build_fc_ginv(parse_group("Z4"), 5, 1, 2)


def _all_models(spec, dtype=np.float32, n_in=1, n_mid=4, seed=0):
    g = parse_group(spec)
    kinds = [k for k in KINDS if k != "Conv1D_Ginv" or spec.startswith("Z")]
    return [build_model(ModelSpec(k, spec, g.degree, n_in, n_mid, "poly"), seed=seed, dtype=dtype) for k in kinds]


@pytest.mark.parametrize("spec", ["Z4", "Z5", "D8", "S3xS2"])
def test_models_invariant_at_init(spec):
    g = parse_group(spec)
    x = np.random.default_rng(0).uniform(-1, 1, size=(30, g.degree, 1)).astype(np.float32)
    for model in _all_models(spec):
        base = model.predict(x)
        for h in g:
            moved = model.predict(x[:, list(h.mapping)])
            assert np.all(np.abs(moved - base) <= 1e-5 * (1 + np.abs(base))), model.kind


def test_single_item_forward_is_scalar():
    for model in _all_models("Z4", n_in=2):
        x = np.random.default_rng(1).normal(size=(4, 2))
        y = model.forward(x)
        assert y.shape == ()
        assert np.isclose(y.item(), model.predict(x[None])[0], rtol=1e-5)


@pytest.mark.parametrize("kind", KINDS)
def test_end_to_end_gradcheck(kind):
    # gradients through the product layer reach 1e-8, where a 1e-6 step is rounding-bound
    model = build_model(ModelSpec(kind, "Z4", 4, 2, 2, "area"), seed=3, dtype=np.float64)
    rng = np.random.default_rng(4)
    x = rng.uniform(0, 1, size=(3, 4, 2))
    y = Tensor(rng.uniform(size=3))
    loss = lambda: mean(abs_(model.forward(x) - y))
    assert parameters_grad_check(loss, list(model.params().values()), eps=1e-4) <= 1e-4


def test_state_dict_roundtrip():
    a = build_fc_ginv(parse_group("Z4"), 4, 2, 2, seed=0)
    b = build_fc_ginv(parse_group("Z4"), 4, 2, 2, seed=1)
    x = np.random.default_rng(0).normal(size=(5, 4, 2))
    assert not np.allclose(a.predict(x), b.predict(x))
    b.load_state_dict(a.state_dict())
    np.testing.assert_array_equal(a.predict(x), b.predict(x))
    with pytest.raises(KeyError):
        b.load_state_dict({"nope": np.zeros(1)})


def test_same_seed_same_weights():
    a = build_conv_gavg("poly", parse_group("Z5"), seed=7).state_dict()
    b = build_conv_gavg("poly", parse_group("Z5"), seed=7).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_layer_plans():
    plan = build_fc_ginv(parse_group("Z4"), 4, 2, 2).layer_plan()
    assert any("SigmaPi" in s for s in plan)
    assert build_fc_gavg("area", parse_group("Z4")).layer_plan()[-1].startswith("ReynoldsAverage")
    assert build_maron(parse_group("Z4"), 4, 2, "area").layer_plan()[0].startswith("PolynomialFeatures")


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_model(ModelSpec("Transformer", "Z4", 4, 1, 2))
