import numpy as np
import pytest
from hypothesis import given, strategies as st

from emotrans import nn

RNG = np.random.default_rng


def _fd_grads(loss_fn, params, eps=1e-5):
    """Independent central-difference gradient oracle."""
    out = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_fn(params)
            flat[i] = orig - eps
            down = loss_fn(params)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * eps)
        out[name] = g
    return out


def _max_rel_err(a, b):
    worst = 0.0
    for name in a:
        err = np.abs(a[name] - b[name]) / np.maximum(
            np.maximum(np.abs(a[name]), np.abs(b[name])), 1e-4
        )
        worst = max(worst, float(err.max()))
    return worst


# ---------------------------------------------------------------------------
# MLP forward


def test_spec_validation():
    with pytest.raises(ValueError):
        nn.MlpSpec((4,))
    with pytest.raises(ValueError):
        nn.MlpSpec((4, 0))
    with pytest.raises(ValueError):
        nn.MlpSpec((4, 2), hidden="relu")
    with pytest.raises(ValueError):
        nn.MlpSpec((4, 2), output="sigmoid")


def test_identity_layer_passthrough():
    spec = nn.MlpSpec((3, 3))
    params = {"W0": np.eye(3), "b0": np.zeros(3)}
    x = np.array([1.5, -2.0, 0.25])
    y, _ = nn.mlp_apply(spec, params, x)
    assert np.array_equal(y, x)


def test_zero_net_tanh_outputs_zero():
    spec = nn.MlpSpec((4, 5, 2), hidden="tanh")
    params = {k: np.zeros_like(v) for k, v in nn.init_mlp_params(spec, RNG(0)).items()}
    y, _ = nn.mlp_apply(spec, params, np.ones(4))
    assert np.array_equal(y, np.zeros(2))


def test_softmax_output_normalized():
    spec = nn.MlpSpec((3, 7), output="softmax")
    params = nn.init_mlp_params(spec, RNG(3))
    y, _ = nn.mlp_apply(spec, params, RNG(4).normal(size=(5, 3)))
    assert np.all(y > 0)
    assert np.abs(y.sum(axis=1) - 1.0).max() < 1e-12


@given(st.lists(st.floats(min_value=-700, max_value=700), min_size=2, max_size=9))
def test_softmax_overflow_safe(logits):
    p = nn.softmax(np.array(logits))
    assert np.all(np.isfinite(p))
    assert abs(p.sum() - 1.0) < 1e-12


def test_scaled_tanh_bound():
    spec = nn.MlpSpec((3, 4, 1), output="scaled_tanh", output_scale=2.0)
    params = nn.init_mlp_params(spec, RNG(5))
    params["W1"] = np.full_like(params["W1"], 50.0)  # saturate
    y, _ = nn.mlp_apply(spec, params, RNG(6).normal(size=(8, 3)))
    assert np.all(np.abs(y) <= 2.0)


def test_apply_shape_mismatch():
    spec = nn.MlpSpec((3, 2))
    params = nn.init_mlp_params(spec, RNG(0))
    with pytest.raises(ValueError):
        nn.mlp_apply(spec, params, np.zeros(4))


# ---------------------------------------------------------------------------
# Backprop


def test_zero_upstream_gradient_gives_zero_grads():
    spec = nn.MlpSpec((4, 6, 3), hidden="tanh")
    params = nn.init_mlp_params(spec, RNG(1))
    y, cache = nn.mlp_apply(spec, params, RNG(2).normal(size=(5, 4)))
    grads, dx = nn.mlp_backprop(spec, params, cache, np.zeros_like(y))
    assert all(np.all(g == 0) for g in grads.values())
    assert np.all(dx == 0)


def test_single_identity_layer_weight_gradient_is_outer_product():
    spec = nn.MlpSpec((3, 2))
    params = nn.init_mlp_params(spec, RNG(7))
    x = np.array([1.0, -2.0, 3.0])
    d_out = np.array([0.5, -0.25])
    _, cache = nn.mlp_apply(spec, params, x)
    grads, dx = nn.mlp_backprop(spec, params, cache, d_out)
    assert np.allclose(grads["W0"], np.outer(x, d_out))
    assert np.allclose(grads["b0"], d_out)
    assert np.allclose(dx, params["W0"] @ d_out)


def test_backprop_matches_finite_differences_two_hidden_layers():
    spec = nn.MlpSpec((5, 8, 6, 2), hidden="tanh")
    params = nn.init_mlp_params(spec, RNG(11))
    x = RNG(12).normal(size=(4, 5))
    target = RNG(13).normal(size=(4, 2))

    def loss_fn(p):
        y, _ = nn.mlp_apply(spec, p, x)
        return float(np.sum((y - target) ** 2))

    y, cache = nn.mlp_apply(spec, params, x)
    analytic, _ = nn.mlp_backprop(spec, params, cache, 2.0 * (y - target))
    numeric = _fd_grads(loss_fn, params)
    assert _max_rel_err(analytic, numeric) < 1e-4


def test_backprop_rejects_mismatched_cache():
    spec_a = nn.MlpSpec((3, 2))
    spec_b = nn.MlpSpec((3, 4, 2))
    params_a = nn.init_mlp_params(spec_a, RNG(0))
    params_b = nn.init_mlp_params(spec_b, RNG(0))
    y, cache_b = nn.mlp_apply(spec_b, params_b, np.zeros(3))
    with pytest.raises(ValueError):
        nn.mlp_backprop(spec_a, params_a, cache_b, np.zeros(2))


# ---------------------------------------------------------------------------
# Losses


def test_focal_loss_perfect_prediction_is_zero():
    probs = np.zeros(7)
    probs[3] = 1.0
    loss, grad = nn.focal_loss(probs, 3, np.ones(7), gamma=2.0)
    assert loss == 0.0
    assert np.all(np.isfinite(grad))


def test_focal_loss_gamma_zero_is_cross_entropy():
    rng = RNG(21)
    for _ in range(50):
        probs = nn.softmax(rng.normal(size=7) * 3)
        target = int(rng.integers(7))
        loss, grad = nn.focal_loss(probs, target, np.ones(7), gamma=0.0)
        assert abs(loss - (-np.log(probs[target]))) < 1e-12
        expected = probs.copy()
        expected[target] -= 1.0
        assert np.abs(grad - expected).max() < 1e-12


def test_focal_loss_rejects_unnormalized():
    with pytest.raises(ValueError, match="normalized"):
        nn.focal_loss(np.full(7, 0.2), 0, np.ones(7), 2.0)


def test_focal_loss_gradient_matches_finite_differences():
    rng = RNG(31)
    for trial in range(20):
        logits = rng.normal(size=7) * 2
        target = int(rng.integers(7))
        alpha = rng.uniform(0.25, 4.0, size=7)
        gamma = float(rng.choice([0.0, 0.5, 1.0, 2.0, 5.0]))

        def loss_fn(p):
            return nn.focal_loss(nn.softmax(p["z"]), target, alpha, gamma)[0]

        params = {"z": logits.copy()}
        _, analytic = nn.focal_loss(nn.softmax(logits), target, alpha, gamma)
        numeric = _fd_grads(loss_fn, params)["z"]
        err = np.abs(analytic - numeric) / np.maximum(
            np.maximum(np.abs(analytic), np.abs(numeric)), 1e-4
        )
        assert err.max() < 1e-4, f"trial {trial}: {err.max()}"


def test_focal_loss_monotone_in_target_probability():
    alpha = np.full(7, 1.7)
    for gamma in (0.0, 0.5, 2.0):
        last = np.inf
        for pt in np.linspace(0.02, 0.999, 40):
            probs = np.full(7, (1 - pt) / 6)
            probs[2] = pt
            loss, _ = nn.focal_loss(probs, 2, alpha, gamma)
            assert loss <= last + 1e-15
            last = loss


def test_mse_loss_examples():
    loss, grad = nn.mse_loss(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0]))
    assert loss == 0.0
    assert np.array_equal(grad, np.zeros(3))
    loss, grad = nn.mse_loss(np.array([1.0, 0.0, 0.0]), np.zeros(3))
    assert abs(loss - 1.0 / 3.0) < 1e-15
    assert np.allclose(grad, [2.0 / 3.0, 0.0, 0.0])


def test_mse_loss_gradient_matches_finite_differences():
    rng = RNG(41)
    pred = rng.normal(size=3)
    target = rng.normal(size=3)

    def loss_fn(p):
        return nn.mse_loss(p["x"], target)[0]

    _, analytic = nn.mse_loss(pred, target)
    numeric = _fd_grads(loss_fn, {"x": pred.copy()})["x"]
    assert np.abs(analytic - numeric).max() / max(np.abs(analytic).max(), 1e-12) < 1e-6


# ---------------------------------------------------------------------------
# Adam


def test_adam_zero_gradient_leaves_params_unchanged():
    params = {"w": RNG(51).normal(size=(3, 2))}
    before = {k: v.copy() for k, v in params.items()}
    state = nn.adam_init(params)
    nn.adam_step(params, {"w": np.zeros((3, 2))}, state)
    assert np.array_equal(params["w"], before["w"])


def test_adam_first_step_magnitude_is_learning_rate():
    # with bias correction, m_hat/sqrt(v_hat) = sign(g) at t=1
    g = np.array([3.0, -0.5, 1e-3])
    params = {"w": np.zeros(3)}
    state = nn.adam_init(params, lr=1e-3)
    nn.adam_step(params, {"w": g}, state)
    # |update| = lr * |g| / (|g| + eps), i.e. lr up to an eps-sized dent
    assert np.abs(np.abs(params["w"]) - 1e-3).max() < 2e-8
    assert np.all(np.sign(params["w"]) == -np.sign(g))


def test_adam_shape_mismatch():
    params = {"w": np.zeros(3)}
    state = nn.adam_init(params)
    with pytest.raises(ValueError):
        nn.adam_step(params, {"w": np.zeros(4)}, state)


def test_adam_trajectories_are_deterministic():
    def run():
        rng = RNG(61)
        spec = nn.MlpSpec((4, 5, 2), hidden="tanh")
        params = nn.init_mlp_params(spec, rng)
        state = nn.adam_init(params, lr=3e-3)
        x = rng.normal(size=(6, 4))
        target = rng.normal(size=(6, 2))
        for _ in range(25):
            y, cache = nn.mlp_apply(spec, params, x)
            grads, _ = nn.mlp_backprop(spec, params, cache, 2 * (y - target))
            nn.adam_step(params, grads, state)
        return params

    a, b = run(), run()
    assert all(np.array_equal(a[k], b[k]) for k in a)


# ---------------------------------------------------------------------------
# gradient_check


def _linear_closure(x, target):
    def closure(params):
        resid = x @ params["w"] - target
        return float(resid @ resid), {"w": 2.0 * (x.T @ resid)}

    return closure


def test_gradient_check_linear_model_is_nearly_exact():
    rng = RNG(71)
    x = rng.normal(size=(10, 4))
    target = rng.normal(size=10)
    report = nn.gradient_check(_linear_closure(x, target), {"w": rng.normal(size=4)})
    assert report.passed
    assert report.max_rel_error < 1e-8


def test_gradient_check_catches_corrupted_gradient():
    rng = RNG(72)
    x = rng.normal(size=(10, 4))
    target = rng.normal(size=10)
    good = _linear_closure(x, target)

    def corrupted(params):
        loss, grads = good(params)
        grads["w"] = grads["w"].copy()
        grads["w"][1] *= 2.0
        return loss, grads

    report = nn.gradient_check(corrupted, {"w": rng.normal(size=4)})
    assert not report.passed


def test_gradient_check_subsamples_large_parameter_sets():
    rng = RNG(73)
    x = rng.normal(size=(4, 120))
    target = rng.normal(size=4)
    report = nn.gradient_check(
        _linear_closure(x, target), {"w": rng.normal(size=120)}, max_coords=50, seed=9
    )
    assert report.checked_coords == 50
    assert report.total_coords == 120
    assert report.passed
