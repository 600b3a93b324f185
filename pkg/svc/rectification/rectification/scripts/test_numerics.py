"""
Tests for the autograd substrate: tensors, layers, optimizer and schedules.

Run with: pytest test_numerics.py -v
"""

from hypothesis import given
from hypothesis import strategies as st
import numpy as np
import pytest

from rectifier.config import build
from rectifier.errors import ArgumentError, CheckpointError, ConfigError, DimensionError, TrainingError
from rectifier.numerics import (
    AdamW,
    Conv2d,
    LayerNorm,
    Linear,
    LrSchedule,
    Module,
    Parameter,
    Rng,
    StepDecaySchedule,
    Tensor,
    avg_pool2d,
    check_gradients,
    concat,
    conv2d,
    instance_norm,
    l1_loss,
    layer_norm,
    multi_head_attention,
    no_grad,
    one_cycle_lr,
    softmax,
    upsample_nearest2d,
)


def leaf(rng, *shape) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True)


class TestTensor:
    """Elementwise algebra and the backward pass."""

    def test_add_mul_gradients(self):
        a = Tensor(np.array([1.0, 2.0, 3.0]), requires_grad=True)
        b = Tensor(np.array([4.0, 5.0, 6.0]), requires_grad=True)
        (a * b + a).sum().backward()
        np.testing.assert_allclose(a.grad, [5.0, 6.0, 7.0])
        np.testing.assert_allclose(b.grad, [1.0, 2.0, 3.0])

    def test_broadcast_gradient_is_reduced(self):
        x = Tensor(np.ones((3, 4)), requires_grad=True)
        bias = Tensor(np.zeros(4), requires_grad=True)
        (x + bias).sum().backward()
        np.testing.assert_allclose(bias.grad, np.full(4, 3.0))

    def test_reused_node_accumulates(self):
        x = Tensor(np.array(3.0), requires_grad=True)
        (x * x * x).backward()
        assert float(x.grad) == pytest.approx(27.0)

    def test_backward_needs_scalar(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ArgumentError):
            (x * 2.0).backward()

    def test_no_grad_records_nothing(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            y = (x * 2.0).sum()
        assert not y.requires_grad

    def test_integer_input_promotes_to_float32(self):
        assert Tensor(np.arange(4)).dtype == np.float32

    def test_matmul_gradient(self, rng):
        a, b = leaf(rng, 3, 4), leaf(rng, 4, 2)
        worst = check_gradients(lambda: ((a @ b) ** 2).sum(), {"a": a, "b": b})
        assert max(worst.values()) < 1e-5

    def test_concat_routes_gradients(self):
        a = Tensor(np.ones((2, 1)), requires_grad=True)
        b = Tensor(np.ones((2, 2)), requires_grad=True)
        out = concat([a, b * 3.0], axis=-1)
        assert out.shape == (2, 3)
        out.sum().backward()
        np.testing.assert_allclose(a.grad, np.ones((2, 1)))
        np.testing.assert_allclose(b.grad, np.full((2, 2), 3.0))

    def test_indexing_gradient(self, rng):
        x = leaf(rng, 4, 5)
        worst = check_gradients(lambda: (x[1:3, ::2] * x[1:3, ::2]).sum(), {"x": x})
        assert worst["x"] < 1e-5


class TestFunctional:
    """Softmax, normalization, convolution and attention."""

    @given(st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=12))
    def test_softmax_sums_to_one(self, values):
        out = softmax(Tensor(np.array(values, dtype=np.float64))).data
        assert np.all(out >= 0.0)
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_softmax_is_shift_invariant(self, rng):
        x = rng.normal(size=(3, 5))
        np.testing.assert_allclose(softmax(Tensor(x)).data, softmax(Tensor(x + 100.0)).data, atol=1e-12)

    def test_softmax_rejects_bad_axis(self):
        with pytest.raises(ArgumentError):
            softmax(Tensor(np.ones((2, 2))), axes=3)

    def test_layer_norm_statistics(self, rng):
        x = Tensor(rng.normal(3.0, 2.0, size=(6, 16)))
        out = layer_norm(x, Tensor(np.ones(16)), Tensor(np.zeros(16))).data
        np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-4)

    def test_layer_norm_gradients(self, rng):
        x, gain, bias = leaf(rng, 4, 6), leaf(rng, 6), leaf(rng, 6)
        target = rng.normal(size=(4, 6))
        worst = check_gradients(
            lambda: ((layer_norm(x, gain, bias) - target) ** 2).sum(), {"x": x, "gain": gain, "bias": bias}
        )
        assert max(worst.values()) < 1e-4

    def test_instance_norm_normalizes_each_channel(self, rng):
        x = Tensor(rng.normal(5.0, 3.0, size=(8, 8, 3)))
        out = instance_norm(x).data
        np.testing.assert_allclose(out.mean(axis=(0, 1)), 0.0, atol=1e-9)

    def test_conv2d_output_extents(self, rng):
        x = Tensor(rng.normal(size=(9, 7, 3)))
        kernel = Tensor(rng.normal(size=(3, 3, 3, 5)))
        assert conv2d(x, kernel).shape == (9, 7, 5)
        assert conv2d(x, kernel, stride=2).shape == (5, 4, 5)

    def test_conv2d_identity_kernel(self, rng):
        x = rng.normal(size=(5, 5, 2))
        kernel = np.zeros((3, 3, 2, 2))
        kernel[1, 1] = np.eye(2)
        np.testing.assert_allclose(conv2d(Tensor(x), Tensor(kernel)).data, x)

    def test_conv2d_gradients(self, rng):
        x, kernel, bias = leaf(rng, 6, 5, 2), leaf(rng, 3, 3, 2, 3), leaf(rng, 3)
        worst = check_gradients(
            lambda: (conv2d(x, kernel, bias, stride=2) ** 2).sum(), {"x": x, "kernel": kernel, "bias": bias}
        )
        assert max(worst.values()) < 1e-4

    def test_conv2d_channel_mismatch(self, rng):
        with pytest.raises(DimensionError):
            conv2d(Tensor(np.ones((4, 4, 2))), Tensor(np.ones((3, 3, 3, 1))))

    def test_pool_and_upsample_are_adjoint_shapes(self, rng):
        x = Tensor(rng.normal(size=(4, 6, 2)))
        assert avg_pool2d(x).shape == (2, 3, 2)
        assert upsample_nearest2d(avg_pool2d(x)).shape == (4, 6, 2)

    def test_attention_gradients(self, rng):
        q, k = leaf(rng, 3, 4), leaf(rng, 5, 4)
        proj = {name: leaf(rng, 4, 4) for name in ("wq", "wk", "wv", "wo")}
        proj.update({name: leaf(rng, 4) for name in ("bq", "bk", "bv", "bo")})
        worst = check_gradients(
            lambda: (multi_head_attention(q, k, k, proj, heads=2) ** 2).sum(), {"q": q, "k": k, **proj}
        )
        assert max(worst.values()) < 1e-4

    def test_attention_rejects_indivisible_heads(self, rng):
        x = Tensor(rng.normal(size=(2, 6)))
        proj = {name: Tensor(np.eye(6)) for name in ("wq", "wk", "wv", "wo")}
        proj.update({name: Tensor(np.zeros(6)) for name in ("bq", "bk", "bv", "bo")})
        with pytest.raises(ConfigError):
            multi_head_attention(x, x, x, proj, heads=4)

    def test_l1_loss(self):
        loss = l1_loss(Tensor(np.array([1.0, -1.0, 2.0])), np.array([0.0, 0.0, 0.0]))
        assert loss.item() == pytest.approx(4.0 / 3.0)


class TestModules:
    """Parameter discovery and state dicts."""

    def test_named_parameters_follow_attribute_paths(self):
        class Net(Module):
            def __init__(self):
                self.layers = [Linear(2, 3, Rng(0)), Linear(3, 1, Rng(1))]
                self.norm = LayerNorm(1)

        names = set(Net().parameters())
        assert {"layers.0.weight", "layers.1.bias", "norm.gain", "norm.bias"} <= names

    def test_same_seed_same_weights(self):
        a, b = Conv2d(3, 4, 3, Rng(7)), Conv2d(3, 4, 3, Rng(7))
        np.testing.assert_array_equal(a.weight.data, b.weight.data)

    def test_load_state_dict_names_missing_tensor(self):
        layer = Linear(2, 2, Rng(0))
        with pytest.raises(CheckpointError) as info:
            layer.load_state_dict({"weight": np.zeros((2, 2))})
        assert info.value.tensor == "bias"

    def test_load_state_dict_rejects_extent_mismatch(self):
        layer = Linear(2, 2, Rng(0))
        state = layer.state_dict()
        state["weight"] = np.zeros((3, 2))
        with pytest.raises(CheckpointError, match="weight"):
            layer.load_state_dict(state)

    def test_freeze(self):
        layer = Linear(2, 2, Rng(0)).freeze()
        assert not any(p.requires_grad for p in layer.parameters().values())


class TestRng:
    def test_spawn_depends_only_on_seed_and_label(self):
        parent = Rng(5)
        first = parent.spawn("x").uniform(size=4)
        parent.uniform(size=100)
        np.testing.assert_array_equal(first, parent.spawn("x").uniform(size=4))

    def test_labels_give_independent_streams(self):
        assert not np.array_equal(Rng(5).spawn("a").uniform(size=4), Rng(5).spawn("b").uniform(size=4))


class TestOptim:
    """AdamW updates and learning-rate schedules."""

    def test_adamw_moves_against_gradient(self):
        param = Parameter(np.array([1.0, -1.0], dtype=np.float32))
        optimizer = AdamW({"p": param}, weight_decay=0.0)
        param.grad = np.array([1.0, -1.0], dtype=np.float32)
        optimizer.step(0.1)
        np.testing.assert_allclose(param.data, [0.9, -0.9], atol=1e-6)
        assert optimizer.state.step == 1

    def test_adamw_weight_decay_is_decoupled(self):
        param = Parameter(np.array([2.0], dtype=np.float32))
        optimizer = AdamW({"p": param}, weight_decay=0.5)
        param.grad = np.zeros(1, dtype=np.float32)
        optimizer.step(0.1)
        np.testing.assert_allclose(param.data, [2.0 * (1.0 - 0.05)], atol=1e-6)

    def test_non_finite_gradient_leaves_state_untouched(self):
        param = Parameter(np.array([1.0], dtype=np.float32))
        optimizer = AdamW({"p": param})
        param.grad = np.array([np.nan], dtype=np.float32)
        with pytest.raises(TrainingError) as info:
            optimizer.step(0.1)
        assert info.value.parameter == "p"
        assert param.data[0] == 1.0
        assert optimizer.state.step == 0

    def test_state_tensors_round_trip(self):
        param = Parameter(np.array([1.0, 2.0], dtype=np.float32))
        optimizer = AdamW({"p": param})
        param.grad = np.array([0.5, -0.5], dtype=np.float32)
        optimizer.step(0.01)

        other = AdamW({"p": Parameter(param.data)})
        other.load_state_tensors(optimizer.state_tensors(), step=optimizer.state.step)
        np.testing.assert_array_equal(other.state.first_moment["p"], optimizer.state.first_moment["p"])
        assert other.state.step == 1

    def test_one_cycle_shape(self):
        sched = LrSchedule(max_lr=1e-4, warmup_steps=700, total_steps=2000)
        assert one_cycle_lr(0, sched) == pytest.approx(1e-4 / 25)
        assert one_cycle_lr(700, sched) == pytest.approx(1e-4)
        assert one_cycle_lr(2000, sched) == pytest.approx(1e-4 / 1e4)
        assert one_cycle_lr(350, sched) < one_cycle_lr(700, sched)
        assert one_cycle_lr(1500, sched) < one_cycle_lr(1000, sched)

    def test_one_cycle_rejects_out_of_range_step(self):
        with pytest.raises(ArgumentError):
            one_cycle_lr(2001, LrSchedule())

    def test_warmup_longer_than_run_is_rejected(self):
        with pytest.raises(ValueError):
            LrSchedule(warmup_steps=10, total_steps=5)

    def test_built_schedule_reports_config_error(self):
        with pytest.raises(ConfigError, match="warmup_steps"):
            build(LrSchedule, {"warmup_steps": 10, "total_steps": 5})

    def test_step_decay_drops_at_boundary(self):
        sched = StepDecaySchedule(base_lr=1e-4, factor=0.3, boundary_epoch=20, steps_per_epoch=10)
        assert sched.lr(199) == pytest.approx(1e-4)
        assert sched.lr(200) == pytest.approx(3e-5)
