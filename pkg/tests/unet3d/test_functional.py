"""Tests for the forward/backward building blocks."""

import numpy as np
import pytest

from common.errors import DegenerateInputError, ShapeError
from unet3d import (
    BatchNormState,
    UninitializedStatsError,
    batchnorm_backward,
    batchnorm_forward,
    conv3d_backward,
    conv3d_forward,
    convtranspose3d_backward,
    convtranspose3d_forward,
    dice_loss,
    maxpool3d_backward,
    maxpool3d_forward,
    segmentation_loss,
    softmax_voxelwise,
    strided_conv3d,
)


class TestConv3d:
    """Tests for the 3^3 stride-1 convolution."""

    def test_identity_kernel(self, rng):
        """Test that a centred delta kernel reproduces the input."""
        x = rng.normal(size=(1, 1, 5, 6, 7))
        weight = np.zeros((1, 1, 3, 3, 3))
        weight[0, 0, 1, 1, 1] = 1.0
        np.testing.assert_allclose(conv3d_forward(x, weight, np.zeros(1)), x)

    def test_ones_kernel_on_impulse(self):
        """Test that an all-ones kernel spreads an interior impulse into a 3^3 block."""
        x = np.zeros((1, 1, 5, 5, 5))
        x[0, 0, 2, 2, 2] = 1.0
        out = conv3d_forward(x, np.ones((1, 1, 3, 3, 3)))
        expected = np.zeros((5, 5, 5))
        expected[1:4, 1:4, 1:4] = 1.0
        np.testing.assert_allclose(out[0, 0], expected)

    def test_matches_nested_loops(self, rng):
        """Test against a direct nested-loop cross-correlation."""
        x = rng.normal(size=(2, 2, 3, 4, 3))
        weight = rng.normal(size=(3, 2, 3, 3, 3))
        bias = rng.normal(size=3)
        out = conv3d_forward(x, weight, bias)
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1), (1, 1)))
        expected = np.zeros_like(out)
        for n in range(2):
            for o in range(3):
                for z in range(3):
                    for y in range(4):
                        for w in range(3):
                            window = xp[n, :, z : z + 3, y : y + 3, w : w + 3]
                            expected[n, o, z, y, w] = (window * weight[o]).sum() + bias[o]
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_pointwise_head(self, rng):
        """Test that a 1x1x1 kernel maps 32 channels to 2."""
        x = rng.normal(size=(1, 32, 4, 4, 4))
        out = conv3d_forward(x, rng.normal(size=(2, 32, 1, 1, 1)), np.zeros(2), padding=0)
        assert out.shape == (1, 2, 4, 4, 4)

    def test_channel_mismatch(self, rng):
        """Test that input and kernel channels must agree."""
        with pytest.raises(ShapeError):
            conv3d_forward(rng.normal(size=(1, 2, 4, 4, 4)), np.zeros((1, 3, 3, 3, 3)))

    def test_zero_upstream_gradient(self, rng):
        """Test that a zero upstream gradient yields zero gradients."""
        x = rng.normal(size=(1, 2, 4, 4, 4))
        weight = rng.normal(size=(3, 2, 3, 3, 3))
        grads = conv3d_backward(np.zeros((1, 3, 4, 4, 4)), x, weight)
        assert all(not g.any() for g in grads)

    def test_bias_gradient_is_reduction(self, rng):
        """Test that grad_bias sums the upstream gradient over all but channels."""
        x = rng.normal(size=(2, 1, 4, 4, 4))
        grad_out = rng.normal(size=(2, 3, 4, 4, 4))
        _, _, grad_b = conv3d_backward(grad_out, x, rng.normal(size=(3, 1, 3, 3, 3)))
        np.testing.assert_allclose(grad_b, grad_out.sum(axis=(0, 2, 3, 4)))

    def test_gradients_match_finite_differences(self, rng, gradcheck):
        """Test input, kernel and bias gradients on a random 1x1x4x4x4 case."""
        x = rng.normal(size=(1, 1, 4, 4, 4))
        weight = rng.normal(size=(2, 1, 3, 3, 3))
        bias = rng.normal(size=2)
        upstream = rng.normal(size=(1, 2, 4, 4, 4))

        def f():
            return float((conv3d_forward(x, weight, bias) * upstream).sum())

        grad_x, grad_w, grad_b = conv3d_backward(upstream, x, weight)
        gradcheck(f, x, grad_x)
        gradcheck(f, weight, grad_w)
        gradcheck(f, bias, grad_b)


class TestBatchNorm:
    """Tests for batch normalization."""

    def test_standardized_input_passes_through(self, rng):
        """Test that a zero-mean unit-variance channel is returned almost unchanged."""
        x = rng.normal(size=(2, 1, 4, 4, 4))
        x = (x - x.mean()) / x.std()
        out, _ = batchnorm_forward(x, np.ones(1), np.zeros(1), BatchNormState(1), training=True)
        np.testing.assert_allclose(out, x, rtol=1e-4)

    def test_training_output_is_standardized(self, rng):
        """Test per-channel mean 0 and variance 1 in training mode."""
        x = rng.normal(loc=5.0, scale=3.0, size=(2, 3, 4, 4, 4))
        out, _ = batchnorm_forward(x, np.ones(3), np.zeros(3), BatchNormState(3), training=True)
        np.testing.assert_allclose(out.mean(axis=(0, 2, 3, 4)), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.var(axis=(0, 2, 3, 4)), 1.0, atol=1e-4)

    def test_running_statistics(self, rng):
        """Test the momentum-0.1 update with unbiased variance."""
        x = rng.normal(size=(1, 1, 2, 2, 2))
        state = BatchNormState(1)
        batchnorm_forward(x, np.ones(1), np.zeros(1), state, training=True)
        assert state.initialized
        np.testing.assert_allclose(state.running_mean, 0.1 * x.mean())
        np.testing.assert_allclose(state.running_var, 0.9 + 0.1 * x.var(ddof=1))
        assert (state.running_var >= 0).all()

    def test_eval_uses_running_statistics(self, rng):
        """Test that eval mode normalizes with the stored statistics and caches nothing."""
        state = BatchNormState(1)
        state.update(np.array([2.0]), np.array([4.0]), count=1)
        x = rng.normal(size=(1, 1, 2, 2, 2))
        out, cache = batchnorm_forward(x, np.ones(1), np.zeros(1), state, training=False)
        assert cache is None
        mean, var = state.running_mean[0], state.running_var[0]
        np.testing.assert_allclose(out, (x - mean) / np.sqrt(var + 1e-5))

    def test_eval_before_training(self, rng):
        """Test that eval mode needs at least one training step first."""
        with pytest.raises(UninitializedStatsError):
            batchnorm_forward(
                rng.normal(size=(1, 1, 2, 2, 2)), np.ones(1), np.zeros(1), BatchNormState(1), False
            )

    def test_gradients_match_finite_differences(self, rng, gradcheck):
        """Test input, gain and bias gradients of the training-mode map."""
        x = rng.normal(size=(2, 2, 2, 3, 2))
        gain = rng.normal(size=2)
        bias = rng.normal(size=2)
        upstream = rng.normal(size=x.shape)
        state = BatchNormState(2)

        def f():
            out, _ = batchnorm_forward(x, gain, bias, state, training=True)
            return float((out * upstream).sum())

        _, cache = batchnorm_forward(x, gain, bias, state, training=True)
        grad_x, grad_gain, grad_bias = batchnorm_backward(upstream, cache, gain)
        gradcheck(f, x, grad_x)
        gradcheck(f, gain, grad_gain)
        gradcheck(f, bias, grad_bias)


class TestMaxPool:
    """Tests for 2^3 max pooling."""

    def test_constant_input(self):
        """Test that a constant field pools to a constant field."""
        out, _ = maxpool3d_forward(np.full((1, 2, 4, 4, 4), 3.0))
        assert out.shape == (1, 2, 2, 2, 2)
        np.testing.assert_array_equal(out, 3.0)

    def test_halves_full_patch(self):
        """Test that a 128^3 input pools to 64^3."""
        out, _ = maxpool3d_forward(np.zeros((1, 1, 128, 128, 128)))
        assert out.shape == (1, 1, 64, 64, 64)

    def test_odd_dim(self):
        """Test that odd spatial dims are rejected."""
        with pytest.raises(ShapeError):
            maxpool3d_forward(np.zeros((1, 1, 4, 5, 4)))

    def test_ties_route_to_first_voxel(self):
        """Test that a tied window sends its gradient to the first voxel in scan order."""
        x = np.zeros((1, 1, 2, 2, 2))
        out, argmax = maxpool3d_forward(x)
        grad = maxpool3d_backward(np.ones_like(out), argmax, x.shape)
        assert grad[0, 0, 0, 0, 0] == 1.0
        assert grad.sum() == 1.0

    def test_window_maximum(self, rng):
        """Test that the output is the maximum of each 2^3 window."""
        x = rng.normal(size=(1, 1, 4, 4, 4))
        out, _ = maxpool3d_forward(x)
        assert out[0, 0, 1, 0, 1] == x[0, 0, 2:4, 0:2, 2:4].max()

    def test_gradient_matches_finite_differences(self, rng, gradcheck):
        """Test the routed gradient on a tie-free input."""
        x = (rng.permutation(2 * 4 * 4 * 4) * 0.1).reshape(1, 2, 4, 4, 4).astype(np.float64)
        upstream = rng.normal(size=(1, 2, 2, 2, 2))

        def f():
            return float((maxpool3d_forward(x)[0] * upstream).sum())

        _, argmax = maxpool3d_forward(x)
        gradcheck(f, x, maxpool3d_backward(upstream, argmax, x.shape))


class TestConvTranspose:
    """Tests for the 2^3 stride-2 transposed convolution."""

    def test_doubles_dims(self):
        """Test that 64^3 upsamples to 128^3."""
        out = convtranspose3d_forward(np.zeros((1, 1, 64, 64, 64)), np.zeros((1, 1, 2, 2, 2)))
        assert out.shape == (1, 1, 128, 128, 128)

    def test_block_painting(self):
        """Test that one input voxel paints its kernel into a 2^3 block."""
        x = np.zeros((1, 1, 2, 2, 2))
        x[0, 0, 1, 0, 1] = 2.0
        weight = np.arange(8, dtype=np.float64).reshape(1, 1, 2, 2, 2)
        out = convtranspose3d_forward(x, weight)
        np.testing.assert_allclose(out[0, 0, 2:4, 0:2, 2:4], 2.0 * weight[0, 0])
        assert out.sum() == pytest.approx(2.0 * weight.sum())

    def test_adjoint_identity(self, rng):
        """Test <convT(x), y> == <x, conv(y)> for the strided convolution."""
        weight = rng.normal(size=(3, 2, 2, 2, 2))
        x = rng.normal(size=(2, 3, 3, 2, 4))
        y = rng.normal(size=(2, 2, 6, 4, 8))
        lhs = float((convtranspose3d_forward(x, weight) * y).sum())
        rhs = float((x * strided_conv3d(y, weight)).sum())
        assert abs(lhs - rhs) <= 1e-6 * max(abs(lhs), abs(rhs))

    def test_channel_mismatch(self, rng):
        """Test that the kernel's input channels must match."""
        with pytest.raises(ShapeError):
            convtranspose3d_forward(rng.normal(size=(1, 2, 2, 2, 2)), np.zeros((3, 1, 2, 2, 2)))

    def test_gradients_match_finite_differences(self, rng, gradcheck):
        """Test input, kernel and bias gradients."""
        x = rng.normal(size=(1, 2, 2, 2, 2))
        weight = rng.normal(size=(2, 3, 2, 2, 2))
        bias = rng.normal(size=3)
        upstream = rng.normal(size=(1, 3, 4, 4, 4))

        def f():
            return float((convtranspose3d_forward(x, weight, bias) * upstream).sum())

        grad_x, grad_w, grad_b = convtranspose3d_backward(upstream, x, weight)
        gradcheck(f, x, grad_x)
        gradcheck(f, weight, grad_w)
        gradcheck(f, bias, grad_b)


class TestSoftmax:
    """Tests for the voxelwise softmax."""

    def test_equal_logits(self):
        """Test that equal logits give (0.5, 0.5)."""
        probs = softmax_voxelwise(np.zeros((1, 2, 2, 2, 2)))
        np.testing.assert_array_equal(probs, 0.5)

    def test_large_logits(self):
        """Test that (+20, -20) saturates without overflow."""
        logits = np.zeros((1, 2, 1, 1, 1))
        logits[0, 0] = 20.0
        logits[0, 1] = -20.0
        probs = softmax_voxelwise(logits)
        assert probs[0, 0, 0, 0, 0] == pytest.approx(1.0)
        assert probs[0, 1, 0, 0, 0] == pytest.approx(0.0, abs=1e-15)
        huge = softmax_voxelwise(logits * 100)
        assert np.all(np.isfinite(huge))

    def test_channels_sum_to_one(self, rng):
        """Test normalization on random logits."""
        probs = softmax_voxelwise(rng.normal(scale=10, size=(2, 2, 4, 4, 4)))
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-12
        assert (probs > 0).all()


class TestDiceLoss:
    """Tests for the soft Dice loss."""

    def test_perfect_overlap(self, rng):
        """Test that p == g gives loss 0."""
        g = (rng.random((4, 4, 4)) > 0.5).astype(float)
        loss, _ = dice_loss(g, g)
        assert loss == pytest.approx(0.0)

    def test_disjoint(self):
        """Test that disjoint binary masks give loss 1."""
        p = np.zeros((2, 2, 2))
        g = np.zeros((2, 2, 2))
        p[0] = 1.0
        g[1] = 1.0
        loss, _ = dice_loss(p, g)
        assert loss == pytest.approx(1.0)

    def test_range(self, rng):
        """Test that the loss lies in [0, 1] for soft predictions."""
        for _ in range(20):
            loss, _ = dice_loss(rng.random((4, 4, 4)), (rng.random((4, 4, 4)) > 0.7).astype(float))
            assert 0.0 <= loss <= 1.0

    def test_gradient_matches_finite_differences(self, rng, gradcheck):
        """Test the closed-form gradient on a random 4^3 patch."""
        p = rng.random((4, 4, 4))
        g = (rng.random((4, 4, 4)) > 0.5).astype(float)
        _, grad = dice_loss(p, g)
        gradcheck(lambda: dice_loss(p, g)[0], p, grad, tolerance=1e-4)

    def test_empty_denominator(self):
        """Test that empty prediction and target are degenerate."""
        with pytest.raises(DegenerateInputError):
            dice_loss(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)))

    def test_shape_mismatch(self):
        """Test that prediction and target shapes must agree."""
        with pytest.raises(ShapeError):
            dice_loss(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))


class TestSegmentationLoss:
    """Tests for softmax followed by Dice on the foreground channel."""

    def test_logit_gradient(self, rng, gradcheck):
        """Test the chained softmax-Dice gradient with respect to the logits."""
        logits = rng.normal(size=(2, 2, 2, 2, 2))
        target = np.zeros_like(logits)
        target[:, 1] = rng.random((2, 2, 2, 2)) > 0.5
        target[:, 0] = 1.0 - target[:, 1]
        _, grad = segmentation_loss(logits, target)
        gradcheck(lambda: segmentation_loss(logits, target)[0], logits, grad, tolerance=1e-4)


TRIALS = range(20)


class TestRandomizedGradients:
    """Finite-difference checks over random shapes, one generator per trial."""

    @pytest.mark.parametrize("seed", TRIALS)
    def test_conv3d(self, seed, gradcheck):
        """Test conv3d_backward on random channel counts and spatial dims."""
        rng = np.random.default_rng(seed)
        c_in, c_out = (int(c) for c in rng.integers(1, 3, size=2))
        dims = tuple(int(n) for n in rng.integers(2, 5, size=3))
        x = rng.normal(size=(1, c_in, *dims))
        weight = rng.normal(size=(c_out, c_in, 3, 3, 3))
        bias = rng.normal(size=c_out)
        upstream = rng.normal(size=(1, c_out, *dims))

        def f():
            return float((conv3d_forward(x, weight, bias) * upstream).sum())

        grad_x, grad_w, grad_b = conv3d_backward(upstream, x, weight)
        gradcheck(f, x, grad_x)
        gradcheck(f, weight, grad_w)
        gradcheck(f, bias, grad_b)

    @pytest.mark.parametrize("seed", TRIALS)
    def test_batchnorm(self, seed, gradcheck):
        """Test batchnorm_backward on random batch and channel sizes."""
        rng = np.random.default_rng(seed)
        batch, channels = (int(c) for c in rng.integers(1, 3, size=2))
        scale = rng.uniform(0.5, 3.0)
        x = rng.normal(loc=rng.normal(), scale=scale, size=(batch, channels, 2, 3, 2))
        gain = rng.normal(size=channels)
        bias = rng.normal(size=channels)
        upstream = rng.normal(size=x.shape)
        state = BatchNormState(channels)

        def f():
            out, _ = batchnorm_forward(x, gain, bias, state, training=True)
            return float((out * upstream).sum())

        _, cache = batchnorm_forward(x, gain, bias, state, training=True)
        grad_x, grad_gain, grad_bias = batchnorm_backward(upstream, cache, gain)
        gradcheck(f, x, grad_x)
        gradcheck(f, gain, grad_gain)
        gradcheck(f, bias, grad_bias)

    @pytest.mark.parametrize("seed", TRIALS)
    def test_maxpool(self, seed, gradcheck):
        """Test the routed max-pool gradient on tie-free random inputs."""
        rng = np.random.default_rng(seed)
        dims = tuple(2 * int(n) for n in rng.integers(1, 3, size=3))
        size = 2 * int(np.prod(dims))
        # distinct values 0.1 apart, far wider than the difference step
        x = (rng.permutation(size) * 0.1).reshape(1, 2, *dims).astype(np.float64)
        upstream = rng.normal(size=(1, 2, *(n // 2 for n in dims)))

        def f():
            return float((maxpool3d_forward(x)[0] * upstream).sum())

        _, argmax = maxpool3d_forward(x)
        gradcheck(f, x, maxpool3d_backward(upstream, argmax, x.shape))

    @pytest.mark.parametrize("seed", TRIALS)
    def test_convtranspose3d(self, seed, gradcheck):
        """Test convtranspose3d_backward on random channel counts and spatial dims."""
        rng = np.random.default_rng(seed)
        c_in, c_out = (int(c) for c in rng.integers(1, 3, size=2))
        dims = tuple(int(n) for n in rng.integers(1, 3, size=3))
        x = rng.normal(size=(1, c_in, *dims))
        weight = rng.normal(size=(c_in, c_out, 2, 2, 2))
        bias = rng.normal(size=c_out)
        upstream = rng.normal(size=(1, c_out, *(2 * n for n in dims)))

        def f():
            return float((convtranspose3d_forward(x, weight, bias) * upstream).sum())

        grad_x, grad_w, grad_b = convtranspose3d_backward(upstream, x, weight)
        gradcheck(f, x, grad_x)
        gradcheck(f, weight, grad_w)
        gradcheck(f, bias, grad_b)

    @pytest.mark.parametrize("seed", TRIALS)
    def test_dice_loss(self, seed, gradcheck):
        """Test the soft Dice gradient on random soft predictions."""
        rng = np.random.default_rng(seed)
        dims = tuple(int(n) for n in rng.integers(2, 5, size=3))
        p = rng.random(dims)
        g = (rng.random(dims) > rng.uniform(0.2, 0.8)).astype(float)
        _, grad = dice_loss(p, g)
        gradcheck(lambda: dice_loss(p, g)[0], p, grad, tolerance=1e-4)

    @pytest.mark.parametrize("seed", TRIALS)
    def test_segmentation_loss(self, seed, gradcheck):
        """Test the chained softmax-Dice gradient on random logits."""
        rng = np.random.default_rng(seed)
        batch = int(rng.integers(1, 3))
        dims = tuple(int(n) for n in rng.integers(1, 4, size=3))
        logits = rng.normal(scale=2.0, size=(batch, 2, *dims))
        target = np.zeros_like(logits)
        target[:, 1] = rng.random((batch, *dims)) > 0.5
        target[:, 0] = 1.0 - target[:, 1]
        _, grad = segmentation_loss(logits, target)
        gradcheck(lambda: segmentation_loss(logits, target)[0], logits, grad, tolerance=1e-4)


class TestAdjointPairs:
    """<convT(x), y> == <x, conv(y)> over random shapes."""

    @pytest.mark.parametrize("seed", range(50))
    def test_strided_pair(self, seed):
        """Test the adjoint identity for one random shape and kernel."""
        rng = np.random.default_rng(1000 + seed)
        batch = int(rng.integers(1, 3))
        c_in, c_out = (int(c) for c in rng.integers(1, 4, size=2))
        dims = tuple(int(n) for n in rng.integers(1, 5, size=3))
        weight = rng.normal(size=(c_in, c_out, 2, 2, 2))
        x = rng.normal(size=(batch, c_in, *dims))
        y = rng.normal(size=(batch, c_out, *(2 * n for n in dims)))
        lhs = float((convtranspose3d_forward(x, weight) * y).sum())
        rhs = float((x * strided_conv3d(y, weight)).sum())
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))
