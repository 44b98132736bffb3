import tempfile
from os import path

import numpy as np

from writerid.embednet import Adam, ConvLayer, CorpusError, Dense, DegenerateClusterError, EmbedNet, \
    EmbedNetConfig, ResidualBlock, Siamese, Tensor, TrainConfig, UsageError, batch_contrastive_loss, \
    batch_triplet_loss, contrastive_loss, conv_forward, davies_bouldin, dense_forward, embed, embed_batch, \
    fit_triplets, global_avg_pool, load_embednet, no_grad, residual_forward, save_embednet, train_siamese, \
    triplet_loss
from writerid.errors import DimensionError, ParameterError
from writerid.keypoints import NormalizedPatch

GRADIENT_CONFIGURATIONS = 20
TOLERANCE = 1e-4

_tempdir: str = ""


def setup_module():
    print(f" == Setting up tests for {__name__}")
    global _tempdir
    _tempdir = tempfile.mkdtemp(prefix='embednet-')


def teardown_module():
    print(f" == Tearing down tests for {__name__}")


def _tiny_config(**kwargs):
    return EmbedNetConfig(**{'embed_dim': 8, 'stem_filters': 4, 'block_filters': (4, 8), **kwargs})


def _patches(n, seed):
    rng = np.random.default_rng(seed)
    return [NormalizedPatch(rng.integers(0, 256, size=(105, 105)).astype(np.uint8), ('w', i)) for i in range(n)]


def _relative_error(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)


def _check_gradients(build, tensors, h=1e-6):
    """Compare backward() gradients of the scalar ``build()`` with central differences."""
    for t in tensors:
        t.zero_grad()
    build().backward()
    for t in tensors:
        analytic = t.grad.copy()
        numeric = np.zeros_like(t.data)
        for index in np.ndindex(t.data.shape):
            original = t.data[index]
            t.data[index] = original + h
            plus = build().item()
            t.data[index] = original - h
            minus = build().item()
            t.data[index] = original
            numeric[index] = (plus - minus) / (2 * h)
        error = _relative_error(analytic, numeric)
        assert error < TOLERANCE, f'relative gradient error {error}'


def test_conv_gradients():
    for seed in range(GRADIENT_CONFIGURATIONS):
        rng = np.random.default_rng(seed)
        kernel = (1, 3, 5)[seed % 3]
        stride = 1 + seed % 2
        layer = ConvLayer.create(rng, 2, 3, kernel, stride, activation=('relu', 'identity')[seed % 2])
        layer.bias.data[...] = rng.standard_normal(3) * 0.1
        x = Tensor(rng.standard_normal((2, 2, 7, 7)), requires_grad=True)
        projection_rng = np.random.default_rng(1000 + seed)
        projection = projection_rng.standard_normal(conv_forward(layer, x).shape)
        _check_gradients(lambda: (conv_forward(layer, x) * projection).sum(), [layer.weight, layer.bias, x])


def _direct_conv(x, weight, bias, stride, padding):
    """Cross-correlation by explicit loops over batch, output channel, rows, columns and kernel taps."""
    n, channels, height, width = x.shape
    out_channels, _, kh, kw = weight.shape
    padded = np.zeros((n, channels, height + 2 * padding, width + 2 * padding))
    padded[:, :, padding:padding + height, padding:padding + width] = x
    out_h = (height + 2 * padding - kh) // stride + 1
    out_w = (width + 2 * padding - kw) // stride + 1
    out = np.zeros((n, out_channels, out_h, out_w))
    for b in range(n):
        for o in range(out_channels):
            for r in range(out_h):
                for c in range(out_w):
                    total = bias[o]
                    for i in range(channels):
                        for u in range(kh):
                            for v in range(kw):
                                total += padded[b, i, r * stride + u, c * stride + v] * weight[o, i, u, v]
                    out[b, o, r, c] = total
    return out


def _layer(weight, bias, stride=1, padding=0, activation='identity'):
    return ConvLayer(Tensor(np.asarray(weight, dtype=np.float64), requires_grad=True),
                     Tensor(np.asarray(bias, dtype=np.float64), requires_grad=True), stride, padding, activation)


def test_conv_forward_matches_direct_convolution():
    for seed, (stride, padding) in enumerate([(1, 0), (1, 1), (2, 1), (2, 0)]):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((1, 2, 5, 5))
        weight = rng.standard_normal((3, 2, 3, 3))
        bias = rng.standard_normal(3)
        out = conv_forward(_layer(weight, bias, stride, padding), x).data
        expected = _direct_conv(x, weight, bias, stride, padding)
        assert out.shape == expected.shape == (1, 3, (5 + 2 * padding - 3) // stride + 1,
                                               (5 + 2 * padding - 3) // stride + 1)
        assert np.max(np.abs(out - expected)) < 1e-12
        relu_out = conv_forward(_layer(weight, bias, stride, padding, 'relu'), x).data
        assert np.max(np.abs(relu_out - np.maximum(expected, 0.0))) < 1e-12


def test_conv_forward_identity_and_zero_kernels():
    x = np.random.default_rng(7).standard_normal((2, 3, 4, 4))
    identity = np.eye(3).reshape(3, 3, 1, 1)
    assert np.array_equal(conv_forward(_layer(identity, np.zeros(3)), x).data, x)
    bias = np.array([0.5, -1.0])
    out = conv_forward(_layer(np.zeros((2, 3, 3, 3)), bias, padding=1), x).data
    assert out.shape == (2, 2, 4, 4)
    assert np.all(out[:, 0] == 0.5) and np.all(out[:, 1] == -1.0)
    try:
        conv_forward(_layer(identity, np.zeros(3)), np.zeros((1, 2, 4, 4)))
    except DimensionError:
        pass
    else:
        assert False, 'channel mismatch'


def test_residual_forward_values():
    rng = np.random.default_rng(8)
    block = ResidualBlock.create(rng, 2, 2, 1)
    assert block.skip is None
    for layer in (block.conv1, block.conv2):
        layer.weight.data[...] = 0.0
    x = np.abs(rng.standard_normal((1, 2, 6, 6)))
    assert np.array_equal(residual_forward(block, x).data, x)

    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        in_channels, filters, stride = (2, 2, 1) if seed % 2 else (2, 3, 2)
        block = ResidualBlock.create(rng, in_channels, filters, stride)
        for tensor in block.parameters('b').values():
            if tensor.ndim == 1:
                tensor.data[...] = rng.standard_normal(tensor.shape) * 0.1
        x = rng.standard_normal((1, in_channels, 7, 7))

        def apply(layer, value):
            out = _direct_conv(value, layer.weight.data, layer.bias.data, layer.stride, layer.padding)
            return np.maximum(out, 0.0) if layer.activation == 'relu' else out
        shortcut = x if block.skip is None else apply(block.skip, x)
        expected = np.maximum(apply(block.conv2, apply(block.conv1, x)) + shortcut, 0.0)
        out = residual_forward(block, x).data
        assert out.shape == shortcut.shape
        assert np.max(np.abs(out - expected)) < 1e-12


def test_embedder_gradients_under_triplet_loss():
    for seed in range(3):
        net = EmbedNet.create(EmbedNetConfig(embed_dim=4, stem_filters=4, stem_kernel=3, block_filters=(4, 4),
                                             seed=seed))
        rng = np.random.default_rng(200 + seed)
        for tensor in net.parameters().values():
            if tensor.ndim == 1:
                tensor.data[...] = rng.standard_normal(tensor.shape) * 0.1
        anchors, positives, negatives = (rng.random((2, 1, 11, 11)) for _ in range(3))
        _check_gradients(lambda: batch_triplet_loss(net(anchors), net(positives), net(negatives), margin=5.0),
                         list(net.parameters().values()))


def test_white_and_black_patches_embed_differently():
    net = EmbedNet.create(_tiny_config(stem_filters=8, seed=1))
    white = NormalizedPatch(np.full((105, 105), 255, dtype=np.uint8), ('w', 0))
    black = NormalizedPatch(np.zeros((105, 105), dtype=np.uint8), ('w', 1))
    assert np.linalg.norm(embed(net, white) - embed(net, black)) > 0
    assert np.array_equal(embed(net, white), embed(net, white))


def test_dense_and_pool_gradients():
    for seed in range(GRADIENT_CONFIGURATIONS):
        rng = np.random.default_rng(seed)
        layer = Dense.create(rng, 5, 4)
        layer.bias.data[...] = rng.standard_normal(4)
        x = Tensor(rng.standard_normal((3, 5, 4, 4)), requires_grad=True)
        projection = rng.standard_normal((3, 4))
        _check_gradients(lambda: (dense_forward(layer, global_avg_pool(x)) * projection).sum(),
                         [layer.weight, layer.bias, x])


def test_residual_block_gradients():
    for seed in range(GRADIENT_CONFIGURATIONS):
        rng = np.random.default_rng(seed)
        in_channels, filters, stride = (2, 2, 1) if seed % 2 else (2, 3, 2)
        block = ResidualBlock.create(rng, in_channels, filters, stride)
        for tensor in block.parameters('b').values():
            if tensor.ndim == 1:
                tensor.data[...] = rng.standard_normal(tensor.shape) * 0.1
        x = Tensor(rng.standard_normal((1, in_channels, 6, 6)), requires_grad=True)
        projection = rng.standard_normal(residual_forward(block, x).shape)
        _check_gradients(lambda: (residual_forward(block, x) * projection).sum(),
                         list(block.parameters('b').values()) + [x])


def test_loss_gradients():
    for seed in range(GRADIENT_CONFIGURATIONS):
        rng = np.random.default_rng(seed)
        anchors, positives, negatives = (Tensor(rng.standard_normal((4, 3)), requires_grad=True) for _ in range(3))
        _check_gradients(lambda: batch_triplet_loss(anchors, positives, negatives, margin=5.0),
                         [anchors, positives, negatives])
        same = np.array([True, False, True, False])
        _check_gradients(lambda: batch_contrastive_loss(anchors, positives, same, margin=10.0), [anchors, positives])


def test_triplet_loss_values():
    assert triplet_loss([0.0, 0.0], [1.0, 0.0], [3.0, 0.0], margin=0.2) == 0.0
    assert abs(triplet_loss([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], margin=0.2) - 3.2) < 1e-12
    assert abs(contrastive_loss([0.0], [0.5], same=False, margin=1.0) - 0.25) < 1e-12
    assert contrastive_loss([0.0], [2.0], same=True) == 4.0
    assert triplet_loss([0.0, 0.0], [1.0, 0.0], [0.0, 2.0], margin=0.5) == 0.0
    assert triplet_loss([1.0, 2.0], [1.0, 2.0], [1.0, 2.0], margin=0.3) == 0.3
    assert contrastive_loss([0.0], [1.0], same=False, margin=2.0) == 1.0
    try:
        triplet_loss([0.0, 0.0], [1.0], [0.0, 1.0])
    except DimensionError:
        pass
    else:
        assert False, 'embedding lengths must agree'


def test_backward_without_forward():
    try:
        Tensor(np.ones(3)).backward()
    except UsageError:
        pass
    else:
        assert False, 'backward needs a recorded graph'
    with no_grad():
        out = (Tensor(np.ones(2), requires_grad=True) * 3.0).sum()
    try:
        out.backward()
    except UsageError:
        pass
    else:
        assert False, 'no graph is recorded under no_grad'


def test_adam_moves_against_gradient():
    weight = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    optimizer = Adam({'w': weight}, learning_rate=0.1)
    (weight * weight).sum().backward()
    optimizer.step()
    assert np.allclose(weight.data, [0.9, -1.9])


def test_embedder_shapes_and_sharing():
    net = EmbedNet.create(_tiny_config())
    out = net(np.zeros((2, 1, 105, 105)))
    assert out.shape == (2, 8)
    assert set(net.parameters()) >= {'stem.weight', 'blocks.0.conv1.weight', 'blocks.1.skip.weight', 'fc.bias'}
    siamese = Siamese(net)
    assert all(branch is net for branch in siamese.branches)
    patch = _patches(1, 0)[0]
    assert np.allclose(embed(net, patch), embed_batch(net, [patch])[0])
    try:
        EmbedNetConfig(embed_dim=300, strict_dims=True)
    except ParameterError:
        pass
    else:
        assert False, 'strict dims accept only the sweep dimensions'


def test_training_is_deterministic():
    patches = _patches(8, 1)
    labels = ['a', 'a', 'a', 'a', 'b', 'b', 'b', 'b']
    cfg = TrainConfig(batch_size=2, epochs=2, steps_per_epoch=2, seed=5)
    first = train_siamese(patches, labels, EmbedNet.create(_tiny_config()), cfg)
    second = train_siamese(patches, labels, EmbedNet.create(_tiny_config()), cfg)
    assert len(first.history) == 2
    assert first.history == second.history
    assert np.array_equal(embed_batch(first.net, patches), embed_batch(second.net, patches))


def test_training_needs_two_classes():
    try:
        train_siamese(_patches(3, 2), ['a', 'a', 'a'], EmbedNet.create(_tiny_config()), TrainConfig(epochs=1))
    except CorpusError as ex:
        assert ex.exit_code == 6
    else:
        assert False, 'one class cannot form negatives'


def _shape_patch(kind, offset):
    """White 105x105 patch holding either a thin vertical bar or a solid square of ink."""
    pixels = np.full((105, 105), 255, dtype=np.uint8)
    if kind == 'bar':
        pixels[10:95, 20 + offset:26 + offset] = 0
    else:
        pixels[30 + offset:70 + offset, 30:70] = 0
    return NormalizedPatch(pixels, (kind, offset))


def test_fixed_triplets_are_fitted():
    anchors, positives, negatives = [], [], []
    for i in range(10):
        same, other = ('bar', 'square') if i % 2 == 0 else ('square', 'bar')
        anchors.append(_shape_patch(same, i))
        positives.append(_shape_patch(same, i + 3))
        negatives.append(_shape_patch(other, i))
    margin = 1.0
    net = EmbedNet.create(_tiny_config(seed=2))
    cfg = TrainConfig(batch_size=10, epochs=500, learning_rate=0.01, margin=margin)
    result = fit_triplets(net, anchors, positives, negatives, cfg)
    assert len(result.history) == 500
    assert result.history[-1] < 0.01 * margin, f'final loss {result.history[-1]}'


def test_zero_learning_rate_keeps_parameters():
    patches = _patches(6, 6)
    labels = ['a', 'a', 'a', 'b', 'b', 'b']
    net = EmbedNet.create(_tiny_config(seed=6))
    before = {name: tensor.data.copy() for name, tensor in net.parameters().items()}
    train_siamese(patches, labels, net, TrainConfig(batch_size=2, epochs=3, steps_per_epoch=2, learning_rate=0.0))
    for name, tensor in net.parameters().items():
        assert np.array_equal(tensor.data, before[name]), name


def test_davies_bouldin():
    tight = np.array([[0.0, 0.0], [0.0, 0.2], [10.0, 0.0], [10.0, 0.2]])
    loose = np.array([[0.0, 0.0], [0.0, 4.0], [10.0, 0.0], [10.0, 4.0]])
    labels = ['a', 'a', 'b', 'b']
    assert abs(davies_bouldin(tight, labels) - 0.02) < 1e-12
    assert davies_bouldin(tight, labels) < davies_bouldin(loose, labels)
    pairs = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]])
    assert abs(davies_bouldin(pairs, labels) - 0.2) < 1e-12
    assert davies_bouldin(np.array([[0.0, 0.0], [10.0, 0.0]]), ['a', 'b']) == 0.0
    try:
        davies_bouldin(np.zeros((4, 2)), labels)
    except DegenerateClusterError:
        pass
    else:
        assert False, 'coincident centroids'


def test_save_and_load_embedder():
    net = EmbedNet.create(_tiny_config(seed=4))
    directory = path.join(_tempdir, 'embedder')
    save_embednet(net, directory, TrainConfig())
    loaded = load_embednet(directory)
    patches = _patches(3, 4)
    assert loaded.config == net.config
    assert np.array_equal(embed_batch(loaded, patches), embed_batch(net, patches))
