import tempfile

import numpy as np

from writerid.errors import DimensionError, ParameterError
from writerid.saliency import BinEdges, average_divergence, bin_index, build_histograms, divergence_matrix, \
    fd_bin_edges, fit_saliency, kl_divergence, load_saliency, save_saliency, significance_weights


def setup_module():
    print(f" == Setting up tests for {__name__}")


def teardown_module():
    print(f" == Tearing down tests for {__name__}")


def _two_writer_components(seed=0, n=200):
    """Component 0 separates the writers, component 1 is shared."""
    rng = np.random.default_rng(seed)
    writers = np.repeat(['a', 'b'], n)
    separated = np.concatenate([rng.normal(-3.0, 0.5, n), rng.normal(3.0, 0.5, n)])
    shared = rng.normal(0.0, 1.0, 2 * n)
    return np.column_stack([separated, shared]), writers


def test_freedman_diaconis_edges():
    edges = fd_bin_edges(np.arange(1, 9))
    assert edges.n_bins == 2
    assert edges.rule == 'freedman-diaconis'
    assert np.allclose(edges.edges, [1.0, 4.5, 8.0])
    assert not edges.constant


def test_random_edges_cover_values():
    rng = np.random.default_rng(3)
    for _ in range(20):
        values = rng.standard_normal(rng.integers(2, 300))
        edges = fd_bin_edges(values).edges
        assert np.all(np.diff(edges) > 0)
        assert edges[0] == values.min() and edges[-1] == values.max()


def test_constant_and_sturges_fallbacks():
    constant = fd_bin_edges([2.0, 2.0, 2.0])
    assert constant.constant and constant.n_bins == 1
    # quartiles coincide, range does not
    sturges = fd_bin_edges([0.0] * 7 + [1.0])
    assert sturges.rule == 'sturges'
    assert sturges.n_bins == 4
    try:
        fd_bin_edges([1.0])
    except ParameterError:
        pass
    else:
        assert False, 'one value cannot be binned'


def test_half_open_bins_with_closed_top():
    edges = np.array([0.0, 0.5, 1.0])
    assert bin_index([0.0, 0.49, 0.5, 1.0, 7.0, -3.0], edges).tolist() == [0, 0, 1, 1, 1, 0]


def test_histograms_follow_shared_edges():
    alpha = np.array([[0.1], [0.9], [0.5], [0.5]])
    hists = build_histograms(alpha, ['a', 'a', 'b', 'b'], 0, BinEdges(np.array([0.0, 0.5, 1.0])))
    assert hists.writers == ['a', 'b']
    assert hists.counts.tolist() == [[1, 1], [0, 2]]
    assert np.allclose(hists.probabilities.sum(axis=1), 1.0, atol=1e-12)


def test_histogram_mass_is_conserved():
    alpha, writers = _two_writer_components(1)
    for k in range(2):
        hists = build_histograms(alpha, writers, k)
        assert hists.counts.sum(axis=1).tolist() == [200, 200]


def test_writer_without_rows_is_excluded():
    alpha = np.array([[0.0], [1.0], [2.0], [3.0]])
    hists = build_histograms(alpha, ['a', 'a', 'b', 'b'], 0, writers=['a', 'b', 'c'])
    assert hists.writers == ['a', 'b']


def test_kl_divergence_values():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert abs(kl_divergence([1.0, 0.0], [0.5, 0.5], epsilon=0.0) - 1.0) < 1e-12
    assert abs(kl_divergence([1.0, 0.0], [0.5, 0.5]) - 1.0) < 1e-4
    forward = kl_divergence([0.8, 0.2], [0.4, 0.6])
    backward = kl_divergence([0.4, 0.6], [0.8, 0.2])
    assert forward != backward
    try:
        kl_divergence([0.5, 0.5], [1.0])
    except DimensionError:
        pass
    else:
        assert False, 'lengths differ'


def test_divergence_matrix_matches_pairwise_oracle():
    rng = np.random.default_rng(5)
    alpha = rng.standard_normal((90, 1))
    writers = np.repeat(['a', 'b', 'c'], 30)
    alpha[writers == 'b'] += 1.5
    hists = build_histograms(alpha, writers, 0)
    D = divergence_matrix(hists).matrix
    assert D.shape == (3, 3)
    assert np.all(np.diag(D) == 0.0)
    assert np.all(D >= 0.0)
    for i in range(3):
        for j in range(3):
            if i != j:
                assert D[i, j] == kl_divergence(hists.probabilities[i], hists.probabilities[j])


def test_identical_writers_do_not_diverge():
    alpha = np.tile(np.array([[0.0], [1.0], [2.0], [3.0]]), (2, 1))
    hists = build_histograms(alpha, ['a'] * 4 + ['b'] * 4, 0)
    assert np.all(divergence_matrix(hists).matrix == 0.0)


def test_single_writer_is_rejected():
    hists = build_histograms(np.array([[0.0], [1.0]]), ['a', 'a'], 0)
    try:
        divergence_matrix(hists)
    except DimensionError:
        pass
    else:
        assert False, 'one writer has nothing to diverge from'


def test_average_divergence():
    assert np.isclose(average_divergence(np.array([[0.0, 0.4], [1.0, 0.0]])), 0.7)
    assert average_divergence(np.zeros((3, 3))) == 0.0


def test_writer_order_does_not_change_average():
    alpha, writers = _two_writer_components(2)
    order = np.random.default_rng(0).permutation(len(writers))
    forward = build_histograms(alpha, writers, 0, writers=['a', 'b'])
    backward = build_histograms(alpha[order], writers[order], 0, writers=['b', 'a'])
    D, D_swapped = divergence_matrix(forward).matrix, divergence_matrix(backward).matrix
    assert np.allclose(D, D_swapped[::-1, ::-1])
    assert np.isclose(average_divergence(D), average_divergence(D_swapped))


def test_inverse_weights():
    weights = significance_weights([0.0, 1.0, 99.0])
    assert np.allclose(weights.w, [1.0, 0.5, 0.01])
    grid = significance_weights(np.linspace(0.0, 50.0, 101)).w
    assert np.all(np.diff(grid) < 0)
    assert np.all((grid > 0) & (grid <= 1))
    try:
        significance_weights([-0.1])
    except ParameterError:
        pass
    else:
        assert False, 'negative divergence'


def test_direct_weights_reverse_the_order():
    weights = significance_weights([0.0, 1.0, 3.0], mode='direct')
    assert np.allclose(weights.w, [0.25, 0.5, 1.0])


def test_separating_component_gets_the_lower_inverse_weight():
    alpha, writers = _two_writer_components(4)
    inverse = fit_saliency(alpha, writers)
    assert inverse.phi[0] > inverse.phi[1]
    assert inverse.w[0] < inverse.w[1]
    direct = fit_saliency(alpha, writers, mode='direct')
    assert direct.w[0] > direct.w[1]


def test_constant_component_is_flagged():
    alpha, writers = _two_writer_components(6)
    alpha[:, 1] = 4.0
    weights = fit_saliency(alpha, writers)
    assert weights.constant == [False, True]
    assert weights.w[1] == 1.0
    assert weights.bins[1] == 1


def test_save_and_load_saliency():
    alpha, writers = _two_writer_components(7)
    weights = fit_saliency(alpha, writers)
    directory = tempfile.mkdtemp(prefix='saliency-')
    save_saliency(weights, directory)
    loaded = load_saliency(directory)
    assert np.array_equal(loaded.w, weights.w)
    assert np.array_equal(loaded.phi, weights.phi)
    assert loaded.bins == weights.bins
    assert np.array_equal(loaded.edges[0], weights.edges[0])
