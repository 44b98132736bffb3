from .histograms import BinEdges, ComponentHistogramSet, fd_bin_edges, bin_index, build_histograms
from .divergence import DivergenceMatrix, SaliencyWeights, WEIGHT_MODES, kl_divergence, divergence_matrix, \
    average_divergence, significance_weights, fit_saliency, save_saliency, load_saliency
