from .features import WordPatches, PatchSet, prepare_word, extract_word, extract_file, collect_patches, sample_items
from .encoding import MODES, describe, score_words
from .bundle import ModelBundle, BundleIntegrityError, resolve_bundle_path, write_bundle, verify_bundle, \
    load_bundle, publish_bundle
from .evaluation import EvaluationError, scored_predictions, topk_pair, per_writer, word_count_curve, curve_means, \
    evaluate_words, evaluate_bundle
from .training import FittedPipeline, SWEEP_DIMS, stage, split_patches, train_embedder, fit_sparse_basis, \
    fit_models, split_scores, run_ablation, train_bundle, compare_losses, sweep_dims
from .identify import INPUT_MODES, identify, page_words, score_word_images, identification_report, \
    write_identification
