from .smo import DualSolution, solve_smo
from .svm import WeightedDescriptors, WriterModel, SvmGrid, ClassifierError, rbf_kernel, resolve_gamma, \
    class_weighted_C, select_parameters, train_writer_model, train_ovr_svm, save_models, load_model, load_models
from .fusion import ScoreVector, Prediction, NoEvidenceError, weight_descriptors, score_fragment, score_fragments, \
    fuse_word, fuse_page, predict, evaluate_topk, confusion_counts, report_frame, write_report, write_summary
