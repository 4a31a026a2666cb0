"""Stepwise edge selection for Gaussian graphical models.

A forward step adds the strongest residual-correlation pair, a backward
step prunes the weakest partialled-out pair, and the surviving
neighborhoods yield a sparse precision-matrix estimate.  Includes
synthetic model generators, K-fold threshold selection, recovery and
distance metrics, an LDA pipeline, and a benchmarking CLI.
"""

from .errors import (ContractViolation, CycleDetected, DegenerateResidual,
                     IterationLimit, NotPositiveDefinite)
from .models import (EdgeSet, PrecisionModel, SampleSet, gen_ar1, gen_bg,
                     gen_nn2, sample_mvn, support_of)
from .stepwise import (CandidateScore, GsaFit, NeighborhoodSystem, ScanCache,
                       Thresholds, assemble_omega, backward_scan, default_cap,
                       forward_scan, partial_corr_oracle, residual_for_node,
                       run_gsa)
from .crossval import (CvGrid, CvResult, FoldPlan, cv_score, default_grid,
                       make_folds, predict_validation, select_thresholds)
from .metrics import (ConfusionCounts, ReplicateRecord, SummaryRow, aggregate,
                      confusion, frobenius_distance, kl_divergence, mcc,
                      normalized_kl, repair_pd, sensitivity, specificity,
                      zero_frequency_matrix)
from .classify import (LabeledDataset, LdaModel, LdaRepetition,
                       classification_counts, lda_fit, lda_predict, lda_score,
                       make_two_class_fixture, run_lda_repetitions,
                       split_train_test, standardize, t_screen)
from .bench import (CampaignResult, CampaignSpec, ModelSpec, run_campaign,
                    score_estimate, write_campaign)
from .serialize import load_example16

__version__ = "0.1.0"

__all__ = [
    "CampaignResult", "CampaignSpec", "CandidateScore", "ConfusionCounts",
    "ContractViolation", "CvGrid", "CvResult", "CycleDetected",
    "DegenerateResidual", "EdgeSet", "FoldPlan", "GsaFit", "IterationLimit",
    "LabeledDataset", "LdaModel", "LdaRepetition", "ModelSpec",
    "NeighborhoodSystem", "NotPositiveDefinite", "PrecisionModel",
    "ReplicateRecord", "SampleSet", "ScanCache", "SummaryRow", "Thresholds",
    "aggregate", "assemble_omega", "backward_scan", "classification_counts",
    "confusion", "cv_score", "default_cap", "default_grid",
    "forward_scan", "frobenius_distance", "gen_ar1", "gen_bg", "gen_nn2",
    "kl_divergence", "lda_fit", "lda_predict", "lda_score", "load_example16",
    "make_folds", "make_two_class_fixture", "mcc", "normalized_kl",
    "partial_corr_oracle", "predict_validation", "repair_pd",
    "residual_for_node", "run_campaign", "run_gsa", "run_lda_repetitions",
    "sample_mvn", "score_estimate", "select_thresholds", "sensitivity",
    "specificity", "split_train_test", "standardize", "support_of",
    "t_screen", "write_campaign", "zero_frequency_matrix",
]
