#pragma once

#include <vector>

#include "ecg/fusion.hpp"

namespace ecg {

struct SuperLearnerOptions {
    double lambda = 1.0;
    MetaLearnerOptions meta;
    FusionTrainOptions fusion;
    /// Folds used to produce held-out meta predictions for fitting w.
    std::size_t oof_folds = 2;
};

struct SuperLearner {
    MetaLearner meta;
    FusionModel fusion;
    std::vector<double> history;
};

/// Fits the meta-learner on every row, then fits w on out-of-fold meta
/// predictions; in-sample predictions would make the meta side look perfect.
/// Throws NoLabels, ShapeMismatch or DegenerateFeatures.
SuperLearner train_super_learner(const Matrix& features, const Matrix& l_rule, const BinaryMatrix& labels,
                                 const std::vector<std::uint8_t>& mask, const SuperLearnerOptions& options = {});

/// Fused prediction per row.
Matrix predict_super_learner(const SuperLearner& model, const Matrix& features, const Matrix& l_rule);

Matrix to_matrix(const BinaryMatrix& b);

}  // namespace ecg
