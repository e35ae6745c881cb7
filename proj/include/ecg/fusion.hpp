#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecg/measurement.hpp"
#include "ecg/signal_model.hpp"

namespace ecg {

using Matrix = std::vector<std::vector<double>>;
using BinaryMatrix = std::vector<std::vector<std::uint8_t>>;

inline constexpr double kProbabilityEpsilon = 1e-7;

double sigmoid(double x);

struct FusionModel {
    std::vector<double> w;               // trust in the deep side per category
    std::vector<std::uint8_t> mask;      // 1 where a rule covers the category
    double lambda = 1.0;
    std::vector<double> class_weights;
    std::uint64_t seed = 0;
    std::string catalog_hash;

    /// w = 0 (equal trust), unit class weights unless given.
    static FusionModel initial(std::vector<std::uint8_t> mask, std::vector<double> class_weights = {},
                               double lambda = 1.0);
    std::size_t size() const { return mask.size(); }
    /// Throws ShapeMismatch or InvalidInput.
    void validate() const;
};

/// mask * (h s(w) + l (1 - s(w))) + (1 - mask) * h. Throws ShapeMismatch.
std::vector<double> fuse(const std::vector<double>& h_dl, const std::vector<double>& l_rule, const FusionModel& model);

/// -sum_i [w_i y_i log p_i + (1 - y_i) log(1 - p_i)] with p clamped to
/// [eps, 1 - eps]. Throws ShapeMismatch.
double weighted_bce(const std::vector<double>& y, const std::vector<double>& y_hat,
                    const std::vector<double>& class_weights);

/// d weighted_bce / d y_hat; zero where the clamp is active.
std::vector<double> weighted_bce_gradient(const std::vector<double>& y, const std::vector<double>& y_hat,
                                          const std::vector<double>& class_weights);

/// w_i = M / max(M_i, 1). Throws NoLabels for an empty matrix.
std::vector<double> class_weights(const BinaryMatrix& labels);

/// L(y, y_hat) + lambda L(l_rule, y_hat) with the model's class weights.
double total_loss(const std::vector<double>& y, const std::vector<double>& y_hat,
                  const std::vector<double>& l_rule, const FusionModel& model);

struct PredictionBatch {
    std::vector<std::string> record_ids;
    Matrix h_dl;
    Matrix l_rule;
    Matrix y;  // empty when no ground truth

    std::size_t size() const { return h_dl.size(); }
    bool has_labels() const { return !y.empty(); }
    /// Throws ShapeMismatch or RangeError.
    void validate(std::size_t categories) const;
};

/// Mean total_loss over the batch, evaluated through fuse.
double batch_loss(const PredictionBatch& batch, const FusionModel& model);
/// Analytic d batch_loss / d w; zero at unmasked entries.
std::vector<double> batch_loss_gradient(const PredictionBatch& batch, const FusionModel& model);

struct FusionTrainOptions {
    double learning_rate = 0.5;
    std::size_t epochs = 500;
};

struct FusionTrainResult {
    FusionModel model;
    std::vector<double> history;  // batch loss before each epoch's update, then the final loss
};

/// Full-batch gradient descent on the masked entries of w with h_dl frozen.
/// Throws NoLabels when the batch has no ground truth.
FusionTrainResult train_fusion(const PredictionBatch& batch, const FusionModel& model,
                               const FusionTrainOptions& options = {});

// ---- reference meta-learner --------------------------------------------------

/// Flattened measurements (missing -> 0), then the age one-hot and gender scalar.
std::vector<double> meta_features(const MeasurementSet& m, const Demographics& demographics);
std::vector<std::string> meta_feature_names();

struct MetaLearnerOptions {
    double learning_rate = 0.5;
    std::size_t epochs = 400;
    double l2 = 1e-3;
    std::uint64_t seed = 0;
};

/// One logistic regression per category on standardised features.
struct MetaLearner {
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;
    Matrix weights;             // [category][feature]
    std::vector<double> bias;   // [category]

    std::vector<double> predict(const std::vector<double>& features) const;
    Matrix predict(const Matrix& features) const;
};

/// Trained with weighted_bce under the given class weights. Throws NoLabels or
/// DegenerateFeatures (every feature constant).
MetaLearner train_meta_learner(const Matrix& features, const BinaryMatrix& labels,
                               const std::vector<double>& class_weights, const MetaLearnerOptions& options = {});

/// Reads "record_id,<category>..." with one probability per category, in any
/// column order, and aligns columns to the catalog. Throws ParseError for a
/// wrong column set or unknown record id, RangeError outside [0, 1].
PredictionBatch import_external_predictions(const std::filesystem::path& path, const LabelCatalog& catalog,
                                            const std::vector<std::string>& known_record_ids);

}  // namespace ecg
