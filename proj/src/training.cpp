#include "ecg/training.hpp"

#include <algorithm>
#include <string>

#include "ecg/errors.hpp"

namespace ecg {

Matrix to_matrix(const BinaryMatrix& b) {
    Matrix m;
    m.reserve(b.size());
    for (const auto& row : b) m.emplace_back(row.begin(), row.end());
    return m;
}

SuperLearner train_super_learner(const Matrix& features, const Matrix& l_rule, const BinaryMatrix& labels,
                                 const std::vector<std::uint8_t>& mask, const SuperLearnerOptions& o) {
    const auto n = features.size();
    if (n == 0 || labels.empty()) throw NoLabels("training needs labelled rows");
    if (labels.size() != n || l_rule.size() != n)
        throw ShapeMismatch("features, rule outputs and labels differ in row count");

    const auto cw = class_weights(labels);
    SuperLearner out;
    out.meta = train_meta_learner(features, labels, cw, o.meta);

    // held-out meta predictions; a single fold or tiny sets fall back to in-sample
    const auto folds = std::min<std::size_t>(std::max<std::size_t>(o.oof_folds, 1), n);
    Matrix h(n);
    if (folds < 2) {
        h = out.meta.predict(features);
    } else {
        for (std::size_t f = 0; f < folds; ++f) {
            Matrix x;
            BinaryMatrix y;
            for (std::size_t i = 0; i < n; ++i)
                if (i % folds != f) {
                    x.push_back(features[i]);
                    y.push_back(labels[i]);
                }
            const auto m = train_meta_learner(x, y, class_weights(y), o.meta);
            for (std::size_t i = f; i < n; i += folds) h[i] = m.predict(features[i]);
        }
    }

    PredictionBatch batch{std::vector<std::string>(n), std::move(h), l_rule, to_matrix(labels)};
    auto initial = FusionModel::initial(mask, cw, o.lambda);
    initial.seed = o.meta.seed;
    auto trained = train_fusion(batch, initial, o.fusion);
    out.fusion = std::move(trained.model);
    out.history = std::move(trained.history);
    return out;
}

Matrix predict_super_learner(const SuperLearner& model, const Matrix& features, const Matrix& l_rule) {
    if (features.size() != l_rule.size()) throw ShapeMismatch("features and rule outputs differ in row count");
    Matrix out;
    out.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        out.push_back(fuse(model.meta.predict(features[i]), l_rule[i], model.fusion));
    return out;
}

}  // namespace ecg
