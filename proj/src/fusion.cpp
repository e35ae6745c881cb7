#include "ecg/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ecg/csv.hpp"
#include "ecg/errors.hpp"

namespace ecg {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw ShapeMismatch(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                            std::to_string(want));
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon); }

}  // namespace

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ---- model --------------------------------------------------------------------

FusionModel FusionModel::initial(std::vector<std::uint8_t> mask, std::vector<double> weights, double lambda) {
    FusionModel m;
    m.w.assign(mask.size(), 0.0);
    if (weights.empty()) weights.assign(mask.size(), 1.0);
    m.mask = std::move(mask);
    m.class_weights = std::move(weights);
    m.lambda = lambda;
    m.validate();
    return m;
}

void FusionModel::validate() const {
    require_size(w.size(), mask.size(), "w");
    require_size(class_weights.size(), mask.size(), "class_weights");
    if (!(lambda >= 0.0)) throw InvalidInput("lambda must be non-negative");
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] > 1) throw InvalidInput("mask entries must be 0 or 1");
        if (!(class_weights[i] > 0.0)) throw InvalidInput("class weights must be positive");
        if (!mask[i] && w[i] != 0.0) throw InvalidInput("w must be 0 at unmasked categories");
    }
}

std::vector<double> fuse(const std::vector<double>& h, const std::vector<double>& l, const FusionModel& model) {
    require_size(h.size(), model.size(), "h_dl");
    require_size(l.size(), model.size(), "l_rule");
    std::vector<double> y(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!model.mask[i]) {
            y[i] = h[i];
            continue;
        }
        const double s = sigmoid(model.w[i]);
        y[i] = h[i] * s + l[i] * (1.0 - s);
    }
    return y;
}

// ---- loss ---------------------------------------------------------------------

double weighted_bce(const std::vector<double>& y, const std::vector<double>& p, const std::vector<double>& cw) {
    require_size(p.size(), y.size(), "y_hat");
    require_size(cw.size(), y.size(), "class_weights");
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double q = clamp_probability(p[i]);
        loss -= cw[i] * y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
    }
    return loss;
}

std::vector<double> weighted_bce_gradient(const std::vector<double>& y, const std::vector<double>& p,
                                          const std::vector<double>& cw) {
    require_size(p.size(), y.size(), "y_hat");
    require_size(cw.size(), y.size(), "class_weights");
    std::vector<double> g(y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (p[i] <= kProbabilityEpsilon || p[i] >= 1.0 - kProbabilityEpsilon) continue;
        g[i] = -cw[i] * y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i]);
    }
    return g;
}

std::vector<double> class_weights(const BinaryMatrix& labels) {
    if (labels.empty()) throw NoLabels("class weights need at least one labelled record");
    const auto n = labels.front().size();
    std::vector<double> counts(n, 0.0);
    for (const auto& row : labels) {
        require_size(row.size(), n, "label row");
        for (std::size_t i = 0; i < n; ++i) counts[i] += row[i] ? 1.0 : 0.0;
    }
    const double m = static_cast<double>(labels.size());
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = m / std::max(counts[i], 1.0);
    return w;
}

double total_loss(const std::vector<double>& y, const std::vector<double>& y_hat, const std::vector<double>& l_rule,
                  const FusionModel& model) {
    require_size(y.size(), model.size(), "y");
    require_size(l_rule.size(), model.size(), "l_rule");
    const double data = weighted_bce(y, y_hat, model.class_weights);
    if (model.lambda == 0.0) return data;
    return data + model.lambda * weighted_bce(l_rule, y_hat, model.class_weights);
}

// ---- batches and training -----------------------------------------------------

void PredictionBatch::validate(std::size_t n) const {
    const auto b = h_dl.size();
    require_size(record_ids.size(), b, "record_ids");
    require_size(l_rule.size(), b, "l_rule rows");
    if (!y.empty()) require_size(y.size(), b, "y rows");
    for (std::size_t r = 0; r < b; ++r) {
        require_size(h_dl[r].size(), n, "h_dl row");
        require_size(l_rule[r].size(), n, "l_rule row");
        if (!y.empty()) require_size(y[r].size(), n, "y row");
        for (double v : h_dl[r])
            if (!(v >= 0.0 && v <= 1.0))
                throw RangeError("h_dl value " + std::to_string(v) + " outside [0, 1] for " + record_ids[r]);
    }
}

double batch_loss(const PredictionBatch& batch, const FusionModel& model) {
    if (!batch.has_labels()) throw NoLabels("batch has no ground truth");
    if (batch.size() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t r = 0; r < batch.size(); ++r)
        total += total_loss(batch.y[r], fuse(batch.h_dl[r], batch.l_rule[r], model), batch.l_rule[r], model);
    return total / static_cast<double>(batch.size());
}

std::vector<double> batch_loss_gradient(const PredictionBatch& batch, const FusionModel& model) {
    if (!batch.has_labels()) throw NoLabels("batch has no ground truth");
    const auto n = model.size();
    std::vector<double> grad(n, 0.0);
    if (batch.size() == 0) return grad;
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& h = batch.h_dl[r];
        const auto& l = batch.l_rule[r];
        const auto y_hat = fuse(h, l, model);
        auto g = weighted_bce_gradient(batch.y[r], y_hat, model.class_weights);
        if (model.lambda != 0.0) {
            const auto g_rule = weighted_bce_gradient(l, y_hat, model.class_weights);
            for (std::size_t i = 0; i < n; ++i) g[i] += model.lambda * g_rule[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!model.mask[i]) continue;
            const double s = sigmoid(model.w[i]);
            grad[i] += g[i] * (h[i] - l[i]) * s * (1.0 - s);
        }
    }
    for (auto& v : grad) v /= static_cast<double>(batch.size());
    return grad;
}

FusionTrainResult train_fusion(const PredictionBatch& batch, const FusionModel& model, const FusionTrainOptions& o) {
    if (!batch.has_labels()) throw NoLabels("fusion training needs ground-truth labels");
    model.validate();
    batch.validate(model.size());
    FusionTrainResult out{model, {}};
    auto& m = out.model;
    for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
        out.history.push_back(batch_loss(batch, m));
        const auto g = batch_loss_gradient(batch, m);
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m.mask[i]) m.w[i] -= o.learning_rate * g[i];
    }
    out.history.push_back(batch_loss(batch, m));
    return out;
}

// ---- meta-learner ---------------------------------------------------------------

std::vector<double> meta_features(const MeasurementSet& m, const Demographics& d) {
    std::vector<double> x;
    for (const auto& [name, v] : m.flatten()) x.push_back(v.value_or(0.0));
    x.insert(x.end(), d.age_vector.begin(), d.age_vector.end());
    x.push_back(d.gender_scalar);
    return x;
}

std::vector<std::string> meta_feature_names() {
    auto names = measurement_names();
    for (int i = 0; i < 10; ++i) names.push_back("age_" + std::to_string(i * 10) + "_" + std::to_string(i * 10 + 9));
    names.push_back("gender");
    return names;
}

std::vector<double> MetaLearner::predict(const std::vector<double>& x) const {
    require_size(x.size(), feature_mean.size(), "feature vector");
    std::vector<double> z(x.size());
    for (std::size_t f = 0; f < x.size(); ++f) z[f] = (x[f] - feature_mean[f]) / feature_scale[f];
    std::vector<double> p(bias.size());
    for (std::size_t c = 0; c < bias.size(); ++c) {
        double a = bias[c];
        for (std::size_t f = 0; f < z.size(); ++f) a += weights[c][f] * z[f];
        p[c] = sigmoid(a);
    }
    return p;
}

Matrix MetaLearner::predict(const Matrix& x) const {
    Matrix out;
    out.reserve(x.size());
    for (const auto& row : x) out.push_back(predict(row));
    return out;
}

MetaLearner train_meta_learner(const Matrix& x, const BinaryMatrix& y, const std::vector<double>& cw,
                               const MetaLearnerOptions& o) {
    if (y.empty() || x.empty()) throw NoLabels("meta-learner training needs labelled records");
    require_size(y.size(), x.size(), "label rows");
    const auto b = x.size();
    const auto nf = x.front().size();
    const auto nc = y.front().size();
    require_size(cw.size(), nc, "class_weights");

    MetaLearner m;
    m.feature_mean.assign(nf, 0.0);
    m.feature_scale.assign(nf, 1.0);
    for (const auto& row : x) {
        require_size(row.size(), nf, "feature row");
        for (std::size_t f = 0; f < nf; ++f) m.feature_mean[f] += row[f];
    }
    for (auto& v : m.feature_mean) v /= static_cast<double>(b);
    bool any_variance = false;
    for (std::size_t f = 0; f < nf; ++f) {
        double ss = 0.0;
        for (const auto& row : x) ss += (row[f] - m.feature_mean[f]) * (row[f] - m.feature_mean[f]);
        const double sd = std::sqrt(ss / static_cast<double>(b));
        if (sd > 1e-12) {
            m.feature_scale[f] = sd;
            any_variance = true;
        }
    }
    if (!any_variance) throw DegenerateFeatures("every feature is constant across the training records");

    Matrix z(b, std::vector<double>(nf));
    for (std::size_t r = 0; r < b; ++r)
        for (std::size_t f = 0; f < nf; ++f) z[r][f] = (x[r][f] - m.feature_mean[f]) / m.feature_scale[f];

    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> init(0.0, 0.01);
    m.weights.assign(nc, std::vector<double>(nf, 0.0));
    m.bias.assign(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
        double positives = 0.0;
        for (const auto& row : y) positives += row[c] ? 1.0 : 0.0;
        const double prior = std::clamp(positives / static_cast<double>(b), 1e-3, 1.0 - 1e-3);
        m.bias[c] = std::log(prior / (1.0 - prior));
        for (auto& v : m.weights[c]) v = init(rng);
    }

    std::vector<double> gw(nf);
    for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
        for (std::size_t c = 0; c < nc; ++c) {
            std::fill(gw.begin(), gw.end(), 0.0);
            double gb = 0.0;
            for (std::size_t r = 0; r < b; ++r) {
                double a = m.bias[c];
                for (std::size_t f = 0; f < nf; ++f) a += m.weights[c][f] * z[r][f];
                const double p = sigmoid(a);
                const double t = y[r][c] ? 1.0 : 0.0;
                // d/da of -(w t log p + (1 - t) log(1 - p))
                const double d = -cw[c] * t * (1.0 - p) + (1.0 - t) * p;
                gb += d;
                for (std::size_t f = 0; f < nf; ++f) gw[f] += d * z[r][f];
            }
            // Normalise by the summed sample weight so the step size does not
            // depend on how rare the class is.
            double mass = 0.0;
            for (std::size_t r = 0; r < b; ++r) mass += y[r][c] ? cw[c] : 1.0;
            for (std::size_t f = 0; f < nf; ++f)
                m.weights[c][f] -= o.learning_rate * (gw[f] / mass + o.l2 * m.weights[c][f]);
            m.bias[c] -= o.learning_rate * gb / mass;
        }
    }
    return m;
}

// ---- external predictions -----------------------------------------------------

PredictionBatch import_external_predictions(const std::filesystem::path& path, const LabelCatalog& catalog,
                                            const std::vector<std::string>& known_record_ids) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw ParseError(path.string() + ": empty predictions file");
    const auto& header = rows.front();
    const auto n = catalog.size();
    if (header.size() != n + 1)
        throw ParseError(path.string() + ": expected " + std::to_string(n + 1) + " columns, found " +
                         std::to_string(header.size()));
    if (header[0] != "record_id") throw ParseError(path.string() + ": first column must be record_id");
    std::vector<std::size_t> column_to_category(n);
    std::set<std::size_t> seen;
    for (std::size_t c = 1; c <= n; ++c) {
        const auto idx = catalog.index_of(header[c]);
        if (!idx) throw ParseError(path.string() + ": unknown category column '" + header[c] + "'");
        if (!seen.insert(*idx).second) throw ParseError(path.string() + ": duplicate column '" + header[c] + "'");
        column_to_category[c - 1] = *idx;
    }
    const std::set<std::string> known(known_record_ids.begin(), known_record_ids.end());
    std::set<std::string> ids;

    PredictionBatch batch;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const auto where = path.string() + " line " + std::to_string(r + 1);
        if (row.size() != n + 1) throw ParseError(where + ": expected " + std::to_string(n + 1) + " fields");
        if (!known.count(row[0])) throw ParseError(where + ": unknown record_id '" + row[0] + "'");
        if (!ids.insert(row[0]).second) throw ParseError(where + ": duplicate record_id '" + row[0] + "'");
        std::vector<double> h(n, 0.0);
        for (std::size_t c = 1; c <= n; ++c) {
            double v = 0.0;
            std::size_t used = 0;
            try {
                v = std::stod(row[c], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != row[c].size()) throw ParseError(where + ": '" + row[c] + "' is not a number");
            if (!(v >= 0.0 && v <= 1.0)) throw RangeError(where + ": probability " + row[c] + " outside [0, 1]");
            h[column_to_category[c - 1]] = v;
        }
        batch.record_ids.push_back(row[0]);
        batch.h_dl.push_back(std::move(h));
        batch.l_rule.emplace_back(n, 0.0);
    }
    return batch;
}

}  // namespace ecg
