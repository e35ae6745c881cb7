#include "ecg/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "ecg/errors.hpp"

namespace ecg {

BinaryMatrix binarize(const Matrix& y_hat, double threshold) {
    BinaryMatrix out;
    out.reserve(y_hat.size());
    for (const auto& row : y_hat) {
        std::vector<std::uint8_t> b(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) b[i] = row[i] > threshold ? 1 : 0;
        out.push_back(std::move(b));
    }
    return out;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

EvaluationReport compute_metrics(const BinaryMatrix& pred, const BinaryMatrix& y,
                                 const std::vector<std::string>& names) {
    if (pred.size() != y.size()) throw ShapeMismatch("prediction and label row counts differ");
    const std::size_t n = y.empty() ? names.size() : y.front().size();
    if (!names.empty() && names.size() != n) throw ShapeMismatch("category name count differs from label width");

    EvaluationReport r;
    r.per_class.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.per_class[i].category = names.empty() ? std::to_string(i) : names[i];
    for (std::size_t row = 0; row < y.size(); ++row) {
        if (pred[row].size() != n || y[row].size() != n) throw ShapeMismatch("ragged prediction or label matrix");
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = r.per_class[i];
            const bool p = pred[row][i] != 0;
            const bool t = y[row][i] != 0;
            if (t) ++c.positives;
            if (p && t) ++c.tp;
            else if (p) ++c.fp;
            else if (t) ++c.fn;
        }
    }
    double recall_sum = 0.0, f1_sum = 0.0;
    std::size_t counted = 0;
    for (auto& c : r.per_class) {
        c.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
        c.f1 = ratio(2.0 * static_cast<double>(c.tp), static_cast<double>(2 * c.tp + c.fp + c.fn));
        r.tp += c.tp;
        r.fp += c.fp;
        r.fn += c.fn;
        if (c.positives == 0) continue;
        recall_sum += c.recall;
        f1_sum += c.f1;
        ++counted;
    }
    r.or_ = ratio(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fn));
    r.of1 = ratio(2.0 * static_cast<double>(r.tp), static_cast<double>(2 * r.tp + r.fp + r.fn));
    r.cr = ratio(recall_sum, static_cast<double>(counted));
    r.cf1 = ratio(f1_sum, static_cast<double>(counted));
    return r;
}

std::string_view disagreement_name(Disagreement d) {
    return d == Disagreement::rule_fired_unlabeled ? "rule_fired_unlabeled" : "labeled_rule_silent";
}

std::vector<MislabelEntry> mislabel_report(const std::vector<std::string>& ids, const std::vector<RuleOutput>& outs,
                                           const BinaryMatrix& labels, const LabelCatalog& catalog) {
    if (ids.size() != outs.size() || ids.size() != labels.size())
        throw ShapeMismatch("record ids, rule outputs and labels must have the same length");
    std::vector<MislabelEntry> report;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (labels[r].size() != catalog.size()) throw ShapeMismatch("label row width differs from the catalog");
        MislabelEntry entry{ids[r], {}};
        for (const auto& e : outs[r].evaluations) {
            auto it = catalog.rule_map.find(e.id);
            if (it == catalog.rule_map.end()) continue;
            const auto idx = it->second;
            const bool fired = e.fired();
            const bool labeled = labels[r][idx] != 0;
            if (fired == labeled) continue;
            MislabelFlag f;
            f.category = catalog.names[idx];
            f.rule = e.id;
            f.kind = fired ? Disagreement::rule_fired_unlabeled : Disagreement::labeled_rule_silent;
            if (const auto* clause = e.evidence()) {
                f.evidence = clause->conditions;
                f.margin = std::abs(clause->margin());
                if (!std::isfinite(f.margin)) f.margin = 0.0;
            }
            entry.flags.push_back(std::move(f));
        }
        std::stable_sort(entry.flags.begin(), entry.flags.end(),
                         [](const MislabelFlag& a, const MislabelFlag& b) { return a.margin > b.margin; });
        report.push_back(std::move(entry));
    }
    return report;
}

}  // namespace ecg
