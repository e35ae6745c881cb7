#pragma once

#include <string>
#include <vector>

#include "ecg/fusion.hpp"
#include "ecg/rules.hpp"

namespace ecg {

/// 1 where value > threshold (strictly).
BinaryMatrix binarize(const Matrix& y_hat, double threshold = 0.5);

struct ClassMetrics {
    std::string category;
    std::size_t tp = 0, fp = 0, fn = 0, positives = 0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct EvaluationReport {
    double of1 = 0.0;
    double cf1 = 0.0;
    double or_ = 0.0;
    double cr = 0.0;
    double threshold = 0.5;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::vector<ClassMetrics> per_class;
};

/// Micro (overall) and macro (per-class) recall and F1. Macro averages skip
/// classes without positives; 0/0 counts as 0. Throws ShapeMismatch.
EvaluationReport compute_metrics(const BinaryMatrix& pred, const BinaryMatrix& y,
                                 const std::vector<std::string>& category_names = {});

enum class Disagreement { rule_fired_unlabeled, labeled_rule_silent };
std::string_view disagreement_name(Disagreement d);

struct MislabelFlag {
    std::string category;
    RuleId rule{};
    Disagreement kind{};
    double margin = 0.0;          // how far the rule's evidence is from its threshold
    std::vector<Condition> evidence;
};

struct MislabelEntry {
    std::string record_id;
    std::vector<MislabelFlag> flags;  // strongest evidence first
};

/// Masked categories where the rule output and the label disagree. Records
/// without disagreements get an empty entry. Throws ShapeMismatch.
std::vector<MislabelEntry> mislabel_report(const std::vector<std::string>& record_ids,
                                           const std::vector<RuleOutput>& rule_outputs, const BinaryMatrix& labels,
                                           const LabelCatalog& catalog);

}  // namespace ecg
