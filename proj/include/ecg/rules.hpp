#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecg/measurement.hpp"
#include "ecg/rule_ids.hpp"
#include "ecg/signal_model.hpp"

namespace ecg {

enum class Cmp { gt, ge, lt, le };
std::string_view cmp_symbol(Cmp c);

/// One comparison "value op threshold" with its outcome.
struct Condition {
    std::string quantity;           // e.g. "A_R_V5_mv" or "|A_R_V1|/|A_S_V1|"
    std::optional<double> value;    // empty when a measurement is missing or guarded
    double threshold = 0.0;
    Cmp op = Cmp::gt;
    std::string note;               // why value is missing, if it is

    bool available() const { return value.has_value(); }
    bool satisfied() const;
    /// Signed distance past the threshold, scaled by max(|threshold|, 0.05);
    /// positive when satisfied.
    double margin() const;
};

/// Conjunction of conditions; a rule is a disjunction of clauses.
struct Clause {
    std::vector<Condition> conditions;
    bool satisfied() const;
    /// Smallest condition margin; -inf when any condition is unavailable.
    double margin() const;
};

struct RuleEvaluation {
    RuleId id{};
    std::vector<Clause> clauses;

    bool fired() const;
    /// True when no clause could be evaluated because of missing measurements.
    bool abstained() const;
    /// The satisfied clause with the largest margin when fired, otherwise the
    /// clause that came closest.
    const Clause* evidence() const;
};

enum class Quantifier { all, any };

struct RuleConfig {
    std::map<std::string, double> thresholds;
    std::map<std::string, Quantifier> quantifiers;

    /// The published thresholds with the default quantifiers.
    static RuleConfig defaults();
    double threshold(const std::string& key) const;
    Quantifier quantifier(const std::string& key) const;
    /// Accepts "<threshold key>" with a number, or "<quantifier key>" with
    /// "all"/"any". Throws ConfigError for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
};

struct RuleOutput {
    std::vector<std::uint8_t> l_rule;
    std::vector<std::uint8_t> mask;
    std::vector<RuleEvaluation> evaluations;  // all 15 rules in id order
    std::vector<RuleId> fired_rules;
};

/// Evaluates every rule. Gender is only used by the Sokolow-type clause and
/// makes it abstain when missing.
std::vector<RuleEvaluation> evaluate_rule_set(const MeasurementSet& m, Gender gender,
                                              const RuleConfig& config = RuleConfig::defaults());

/// Throws CatalogError when the catalog's rule map is invalid.
RuleOutput evaluate_rules(const MeasurementSet& m, const Demographics& demographics,
                          const LabelCatalog& catalog, const RuleConfig& config = RuleConfig::defaults());

std::vector<std::uint8_t> build_mask(const LabelCatalog& catalog);

}  // namespace ecg
