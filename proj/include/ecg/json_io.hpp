#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecg/evaluation.hpp"
#include "ecg/fusion.hpp"
#include "ecg/measurement.hpp"
#include "ecg/preprocessing.hpp"
#include "ecg/rules.hpp"
#include "ecg/synth.hpp"

namespace ecg::io {

using nlohmann::json;

json to_json(const CycleFiducials& f, double sample_rate_hz);
/// Per lead: arrays of fiducial indices and times in ms (null where absent).
json to_json(const DelineatedRecord& d);
json to_json(const synth::GroundTruth& truth, double sample_rate_hz);
/// Keys carry units, e.g. "t_QT_ms"; per-lead amplitudes under "leads".
json to_json(const MeasurementSet& m);
json to_json(const Condition& c);
/// {category: {fired, rule, evidence: [...]}} for every rule-covered category.
json to_json(const RuleOutput& out, const LabelCatalog& catalog);
json to_json(const EvaluationReport& r);
json to_json(const std::vector<MislabelEntry>& report);

/// A trained model: fusion vector plus, when present, the meta-learner.
struct ModelFile {
    FusionModel fusion;
    std::optional<MetaLearner> meta;
    std::vector<std::string> feature_names;
    std::vector<std::string> categories;
};

json to_json(const ModelFile& m);
/// Throws ParseError on a malformed document.
ModelFile model_from_json(const json& j);

void write_json(const std::filesystem::path& path, const json& j);
/// Throws ParseError.
json read_json(const std::filesystem::path& path);

/// epoch,loss rows.
void write_history_csv(const std::filesystem::path& path, const std::vector<double>& history);

/// record_id followed by one probability column per category.
void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& record_ids,
                           const Matrix& y_hat, const LabelCatalog& catalog);

}  // namespace ecg::io
