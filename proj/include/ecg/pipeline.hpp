#pragma once

#include "ecg/measurement.hpp"
#include "ecg/preprocessing.hpp"
#include "ecg/rules.hpp"
#include "ecg/signal_model.hpp"

namespace ecg {

struct PipelineOptions {
    PreprocessOptions preprocess;
    MeasurementOptions measurement;
    RuleConfig rules = RuleConfig::defaults();
};

struct RecordAnalysis {
    DelineatedRecord delineated;  // holds the 12-lead record
    MeasurementSet measurements;
    Demographics demographics;
    RuleOutput rules;
};

/// derive leads -> filter -> delineate -> measure -> rules.
RecordAnalysis analyze_record(const EcgRecord& record, const LabelCatalog& catalog,
                              const PipelineOptions& options = {});

}  // namespace ecg
