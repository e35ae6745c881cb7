#include "ecg/pipeline.hpp"

namespace ecg {

RecordAnalysis analyze_record(const EcgRecord& record, const LabelCatalog& catalog, const PipelineOptions& o) {
    RecordAnalysis a;
    a.delineated = delineate_record(derive_augmented_leads(record), o.preprocess);
    a.measurements = aggregate_record(a.delineated, o.measurement);
    a.demographics = encode_demographics(record);
    a.rules = evaluate_rules(a.measurements, a.demographics, catalog, o.rules);
    return a;
}

}  // namespace ecg
