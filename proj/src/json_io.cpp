#include "ecg/json_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ecg/csv.hpp"
#include "ecg/errors.hpp"

namespace ecg::io {

namespace {

json index_or_null(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

// Fixed-precision rendering keeps outputs stable and readable.
double tidy(double v) {
    if (!std::isfinite(v)) return v;
    return std::round(v * 1e9) / 1e9;
}

}  // namespace

json to_json(const CycleFiducials& f, double fs) {
    const std::vector<std::pair<const char*, std::optional<std::size_t>>> fields = {
        {"Pon", f.p_on},   {"Ppeak", f.p_peak}, {"Poff", f.p_off}, {"QRSon", f.qrs_on},
        {"Q", f.q},        {"R", f.r},          {"S", f.s},        {"QRSoff", f.qrs_off},
        {"Ton", f.t_on},   {"Tpeak", f.t_peak}, {"Toff", f.t_off},
    };
    json idx = json::object(), ms = json::object();
    for (const auto& [name, v] : fields) {
        idx[name] = index_or_null(v);
        ms[name] = v ? json(tidy(static_cast<double>(*v) * 1000.0 / fs)) : json(nullptr);
    }
    return {{"index", idx}, {"ms", ms}};
}

json to_json(const DelineatedRecord& d) {
    const double fs = d.record.sample_rate_hz;
    json leads = json::object();
    for (std::size_t l = 0; l < d.record.num_leads(); ++l) {
        json cycles = json::array();
        for (const auto& c : d.cycles[l]) cycles.push_back(to_json(c, fs));
        leads[d.record.lead_names[l]] = {{"r_peaks", d.r_peaks[l]}, {"cycles", cycles}};
    }
    return {{"record_id", d.record.record_id}, {"sample_rate_hz", fs}, {"anchors", d.anchors}, {"leads", leads}};
}

json to_json(const synth::GroundTruth& truth, double fs) {
    json cycles = json::array();
    for (const auto& c : truth.cycles) cycles.push_back(to_json(c, fs));
    return {{"sample_rate_hz", fs}, {"r_peaks", truth.r_peaks}, {"cycles", cycles}};
}

json to_json(const MeasurementSet& m) {
    json leads = json::object();
    for (std::size_t l = 0; l < m.lead_names.size(); ++l) {
        json lead = json::object();
        for (std::size_t a = 0; a < kAmpNames.size(); ++a)
            lead["A_" + std::string(kAmpNames[a]) + "_mv"] =
                m.leads[l].amplitude_mv[a] ? json(tidy(*m.leads[l].amplitude_mv[a])) : json(nullptr);
        lead["cycles"] = m.leads[l].cycles;
        leads[m.lead_names[l]] = lead;
    }
    auto opt = [](const std::optional<double>& v) { return v ? json(tidy(*v)) : json(nullptr); };
    return {
        {"leads", leads},
        {"t_PR_ms", opt(m.t_pr_ms)},
        {"t_QT_ms", opt(m.t_qt_ms)},
        {"t_Q_ms", opt(m.t_q_ms)},
        {"heart_rate_bpm", opt(m.heart_rate_bpm)},
        {"std_PP_ms", opt(m.std_pp_ms)},
        {"mean_RR_ms", opt(m.mean_rr_ms)},
        {"qtc", opt(m.qtc)},
        {"cycles", m.cycles},
    };
}

json to_json(const Condition& c) {
    json j = {
        {"measurement", c.quantity},
        {"value", c.value ? json(tidy(*c.value)) : json(nullptr)},
        {"op", std::string(cmp_symbol(c.op))},
        {"threshold", c.threshold},
        {"satisfied", c.satisfied()},
    };
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

json to_json(const RuleOutput& out, const LabelCatalog& catalog) {
    json j = json::object();
    for (const auto& e : out.evaluations) {
        auto it = catalog.rule_map.find(e.id);
        if (it == catalog.rule_map.end()) continue;
        json evidence = json::array();
        if (const auto* clause = e.evidence())
            for (const auto& c : clause->conditions) evidence.push_back(to_json(c));
        j[catalog.names[it->second]] = {
            {"fired", e.fired() ? 1 : 0},
            {"rule", std::string(rule_slug(e.id))},
            {"abstained", e.abstained()},
            {"evidence", evidence},
        };
    }
    return j;
}

json to_json(const EvaluationReport& r) {
    json per_class = json::array();
    for (const auto& c : r.per_class)
        per_class.push_back({{"category", c.category},
                             {"tp", c.tp},
                             {"fp", c.fp},
                             {"fn", c.fn},
                             {"positives", c.positives},
                             {"recall", tidy(c.recall)},
                             {"f1", tidy(c.f1)}});
    return {{"OF1", tidy(r.of1)}, {"CF1", tidy(r.cf1)}, {"OR", tidy(r.or_)},        {"CR", tidy(r.cr)},
            {"threshold", r.threshold}, {"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"per_class", per_class}};
}

json to_json(const std::vector<MislabelEntry>& report) {
    json records = json::array();
    for (const auto& e : report) {
        json flags = json::array();
        for (const auto& f : e.flags) {
            json evidence = json::array();
            for (const auto& c : f.evidence) evidence.push_back(to_json(c));
            flags.push_back({{"category", f.category},
                             {"rule", std::string(rule_slug(f.rule))},
                             {"kind", std::string(disagreement_name(f.kind))},
                             {"margin", tidy(f.margin)},
                             {"evidence", evidence}});
        }
        records.push_back({{"record_id", e.record_id}, {"flags", flags}});
    }
    return records;
}

// ---- model file ---------------------------------------------------------------

json to_json(const ModelFile& m) {
    const auto& f = m.fusion;
    json j = {
        {"catalog_hash", f.catalog_hash}, {"categories", m.categories}, {"w", f.w},
        {"mask", f.mask},                 {"lambda", f.lambda},         {"class_weights", f.class_weights},
        {"seed", f.seed},
    };
    if (m.meta) {
        j["meta_learner"] = {
            {"feature_names", m.feature_names},
            {"feature_mean", m.meta->feature_mean},
            {"feature_scale", m.meta->feature_scale},
            {"weights", m.meta->weights},
            {"bias", m.meta->bias},
        };
    } else {
        j["meta_learner"] = nullptr;
    }
    return j;
}

ModelFile model_from_json(const json& j) {
    try {
        ModelFile m;
        auto& f = m.fusion;
        f.catalog_hash = j.at("catalog_hash").get<std::string>();
        m.categories = j.at("categories").get<std::vector<std::string>>();
        f.w = j.at("w").get<std::vector<double>>();
        f.mask = j.at("mask").get<std::vector<std::uint8_t>>();
        f.lambda = j.at("lambda").get<double>();
        f.class_weights = j.at("class_weights").get<std::vector<double>>();
        f.seed = j.at("seed").get<std::uint64_t>();
        f.validate();
        const auto& ml = j.at("meta_learner");
        if (!ml.is_null()) {
            MetaLearner meta;
            m.feature_names = ml.at("feature_names").get<std::vector<std::string>>();
            meta.feature_mean = ml.at("feature_mean").get<std::vector<double>>();
            meta.feature_scale = ml.at("feature_scale").get<std::vector<double>>();
            meta.weights = ml.at("weights").get<Matrix>();
            meta.bias = ml.at("bias").get<std::vector<double>>();
            if (meta.bias.size() != f.size() || meta.weights.size() != f.size())
                throw ParseError("meta-learner category count differs from the fusion vector");
            m.meta = std::move(meta);
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    } catch (const ShapeMismatch& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    } catch (const InvalidInput& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
}

// ---- files --------------------------------------------------------------------

void write_json(const std::filesystem::path& path, const json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_history_csv(const std::filesystem::path& path, const std::vector<double>& history) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "epoch,loss\n" << std::setprecision(17);
    for (std::size_t i = 0; i < history.size(); ++i) out << i << "," << history[i] << "\n";
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<std::string>& ids, const Matrix& y_hat,
                           const LabelCatalog& catalog) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "record_id";
    for (const auto& n : catalog.names) out << "," << csv::escape(n);
    out << "\n" << std::setprecision(10);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        out << csv::escape(ids[r]);
        for (double v : y_hat[r]) out << "," << v;
        out << "\n";
    }
}

}  // namespace ecg::io
