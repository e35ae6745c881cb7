// ecg_rulekit command-line front end.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ecg/config.hpp"
#include "ecg/errors.hpp"
#include "ecg/evaluation.hpp"
#include "ecg/fusion.hpp"
#include "ecg/json_io.hpp"
#include "ecg/pipeline.hpp"
#include "ecg/svg.hpp"
#include "ecg/synth.hpp"
#include "ecg/training.hpp"

namespace fs = std::filesystem;
using namespace ecg;
using io::json;

namespace {

// ---- settings ---------------------------------------------------------------

struct Settings {
    std::string config_file;
    std::vector<std::pair<std::string, CLI::Option*>> flags;
    std::map<std::string, std::string> flag_values;
    std::vector<std::string> rule_overrides;
    unsigned threads = 0;

    void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        auto* opt = app.add_option(flag, flag_values[key], help);
        flags.emplace_back(key, opt);
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!config_file.empty()) apply_config_file(c, config_file);
        for (const auto& [key, opt] : flags)
            if (opt->count() > 0) apply_config_value(c, key, flag_values.at(key));
        for (const auto& kv : rule_overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--rule expects KEY=VALUE, got '" + kv + "'");
            c.rule_overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        if (!c.seed) {
            if (const char* env = std::getenv("ECG_RULEKIT_SEED"); env && *env) apply_config_value(c, "seed", env);
        }
        c.validate();
        return c;
    }
};

LabelCatalog resolve_catalog(const RunConfig& c) {
    if (c.catalog.empty()) return synth::default_catalog();
    const auto rule_map = c.rule_map.empty() ? c.catalog.parent_path() / "rule_map.csv" : c.rule_map;
    return load_catalog(c.catalog, rule_map);
}

PipelineOptions pipeline_options(const RunConfig& c) {
    PipelineOptions p;
    p.rules = c.rule_config();
    return p;
}

// ---- record batches ---------------------------------------------------------

struct Job {
    ManifestEntry entry;
    fs::path path;
};

std::vector<Job> collect_jobs(const RunConfig& c, const std::vector<std::string>& files) {
    std::map<std::string, ManifestEntry> manifest;
    if (!c.manifest.empty())
        for (auto& e : load_manifest(c.manifest)) manifest.emplace(e.record_id, std::move(e));

    std::vector<Job> jobs;
    if (!files.empty()) {
        for (const auto& f : files) {
            const auto id = fs::path(f).stem().string();
            auto it = manifest.find(id);
            ManifestEntry entry = it != manifest.end() ? it->second : ManifestEntry{id, std::nullopt, Gender::missing, std::nullopt};
            jobs.push_back({std::move(entry), f});
        }
    } else {
        if (c.manifest.empty()) throw ConfigError("give record files or --manifest");
        const auto dir = c.data_dir.empty() ? c.manifest.parent_path() : c.data_dir;
        for (const auto& [id, e] : manifest) jobs.push_back({e, dir / (id + ".csv")});
    }
    std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.entry.record_id < b.entry.record_id; });
    for (std::size_t i = 1; i < jobs.size(); ++i)
        if (jobs[i].entry.record_id == jobs[i - 1].entry.record_id)
            throw ConfigError("duplicate record id " + jobs[i].entry.record_id);
    return jobs;
}

template <class T>
struct Batch {
    std::vector<std::string> ids;
    std::vector<T> values;
    std::size_t failures = 0;
};

// Runs fn over every job, possibly on several threads. Results keep job order
// (record_id); failed records are reported and dropped.
template <class Fn>
auto run_batch(const std::vector<Job>& jobs, unsigned threads, Fn fn) {
    using T = std::invoke_result_t<Fn, const Job&>;
    std::vector<std::optional<T>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next++; i < jobs.size(); i = next++) {
            try {
                results[i] = fn(jobs[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs.size(), 1)));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    Batch<T> out;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i]) {
            out.ids.push_back(jobs[i].entry.record_id);
            out.values.push_back(std::move(*results[i]));
        } else {
            ++out.failures;
            std::cerr << "error: record " << jobs[i].entry.record_id << ": " << errors[i] << "\n";
        }
    }
    return out;
}

EcgRecord load(const Job& job, const RunConfig& c, const LabelCatalog& catalog) {
    LoadOptions lo;
    lo.sample_rate_hz = c.sample_rate_hz;
    lo.unit_voltage_mv = c.unit_voltage_mv;
    lo.catalog = &catalog;
    return load_record(job.path, job.entry, lo);
}

void emit_json(const RunConfig& c, const json& j) {
    if (c.out.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        if (c.out.has_parent_path()) fs::create_directories(c.out.parent_path());
        io::write_json(c.out, j);
    }
}

fs::path require_out_dir(const RunConfig& c) {
    if (c.out.empty()) throw ConfigError("--out directory is required");
    fs::create_directories(c.out);
    return c.out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

std::vector<std::string> label_names(const std::vector<std::uint8_t>& labels, const LabelCatalog& catalog) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k]) names.push_back(catalog.names[k]);
    return names;
}

// Leads mentioned in rule evidence, e.g. "A_R_V5_mv" -> V5.
std::vector<std::string> evidence_leads(const MislabelEntry& entry) {
    std::set<std::string> found;
    for (const auto& flag : entry.flags)
        for (const auto& cond : flag.evidence)
            for (auto lead : kStandardLeads)
                if (cond.quantity.find("_" + std::string(lead) + "_") != std::string::npos) found.insert(std::string(lead));
    std::vector<std::string> leads;
    for (auto lead : kStandardLeads)
        if (found.count(std::string(lead))) leads.emplace_back(lead);
    if (leads.empty()) leads = {"II"};
    if (std::find(leads.begin(), leads.end(), "II") == leads.end()) leads.insert(leads.begin(), "II");
    return leads;
}

// ---- subcommands ------------------------------------------------------------

struct SynthArgs {
    std::size_t records = 50;
    int rule = 0;
    bool negative = false;
    double noise_mv = 0.01;
    double rare = 0.01;
    double duration_s = 10.0;
};

int cmd_synth(const RunConfig& c, const SynthArgs& a) {
    const auto dir = require_out_dir(c);
    fs::create_directories(dir / "truth");
    const auto seed = c.seed.value_or(1);

    synth::Corpus corpus;
    if (a.rule != 0) {
        const auto rc = synth::make_rule_case(a.rule, !a.negative);
        synth::SynthOptions so;
        so.sample_rate_hz = c.sample_rate_hz;
        so.unit_voltage_mv = c.unit_voltage_mv;
        so.noise_std_mv = a.noise_mv;
        so.seed = seed;
        std::ostringstream id;
        id << "rule" << std::setw(2) << std::setfill('0') << a.rule << (a.negative ? "_clear" : "_fire");
        so.record_id = id.str();
        auto sr = synth::generate_record(rc.cycles, so);
        sr.record.gender = rc.gender;
        sr.record.age_years = rc.age_years;
        corpus.catalog = synth::default_catalog();
        std::vector<std::uint8_t> labels(corpus.catalog.size(), 0);
        if (!a.negative) labels[corpus.catalog.rule_map.at(static_cast<RuleId>(a.rule))] = 1;
        sr.record.labels = labels;
        corpus.records.push_back(std::move(sr.record));
        corpus.truth.push_back(std::move(sr.truth));
    } else {
        synth::CorpusOptions co;
        co.records = a.records;
        co.seed = seed;
        co.noise_std_mv = a.noise_mv;
        co.rare_prevalence = a.rare;
        co.duration_s = a.duration_s;
        co.render.sample_rate_hz = c.sample_rate_hz;
        co.render.unit_voltage_mv = c.unit_voltage_mv;
        corpus = synth::make_corpus(co);
    }

    std::vector<ManifestEntry> manifest;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& rec = corpus.records[i];
        write_record(dir / (rec.record_id + ".csv"), rec);
        io::write_json(dir / "truth" / (rec.record_id + ".json"), io::to_json(corpus.truth[i], rec.sample_rate_hz));
        manifest.push_back({rec.record_id, rec.age_years, rec.gender,
                            rec.labels ? std::optional(label_names(*rec.labels, corpus.catalog)) : std::nullopt});
    }
    write_manifest(dir / "manifest.csv", manifest);
    write_catalog(dir / "categories.csv", dir / "rule_map.csv", corpus.catalog);
    std::cout << "wrote " << corpus.records.size() << " records to " << dir.string() << "\n";
    return 0;
}

struct PlotArgs {
    std::vector<std::string> leads = {"II", "V1", "V5"};
    double start_s = 0.0;
    double duration_s = 3.0;
    std::string plot_dir;
};

PlotOptions plot_options(const PlotArgs& a, std::string title) {
    PlotOptions p;
    p.leads = a.leads;
    p.start_s = a.start_s;
    p.duration_s = a.duration_s;
    p.title = std::move(title);
    return p;
}

int cmd_delineate(const RunConfig& c, const std::vector<std::string>& files, const PlotArgs& plot, unsigned threads) {
    const auto catalog = resolve_catalog(c);
    const auto jobs = collect_jobs(c, files);
    if (!plot.plot_dir.empty()) fs::create_directories(plot.plot_dir);
    const auto opts = pipeline_options(c);
    auto batch = run_batch(jobs, threads, [&](const Job& job) {
        const auto d = delineate_record(derive_augmented_leads(load(job, c, catalog)), opts.preprocess);
        if (!plot.plot_dir.empty())
            write_text(fs::path(plot.plot_dir) / (job.entry.record_id + ".svg"),
                       delineation_svg(d, plot_options(plot, job.entry.record_id)));
        return io::to_json(d);
    });
    json out = json::object();
    for (std::size_t i = 0; i < batch.ids.size(); ++i) out[batch.ids[i]] = std::move(batch.values[i]);
    emit_json(c, out);
    return batch.failures ? 1 : 0;
}

int cmd_measure(const RunConfig& c, const std::vector<std::string>& files, unsigned threads) {
    const auto catalog = resolve_catalog(c);
    const auto jobs = collect_jobs(c, files);
    const auto opts = pipeline_options(c);
    auto batch = run_batch(jobs, threads, [&](const Job& job) {
        const auto d = delineate_record(derive_augmented_leads(load(job, c, catalog)), opts.preprocess);
        return io::to_json(aggregate_record(d, opts.measurement));
    });
    json out = json::object();
    for (std::size_t i = 0; i < batch.ids.size(); ++i) out[batch.ids[i]] = std::move(batch.values[i]);
    emit_json(c, out);
    return batch.failures ? 1 : 0;
}

// What train/predict/rules need from one record; the filtered signals are
// dropped right away to keep large batches small.
struct RecordSummary {
    std::vector<double> features;
    RuleOutput rules;
    std::optional<std::vector<std::uint8_t>> labels;
};

Batch<RecordSummary> summarise(const RunConfig& c, const LabelCatalog& catalog, const std::vector<Job>& jobs,
                               unsigned threads) {
    const auto opts = pipeline_options(c);
    return run_batch(jobs, threads, [&](const Job& job) {
        const auto rec = load(job, c, catalog);
        auto a = analyze_record(rec, catalog, opts);
        return RecordSummary{meta_features(a.measurements, a.demographics), std::move(a.rules), rec.labels};
    });
}

int cmd_rules(const RunConfig& c, const std::vector<std::string>& files, unsigned threads) {
    const auto catalog = resolve_catalog(c);
    auto batch = summarise(c, catalog, collect_jobs(c, files), threads);
    json out = json::object();
    for (std::size_t i = 0; i < batch.ids.size(); ++i) out[batch.ids[i]] = io::to_json(batch.values[i].rules, catalog);
    emit_json(c, out);
    return batch.failures ? 1 : 0;
}

// Rows of an external prediction file, aligned to ids. Ids missing from the
// file are an error.
Matrix align_external(const fs::path& path, const LabelCatalog& catalog, const std::vector<std::string>& ids) {
    const auto ext = import_external_predictions(path, catalog, ids);
    std::map<std::string, std::size_t> row;
    for (std::size_t i = 0; i < ext.record_ids.size(); ++i) row[ext.record_ids[i]] = i;
    Matrix h;
    for (const auto& id : ids) {
        auto it = row.find(id);
        if (it == row.end()) throw ParseError(path.string() + ": no prediction for record " + id);
        h.push_back(ext.h_dl[it->second]);
    }
    return h;
}

int cmd_train(const RunConfig& c, const std::vector<std::string>& files, unsigned threads) {
    const auto catalog = resolve_catalog(c);
    auto batch = summarise(c, catalog, collect_jobs(c, files), threads);

    std::vector<std::string> ids;
    Matrix features, l_rule;
    BinaryMatrix labels;
    std::size_t failures = batch.failures;
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        auto& v = batch.values[i];
        if (!v.labels) {
            std::cerr << "error: record " << batch.ids[i] << ": no labels in the manifest\n";
            ++failures;
            continue;
        }
        ids.push_back(batch.ids[i]);
        features.push_back(std::move(v.features));
        l_rule.emplace_back(v.rules.l_rule.begin(), v.rules.l_rule.end());
        labels.push_back(*v.labels);
    }
    if (ids.empty()) throw NoLabels("no labelled records to train on");

    io::ModelFile model;
    model.categories = catalog.names;
    std::vector<double> history;
    const auto mask = build_mask(catalog);
    FusionTrainOptions fo{c.learning_rate, c.epochs};
    if (!c.external_predictions.empty()) {
        PredictionBatch pb{ids, align_external(c.external_predictions, catalog, ids), l_rule, to_matrix(labels)};
        auto init = FusionModel::initial(mask, class_weights(labels), c.lambda);
        init.seed = c.seed.value_or(0);
        auto trained = train_fusion(pb, init, fo);
        model.fusion = std::move(trained.model);
        history = std::move(trained.history);
    } else {
        SuperLearnerOptions so;
        so.lambda = c.lambda;
        so.fusion = fo;
        so.meta.seed = c.seed.value_or(0);
        auto sl = train_super_learner(features, l_rule, labels, mask, so);
        model.fusion = std::move(sl.fusion);
        model.meta = std::move(sl.meta);
        model.feature_names = meta_feature_names();
        history = std::move(sl.history);
    }
    model.fusion.catalog_hash = catalog.hash();

    const auto dir = require_out_dir(c);
    io::write_json(dir / "model.json", io::to_json(model));
    io::write_history_csv(dir / "history.csv", history);
    std::cout << "trained on " << ids.size() << " records, final loss " << std::setprecision(6) << history.back()
              << "\n";
    return failures ? 1 : 0;
}

int cmd_predict(const RunConfig& c, const std::vector<std::string>& files, unsigned threads) {
    const auto catalog = resolve_catalog(c);
    if (c.model.empty()) throw ConfigError("--model is required");
    const auto model = io::model_from_json(io::read_json(c.model));
    if (model.categories != catalog.names || model.fusion.catalog_hash != catalog.hash())
        throw ConfigError("model was trained with a different label catalog");
    if (!model.meta && c.external_predictions.empty())
        throw ConfigError("model has no meta-learner; pass --external-predictions");

    auto batch = summarise(c, catalog, collect_jobs(c, files), threads);
    Matrix h, l_rule;
    if (!c.external_predictions.empty()) {
        h = align_external(c.external_predictions, catalog, batch.ids);
    } else {
        for (const auto& v : batch.values) h.push_back(model.meta->predict(v.features));
    }
    Matrix y_hat;
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        const auto& l = batch.values[i].rules.l_rule;
        y_hat.push_back(fuse(h[i], std::vector<double>(l.begin(), l.end()), model.fusion));
    }

    const auto dir = require_out_dir(c);
    json records = json::array();
    const auto pred = binarize(y_hat, c.threshold);
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        json probs = json::object();
        for (std::size_t k = 0; k < catalog.size(); ++k) probs[catalog.names[k]] = y_hat[i][k];
        records.push_back({{"record_id", batch.ids[i]},
                           {"y_hat", probs},
                           {"predicted", label_names(pred[i], catalog)},
                           {"rules_fired", label_names(batch.values[i].rules.l_rule, catalog)}});
    }
    io::write_json(dir / "predictions.json",
                   {{"threshold", c.threshold}, {"categories", catalog.names}, {"records", records}});
    io::write_predictions_csv(dir / "predictions.csv", batch.ids, y_hat, catalog);
    std::cout << "predicted " << batch.ids.size() << " records\n";
    return batch.failures ? 1 : 0;
}

void print_report(const EvaluationReport& r) {
    std::cout << std::fixed << std::setprecision(4);
    std::cout << std::left << std::setw(30) << "category" << std::right << std::setw(6) << "pos" << std::setw(6)
              << "tp" << std::setw(6) << "fp" << std::setw(6) << "fn" << std::setw(9) << "recall" << std::setw(9)
              << "f1" << "\n";
    for (const auto& m : r.per_class)
        std::cout << std::left << std::setw(30) << m.category << std::right << std::setw(6) << m.positives
                  << std::setw(6) << m.tp << std::setw(6) << m.fp << std::setw(6) << m.fn << std::setw(9) << m.recall
                  << std::setw(9) << m.f1 << "\n";
    std::cout << "\nOR  " << r.or_ << "\nOF1 " << r.of1 << "\nCR  " << r.cr << "\nCF1 " << r.cf1 << "\n";
}

int cmd_evaluate(const RunConfig& c, const std::string& predictions) {
    if (predictions.empty()) throw ConfigError("--predictions is required");
    if (c.manifest.empty()) throw ConfigError("--manifest with labels is required");
    const auto catalog = resolve_catalog(c);
    std::map<std::string, ManifestEntry> manifest;
    for (auto& e : load_manifest(c.manifest)) manifest.emplace(e.record_id, std::move(e));
    std::vector<std::string> ids;
    for (const auto& [id, e] : manifest) ids.push_back(id);

    const auto batch = import_external_predictions(predictions, catalog, ids);
    BinaryMatrix y;
    for (const auto& id : batch.record_ids) {
        const auto& e = manifest.at(id);
        if (!e.labels) throw NoLabels("record " + id + " has no labels in the manifest");
        y.push_back(encode_labels(*e.labels, catalog));
    }
    auto report = compute_metrics(binarize(batch.h_dl, c.threshold), y, catalog.names);
    report.threshold = c.threshold;
    print_report(report);
    if (!c.out.empty()) emit_json(c, io::to_json(report));
    return 0;
}

int cmd_mislabel(const RunConfig& c, const std::vector<std::string>& files, const PlotArgs& plot, unsigned threads) {
    const auto catalog = resolve_catalog(c);
    const auto jobs = collect_jobs(c, files);
    auto batch = summarise(c, catalog, jobs, threads);

    std::vector<std::string> ids;
    std::vector<RuleOutput> outs;
    BinaryMatrix labels;
    std::size_t failures = batch.failures;
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        if (!batch.values[i].labels) {
            std::cerr << "error: record " << batch.ids[i] << ": no labels in the manifest\n";
            ++failures;
            continue;
        }
        ids.push_back(batch.ids[i]);
        outs.push_back(std::move(batch.values[i].rules));
        labels.push_back(*batch.values[i].labels);
    }
    const auto report = mislabel_report(ids, outs, labels, catalog);
    emit_json(c, io::to_json(report));

    if (!plot.plot_dir.empty()) {
        fs::create_directories(plot.plot_dir);
        std::map<std::string, const Job*> by_id;
        for (const auto& j : jobs) by_id[j.entry.record_id] = &j;
        const auto opts = pipeline_options(c);
        for (const auto& entry : report) {
            if (entry.flags.empty()) continue;
            std::string title = entry.record_id + ":";
            for (const auto& f : entry.flags) title += " " + f.category + " (" + std::string(disagreement_name(f.kind)) + ")";
            auto p = plot_options(plot, title);
            p.leads = evidence_leads(entry);
            const auto d = delineate_record(derive_augmented_leads(load(*by_id.at(entry.record_id), c, catalog)),
                                            opts.preprocess);
            write_text(fs::path(plot.plot_dir) / (entry.record_id + ".svg"), delineation_svg(d, p));
        }
    }
    std::size_t flagged = 0;
    for (const auto& e : report) flagged += e.flags.empty() ? 0 : 1;
    std::cerr << flagged << " of " << report.size() << " records flagged\n";
    return failures ? 1 : 0;
}

int cmd_plot(const RunConfig& c, const std::vector<std::string>& files, const PlotArgs& plot) {
    const auto catalog = resolve_catalog(c);
    const auto jobs = collect_jobs(c, files);
    if (jobs.size() != 1) throw ConfigError("plot takes exactly one record");
    const auto d = delineate_record(derive_augmented_leads(load(jobs[0], c, catalog)), pipeline_options(c).preprocess);
    const auto svg = delineation_svg(d, plot_options(plot, jobs[0].entry.record_id));
    if (c.out.empty()) {
        std::cout << svg;
    } else {
        write_text(c.out, svg);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG rule inference, fusion and evaluation toolkit", "ecg_rulekit"};
    app.require_subcommand(1);
    app.fallthrough();

    Settings s;
    app.add_option("--config", s.config_file, "key = value config file; flags override it");
    s.add(app, "--data", "data", "directory holding <record_id>.csv files");
    s.add(app, "--manifest", "manifest", "manifest CSV (record_id,age,gender,labels)");
    s.add(app, "--catalog", "catalog", "category CSV; built-in catalog when omitted");
    s.add(app, "--rule-map", "rule_map", "rule map CSV (default: rule_map.csv next to the catalog)");
    s.add(app, "--model", "model", "model.json written by train");
    s.add(app, "--lambda", "lambda", "weight of the rule-guided loss term");
    s.add(app, "--threshold", "threshold", "binarisation threshold in (0, 1)");
    s.add(app, "--seed", "seed", "random seed (falls back to ECG_RULEKIT_SEED)");
    s.add(app, "--out", "out", "output file or directory");
    s.add(app, "--external-predictions", "external_predictions", "CSV of deep-model probabilities");
    s.add(app, "--sample-rate", "sample_rate", "sampling rate in Hz");
    s.add(app, "--unit-voltage", "unit_voltage", "mV per ADC unit");
    s.add(app, "--lr", "learning_rate", "fusion learning rate");
    s.add(app, "--epochs", "epochs", "fusion epochs");
    app.add_option("--rule", s.rule_overrides, "rule threshold override KEY=VALUE, e.g. tachycardia.heart_rate_bpm=110");
    app.add_option("--threads", s.threads, "worker threads (0 = hardware concurrency)");

    std::vector<std::string> files;
    SynthArgs synth_args;
    PlotArgs plot_args;
    std::string predictions;

    auto* synth = app.add_subcommand("synth", "write a synthetic corpus or one rule case");
    synth->add_option("--records", synth_args.records, "corpus size");
    synth->add_option("--rule-case", synth_args.rule, "write the case for rule 1..15 instead of a corpus");
    synth->add_flag("--negative", synth_args.negative, "rule case that clearly does not fire");
    synth->add_option("--noise", synth_args.noise_mv, "white noise std in mV");
    synth->add_option("--rare", synth_args.rare, "prevalence of the rare conditions");
    synth->add_option("--duration", synth_args.duration_s, "record length in seconds");

    auto add_records = [&](CLI::App* sub) { sub->add_option("records", files, "record CSV files (else all manifest records)"); };
    auto add_plot = [&](CLI::App* sub, bool dir) {
        sub->add_option("--leads", plot_args.leads, "leads to draw");
        sub->add_option("--start", plot_args.start_s, "plot start in seconds");
        sub->add_option("--duration", plot_args.duration_s, "plot length in seconds");
        if (dir) sub->add_option("--plot-dir", plot_args.plot_dir, "write one SVG per record here");
    };

    auto* delineate = app.add_subcommand("delineate", "fiducial points per lead as JSON");
    add_records(delineate);
    add_plot(delineate, true);
    auto* measure = app.add_subcommand("measure", "durations and amplitudes as JSON");
    add_records(measure);
    auto* rules = app.add_subcommand("rules", "rule outputs with evidence as JSON");
    add_records(rules);
    auto* train = app.add_subcommand("train", "fit the meta-learner and fusion weights");
    add_records(train);
    auto* predict = app.add_subcommand("predict", "fused probabilities per record");
    add_records(predict);
    auto* evaluate = app.add_subcommand("evaluate", "metrics of a predictions CSV against manifest labels");
    evaluate->add_option("--predictions", predictions, "predictions CSV written by predict")->required();
    auto* mislabel = app.add_subcommand("mislabel-report", "labels that contradict the rules");
    add_records(mislabel);
    add_plot(mislabel, true);
    auto* plot = app.add_subcommand("plot", "SVG delineation overlay of one record");
    add_records(plot);
    add_plot(plot, false);

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        const auto c = s.resolve();
        if (*synth) return cmd_synth(c, synth_args);
        if (*delineate) return cmd_delineate(c, files, plot_args, s.threads);
        if (*measure) return cmd_measure(c, files, s.threads);
        if (*rules) return cmd_rules(c, files, s.threads);
        if (*train) return cmd_train(c, files, s.threads);
        if (*predict) return cmd_predict(c, files, s.threads);
        if (*evaluate) return cmd_evaluate(c, predictions);
        if (*mislabel) return cmd_mislabel(c, files, plot_args, s.threads);
        if (*plot) return cmd_plot(c, files, plot_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
