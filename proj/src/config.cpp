#include "ecg/config.hpp"

#include <fstream>

#include "ecg/csv.hpp"
#include "ecg/errors.hpp"

namespace ecg {

namespace {

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long out = 0;
    try {
        if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (!(sample_rate_hz > 0.0)) throw ConfigError("sample_rate must be positive");
    if (!(unit_voltage_mv > 0.0)) throw ConfigError("unit_voltage must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    rule_config();
}

RuleConfig RunConfig::rule_config() const {
    auto rc = RuleConfig::defaults();
    for (const auto& [k, v] : rule_overrides) rc.set(k, v);
    return rc;
}

void apply_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    if (key.rfind("rule.", 0) == 0) {
        c.rule_overrides[key.substr(5)] = value;
        return;
    }
    if (key == "data") c.data_dir = value;
    else if (key == "manifest") c.manifest = value;
    else if (key == "catalog") c.catalog = value;
    else if (key == "rule_map") c.rule_map = value;
    else if (key == "model") c.model = value;
    else if (key == "out") c.out = value;
    else if (key == "external_predictions") c.external_predictions = value;
    else if (key == "lambda") c.lambda = to_double(key, value);
    else if (key == "threshold") c.threshold = to_double(key, value);
    else if (key == "seed") c.seed = to_unsigned(key, value);
    else if (key == "sample_rate") c.sample_rate_hz = to_double(key, value);
    else if (key == "unit_voltage") c.unit_voltage_mv = to_double(key, value);
    else if (key == "learning_rate") c.learning_rate = to_double(key, value);
    else if (key == "epochs") c.epochs = static_cast<std::size_t>(to_unsigned(key, value));
    else throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_file(RunConfig& c, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = csv::trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(path.string() + ":" + std::to_string(no) + ": expected key = value");
        const std::string key(csv::trim(text.substr(0, eq)));
        const std::string value(csv::trim(text.substr(eq + 1)));
        if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(no) + ": empty key");
        apply_config_value(c, key, value);
    }
}

}  // namespace ecg
