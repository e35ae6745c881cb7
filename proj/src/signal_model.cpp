#include "ecg/signal_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "ecg/csv.hpp"
#include "ecg/errors.hpp"

namespace ecg {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
    Int value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

bool is_standard_lead(std::string_view name) {
    return std::find(kStandardLeads.begin(), kStandardLeads.end(), name) != kStandardLeads.end();
}

Gender parse_gender(std::string_view text, std::string_view record_id) {
    const auto g = lower(csv::trim(text));
    if (g.empty()) return Gender::missing;
    if (g == "male") return Gender::male;
    if (g == "female") return Gender::female;
    throw ParseError("record " + std::string(record_id) + ": unknown gender '" + std::string(text) +
                     "'");
}

std::vector<std::string> split_labels(std::string_view cell) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= cell.size()) {
        auto end = cell.find(';', start);
        if (end == std::string_view::npos) end = cell.size();
        auto name = csv::trim(cell.substr(start, end - start));
        if (!name.empty()) out.push_back(std::move(name));
        start = end + 1;
    }
    return out;
}

}  // namespace

std::optional<RuleId> parse_rule_id(std::string_view text) {
    const auto t = csv::trim(text);
    if (auto n = parse_int<int>(t); n && *n >= 1 && *n <= kRuleCount) return static_cast<RuleId>(*n);
    const auto l = lower(t);
    for (auto id : all_rules())
        if (rule_slug(id) == l) return id;
    return std::nullopt;
}

std::string_view gender_name(Gender g) {
    switch (g) {
        case Gender::male: return "MALE";
        case Gender::female: return "FEMALE";
        case Gender::missing: break;
    }
    return "";
}

// ---- LabelCatalog -----------------------------------------------------------

std::optional<std::size_t> LabelCatalog::index_of(std::string_view name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

void LabelCatalog::validate() const {
    std::set<std::string_view> seen;
    for (const auto& n : names) {
        if (n.empty()) throw CatalogError("empty category name");
        if (!seen.insert(n).second) throw CatalogError("duplicate category '" + n + "'");
    }
    std::set<std::size_t> targets;
    for (auto [rule, idx] : rule_map) {
        if (idx >= names.size())
            throw CatalogError("rule " + std::string(rule_slug(rule)) + " maps outside the catalog");
        if (!targets.insert(idx).second)
            throw CatalogError("category '" + names[idx] + "' is mapped by more than one rule");
    }
}

std::string LabelCatalog::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    };
    for (const auto& n : names) mix(n);
    for (auto [rule, idx] : rule_map) {
        mix(rule_slug(rule));
        mix(std::to_string(idx));
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// ---- EcgRecord --------------------------------------------------------------

std::optional<std::size_t> EcgRecord::lead_index(std::string_view name) const {
    auto it = std::find(lead_names.begin(), lead_names.end(), name);
    if (it == lead_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - lead_names.begin());
}

const std::vector<double>& EcgRecord::lead(std::string_view name) const {
    auto idx = lead_index(name);
    if (!idx) throw MissingLead("record " + record_id + " has no lead " + std::string(name));
    return leads[*idx];
}

void EcgRecord::validate() const {
    const std::string ctx = "record " + record_id + ": ";
    if (!(sample_rate_hz > 0.0)) throw ValidationError(ctx + "sample rate must be positive");
    if (!(unit_voltage_mv > 0.0)) throw ValidationError(ctx + "unit voltage must be positive");
    if (lead_names.size() != leads.size())
        throw ValidationError(ctx + "lead name count does not match column count");
    if (leads.empty()) throw ValidationError(ctx + "no leads");
    std::set<std::string_view> seen;
    for (const auto& n : lead_names) {
        if (!is_standard_lead(n)) throw ValidationError(ctx + "unknown lead '" + n + "'");
        if (!seen.insert(n).second) throw ValidationError(ctx + "duplicate lead '" + n + "'");
    }
    const auto n = leads.front().size();
    for (const auto& col : leads)
        if (col.size() != n) throw ValidationError(ctx + "leads have different lengths");
    if (static_cast<double>(n) < 2.0 * sample_rate_hz)
        throw ValidationError(ctx + "fewer than 2 s of signal (" + std::to_string(n) + " samples)");
    if (age_years && *age_years < 0) throw ValidationError(ctx + "negative age");
}

// ---- I/O --------------------------------------------------------------------

EcgRecord load_record(const std::filesystem::path& path, const ManifestEntry& entry,
                      const LoadOptions& options) {
    const auto rows = csv::read_file(path);
    const std::string ctx = path.string() + ": ";
    if (rows.empty()) throw ParseError(ctx + "empty record file");

    EcgRecord rec;
    rec.record_id = entry.record_id;
    rec.sample_rate_hz = options.sample_rate_hz;
    rec.unit_voltage_mv = options.unit_voltage_mv;
    rec.lead_names = rows.front();
    rec.leads.assign(rec.lead_names.size(), {});
    for (auto& col : rec.leads) col.reserve(rows.size() - 1);

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != rec.lead_names.size())
            throw ParseError(ctx + "row " + std::to_string(r + 1) + " has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(rec.lead_names.size()));
        for (std::size_t c = 0; c < row.size(); ++c) {
            auto v = parse_int<long long>(row[c]);
            if (!v)
                throw ParseError(ctx + "row " + std::to_string(r + 1) + ": '" + row[c] +
                                 "' is not an integer");
            rec.leads[c].push_back(static_cast<double>(*v));
        }
    }

    for (auto lead : kRecordedLeads)
        if (!rec.has_lead(lead))
            throw ValidationError(ctx + "missing recorded lead " + std::string(lead));

    rec.age_years = entry.age_years;
    rec.gender = entry.gender;
    if (entry.labels && options.catalog) rec.labels = encode_labels(*entry.labels, *options.catalog);
    rec.validate();
    return rec;
}

void write_record(const std::filesystem::path& path, const EcgRecord& rec) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    for (std::size_t c = 0; c < rec.lead_names.size(); ++c)
        out << (c ? "," : "") << rec.lead_names[c];
    out << '\n';
    for (std::size_t i = 0; i < rec.num_samples(); ++i) {
        for (std::size_t c = 0; c < rec.leads.size(); ++c) {
            const double v = rec.leads[c][i];
            if (v != std::round(v))
                throw InvalidInput("lead " + rec.lead_names[c] + " holds a non-integral sample");
            out << (c ? "," : "") << static_cast<long long>(v);
        }
        out << '\n';
    }
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw ParseError(path.string() + ": empty manifest");
    const auto& header = rows.front();
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (lower(header[i]) == name) return i;
        return std::nullopt;
    };
    const auto id_col = column("record_id");
    if (!id_col) throw ParseError(path.string() + ": manifest has no record_id column");
    const auto age_col = column("age");
    const auto gender_col = column("gender");
    const auto labels_col = column("labels");

    std::vector<ManifestEntry> out;
    std::set<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size())
            throw ParseError(path.string() + ": manifest row " + std::to_string(r + 1) +
                             " has the wrong number of fields");
        ManifestEntry e;
        e.record_id = row[*id_col];
        if (e.record_id.empty()) throw ParseError(path.string() + ": blank record_id");
        if (!ids.insert(e.record_id).second)
            throw ParseError(path.string() + ": duplicate record_id " + e.record_id);
        if (age_col && !row[*age_col].empty()) {
            auto age = parse_int<int>(row[*age_col]);
            if (!age) throw ParseError("record " + e.record_id + ": bad age '" + row[*age_col] + "'");
            if (*age < 0) throw ValidationError("record " + e.record_id + ": negative age");
            e.age_years = *age;
        }
        if (gender_col) e.gender = parse_gender(row[*gender_col], e.record_id);
        if (labels_col) e.labels = split_labels(row[*labels_col]);
        out.push_back(std::move(e));
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "record_id,age,gender,labels\n";
    for (const auto& e : entries) {
        std::string labels;
        if (e.labels)
            for (std::size_t i = 0; i < e.labels->size(); ++i) labels += (i ? ";" : "") + (*e.labels)[i];
        out << csv::escape(e.record_id) << ',' << (e.age_years ? std::to_string(*e.age_years) : "")
            << ',' << gender_name(e.gender) << ',' << csv::escape(labels) << '\n';
    }
}

LabelCatalog load_catalog(const std::filesystem::path& categories_csv,
                          const std::filesystem::path& rule_map_csv) {
    LabelCatalog cat;
    auto rows = csv::read_file(categories_csv);
    std::size_t start = 0;
    if (!rows.empty() && rows.front().size() == 1 && lower(rows.front()[0]) == "category") start = 1;
    for (std::size_t r = start; r < rows.size(); ++r) {
        if (rows[r].size() != 1)
            throw ParseError(categories_csv.string() + ": expected one category per row");
        cat.names.push_back(rows[r][0]);
    }

    rows = csv::read_file(rule_map_csv);
    start = (!rows.empty() && lower(rows.front()[0]) == "rule_id") ? 1 : 0;
    for (std::size_t r = start; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 2) throw ParseError(rule_map_csv.string() + ": expected rule_id,category_name");
        auto rule = parse_rule_id(row[0]);
        if (!rule) throw CatalogError("unknown rule id '" + row[0] + "'");
        auto idx = cat.index_of(row[1]);
        if (!idx) throw CatalogError("rule map references unknown category '" + row[1] + "'");
        if (!cat.rule_map.emplace(*rule, *idx).second)
            throw CatalogError("rule " + row[0] + " mapped twice");
    }
    cat.validate();
    return cat;
}

void write_catalog(const std::filesystem::path& categories_csv,
                   const std::filesystem::path& rule_map_csv, const LabelCatalog& catalog) {
    std::ofstream cats(categories_csv);
    std::ofstream map(rule_map_csv);
    if (!cats || !map) throw ParseError("cannot write catalog files");
    cats << "category\n";
    for (const auto& n : catalog.names) cats << csv::escape(n) << '\n';
    map << "rule_id,category_name\n";
    for (auto [rule, idx] : catalog.rule_map)
        map << rule_slug(rule) << ',' << csv::escape(catalog.names[idx]) << '\n';
}

std::vector<std::uint8_t> encode_labels(const std::vector<std::string>& names,
                                        const LabelCatalog& catalog) {
    std::vector<std::uint8_t> out(catalog.size(), 0);
    for (const auto& n : names) {
        auto idx = catalog.index_of(n);
        if (!idx) throw CatalogError("unknown label category '" + n + "'");
        out[*idx] = 1;
    }
    return out;
}

// ---- derived leads and demographics ----------------------------------------

EcgRecord derive_augmented_leads(const EcgRecord& rec) {
    const auto& lead_i = rec.lead("I");
    const auto& lead_ii = rec.lead("II");
    EcgRecord out = rec;
    const auto n = rec.num_samples();
    for (auto name : kDerivedLeads) {
        if (out.has_lead(name)) continue;
        std::vector<double> col(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double a = lead_i[k];
            const double b = lead_ii[k];
            if (name == "III")
                col[k] = b - a;
            else if (name == "aVR")
                col[k] = -(a + b) / 2.0;
            else if (name == "aVL")
                col[k] = a - b / 2.0;
            else
                col[k] = b - a / 2.0;
        }
        out.lead_names.emplace_back(name);
        out.leads.push_back(std::move(col));
    }
    return out;
}

std::array<double, 10> encode_age(std::optional<int> age_years) {
    std::array<double, 10> v{};
    if (!age_years) return v;
    if (*age_years < 0 || *age_years >= 100)
        throw OutOfRange("age " + std::to_string(*age_years) + " outside [0, 100)");
    v[static_cast<std::size_t>(*age_years / 10)] = 1.0;
    return v;
}

double encode_gender(Gender gender) {
    switch (gender) {
        case Gender::male: return 1.0;
        case Gender::female: return 2.0;
        case Gender::missing: break;
    }
    return 0.0;
}

Demographics encode_demographics(const EcgRecord& rec) {
    return {encode_age(rec.age_years), encode_gender(rec.gender)};
}

}  // namespace ecg
