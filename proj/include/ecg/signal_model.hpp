#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecg/rule_ids.hpp"

namespace ecg {

enum class Gender { missing, male, female };

std::string_view gender_name(Gender g);

inline constexpr std::array<std::string_view, 8> kRecordedLeads = {"I",  "II", "V1", "V2",
                                                                   "V3", "V4", "V5", "V6"};
inline constexpr std::array<std::string_view, 4> kDerivedLeads = {"III", "aVR", "aVL", "aVF"};
inline constexpr std::array<std::string_view, 12> kStandardLeads = {
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};

inline constexpr double kDefaultSampleRateHz = 500.0;
inline constexpr double kDefaultUnitVoltageMv = 4.88e-3;

/// Ordered category names plus the partial map from rule to category.
struct LabelCatalog {
    std::vector<std::string> names;
    std::map<RuleId, std::size_t> rule_map;

    std::size_t size() const { return names.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Throws CatalogError on duplicate names or a rule map that is not injective
    /// into [0, size()).
    void validate() const;
    /// Order-sensitive FNV-1a digest of names and rule map, rendered as hex.
    std::string hash() const;
};

/// A multi-lead recording. Samples are ADC counts stored as doubles so that
/// derived leads (which involve halves) stay exact.
struct EcgRecord {
    std::string record_id;
    double sample_rate_hz = kDefaultSampleRateHz;
    double unit_voltage_mv = kDefaultUnitVoltageMv;
    std::vector<std::string> lead_names;
    std::vector<std::vector<double>> leads;
    std::optional<int> age_years;
    Gender gender = Gender::missing;
    std::optional<std::vector<std::uint8_t>> labels;

    std::size_t num_samples() const { return leads.empty() ? 0 : leads.front().size(); }
    std::size_t num_leads() const { return leads.size(); }
    std::optional<std::size_t> lead_index(std::string_view name) const;
    bool has_lead(std::string_view name) const { return lead_index(name).has_value(); }
    /// Throws MissingLead.
    const std::vector<double>& lead(std::string_view name) const;

    /// Throws ValidationError when an invariant does not hold.
    void validate() const;
};

struct Demographics {
    std::array<double, 10> age_vector{};
    double gender_scalar = 0.0;
};

struct ManifestEntry {
    std::string record_id;
    std::optional<int> age_years;
    Gender gender = Gender::missing;
    /// Present when the manifest has a labels column (a blank cell is an
    /// empty label set).
    std::optional<std::vector<std::string>> labels;
};

struct LoadOptions {
    double sample_rate_hz = kDefaultSampleRateHz;
    double unit_voltage_mv = kDefaultUnitVoltageMv;
    const LabelCatalog* catalog = nullptr;
};

/// Parses a record CSV (header of lead names, one integer row per sample) and
/// attaches manifest metadata. Labels are encoded only when a catalog is given.
EcgRecord load_record(const std::filesystem::path& path, const ManifestEntry& entry,
                      const LoadOptions& options = {});

/// Writes the record's recorded (or all) leads back in the CSV record format.
/// Sample values must be integral.
void write_record(const std::filesystem::path& path, const EcgRecord& rec);

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

LabelCatalog load_catalog(const std::filesystem::path& categories_csv,
                          const std::filesystem::path& rule_map_csv);
void write_catalog(const std::filesystem::path& categories_csv,
                   const std::filesystem::path& rule_map_csv, const LabelCatalog& catalog);

std::vector<std::uint8_t> encode_labels(const std::vector<std::string>& names,
                                        const LabelCatalog& catalog);

/// Adds III, aVR, aVL and aVF from leads I and II:
///   III = II - I, aVR = -(I + II)/2, aVL = I - II/2, aVF = II - I/2.
/// Leads that already exist are left untouched.
EcgRecord derive_augmented_leads(const EcgRecord& rec);

std::array<double, 10> encode_age(std::optional<int> age_years);
double encode_gender(Gender gender);
Demographics encode_demographics(const EcgRecord& rec);

}  // namespace ecg
