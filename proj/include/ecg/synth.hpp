#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecg/preprocessing.hpp"
#include "ecg/rule_ids.hpp"
#include "ecg/signal_model.hpp"

namespace ecg::synth {

enum class Wave { P = 0, Q, R, S, T };
inline constexpr std::size_t kWaveCount = 5;

/// A Gaussian bump. center_ms is relative to the R peak; width_ms is sigma.
struct WaveSpec {
    bool present = true;
    double amplitude_mv = 0.0;
    double center_ms = 0.0;
    double width_ms = 10.0;
};

/// One cardiac cycle. A lead's wave amplitude is the wave's amplitude_mv times
/// the lead's multiplier for that wave (1 when the lead has no entry).
struct CycleSpec {
    std::array<WaveSpec, kWaveCount> waves{};
    double rr_ms = 800.0;
    std::map<std::string, std::array<double, kWaveCount>> lead_gain;

    WaveSpec& wave(Wave w) { return waves[static_cast<std::size_t>(w)]; }
    const WaveSpec& wave(Wave w) const { return waves[static_cast<std::size_t>(w)]; }
    double gain(const std::string& lead, Wave w) const;
    double amplitude_mv(const std::string& lead, Wave w) const;
    /// Sets the lead multiplier so that the lead's wave amplitude becomes mv.
    /// Throws SpecError when the base amplitude is zero.
    void set_amplitude_mv(const std::string& lead, Wave w, double mv);

    /// Throws SpecError on a non-positive width or RR, an absent R wave or
    /// misordered centers.
    void validate() const;
};

struct SynthOptions {
    double sample_rate_hz = kDefaultSampleRateHz;
    double unit_voltage_mv = kDefaultUnitVoltageMv;
    double noise_std_mv = 0.0;
    /// Optional sinusoidal baseline wander.
    double wander_mv = 0.0;
    double wander_hz = 0.3;
    /// Record length; 0 means up to half an RR after the last R peak.
    double duration_s = 0.0;
    std::uint64_t seed = 0;
    std::string record_id = "synth";
};

struct GroundTruth {
    /// Timing fiducials shared by every lead; lead field is empty.
    std::vector<CycleFiducials> cycles;
    std::vector<std::size_t> r_peaks;
};

struct SynthRecord {
    EcgRecord record;  // the eight recorded leads
    GroundTruth truth;
};

/// Renders the cycles back to back: R_0 = rr_0 / 2, R_k = R_{k-1} + rr_k.
/// Boundaries in the ground truth are center +/- 2.5 sigma. Throws SpecError
/// for fewer than 2 cycles or an invalid spec.
SynthRecord generate_record(const std::vector<CycleSpec>& cycles, const SynthOptions& options = {});

/// A resting 75 bpm cycle on which no rule fires.
CycleSpec normal_cycle();

/// Repeats one cycle until the next one would not fit in duration_s.
std::vector<CycleSpec> repeat_cycle(const CycleSpec& cycle, double duration_s = 10.0);

/// Alternates RR between rr_a and rr_b for as long as cycles fit.
std::vector<CycleSpec> alternate(CycleSpec cycle, double rr_a, double rr_b, double duration_s = 10.0);

/// Edits one cycle so that the rule fires (or clearly does not). Amplitudes
/// are set in absolute mV. Arrhythmia is a rhythm property and leaves the
/// cycle unchanged.
void apply_condition(CycleSpec& cycle, RuleId rule, bool fire);

struct RuleCase {
    std::vector<CycleSpec> cycles;
    Gender gender = Gender::male;
    std::optional<int> age_years = 50;
};

/// A 10 s rhythm that satisfies (fire) or clearly misses (!fire) the rule.
RuleCase make_rule_case(RuleId rule, bool fire, Gender gender = Gender::male);
/// Throws UnknownRule for an id outside 1..15.
RuleCase make_rule_case(int rule_number, bool fire, Gender gender = Gender::male);

/// The fifteen rule-covered categories followed by "Normal ECG" and
/// "Atrial fibrillation", which no rule covers.
LabelCatalog default_catalog();

struct CorpusOptions {
    std::size_t records = 500;
    std::uint64_t seed = 1;
    double noise_std_mv = 0.01;
    double duration_s = 10.0;
    double common_prevalence = 0.08;
    /// Right atrial enlargement, first-degree AV block and QT prolongation.
    double rare_prevalence = 0.01;
    double af_prevalence = 0.06;
    /// Records that meet only part of a rare condition's criterion.
    double decoy_prevalence = 0.1;
    /// Independent per-lead, per-wave gain spread around the template.
    double lead_jitter = 0.15;
    SynthOptions render;  // sample rate and unit voltage
};

struct Corpus {
    LabelCatalog catalog;
    std::vector<EcgRecord> records;  // labels encoded against catalog
    std::vector<GroundTruth> truth;
};

/// Jittered resting cycles with randomly layered conditions. Conditions that
/// cannot coexist (two rates, two axes, two precordial patterns) are drawn
/// from exclusive groups. Deterministic given the seed.
Corpus make_corpus(const CorpusOptions& options = {});

}  // namespace ecg::synth
