#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ecg/preprocessing.hpp"

namespace ecg {

/// Eq-style duration: (end - start) / fs in milliseconds. Throws InvalidSegment if end < start.
double duration_ms(std::size_t start, std::size_t end, double sample_rate_hz);

/// Median of signal[prev.t_off .. cycle.p_on] (inclusive), or 0 when either
/// fiducial is missing or the range is empty.
double baseline_voltage(const CycleFiducials& cycle, const CycleFiducials* prev,
                        std::span<const double> signal);

enum class WaveShape { upper_arch, downbend };

/// max (upper_arch) or min (downbend) of (v - baseline) * unit over the
/// segment. Throws InvalidSegment on an empty segment.
double amplitude_mv(std::span<const double> segment, double baseline, double unit_voltage_mv,
                    WaveShape shape);

double mean_rr_ms(std::span<const std::size_t> r_peaks, double sample_rate_hz);
/// 60000 / mean RR. Throws NoPeaksFound for fewer than 2 peaks.
double heart_rate_bpm(std::span<const std::size_t> r_peaks, double sample_rate_hz);
/// Population standard deviation of successive P-to-P intervals. Throws
/// InsufficientPeaks for fewer than 3 peaks.
double pp_interval_std_ms(std::span<const std::size_t> p_peaks, double sample_rate_hz);
/// QT(s) / sqrt(RR(s)). Throws InvalidInput on non-positive input.
double qt_corrected(double t_qt_ms, double mean_rr_ms);

enum class Amp { P = 0, Q, R, S, T, QRS };
inline constexpr std::array<std::string_view, 6> kAmpNames = {"P", "Q", "R", "S", "T", "QRS"};

struct LeadMeasurements {
    std::array<std::optional<double>, 6> amplitude_mv{};
    std::size_t cycles = 0;  // cycles contributing an R amplitude

    const std::optional<double>& operator[](Amp a) const { return amplitude_mv[static_cast<std::size_t>(a)]; }
    std::optional<double>& operator[](Amp a) { return amplitude_mv[static_cast<std::size_t>(a)]; }
};

struct MeasurementSet {
    std::vector<std::string> lead_names;
    std::vector<LeadMeasurements> leads;
    std::optional<double> t_pr_ms, t_qt_ms, t_q_ms;
    std::optional<double> heart_rate_bpm, std_pp_ms, mean_rr_ms, qtc;
    std::size_t cycles = 0;  // timing-lead cycles aggregated

    const LeadMeasurements* lead(std::string_view name) const;
    std::optional<double> amplitude(std::string_view lead, Amp a) const;

    /// Named scalar view in a fixed order: the 12 standard leads x 6
    /// amplitudes ("A_R_V1_mv"), then the record-level values.
    std::vector<std::pair<std::string, std::optional<double>>> flatten() const;
    /// Looks a value up by its flatten() name.
    std::optional<double> value(std::string_view name) const;
};

/// Names used by flatten(), in order.
const std::vector<std::string>& measurement_names();

struct MeasurementOptions {
    std::string timing_lead = "II";
};

/// Per-lead amplitudes and record durations as medians across the cycles
/// where the needed fiducials exist. Amplitudes are read from the raw signal
/// against the cycle baseline. Throws NoValidCycles when no cycle has a QRS.
MeasurementSet aggregate_record(const DelineatedRecord& delineated, const MeasurementOptions& options = {});

}  // namespace ecg
