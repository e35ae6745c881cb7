#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecg/signal_model.hpp"

namespace ecg {

/// One second-order section in transposed direct form II, a0 normalised to 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    /// DC gain H(z = 1).
    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

struct BandpassOptions {
    double low_hz = 3.0;
    double high_hz = 50.0;
};

/// Second-order Butterworth high-pass at low_hz cascaded with a second-order
/// Butterworth low-pass at high_hz (bilinear transform with pre-warping).
/// Throws FilterDesignError unless 0 < low < high < fs/2 and fs > 2 * high.
std::vector<Biquad> design_bandpass(double sample_rate_hz, const BandpassOptions& options = {});

/// Causal cascade filter with the given initial states (two per section).
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x,
                            std::span<const double> initial_state = {});

/// Steady-state section states for a unit step input, scaled per section by the
/// DC gain of the preceding sections.
std::vector<double> sosfilt_steady_state(std::span<const Biquad> sections);

/// Zero-phase band-pass. The cascade is run forward-backward on an
/// odd-reflection padded copy with steady-state initial conditions, and the
/// result is averaged with the backward-forward ordering so that the output is
/// exactly time-reversal symmetric. Same length as the input.
std::vector<double> bandpass_filter(std::span<const double> signal, double sample_rate_hz,
                                    const BandpassOptions& options = {});

struct RPeakOptions {
    double integration_window_s = 0.150;
    double refractory_s = 0.200;
    /// Candidates must exceed this fraction of the median of recent peak energies.
    double threshold_fraction = 0.5;
    std::size_t history = 8;
    double locate_radius_s = 0.050;
    double warmup_s = 2.0;
};

/// Squared-derivative energy, centred moving-window integration, adaptive
/// threshold and refractory period, then each peak is moved to the local
/// maximum of the filtered signal. Throws NoPeaksFound for fewer than 2 peaks.
std::vector<std::size_t> detect_r_peaks(std::span<const double> filtered, double sample_rate_hz,
                                        const RPeakOptions& options = {});

/// Half-open sample range [start, end).
struct Window {
    std::size_t start = 0;
    std::size_t end = 0;
    bool operator==(const Window&) const = default;
};

/// One window per R peak bounded by the floor midpoints to the neighbouring
/// peaks; the first and last windows extend to the record edges.
std::vector<Window> segment_cycles(std::size_t signal_length, std::span<const std::size_t> r_peaks);

struct CycleFiducials {
    std::string lead;
    std::optional<std::size_t> p_on, p_peak, p_off;
    std::optional<std::size_t> qrs_on, q;
    std::size_t r = 0;
    std::optional<std::size_t> s, qrs_off;
    std::optional<std::size_t> t_on, t_peak, t_off;

    bool has_p() const { return p_on && p_peak && p_off; }
    bool has_t() const { return t_on && t_peak && t_off; }
    /// Pon < Ppeak < Poff <= QRSon < Q <= R <= S < QRSoff <= Ton < Tpeak < Toff,
    /// skipping absent fiducials.
    bool ordered() const;
};

struct DelineationOptions {
    /// Onset/offset where |smoothed derivative| drops below this fraction of
    /// the flank's maximum slope.
    double slope_fraction = 0.10;
    double derivative_smoothing_s = 0.010;
    double qs_search_s = 0.120;
    /// A Q/S trough counts only if the signal rises by qs_min_depth of the
    /// R-to-trough height within qs_rise_window_s of the trough.
    double qs_rise_window_s = 0.020;
    double qs_min_depth = 0.045;
    double qrs_max_extent_s = 0.200;
    double p_search_begin_s = 0.300;
    double p_search_end_s = 0.040;
    double t_search_begin_s = 0.040;
    double t_search_end_s = 0.450;
    double max_wave_half_extent_s = 0.200;
    /// P/T must stand out from the local linear trend by this fraction of the
    /// cycle's QRS peak-to-peak amplitude.
    double wave_min_prominence = 0.05;
    /// Per-lead R refinement radius around the timing-lead anchor.
    double r_refine_s = 0.040;
};

/// Delineates one cycle of a filtered lead. Absent waves are reported as
/// missing. Throws InvalidInput when r_index is outside the window.
CycleFiducials delineate_waves(std::span<const double> filtered, Window window, std::size_t r_index,
                               double sample_rate_hz, const DelineationOptions& options = {});

struct PreprocessOptions {
    BandpassOptions bandpass;
    RPeakOptions r_peaks;
    DelineationOptions delineation;
    std::string timing_lead = "II";
};

/// Inclusive QRS extent shared by all leads for one cycle.
struct QrsBounds {
    std::size_t on = 0;
    std::size_t off = 0;
};

struct DelineatedRecord {
    EcgRecord record;
    std::vector<std::vector<double>> filtered;        // per lead, same order as record
    std::vector<std::size_t> anchors;                 // timing-lead R peaks
    std::vector<Window> windows;                      // one per anchor
    std::vector<std::vector<std::size_t>> r_peaks;    // per lead, refined
    std::vector<std::vector<CycleFiducials>> cycles;  // per lead, one per anchor
    /// Per cycle, the median of the per-lead QRS onsets and offsets.
    std::vector<std::optional<QrsBounds>> qrs_bounds;

    std::size_t lead_index(std::string_view name) const;
};

/// Filters every lead, finds R peaks on the timing lead, segments the record
/// and delineates each lead against the shared anchors.
DelineatedRecord delineate_record(const EcgRecord& record, const PreprocessOptions& options = {});

}  // namespace ecg
