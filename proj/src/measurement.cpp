#include "ecg/measurement.hpp"

#include <algorithm>
#include <cmath>

#include "ecg/errors.hpp"
#include "ecg/stats.hpp"

namespace ecg {

double duration_ms(std::size_t start, std::size_t end, double fs) {
    if (end < start) throw InvalidSegment("segment end precedes its start");
    if (!(fs > 0.0)) throw InvalidInput("sample rate must be positive");
    return static_cast<double>(end - start) / fs * 1000.0;
}

double baseline_voltage(const CycleFiducials& cycle, const CycleFiducials* prev, std::span<const double> signal) {
    if (!prev || !prev->t_off || !cycle.p_on) return 0.0;
    const auto a = *prev->t_off;
    const auto b = std::min(*cycle.p_on, signal.size() - 1);
    if (a > b || a >= signal.size()) return 0.0;
    return stats::median({signal.begin() + static_cast<std::ptrdiff_t>(a),
                          signal.begin() + static_cast<std::ptrdiff_t>(b) + 1});
}

double amplitude_mv(std::span<const double> segment, double baseline, double unit_voltage_mv, WaveShape shape) {
    if (segment.empty()) throw InvalidSegment("amplitude of an empty segment");
    const auto [lo, hi] = std::minmax_element(segment.begin(), segment.end());
    const double v = shape == WaveShape::upper_arch ? *hi : *lo;
    return (v - baseline) * unit_voltage_mv;
}

double mean_rr_ms(std::span<const std::size_t> r, double fs) {
    if (r.size() < 2) throw NoPeaksFound("need at least 2 R peaks for an RR interval");
    std::vector<double> rr;
    for (std::size_t i = 1; i < r.size(); ++i) rr.push_back(duration_ms(r[i - 1], r[i], fs));
    return stats::mean(rr);
}

double heart_rate_bpm(std::span<const std::size_t> r, double fs) { return 60000.0 / mean_rr_ms(r, fs); }

double pp_interval_std_ms(std::span<const std::size_t> p, double fs) {
    if (p.size() < 3) throw InsufficientPeaks("need at least 3 P peaks for PP variability");
    std::vector<double> pp;
    for (std::size_t i = 1; i < p.size(); ++i) pp.push_back(duration_ms(p[i - 1], p[i], fs));
    return stats::population_std(pp);
}

double qt_corrected(double t_qt_ms, double rr_ms) {
    if (!(t_qt_ms > 0.0) || !(rr_ms > 0.0)) throw InvalidInput("QT and RR must be positive");
    return (t_qt_ms / 1000.0) / std::sqrt(rr_ms / 1000.0);
}

// ---- MeasurementSet -----------------------------------------------------------

const LeadMeasurements* MeasurementSet::lead(std::string_view name) const {
    for (std::size_t i = 0; i < lead_names.size(); ++i)
        if (lead_names[i] == name) return &leads[i];
    return nullptr;
}

std::optional<double> MeasurementSet::amplitude(std::string_view name, Amp a) const {
    const auto* l = lead(name);
    return l ? (*l)[a] : std::nullopt;
}

const std::vector<std::string>& measurement_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (auto lead : kStandardLeads)
            for (auto amp : kAmpNames) out.push_back("A_" + std::string(amp) + "_" + std::string(lead) + "_mv");
        for (const char* n : {"t_PR_ms", "t_QT_ms", "t_Q_ms", "heart_rate_bpm", "std_PP_ms", "mean_RR_ms", "qtc"})
            out.emplace_back(n);
        return out;
    }();
    return names;
}

std::vector<std::pair<std::string, std::optional<double>>> MeasurementSet::flatten() const {
    std::vector<std::pair<std::string, std::optional<double>>> out;
    const auto& names = measurement_names();
    std::size_t k = 0;
    for (auto lead_name : kStandardLeads)
        for (std::size_t a = 0; a < kAmpNames.size(); ++a)
            out.emplace_back(names[k++], amplitude(lead_name, static_cast<Amp>(a)));
    for (const auto* v : {&t_pr_ms, &t_qt_ms, &t_q_ms, &heart_rate_bpm, &std_pp_ms, &mean_rr_ms, &qtc})
        out.emplace_back(names[k++], *v);
    return out;
}

std::optional<double> MeasurementSet::value(std::string_view name) const {
    for (auto& [n, v] : flatten())
        if (n == name) return v;
    return std::nullopt;
}

// ---- aggregation --------------------------------------------------------------

namespace {

std::span<const double> range(const std::vector<double>& v, std::size_t a, std::size_t b) {
    return {v.data() + a, b - a + 1};
}

// Larger-magnitude extreme, so inverted P/T waves keep their sign.
double wave_amplitude(std::span<const double> seg, double baseline, double u) {
    const double up = amplitude_mv(seg, baseline, u, WaveShape::upper_arch);
    const double down = amplitude_mv(seg, baseline, u, WaveShape::downbend);
    return std::abs(down) > std::abs(up) ? down : up;
}

std::optional<double> median_or_none(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return stats::median(v);
}

}  // namespace

MeasurementSet aggregate_record(const DelineatedRecord& d, const MeasurementOptions& o) {
    const auto& rec = d.record;
    const double u = rec.unit_voltage_mv;
    const double fs = rec.sample_rate_hz;

    MeasurementSet m;
    for (std::size_t l = 0; l < rec.num_leads(); ++l) {
        const auto& raw = rec.leads[l];
        const auto& cycles = d.cycles[l];
        std::array<std::vector<double>, 5> per_wave;
        for (std::size_t k = 0; k < cycles.size(); ++k) {
            const auto& c = cycles[k];
            const double base = baseline_voltage(c, k > 0 ? &cycles[k - 1] : nullptr, raw);
            if (c.has_p()) per_wave[0].push_back(wave_amplitude(range(raw, *c.p_on, *c.p_off), base, u));
            if (const auto& qb = d.qrs_bounds[k]) {
                // Shared QRS extent so that a lead whose complex is mostly
                // negative still has its deflections inside the window.
                const auto r = std::clamp(c.r, qb->on, qb->off);
                per_wave[1].push_back(amplitude_mv(range(raw, qb->on, r), base, u, WaveShape::downbend));
                per_wave[2].push_back(amplitude_mv(range(raw, qb->on, qb->off), base, u, WaveShape::upper_arch));
                per_wave[3].push_back(amplitude_mv(range(raw, r, qb->off), base, u, WaveShape::downbend));
            }
            if (c.has_t()) per_wave[4].push_back(wave_amplitude(range(raw, *c.t_on, *c.t_off), base, u));
        }
        LeadMeasurements lm;
        for (std::size_t w = 0; w < 5; ++w) lm.amplitude_mv[w] = median_or_none(per_wave[w]);
        if (lm[Amp::Q] && lm[Amp::R] && lm[Amp::S]) lm[Amp::QRS] = *lm[Amp::Q] + *lm[Amp::R] + *lm[Amp::S];
        lm.cycles = per_wave[2].size();
        m.lead_names.push_back(rec.lead_names[l]);
        m.leads.push_back(lm);
    }

    const auto t = d.lead_index(o.timing_lead);
    const auto& raw = rec.leads[t];
    const auto& cycles = d.cycles[t];
    std::vector<double> pr, qt, tq;
    std::size_t valid = 0;
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        const auto& c = cycles[k];
        if (!c.qrs_on || !c.qrs_off) continue;
        ++valid;
        if (c.has_p()) pr.push_back(duration_ms(*c.p_on, *c.qrs_on, fs));
        if (c.has_t()) qt.push_back(duration_ms(*c.qrs_on, *c.t_off, fs));
        if (c.q) {
            // Q duration: width of the negative deflection around the Q trough.
            const double base = baseline_voltage(c, k > 0 ? &cycles[k - 1] : nullptr, raw);
            std::size_t a = *c.q, b = *c.q;
            while (a > *c.qrs_on && raw[a - 1] - base < 0.0) --a;
            while (b < c.r && raw[b] - base < 0.0) ++b;
            tq.push_back(raw[*c.q] - base < 0.0 ? duration_ms(a, b, fs) : 0.0);
        } else {
            tq.push_back(0.0);
        }
    }
    if (valid == 0) throw NoValidCycles("record " + rec.record_id + " has no delineated QRS complex");
    m.cycles = valid;
    m.t_pr_ms = median_or_none(pr);
    m.t_qt_ms = median_or_none(qt);
    m.t_q_ms = median_or_none(tq);

    m.mean_rr_ms = mean_rr_ms(d.anchors, fs);
    m.heart_rate_bpm = 60000.0 / *m.mean_rr_ms;
    if (m.t_qt_ms && *m.t_qt_ms > 0.0) m.qtc = qt_corrected(*m.t_qt_ms, *m.mean_rr_ms);

    // PP variability only over neighbouring cycles that both show a P wave.
    std::vector<double> pp;
    for (std::size_t k = 1; k < cycles.size(); ++k)
        if (cycles[k - 1].p_peak && cycles[k].p_peak)
            pp.push_back(duration_ms(*cycles[k - 1].p_peak, *cycles[k].p_peak, fs));
    if (pp.size() >= 2) m.std_pp_ms = stats::population_std(pp);
    return m;
}

}  // namespace ecg
