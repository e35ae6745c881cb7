#include "ecg/preprocessing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ecg/errors.hpp"
#include "ecg/stats.hpp"

namespace ecg {

namespace {

std::size_t samples(double seconds, double fs) {
    return static_cast<std::size_t>(std::lround(seconds * fs));
}

// Forward then backward pass over an odd-reflection padded copy.
std::vector<double> forward_backward(std::span<const Biquad> sections, std::span<const double> x,
                                     std::span<const double> zi, std::size_t pad) {
    const auto n = x.size();
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * x[0] - x[k]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * x[n - 1] - x[n - 1 - k]);

    std::vector<double> state(zi.begin(), zi.end());
    for (auto& s : state) s *= ext.front();
    auto y = sosfilt(sections, ext, state);
    std::reverse(y.begin(), y.end());
    state.assign(zi.begin(), zi.end());
    for (auto& s : state) s *= y.front();
    y = sosfilt(sections, y, state);
    std::reverse(y.begin(), y.end());
    return {y.begin() + static_cast<std::ptrdiff_t>(pad),
            y.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Biquad butterworth_section(double fc, double fs, bool highpass) {
    const double k = std::tan(std::numbers::pi * fc / fs);
    const double q = 1.0 / std::numbers::sqrt2;
    const double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad s;
    if (highpass) {
        s.b0 = norm;
        s.b1 = -2.0 * norm;
        s.b2 = norm;
    } else {
        s.b0 = k * k * norm;
        s.b1 = 2.0 * s.b0;
        s.b2 = s.b0;
    }
    s.a1 = 2.0 * (k * k - 1.0) * norm;
    s.a2 = (1.0 - k / q + k * k) * norm;
    return s;
}

std::vector<double> smoothed_derivative(std::span<const double> y, std::size_t lo, std::size_t hi,
                                        double fs, std::size_t width) {
    // Derivative over [lo, hi) in signal units per second, then centred moving average.
    const auto n = hi - lo;
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g = lo + i;
        const auto a = g > 0 ? g - 1 : g;
        const auto b = g + 1 < y.size() ? g + 1 : g;
        if (b > a) d[i] = (y[b] - y[a]) / static_cast<double>(b - a) * fs;
    }
    if (width <= 1) return d;
    const auto half = width / 2;
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + d[i];
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = i >= half ? i - half : 0;
        const auto b = std::min(n, i + half + 1);
        out[i] = (prefix[b] - prefix[a]) / static_cast<double>(b - a);
    }
    return out;
}

// Local view of a cycle: derivative indexed by absolute sample position.
struct CycleView {
    std::span<const double> y;
    std::vector<double> d;
    std::size_t lo = 0;

    double slope(std::size_t g) const { return d[g - lo]; }
};

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Scans outward from `anchor` towards `limit` (inclusive). First finds the
// steepest point of the flank, then continues until the de-trended slope falls
// below `fraction` of that maximum, changes sign, or reaches a local minimum.
std::size_t flank_boundary(const CycleView& v, std::size_t anchor, int dir, std::size_t limit,
                           double fraction, double trend = 0.0) {
    auto beyond = [&](std::size_t j) {
        return dir < 0 ? j < limit : j > limit;
    };
    auto step = [dir](std::size_t j) { return dir < 0 ? j - 1 : j + 1; };
    auto slope = [&](std::size_t j) { return v.slope(j) - trend; };

    if (anchor == limit) return anchor;
    std::size_t best_at = anchor;
    double best = 0.0;
    for (std::size_t j = step(anchor); !beyond(j); j = step(j)) {
        const double m = std::abs(slope(j));
        if (m > best) {
            best = m;
            best_at = j;
        } else if (m < 0.5 * best) {
            break;
        }
        if (j == limit) break;
    }
    if (best == 0.0) return best_at == anchor ? step(anchor) : best_at;

    const int s = sign_of(slope(best_at));
    std::size_t j = best_at;
    while (j != limit) {
        const std::size_t next = step(j);
        const double m = std::abs(slope(next));
        if (m < fraction * best || sign_of(slope(next)) != s) return next;
        if (m > std::abs(slope(j))) return j;
        j = next;
    }
    return j;
}

struct WaveFit {
    std::size_t on, peak, off;
};

}  // namespace

// ---- filtering ----------------------------------------------------------------

std::vector<Biquad> design_bandpass(double fs, const BandpassOptions& o) {
    if (!(fs > 0.0)) throw FilterDesignError("sample rate must be positive");
    if (!(o.low_hz > 0.0 && o.low_hz < o.high_hz))
        throw FilterDesignError("band edges must satisfy 0 < low < high");
    if (!(o.high_hz < fs / 2.0))
        throw FilterDesignError("sample rate " + std::to_string(fs) +
                                " Hz puts the upper band edge at or above Nyquist");
    return {butterworth_section(o.low_hz, fs, true), butterworth_section(o.high_hz, fs, false)};
}

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x,
                            std::span<const double> initial_state) {
    std::vector<double> state(2 * sections.size(), 0.0);
    if (!initial_state.empty()) {
        if (initial_state.size() != state.size()) throw ShapeMismatch("initial state size mismatch");
        std::copy(initial_state.begin(), initial_state.end(), state.begin());
    }
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t k = 0; k < sections.size(); ++k) {
        const auto& s = sections[k];
        double z1 = state[2 * k];
        double z2 = state[2 * k + 1];
        for (auto& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> sosfilt_steady_state(std::span<const Biquad> sections) {
    std::vector<double> zi;
    zi.reserve(2 * sections.size());
    double level = 1.0;
    for (const auto& s : sections) {
        const double g = s.dc_gain();
        const double z2 = (s.b2 - s.a2 * g) * level;
        const double z1 = (s.b1 - s.a1 * g) * level + z2;
        zi.push_back(z1);
        zi.push_back(z2);
        level *= g;
    }
    return zi;
}

std::vector<double> bandpass_filter(std::span<const double> x, double fs, const BandpassOptions& o) {
    if (!(fs > 100.0))
        throw FilterDesignError("sample rate must exceed 100 Hz for a 50 Hz upper band edge");
    const auto sections = design_bandpass(fs, o);
    if (x.size() < 2) return {x.begin(), x.end()};
    const auto zi = sosfilt_steady_state(sections);
    const auto pad = std::min(x.size() - 1, samples(1.0, fs));

    auto a = forward_backward(sections, x, zi, pad);
    std::vector<double> rev(x.rbegin(), x.rend());
    auto b = forward_backward(sections, rev, zi, pad);
    const auto n = x.size();
    for (std::size_t i = 0; i < n; ++i) a[i] = 0.5 * (a[i] + b[n - 1 - i]);
    return a;
}

// ---- R peaks ----------------------------------------------------------------

std::vector<std::size_t> detect_r_peaks(std::span<const double> y, double fs, const RPeakOptions& o) {
    const auto n = y.size();
    if (n < 3) throw NoPeaksFound("signal too short for R-peak detection");

    std::vector<double> energy(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d = 0.5 * (y[i + 1] - y[i - 1]);
        energy[i] = d * d;
    }
    const auto half = samples(o.integration_window_s, fs) / 2;
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + energy[i];
    std::vector<double> mwi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = i >= half ? i - half : 0;
        const auto b = std::min(n, i + half + 1);
        mwi[i] = (prefix[b] - prefix[a]) / static_cast<double>(2 * half + 1);
    }

    const auto warm = std::min(n, std::max<std::size_t>(1, samples(o.warmup_s, fs)));
    const double initial = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(warm));
    if (!(initial > 0.0)) throw NoPeaksFound("flat signal: no QRS energy");

    const auto refractory = samples(o.refractory_s, fs);
    std::vector<double> history{initial};
    struct Accepted {
        std::size_t at;
        double energy;
    };
    std::vector<Accepted> accepted;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1])) continue;
        const double threshold = o.threshold_fraction * stats::median(history);
        if (mwi[i] < threshold) continue;
        if (!accepted.empty() && i - accepted.back().at < refractory) {
            if (mwi[i] > accepted.back().energy) {
                accepted.back() = {i, mwi[i]};
                history.back() = mwi[i];
            }
            continue;
        }
        accepted.push_back({i, mwi[i]});
        if (accepted.size() == 1) history.clear();
        history.push_back(mwi[i]);
        if (history.size() > o.history) history.erase(history.begin());
    }

    const auto radius = std::max<std::size_t>(1, samples(o.locate_radius_s, fs));
    auto local_max = [&](std::size_t c) {
        for (int iter = 0; iter < 8; ++iter) {
            const auto a = c >= radius ? c - radius : 0;
            const auto b = std::min(n - 1, c + radius);
            const auto m = static_cast<std::size_t>(
                std::max_element(y.begin() + static_cast<std::ptrdiff_t>(a),
                                 y.begin() + static_cast<std::ptrdiff_t>(b) + 1) -
                y.begin());
            if (m == c) break;
            c = m;
        }
        return c;
    };

    std::vector<std::size_t> peaks;
    for (const auto& acc : accepted) {
        const auto r = local_max(acc.at);
        if (!peaks.empty() && r <= peaks.back() + refractory - 1) {
            if (y[r] > y[peaks.back()]) peaks.back() = r;
            continue;
        }
        peaks.push_back(r);
    }
    if (peaks.size() < 2)
        throw NoPeaksFound("found " + std::to_string(peaks.size()) + " R peak(s); need at least 2");
    return peaks;
}

std::vector<Window> segment_cycles(std::size_t length, std::span<const std::size_t> r_peaks) {
    if (r_peaks.size() < 2) throw NoPeaksFound("segmentation needs at least 2 R peaks");
    std::vector<Window> out;
    out.reserve(r_peaks.size());
    std::size_t start = 0;
    for (std::size_t k = 0; k < r_peaks.size(); ++k) {
        if (k > 0 && r_peaks[k] <= r_peaks[k - 1])
            throw InvalidInput("R peaks must be strictly increasing");
        const auto end = k + 1 < r_peaks.size() ? (r_peaks[k] + r_peaks[k + 1]) / 2 : length;
        out.push_back({start, end});
        start = end;
    }
    return out;
}

// ---- delineation --------------------------------------------------------------

bool CycleFiducials::ordered() const {
    std::vector<std::pair<std::size_t, bool>> seq;  // (index, strict-before-next)
    auto add = [&](const std::optional<std::size_t>& v, bool strict) {
        if (v) seq.emplace_back(*v, strict);
    };
    if (has_p()) {
        add(p_on, true);
        add(p_peak, true);
        add(p_off, false);
    } else if (p_on || p_peak || p_off) {
        return false;
    }
    add(qrs_on, true);
    add(q, false);
    seq.emplace_back(r, false);
    add(s, true);
    add(qrs_off, false);
    if (has_t()) {
        add(t_on, true);
        add(t_peak, true);
        add(t_off, false);
    } else if (t_on || t_peak || t_off) {
        return false;
    }
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        const auto [a, strict] = seq[i];
        const auto b = seq[i + 1].first;
        if (strict ? !(a < b) : !(a <= b)) return false;
    }
    // Q must lie strictly after QRSon and S strictly before QRSoff.
    if (q && qrs_on && !(*qrs_on < *q)) return false;
    if (!q && qrs_on && !(*qrs_on < r)) return false;
    if (!s && qrs_off && !(r < *qrs_off)) return false;
    return true;
}

CycleFiducials delineate_waves(std::span<const double> y, Window win, std::size_t r, double fs,
                               const DelineationOptions& o) {
    if (win.end > y.size() || win.start >= win.end || r < win.start || r >= win.end)
        throw InvalidInput("R index outside its cycle window");

    CycleFiducials f;
    f.r = r;
    const auto last = win.end - 1;
    auto width = samples(o.derivative_smoothing_s, fs);
    if (width % 2 == 0) ++width;
    CycleView v{y, smoothed_derivative(y, win.start, win.end, fs, width), win.start};

    const auto qs_reach = samples(o.qs_search_s, fs);
    const auto rise = std::max<std::size_t>(1, samples(o.qs_rise_window_s, fs));

    // Q: nearest local minimum left of R, kept only if it is a sharp trough.
    {
        std::size_t j = r;
        while (j > win.start && r - j < qs_reach && y[j - 1] < y[j]) --j;
        const bool is_min = j < r && j > win.start && r - j < qs_reach;
        if (is_min) {
            const auto a = j >= win.start + rise ? j - rise : win.start;
            const double back = *std::max_element(y.begin() + static_cast<std::ptrdiff_t>(a),
                                                  y.begin() + static_cast<std::ptrdiff_t>(j));
            const double height = y[r] - y[j];
            if (height > 0.0 && back - y[j] > o.qs_min_depth * height) f.q = j;
        }
    }
    // S: nearest local minimum right of R.
    {
        std::size_t j = r;
        while (j < last && j - r < qs_reach && y[j + 1] < y[j]) ++j;
        const bool is_min = j > r && j < last && j - r < qs_reach;
        if (is_min) {
            const auto b = std::min(last, j + rise);
            const double ahead = *std::max_element(y.begin() + static_cast<std::ptrdiff_t>(j) + 1,
                                                   y.begin() + static_cast<std::ptrdiff_t>(b) + 1);
            const double height = y[r] - y[j];
            if (height > 0.0 && ahead - y[j] > o.qs_min_depth * height) f.s = j;
        }
    }

    const auto extent = samples(o.qrs_max_extent_s, fs);
    const auto on_limit = r >= win.start + extent ? r - extent : win.start;
    const auto off_limit = std::min(last, r + extent);
    f.qrs_on = flank_boundary(v, f.q.value_or(r), -1, on_limit, o.slope_fraction);
    f.qrs_off = flank_boundary(v, f.s.value_or(r), +1, off_limit, o.slope_fraction);
    if (*f.qrs_on >= f.q.value_or(r)) f.qrs_on.reset();
    if (*f.qrs_off <= f.s.value_or(r)) f.qrs_off.reset();
    if (!f.qrs_on || !f.qrs_off) return f;

    const auto qrs_begin = y.begin() + static_cast<std::ptrdiff_t>(*f.qrs_on);
    const auto qrs_end = y.begin() + static_cast<std::ptrdiff_t>(*f.qrs_off) + 1;
    const auto [mn, mx] = std::minmax_element(qrs_begin, qrs_end);
    const double min_prominence = o.wave_min_prominence * (*mx - *mn);
    const auto half_extent = samples(o.max_wave_half_extent_s, fs);

    auto fit = [&](std::size_t a, std::size_t b, std::size_t on_bound, std::size_t off_bound)
        -> std::optional<WaveFit> {
        if (b <= a + 2) return std::nullopt;
        const double chord = (y[b] - y[a]) / static_cast<double>(b - a);
        std::size_t peak = a;
        double best = -1.0;
        for (std::size_t i = a; i <= b; ++i) {
            const double z = std::abs(y[i] - (y[a] + chord * static_cast<double>(i - a)));
            if (z > best) {
                best = z;
                peak = i;
            }
        }
        if (peak == a || peak == b || !(best > 0.0) || best < min_prominence) return std::nullopt;
        const double trend = chord * fs;
        const auto lo = std::max(on_bound, peak >= half_extent ? peak - half_extent : 0);
        const auto hi = std::min(off_bound, peak + half_extent);
        WaveFit w{};
        w.peak = peak;
        w.on = flank_boundary(v, peak, -1, lo, o.slope_fraction, trend);
        w.off = flank_boundary(v, peak, +1, hi, o.slope_fraction, trend);
        if (!(w.on < w.peak && w.peak < w.off)) return std::nullopt;
        return w;
    };

    // P wave: peak in [QRSon - 300 ms, QRSon - 40 ms].
    {
        const auto begin_off = samples(o.p_search_begin_s, fs);
        const auto end_off = samples(o.p_search_end_s, fs);
        if (*f.qrs_on >= win.start + end_off) {
            const auto b = *f.qrs_on - end_off;
            const auto a = *f.qrs_on >= win.start + begin_off ? *f.qrs_on - begin_off : win.start;
            if (auto w = fit(a, b, win.start, *f.qrs_on)) {
                f.p_on = w->on;
                f.p_peak = w->peak;
                f.p_off = w->off;
            }
        }
    }
    // T wave: peak in [QRSoff + 40 ms, QRSoff + 450 ms].
    {
        const auto a = *f.qrs_off + samples(o.t_search_begin_s, fs);
        const auto b = std::min(last, *f.qrs_off + samples(o.t_search_end_s, fs));
        if (a < b) {
            if (auto w = fit(a, b, *f.qrs_off, last)) {
                f.t_on = w->on;
                f.t_peak = w->peak;
                f.t_off = w->off;
            }
        }
    }
    if (!f.ordered()) {
        f.p_on.reset();
        f.p_peak.reset();
        f.p_off.reset();
    }
    if (!f.ordered()) {
        f.t_on.reset();
        f.t_peak.reset();
        f.t_off.reset();
    }
    return f;
}

// ---- record-level -------------------------------------------------------------

std::size_t DelineatedRecord::lead_index(std::string_view name) const {
    auto idx = record.lead_index(name);
    if (!idx) throw MissingLead("record " + record.record_id + " has no lead " + std::string(name));
    return *idx;
}

DelineatedRecord delineate_record(const EcgRecord& record, const PreprocessOptions& o) {
    DelineatedRecord out;
    out.record = record;
    const double fs = record.sample_rate_hz;
    for (const auto& lead : record.leads) out.filtered.push_back(bandpass_filter(lead, fs, o.bandpass));

    const auto timing = out.lead_index(o.timing_lead);
    out.anchors = detect_r_peaks(out.filtered[timing], fs, o.r_peaks);
    out.windows = segment_cycles(record.num_samples(), out.anchors);

    const auto radius = samples(o.delineation.r_refine_s, fs);
    for (std::size_t l = 0; l < record.num_leads(); ++l) {
        const auto& y = out.filtered[l];
        std::vector<std::size_t> peaks;
        std::vector<CycleFiducials> cycles;
        for (std::size_t k = 0; k < out.anchors.size(); ++k) {
            const auto win = out.windows[k];
            const auto anchor = out.anchors[k];
            const auto a = std::max(win.start, anchor >= radius ? anchor - radius : 0);
            const auto b = std::min(win.end - 1, anchor + radius);
            const auto r = static_cast<std::size_t>(
                std::max_element(y.begin() + static_cast<std::ptrdiff_t>(a),
                                 y.begin() + static_cast<std::ptrdiff_t>(b) + 1) -
                y.begin());
            auto f = delineate_waves(y, win, r, fs, o.delineation);
            f.lead = record.lead_names[l];
            peaks.push_back(r);
            cycles.push_back(std::move(f));
        }
        out.r_peaks.push_back(std::move(peaks));
        out.cycles.push_back(std::move(cycles));
    }

    for (std::size_t k = 0; k < out.anchors.size(); ++k) {
        std::vector<double> ons, offs;
        for (const auto& lead_cycles : out.cycles) {
            const auto& c = lead_cycles[k];
            if (c.qrs_on && c.qrs_off) {
                ons.push_back(static_cast<double>(*c.qrs_on));
                offs.push_back(static_cast<double>(*c.qrs_off));
            }
        }
        if (ons.empty()) {
            out.qrs_bounds.emplace_back();
            continue;
        }
        out.qrs_bounds.push_back(QrsBounds{static_cast<std::size_t>(std::floor(stats::median(ons))),
                                           static_cast<std::size_t>(std::ceil(stats::median(offs)))});
    }
    return out;
}

}  // namespace ecg
