#include "ecg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "ecg/errors.hpp"

namespace ecg::synth {

namespace {

constexpr double kBoundarySigmas = 2.5;
constexpr double kRenderSigmas = 6.0;

std::size_t wave_index(Wave w) { return static_cast<std::size_t>(w); }

std::optional<std::size_t> inside(double t_ms, double fs, std::size_t n) {
    const double idx = std::round(t_ms * fs / 1000.0);
    if (idx < 0.0 || idx >= static_cast<double>(n)) return std::nullopt;
    return static_cast<std::size_t>(idx);
}

}  // namespace

double CycleSpec::gain(const std::string& lead, Wave w) const {
    auto it = lead_gain.find(lead);
    return it == lead_gain.end() ? 1.0 : it->second[wave_index(w)];
}

double CycleSpec::amplitude_mv(const std::string& lead, Wave w) const {
    const auto& spec = wave(w);
    return spec.present ? spec.amplitude_mv * gain(lead, w) : 0.0;
}

void CycleSpec::set_amplitude_mv(const std::string& lead, Wave w, double mv) {
    const double base = wave(w).amplitude_mv;
    if (base == 0.0) throw SpecError("cannot scale a wave with zero base amplitude");
    auto [it, inserted] = lead_gain.try_emplace(lead);
    if (inserted) it->second.fill(1.0);
    it->second[wave_index(w)] = mv / base;
}

void CycleSpec::validate() const {
    if (!(rr_ms > 0.0)) throw SpecError("rr_ms must be positive");
    if (!wave(Wave::R).present) throw SpecError("R wave must be present");
    std::optional<double> prev;
    for (const auto& w : waves) {
        if (!w.present) continue;
        if (!(w.width_ms > 0.0)) throw SpecError("wave widths must be positive");
        if (prev && !(*prev < w.center_ms)) throw SpecError("wave centers must be ordered P < Q < R < S < T");
        prev = w.center_ms;
    }
    if (wave(Wave::R).center_ms != 0.0) throw SpecError("R center must be at 0 ms");
}

SynthRecord generate_record(const std::vector<CycleSpec>& cycles, const SynthOptions& o) {
    if (cycles.size() < 2) throw SpecError("need at least 2 cycles");
    if (!(o.sample_rate_hz > 0.0) || !(o.unit_voltage_mv > 0.0))
        throw SpecError("sample rate and unit voltage must be positive");
    for (const auto& c : cycles) c.validate();

    std::vector<double> r_ms;
    double r = cycles.front().rr_ms / 2.0;
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        if (k > 0) r += cycles[k].rr_ms;
        r_ms.push_back(r);
    }
    const double fs = o.sample_rate_hz;
    const double length_ms = o.duration_s > 0.0 ? o.duration_s * 1000.0 : r_ms.back() + cycles.back().rr_ms / 2.0;
    const auto n = static_cast<std::size_t>(std::llround(length_ms * fs / 1000.0));

    SynthRecord out;
    auto& rec = out.record;
    rec.record_id = o.record_id;
    rec.sample_rate_hz = fs;
    rec.unit_voltage_mv = o.unit_voltage_mv;

    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (const auto lead_view : kRecordedLeads) {
        const std::string lead(lead_view);
        std::vector<double> mv(n, 0.0);
        for (std::size_t k = 0; k < cycles.size(); ++k) {
            for (std::size_t w = 0; w < kWaveCount; ++w) {
                const auto& spec = cycles[k].waves[w];
                const double a = cycles[k].amplitude_mv(lead, static_cast<Wave>(w));
                if (a == 0.0) continue;
                const double center = r_ms[k] + spec.center_ms;
                const double sigma = spec.width_ms;
                const double lo = std::max(0.0, std::floor((center - kRenderSigmas * sigma) * fs / 1000.0));
                const double hi = std::min(static_cast<double>(n) - 1.0,
                                           std::ceil((center + kRenderSigmas * sigma) * fs / 1000.0));
                for (auto i = static_cast<std::ptrdiff_t>(lo); i <= static_cast<std::ptrdiff_t>(hi); ++i) {
                    const double t = static_cast<double>(i) * 1000.0 / fs;
                    const double z = (t - center) / sigma;
                    mv[static_cast<std::size_t>(i)] += a * std::exp(-0.5 * z * z);
                }
            }
        }
        std::vector<double> adc(n);
        for (std::size_t i = 0; i < n; ++i) {
            double v = mv[i];
            if (o.wander_mv != 0.0)
                v += o.wander_mv * std::sin(2.0 * M_PI * o.wander_hz * static_cast<double>(i) / fs);
            if (o.noise_std_mv > 0.0) v += o.noise_std_mv * noise(rng);
            adc[i] = std::round(v / o.unit_voltage_mv);
        }
        rec.lead_names.push_back(lead);
        rec.leads.push_back(std::move(adc));
    }

    for (std::size_t k = 0; k < cycles.size(); ++k) {
        const auto& c = cycles[k];
        const auto r_idx = inside(r_ms[k], fs, n);
        if (!r_idx) continue;
        out.truth.r_peaks.push_back(*r_idx);

        CycleFiducials f;
        f.r = *r_idx;
        auto at = [&](double offset_ms) { return inside(r_ms[k] + offset_ms, fs, n); };
        const auto& p = c.wave(Wave::P);
        if (p.present) {
            f.p_on = at(p.center_ms - kBoundarySigmas * p.width_ms);
            f.p_peak = at(p.center_ms);
            f.p_off = at(p.center_ms + kBoundarySigmas * p.width_ms);
            if (!f.has_p()) f.p_on = f.p_peak = f.p_off = std::nullopt;
        }
        double on = 0.0, off = 0.0;
        for (auto w : {Wave::Q, Wave::R, Wave::S}) {
            const auto& s = c.wave(w);
            if (!s.present) continue;
            on = std::min(on, s.center_ms - kBoundarySigmas * s.width_ms);
            off = std::max(off, s.center_ms + kBoundarySigmas * s.width_ms);
        }
        f.qrs_on = at(on);
        f.qrs_off = at(off);
        if (c.wave(Wave::Q).present) f.q = at(c.wave(Wave::Q).center_ms);
        if (c.wave(Wave::S).present) f.s = at(c.wave(Wave::S).center_ms);
        const auto& t = c.wave(Wave::T);
        if (t.present) {
            f.t_on = at(t.center_ms - kBoundarySigmas * t.width_ms);
            f.t_peak = at(t.center_ms);
            f.t_off = at(t.center_ms + kBoundarySigmas * t.width_ms);
            if (!f.has_t()) f.t_on = f.t_peak = f.t_off = std::nullopt;
        }
        out.truth.cycles.push_back(std::move(f));
    }
    return out;
}

CycleSpec normal_cycle() {
    CycleSpec c;
    c.rr_ms = 800.0;
    c.wave(Wave::P) = {true, 0.15, -150.0, 20.0};
    c.wave(Wave::Q) = {true, -0.10, -28.0, 7.0};
    c.wave(Wave::R) = {true, 1.20, 0.0, 9.0};
    c.wave(Wave::S) = {true, -0.15, 28.0, 7.0};
    c.wave(Wave::T) = {true, 0.30, 210.0, 30.0};

    // Amplitudes in mV per lead for P, Q, R, S, T.
    const std::map<std::string, std::array<double, kWaveCount>> table = {
        {"I", {0.10, -0.05, 0.80, -0.10, 0.25}},  {"II", {0.15, -0.10, 1.20, -0.15, 0.30}},
        {"V1", {0.08, 0.00, 0.30, -0.80, 0.10}},  {"V2", {0.08, 0.00, 0.70, -0.90, 0.30}},
        {"V3", {0.08, 0.00, 1.60, -0.30, 0.35}},  {"V4", {0.08, -0.05, 1.80, -0.20, 0.35}},
        {"V5", {0.08, -0.08, 1.60, -0.10, 0.35}}, {"V6", {0.08, -0.06, 1.20, 0.00, 0.30}},
    };
    for (const auto& [lead, amps] : table)
        for (std::size_t w = 0; w < kWaveCount; ++w) c.set_amplitude_mv(lead, static_cast<Wave>(w), amps[w]);
    return c;
}

std::vector<CycleSpec> repeat_cycle(const CycleSpec& cycle, double duration_s) {
    std::vector<CycleSpec> out;
    double r = cycle.rr_ms / 2.0;
    while (r + cycle.rr_ms / 2.0 <= duration_s * 1000.0 + 1e-9) {
        out.push_back(cycle);
        r += cycle.rr_ms;
    }
    return out;
}

std::vector<CycleSpec> alternate(CycleSpec c, double rr_a, double rr_b, double duration_s) {
    std::vector<CycleSpec> out;
    double r = rr_a / 2.0;
    for (std::size_t k = 0;; ++k) {
        c.rr_ms = k % 2 == 0 ? rr_a : rr_b;
        if (k > 0) r += c.rr_ms;
        if (r + c.rr_ms / 2.0 > duration_s * 1000.0) break;
        out.push_back(c);
    }
    return out;
}

namespace {

void set(CycleSpec& c, const char* lead, Wave w, double mv) { c.set_amplitude_mv(lead, w, mv); }

}  // namespace

void apply_condition(CycleSpec& c, RuleId rule, bool fire) {
    using enum Wave;

    switch (rule) {
        case RuleId::poor_r_wave_progression: {
            const double v4 = fire ? 1.2 : 1.7;
            set(c, "V1", R, 2.0), set(c, "V1", S, -0.2);
            set(c, "V2", R, 1.8), set(c, "V2", S, -0.2);
            set(c, "V3", R, 1.5), set(c, "V3", S, -0.2);
            set(c, "V4", R, v4), set(c, "V4", S, -0.2);
            break;
        }
        case RuleId::arrhythmia:
            break;  // a rhythm property, see make_rule_case
        case RuleId::tachycardia:
            if (fire) {
                c.rr_ms = 400.0;
                c.wave(P).center_ms = -110.0, c.wave(P).width_ms = 15.0;
                c.wave(T).center_ms = 140.0, c.wave(T).width_ms = 18.0;
            } else {
                c.rr_ms = 750.0;
            }
            break;
        case RuleId::bradycardia:
            c.rr_ms = fire ? 1250.0 : 750.0;
            break;
        case RuleId::right_axis_deviation:
            set(c, "I", R, 0.3);
            set(c, "I", S, fire ? -0.7 : -0.2);
            break;
        case RuleId::left_axis_deviation:
            set(c, "I", R, fire ? 0.8 : 0.2);
            set(c, "I", S, fire ? -0.2 : -0.4);
            set(c, "II", Q, -0.05);
            set(c, "II", R, 0.3);
            set(c, "II", S, -1.1);
            break;
        case RuleId::low_qrs_voltage:
            set(c, "I", R, 0.35), set(c, "I", Q, -0.03), set(c, "I", S, -0.05);
            set(c, "II", R, fire ? 0.45 : 0.75), set(c, "II", Q, -0.05), set(c, "II", S, -0.05);
            break;
        case RuleId::qt_prolongation:
            c.rr_ms = 1000.0;
            if (fire) c.wave(T).center_ms = 380.0, c.wave(T).width_ms = 35.0;
            break;
        case RuleId::clockwise_rotation:
            set(c, "V1", R, fire ? 0.8 : 1.2), set(c, "V1", S, -0.8);
            set(c, "V2", R, 0.9), set(c, "V2", S, -0.9);
            break;
        case RuleId::counterclockwise_rotation:
            set(c, "V1", R, 0.3), set(c, "V1", S, -0.8);
            set(c, "V2", R, 0.5), set(c, "V2", S, -1.0);
            set(c, "V3", R, 0.6), set(c, "V3", S, -1.0);
            set(c, "V4", R, fire ? 0.7 : 1.4), set(c, "V4", S, -1.0);
            break;
        case RuleId::first_degree_av_block:
            if (fire) c.wave(P).center_ms = -260.0;
            break;
        case RuleId::abnormal_q_waves:
            if (fire) {
                c.wave(Q).width_ms = 8.0;
                set(c, "II", Q, -0.5);
            }
            break;
        case RuleId::t_wave_change:
            set(c, "II", T, fire ? 0.7 : 0.3);
            break;
        case RuleId::right_atrial_enlargement:
            set(c, "V1", P, fire ? 0.2 : 0.1);
            set(c, "V2", P, fire ? 0.2 : 0.1);
            set(c, "II", P, 0.35);
            break;
        case RuleId::left_ventricular_high_voltage:
            if (fire) {
                set(c, "V5", R, 2.6), set(c, "V6", R, 2.6);
            } else {
                set(c, "V6", R, 1.2), set(c, "V1", S, -0.6);
            }
            break;
        default:
            throw UnknownRule("unknown rule id " + std::to_string(static_cast<int>(rule)));
    }
}

RuleCase make_rule_case(RuleId rule, bool fire, Gender gender) {
    constexpr double kDuration = 10.0;
    CycleSpec c = normal_cycle();
    apply_condition(c, rule, fire);
    RuleCase out;
    out.gender = gender;
    if (rule == RuleId::arrhythmia)
        out.cycles = fire ? alternate(c, 600.0, 1000.0, kDuration) : alternate(c, 750.0, 850.0, kDuration);
    else
        out.cycles = repeat_cycle(c, kDuration);
    return out;
}

LabelCatalog default_catalog() {
    LabelCatalog c;
    c.names = {"Poor R-wave progression", "Arrhythmia", "Sinus tachycardia", "Sinus bradycardia",
               "Right axis deviation", "Left axis deviation", "Low QRS voltage", "QT prolongation",
               "Clockwise rotation", "Counterclockwise rotation", "First-degree AV block", "Abnormal Q wave",
               "T wave change", "Right atrial enlargement", "Left ventricular high voltage", "Normal ECG",
               "Atrial fibrillation"};
    for (auto id : all_rules()) c.rule_map[id] = static_cast<std::size_t>(id) - 1;
    return c;
}

Corpus make_corpus(const CorpusOptions& o) {
    using enum Wave;
    Corpus corpus;
    corpus.catalog = default_catalog();
    std::mt19937_64 rng(o.seed);
    auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto chance = [&](double p) { return uniform(0.0, 1.0) < p; };
    const double pc = o.common_prevalence;

    // Exclusive groups: draw at most one member.
    auto pick = [&](std::initializer_list<std::pair<RuleId, double>> group) -> std::optional<RuleId> {
        double u = uniform(0.0, 1.0);
        for (const auto& [id, p] : group) {
            if (u < p) return id;
            u -= p;
        }
        return std::nullopt;
    };

    for (std::size_t n = 0; n < o.records; ++n) {
        CycleSpec c = normal_cycle();
        const double scale = uniform(0.85, 1.15);
        for (auto& w : c.waves) w.amplitude_mv *= scale;
        for (auto& [lead, gains] : c.lead_gain)
            for (auto& g : gains) g *= uniform(1.0 - o.lead_jitter, 1.0 + o.lead_jitter);
        c.rr_ms = uniform(620.0, 980.0);
        // PR is roughly |P center| + 5 ms, QT roughly T center + 125 ms.
        c.wave(P).center_ms = -uniform(120.0, 180.0);
        c.wave(T).center_ms = uniform(190.0, 240.0);

        std::vector<std::string> labels;
        auto label = [&](RuleId id) { labels.push_back(corpus.catalog.names[static_cast<std::size_t>(id) - 1]); };

        bool af = false;
        std::optional<RuleId> rate;
        if (chance(o.af_prevalence)) af = true;
        else rate = pick({{RuleId::tachycardia, pc}, {RuleId::bradycardia, pc}, {RuleId::arrhythmia, pc}});
        const auto axis = pick({{RuleId::right_axis_deviation, pc}, {RuleId::left_axis_deviation, pc},
                                {RuleId::low_qrs_voltage, pc}});
        const auto chest = pick({{RuleId::poor_r_wave_progression, pc}, {RuleId::clockwise_rotation, pc},
                                 {RuleId::counterclockwise_rotation, pc},
                                 {RuleId::left_ventricular_high_voltage, pc}});
        const bool regular = !af && (!rate || rate == RuleId::bradycardia);
        const bool qt = regular && chance(o.rare_prevalence);
        const bool av = regular && chance(o.rare_prevalence);
        const bool rae = !af && chance(o.rare_prevalence);
        const bool q_waves = chance(pc);
        const bool t_change = chance(pc);

        for (const auto& id : {axis, chest})
            if (id) apply_condition(c, *id, true), label(*id);
        if (q_waves) {
            c.wave(Q).width_ms = 8.0;
            c.set_amplitude_mv("II", Q, -uniform(0.45, 0.6));
            label(RuleId::abnormal_q_waves);
        }
        if (t_change) {
            c.set_amplitude_mv("II", T, uniform(0.65, 0.9));
            label(RuleId::t_wave_change);
        }

        // The rare conditions come with a range of severities and with
        // near-miss decoys that satisfy only part of the criterion.
        if (rae) {
            const bool both = chance(0.5);
            c.set_amplitude_mv("V1", P, uniform(0.19, 0.26));
            c.set_amplitude_mv("V2", P, both ? uniform(0.19, 0.26) : uniform(0.05, 0.1));
            c.set_amplitude_mv("II", P, uniform(0.32, 0.42));
            label(RuleId::right_atrial_enlargement);
        } else if (!af && chance(o.decoy_prevalence)) {
            if (chance(0.5)) c.set_amplitude_mv("II", P, uniform(0.32, 0.42));
            else c.set_amplitude_mv("V1", P, uniform(0.19, 0.26));
        }
        if (qt) {
            c.rr_ms = uniform(700.0, 950.0);
            c.wave(T).center_ms = uniform(345.0, 390.0);
            c.wave(T).width_ms = uniform(32.0, 36.0);
            label(RuleId::qt_prolongation);
        } else if (regular && chance(o.decoy_prevalence)) {
            // Long corrected QT at a fast rate, but QT itself stays under 400 ms.
            c.rr_ms = uniform(620.0, 700.0);
            c.wave(T).center_ms = uniform(230.0, 250.0);
            c.wave(T).width_ms = uniform(28.0, 32.0);
        }
        if (av) {
            c.wave(P).center_ms = -uniform(235.0, 290.0);
            label(RuleId::first_degree_av_block);
        } else if (regular && chance(o.decoy_prevalence)) {
            c.wave(P).center_ms = -uniform(170.0, 185.0);
        }

        std::vector<CycleSpec> cycles;
        if (af) {
            c.wave(P).present = false;
            labels.emplace_back("Atrial fibrillation");
            double r = 0.0;
            for (;;) {
                c.rr_ms = uniform(450.0, 1100.0);
                r += cycles.empty() ? c.rr_ms / 2.0 : c.rr_ms;
                if (r + c.rr_ms / 2.0 > o.duration_s * 1000.0) break;
                cycles.push_back(c);
            }
        } else if (rate == RuleId::arrhythmia) {
            cycles = alternate(c, uniform(560.0, 640.0), uniform(980.0, 1100.0), o.duration_s);
            label(*rate);
        } else {
            if (rate == RuleId::tachycardia) {
                apply_condition(c, *rate, true);
                c.rr_ms = uniform(380.0, 460.0);
            } else if (rate == RuleId::bradycardia) {
                c.rr_ms = uniform(1100.0, 1350.0);
            }
            if (rate) label(*rate);
            cycles = repeat_cycle(c, o.duration_s);
        }
        if (labels.empty()) labels.emplace_back("Normal ECG");

        SynthOptions render = o.render;
        render.noise_std_mv = o.noise_std_mv;
        render.duration_s = o.duration_s;
        render.seed = o.seed * 1000003ULL + n;
        char id[32];
        std::snprintf(id, sizeof id, "rec%04zu", n);
        render.record_id = id;
        auto sr = generate_record(cycles, render);
        const double g = uniform(0.0, 1.0);
        sr.record.gender = g < 0.05 ? Gender::missing : g < 0.525 ? Gender::male : Gender::female;
        if (!chance(0.05)) sr.record.age_years = static_cast<int>(uniform(20.0, 90.0));
        sr.record.labels = encode_labels(labels, corpus.catalog);
        corpus.records.push_back(std::move(sr.record));
        corpus.truth.push_back(std::move(sr.truth));
    }
    return corpus;
}

RuleCase make_rule_case(int rule_number, bool fire, Gender gender) {
    if (rule_number < 1 || rule_number > kRuleCount)
        throw UnknownRule("rule id must be in 1.." + std::to_string(kRuleCount) + ", got " +
                          std::to_string(rule_number));
    return make_rule_case(static_cast<RuleId>(rule_number), fire, gender);
}

}  // namespace ecg::synth
