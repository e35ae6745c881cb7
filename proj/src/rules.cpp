#include "ecg/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ecg/errors.hpp"

namespace ecg {

std::string_view cmp_symbol(Cmp c) {
    switch (c) {
        case Cmp::gt: return ">";
        case Cmp::ge: return ">=";
        case Cmp::lt: return "<";
        case Cmp::le: return "<=";
    }
    return "?";
}

bool Condition::satisfied() const {
    if (!value) return false;
    switch (op) {
        case Cmp::gt: return *value > threshold;
        case Cmp::ge: return *value >= threshold;
        case Cmp::lt: return *value < threshold;
        case Cmp::le: return *value <= threshold;
    }
    return false;
}

double Condition::margin() const {
    if (!value) return -std::numeric_limits<double>::infinity();
    const double scale = std::max(std::abs(threshold), 0.05);
    const double d = (*value - threshold) / scale;
    return op == Cmp::gt || op == Cmp::ge ? d : -d;
}

bool Clause::satisfied() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.satisfied(); });
}

double Clause::margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : conditions) m = std::min(m, c.margin());
    return m;
}

bool RuleEvaluation::fired() const {
    return std::any_of(clauses.begin(), clauses.end(), [](const Clause& c) { return c.satisfied(); });
}

bool RuleEvaluation::abstained() const {
    return std::none_of(clauses.begin(), clauses.end(), [](const Clause& c) {
        return std::all_of(c.conditions.begin(), c.conditions.end(),
                           [](const Condition& x) { return x.available(); });
    });
}

const Clause* RuleEvaluation::evidence() const {
    const Clause* best = nullptr;
    const bool want = fired();
    for (const auto& c : clauses) {
        if (want && !c.satisfied()) continue;
        if (!best || c.margin() > best->margin()) best = &c;
    }
    return best;
}

// ---- config -------------------------------------------------------------------

RuleConfig RuleConfig::defaults() {
    RuleConfig c;
    c.thresholds = {
        {"prwp.sum_mv", 0.2},
        {"arrhythmia.std_pp_ms", 120.0},
        {"tachycardia.heart_rate_bpm", 120.0},
        {"bradycardia.heart_rate_bpm", 60.0},
        {"low_qrs.limb_mv", 0.5},
        {"low_qrs.chest_mv", 1.0},
        {"qt.qt_ms", 400.0},
        {"qt.qtc", 0.43},
        {"cr.ratio_low", 0.9},
        {"cr.ratio_high", 1.1},
        {"ccr.ratio", 1.0},
        {"av_block.pr_ms", 200.0},
        {"abnormal_q.ratio", 0.25},
        {"abnormal_q.t_q_ms", 40.0},
        {"t_change.ratio", 0.1},
        {"t_change.abs_mv", 0.5},
        {"rae.chest_p_mv", 0.15},
        {"rae.limb_p_mv", 0.25},
        {"lvhv.r_v5_v6_mv", 2.5},
        {"lvhv.sokolow_male_mv", 4.0},
        {"lvhv.sokolow_female_mv", 3.5},
        {"lvhv.r_i_mv", 1.5},
        {"lvhv.r_avl_mv", 1.2},
        {"lvhv.r_avf_mv", 2.0},
        {"lvhv.r_i_s_iii_mv", 2.5},
        {"guard.ratio_denominator_mv", 0.05},
    };
    c.quantifiers = {
        {"low_qrs.leads", Quantifier::all}, {"ccr.leads", Quantifier::all},
        {"abnormal_q.leads", Quantifier::any}, {"t_change.leads", Quantifier::any},
        {"rae.leads", Quantifier::any},
    };
    return c;
}

double RuleConfig::threshold(const std::string& key) const {
    auto it = thresholds.find(key);
    if (it == thresholds.end()) throw ConfigError("unknown rule threshold '" + key + "'");
    return it->second;
}

Quantifier RuleConfig::quantifier(const std::string& key) const {
    auto it = quantifiers.find(key);
    if (it == quantifiers.end()) throw ConfigError("unknown rule quantifier '" + key + "'");
    return it->second;
}

void RuleConfig::set(const std::string& key, const std::string& value) {
    if (auto q = quantifiers.find(key); q != quantifiers.end()) {
        if (value == "all") q->second = Quantifier::all;
        else if (value == "any") q->second = Quantifier::any;
        else throw ConfigError("quantifier '" + key + "' must be 'all' or 'any'");
        return;
    }
    auto t = thresholds.find(key);
    if (t == thresholds.end()) throw ConfigError("unknown rule setting '" + key + "'");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || !std::isfinite(v))
        throw ConfigError("rule setting '" + key + "' needs a number, got '" + value + "'");
    t->second = v;
}

// ---- formula construction -----------------------------------------------------

namespace {

// Disjunctive normal form: OR over clauses, each an AND of conditions.
using Dnf = std::vector<std::vector<Condition>>;

Dnf leaf(Condition c) { return {{std::move(c)}}; }

Dnf any_of(std::vector<Dnf> parts) {
    Dnf out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

Dnf all_of(std::vector<Dnf> parts) {
    Dnf out{{}};
    for (const auto& p : parts) {
        Dnf next;
        for (const auto& a : out)
            for (const auto& b : p) {
                auto merged = a;
                merged.insert(merged.end(), b.begin(), b.end());
                next.push_back(std::move(merged));
            }
        out = std::move(next);
    }
    return out;
}

Dnf quantified(Quantifier q, std::vector<Dnf> parts) {
    return q == Quantifier::all ? all_of(std::move(parts)) : any_of(std::move(parts));
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

class Builder {
public:
    Builder(const MeasurementSet& m, const RuleConfig& cfg) : m_(m), cfg_(cfg) {}

    std::optional<double> amp(const std::string& lead, Amp a) const { return m_.amplitude(lead, a); }

    static std::string amp_name(const std::string& lead, Amp a) {
        return "A_" + std::string(kAmpNames[static_cast<std::size_t>(a)]) + "_" + lead + "_mv";
    }

    Condition cond(std::string quantity, std::optional<double> v, double thr, Cmp op,
                   std::string note = "") const {
        Condition c{std::move(quantity), v, thr, op, {}};
        if (!v) c.note = note.empty() ? "measurement missing" : std::move(note);
        return c;
    }

    Condition amp_cond(const std::string& lead, Amp a, double thr, Cmp op) const {
        return cond(amp_name(lead, a), amp(lead, a), thr, op);
    }

    // |A(num)| / |A(den)|, unavailable when the denominator is too small.
    Condition ratio_cond(const std::string& lead, Amp num, Amp den, double thr, Cmp op) const {
        const std::string name = "|" + amp_name(lead, num) + "|/|" + amp_name(lead, den) + "|";
        const auto n = amp(lead, num);
        const auto d = amp(lead, den);
        if (!n || !d) return cond(name, std::nullopt, thr, op);
        const double guard = cfg_.threshold("guard.ratio_denominator_mv");
        if (std::abs(*d) < guard)
            return cond(name, std::nullopt, thr, op, "denominator magnitude below " + fmt(guard) + " mV");
        return cond(name, std::abs(*n) / std::abs(*d), thr, op);
    }

    // Linear combination of measured amplitudes; magnitude flags apply |.|.
    struct Term {
        double coef;
        std::string lead;
        Amp amp;
        bool magnitude = false;
    };
    Condition sum_cond(const std::vector<Term>& terms, double thr, Cmp op) const {
        std::string name;
        double total = 0.0;
        bool ok = true;
        for (const auto& t : terms) {
            if (!name.empty()) name += t.coef < 0 ? " - " : " + ";
            else if (t.coef < 0) name += "-";
            const double c = std::abs(t.coef);
            if (c != 1.0) name += fmt(c) + "*";
            const auto label = amp_name(t.lead, t.amp);
            name += t.magnitude ? "|" + label + "|" : label;
            const auto v = amp(t.lead, t.amp);
            if (!v) {
                ok = false;
                continue;
            }
            total += t.coef * (t.magnitude ? std::abs(*v) : *v);
        }
        return cond(name, ok ? std::optional<double>(total) : std::nullopt, thr, op);
    }

    Condition scalar_cond(const std::string& name, const std::optional<double>& v, double thr, Cmp op) const {
        return cond(name, v, thr, op);
    }

    double t(const std::string& key) const { return cfg_.threshold(key); }
    Quantifier q(const std::string& key) const { return cfg_.quantifier(key); }

private:
    const MeasurementSet& m_;
    const RuleConfig& cfg_;
};

Dnf build(RuleId id, const Builder& b, const MeasurementSet& m, Gender gender) {
    using enum Amp;
    auto leads_dnf = [&](std::initializer_list<const char*> leads, auto make) {
        std::vector<Dnf> parts;
        for (const char* l : leads) parts.push_back(make(std::string(l)));
        return parts;
    };

    switch (id) {
        case RuleId::poor_r_wave_progression: {
            auto descending = all_of({
                leaf(b.sum_cond({{1, "V1", R}, {-1, "V2", R}}, 0.0, Cmp::gt)),
                leaf(b.sum_cond({{1, "V2", R}, {-1, "V3", R}}, 0.0, Cmp::gt)),
                leaf(b.sum_cond({{1, "V3", R}, {-1, "V4", R}}, 0.0, Cmp::gt)),
            });
            auto small = all_of({
                leaf(b.amp_cond("V2", R, 0.0, Cmp::gt)),
                leaf(b.amp_cond("V3", R, 0.0, Cmp::gt)),
                leaf(b.sum_cond({{1, "V1", R}, {1, "V2", R}, {1, "V3", R}}, b.t("prwp.sum_mv"), Cmp::lt)),
            });
            return any_of({descending, small});
        }
        case RuleId::arrhythmia:
            return leaf(b.scalar_cond("std_PP_ms", m.std_pp_ms, b.t("arrhythmia.std_pp_ms"), Cmp::gt));
        case RuleId::tachycardia:
            return leaf(b.scalar_cond("heart_rate_bpm", m.heart_rate_bpm, b.t("tachycardia.heart_rate_bpm"), Cmp::gt));
        case RuleId::bradycardia:
            return leaf(b.scalar_cond("heart_rate_bpm", m.heart_rate_bpm, b.t("bradycardia.heart_rate_bpm"), Cmp::lt));
        case RuleId::right_axis_deviation:
            // -2 A(III) < A(I) < 0 and A(III) > 0
            return all_of({
                leaf(b.sum_cond({{1, "I", QRS}, {2, "III", QRS}}, 0.0, Cmp::gt)),
                leaf(b.amp_cond("I", QRS, 0.0, Cmp::lt)),
                leaf(b.amp_cond("III", QRS, 0.0, Cmp::gt)),
            });
        case RuleId::left_axis_deviation:
            // A(I) > 0 and A(III) < -A(I)
            return all_of({
                leaf(b.amp_cond("I", QRS, 0.0, Cmp::gt)),
                leaf(b.sum_cond({{1, "III", QRS}, {1, "I", QRS}}, 0.0, Cmp::lt)),
            });
        case RuleId::low_qrs_voltage: {
            const auto quant = b.q("low_qrs.leads");
            auto limb = quantified(quant, leads_dnf({"I", "II", "III"}, [&](const std::string& l) {
                return leaf(b.amp_cond(l, QRS, b.t("low_qrs.limb_mv"), Cmp::lt));
            }));
            auto chest = quantified(quant, leads_dnf({"V1", "V2", "V3"}, [&](const std::string& l) {
                return leaf(b.amp_cond(l, QRS, b.t("low_qrs.chest_mv"), Cmp::lt));
            }));
            return any_of({limb, chest});
        }
        case RuleId::qt_prolongation:
            return all_of({
                leaf(b.scalar_cond("t_QT_ms", m.t_qt_ms, b.t("qt.qt_ms"), Cmp::gt)),
                leaf(b.scalar_cond("qtc", m.qtc, b.t("qt.qtc"), Cmp::gt)),
            });
        case RuleId::clockwise_rotation: {
            std::vector<Dnf> parts;
            for (const char* l : {"V1", "V2"}) {
                parts.push_back(leaf(b.ratio_cond(l, R, S, b.t("cr.ratio_low"), Cmp::gt)));
                parts.push_back(leaf(b.ratio_cond(l, R, S, b.t("cr.ratio_high"), Cmp::lt)));
            }
            return all_of(std::move(parts));
        }
        case RuleId::counterclockwise_rotation:
            return quantified(b.q("ccr.leads"), leads_dnf({"V1", "V2", "V3", "V4"}, [&](const std::string& l) {
                return leaf(b.ratio_cond(l, R, S, b.t("ccr.ratio"), Cmp::lt));
            }));
        case RuleId::first_degree_av_block:
            return leaf(b.scalar_cond("t_PR_ms", m.t_pr_ms, b.t("av_block.pr_ms"), Cmp::gt));
        case RuleId::abnormal_q_waves: {
            auto deep = quantified(b.q("abnormal_q.leads"), leads_dnf({"II", "III", "aVF"}, [&](const std::string& l) {
                return leaf(b.ratio_cond(l, Q, R, b.t("abnormal_q.ratio"), Cmp::gt));
            }));
            auto wide = leaf(b.scalar_cond("t_Q_ms", m.t_q_ms, b.t("abnormal_q.t_q_ms"), Cmp::gt));
            return any_of({deep, wide});
        }
        case RuleId::t_wave_change:
            return quantified(b.q("t_change.leads"),
                              leads_dnf({"I", "II", "V2", "V3", "V4", "V5", "V6"}, [&](const std::string& l) {
                                  return any_of({
                                      leaf(b.ratio_cond(l, T, R, b.t("t_change.ratio"), Cmp::lt)),
                                      leaf(b.sum_cond({{1, l, T, true}}, b.t("t_change.abs_mv"), Cmp::gt)),
                                  });
                              }));
        case RuleId::right_atrial_enlargement: {
            const auto quant = b.q("rae.leads");
            auto chest = quantified(quant, leads_dnf({"V1", "V2"}, [&](const std::string& l) {
                return leaf(b.amp_cond(l, P, b.t("rae.chest_p_mv"), Cmp::ge));
            }));
            auto limb = quantified(quant, leads_dnf({"II", "III", "aVF"}, [&](const std::string& l) {
                return leaf(b.amp_cond(l, P, b.t("rae.limb_p_mv"), Cmp::ge));
            }));
            return all_of({chest, limb});
        }
        case RuleId::left_ventricular_high_voltage: {
            auto a = all_of({
                leaf(b.amp_cond("V5", R, b.t("lvhv.r_v5_v6_mv"), Cmp::gt)),
                leaf(b.amp_cond("V6", R, b.t("lvhv.r_v5_v6_mv"), Cmp::gt)),
            });
            Dnf bb;
            auto sokolow = b.sum_cond({{1, "V5", R}, {1, "V1", S, true}}, 0.0, Cmp::gt);
            if (gender == Gender::male) {
                sokolow.threshold = b.t("lvhv.sokolow_male_mv");
            } else if (gender == Gender::female) {
                sokolow.threshold = b.t("lvhv.sokolow_female_mv");
            } else {
                sokolow.threshold = b.t("lvhv.sokolow_male_mv");
                sokolow.value.reset();
                sokolow.note = "gender missing";
            }
            bb = leaf(std::move(sokolow));
            auto c = any_of({
                leaf(b.amp_cond("I", R, b.t("lvhv.r_i_mv"), Cmp::gt)),
                leaf(b.amp_cond("aVL", R, b.t("lvhv.r_avl_mv"), Cmp::gt)),
                leaf(b.amp_cond("aVF", R, b.t("lvhv.r_avf_mv"), Cmp::gt)),
            });
            auto d = leaf(b.sum_cond({{1, "I", R}, {1, "III", S, true}}, b.t("lvhv.r_i_s_iii_mv"), Cmp::gt));
            return any_of({a, bb, c, d});
        }
    }
    throw UnknownRule("unknown rule id " + std::to_string(static_cast<int>(id)));
}

}  // namespace

std::vector<RuleEvaluation> evaluate_rule_set(const MeasurementSet& m, Gender gender, const RuleConfig& config) {
    Builder b(m, config);
    std::vector<RuleEvaluation> out;
    for (auto id : all_rules()) {
        RuleEvaluation e;
        e.id = id;
        for (auto& conds : build(id, b, m, gender)) e.clauses.push_back(Clause{std::move(conds)});
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::uint8_t> build_mask(const LabelCatalog& catalog) {
    std::vector<std::uint8_t> mask(catalog.size(), 0);
    for (const auto& [rule, idx] : catalog.rule_map) {
        if (idx >= mask.size()) throw CatalogError("rule map points past the catalog");
        mask[idx] = 1;
    }
    return mask;
}

RuleOutput evaluate_rules(const MeasurementSet& m, const Demographics& demographics, const LabelCatalog& catalog,
                          const RuleConfig& config) {
    catalog.validate();
    Gender gender = Gender::missing;
    if (demographics.gender_scalar == 1.0) gender = Gender::male;
    else if (demographics.gender_scalar == 2.0) gender = Gender::female;

    RuleOutput out;
    out.mask = build_mask(catalog);
    out.l_rule.assign(catalog.size(), 0);
    out.evaluations = evaluate_rule_set(m, gender, config);
    for (const auto& e : out.evaluations) {
        if (!e.fired()) continue;
        out.fired_rules.push_back(e.id);
        if (auto it = catalog.rule_map.find(e.id); it != catalog.rule_map.end()) out.l_rule[it->second] = 1;
    }
    return out;
}

}  // namespace ecg
