#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ecg/errors.hpp"
#include "ecg/pipeline.hpp"
#include "ecg/synth.hpp"

using namespace ecg;
using synth::Wave;

TEST_CASE("RR 1000 ms over 10 s renders 10 cycles at 60 bpm") {
    auto c = synth::normal_cycle();
    c.rr_ms = 1000.0;
    const auto cycles = synth::repeat_cycle(c, 10.0);
    CHECK(cycles.size() == 10);
    const auto sr = synth::generate_record(cycles);
    CHECK(sr.truth.r_peaks.size() == 10);
    const auto m = analyze_record(sr.record, synth::default_catalog()).measurements;
    CHECK(*m.heart_rate_bpm == doctest::Approx(60.0).epsilon(0.01));
}

TEST_CASE("samples are integral ADC counts and leads are the recorded eight") {
    synth::SynthOptions o;
    o.noise_std_mv = 0.02;
    o.wander_mv = 0.1;
    const auto sr = synth::generate_record(synth::repeat_cycle(synth::normal_cycle(), 4.0), o);
    CHECK(sr.record.lead_names == std::vector<std::string>(kRecordedLeads.begin(), kRecordedLeads.end()));
    for (const auto& lead : sr.record.leads)
        for (double v : lead) CHECK(v == std::round(v));
    CHECK_NOTHROW(sr.record.validate());
}

TEST_CASE("generation is deterministic per seed") {
    synth::SynthOptions o;
    o.noise_std_mv = 0.05;
    o.seed = 42;
    const auto cycles = synth::repeat_cycle(synth::normal_cycle(), 5.0);
    const auto a = synth::generate_record(cycles, o), b = synth::generate_record(cycles, o);
    CHECK(a.record.leads == b.record.leads);
    o.seed = 43;
    CHECK(synth::generate_record(cycles, o).record.leads != a.record.leads);
}

TEST_CASE("ground truth is ordered and boundaries sit at 2.5 sigma") {
    const auto c = synth::normal_cycle();
    const auto sr = synth::generate_record(synth::repeat_cycle(c, 10.0));
    for (const auto& f : sr.truth.cycles) CHECK(f.ordered());
    const auto& f = sr.truth.cycles[2];
    const double fs = sr.record.sample_rate_hz;
    const auto& p = c.wave(Wave::P);
    CHECK(std::abs(double(*f.p_on) - (double(f.r) + (p.center_ms - 2.5 * p.width_ms) * fs / 1000)) <= 1.0);
    CHECK(std::abs(double(*f.p_peak) - (double(f.r) + p.center_ms * fs / 1000)) <= 1.0);
    const auto& t = c.wave(Wave::T);
    CHECK(std::abs(double(*f.t_off) - (double(f.r) + (t.center_ms + 2.5 * t.width_ms) * fs / 1000)) <= 1.0);
}

TEST_CASE("noise-free records give R within 20 ms of truth") {
    const auto sr = synth::generate_record(synth::repeat_cycle(synth::normal_cycle(), 10.0));
    const auto d = delineate_record(derive_augmented_leads(sr.record));
    REQUIRE(d.anchors.size() == sr.truth.r_peaks.size());
    for (std::size_t k = 0; k < d.anchors.size(); ++k)
        CHECK(std::abs(double(d.anchors[k]) - double(sr.truth.r_peaks[k])) <= 10.0);
}

TEST_CASE("spec validation") {
    auto c = synth::normal_cycle();
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(synth::generate_record({c}), SpecError);
    auto bad = c;
    bad.wave(Wave::R).present = false;
    CHECK_THROWS_AS(bad.validate(), SpecError);
    bad = c;
    bad.wave(Wave::T).width_ms = 0;
    CHECK_THROWS_AS(bad.validate(), SpecError);
    bad = c;
    bad.wave(Wave::P).center_ms = 10;
    CHECK_THROWS_AS(bad.validate(), SpecError);
    bad = c;
    bad.rr_ms = -1;
    CHECK_THROWS_AS(bad.validate(), SpecError);
}

TEST_CASE("rule case constructions") {
    const auto tachy = synth::make_rule_case(RuleId::tachycardia, true);
    for (const auto& c : tachy.cycles) CHECK(c.rr_ms == 400.0);
    const auto brady = synth::make_rule_case(RuleId::bradycardia, false);
    for (const auto& c : brady.cycles) CHECK(c.rr_ms == 750.0);
    const auto lvh = synth::make_rule_case(RuleId::left_ventricular_high_voltage, true, Gender::male);
    CHECK(lvh.cycles[0].amplitude_mv("V5", Wave::R) == doctest::Approx(2.6));
    CHECK(lvh.cycles[0].amplitude_mv("V6", Wave::R) == doctest::Approx(2.6));
    CHECK(lvh.gender == Gender::male);
    CHECK_THROWS_AS(synth::make_rule_case(0, true), UnknownRule);
    CHECK_THROWS_AS(synth::make_rule_case(16, false), UnknownRule);
}

TEST_CASE("every rule case round-trips through the pipeline") {
    const auto catalog = synth::default_catalog();
    for (int id = 1; id <= kRuleCount; ++id) {
        for (bool fire : {true, false}) {
            CAPTURE(id);
            CAPTURE(fire);
            const auto rc = synth::make_rule_case(id, fire);
            auto rec = synth::generate_record(rc.cycles).record;
            rec.gender = rc.gender;
            rec.age_years = rc.age_years;
            const auto out = analyze_record(rec, catalog).rules;
            const auto& e = out.evaluations[static_cast<std::size_t>(id) - 1];
            CHECK(e.fired() == fire);
            CHECK(out.l_rule[catalog.rule_map.at(static_cast<RuleId>(id))] == fire);
        }
    }
}

TEST_CASE("default catalog") {
    const auto cat = synth::default_catalog();
    CHECK(cat.size() == 17);
    CHECK(cat.rule_map.size() == 15);
    CHECK_NOTHROW(cat.validate());
    CHECK(cat.names[2] == "Sinus tachycardia");
    CHECK_FALSE(cat.rule_map.count(RuleId::tachycardia) == 0);
    CHECK(cat.hash() == synth::default_catalog().hash());
}

TEST_CASE("corpus is deterministic and respects exclusive groups") {
    synth::CorpusOptions o;
    o.records = 40;
    o.seed = 9;
    const auto a = synth::make_corpus(o), b = synth::make_corpus(o);
    REQUIRE(a.records.size() == 40);
    const auto& cat = a.catalog;
    const auto idx = [&](const char* n) { return *cat.index_of(n); };
    std::set<std::string> ids;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& r = a.records[i];
        CHECK(r.leads == b.records[i].leads);
        CHECK(r.labels == b.records[i].labels);
        REQUIRE(r.labels.has_value());
        const auto& l = *r.labels;
        CHECK_FALSE((l[idx("Sinus tachycardia")] && l[idx("Sinus bradycardia")]));
        CHECK_FALSE((l[idx("Left axis deviation")] && l[idx("Right axis deviation")]));
        CHECK_FALSE((l[idx("Clockwise rotation")] && l[idx("Counterclockwise rotation")]));
        ids.insert(r.record_id);
        CHECK_NOTHROW(r.validate());
    }
    CHECK(ids.size() == 40);
    o.seed = 10;
    CHECK(synth::make_corpus(o).records[0].leads != a.records[0].leads);
}
