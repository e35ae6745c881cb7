#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ecg/errors.hpp"
#include "ecg/measurement.hpp"
#include "ecg/synth.hpp"

using namespace ecg;

namespace {

// Single-lead record whose cycles are placed by hand; Q and S sit at 0 so the
// fixture only exercises R.
DelineatedRecord hand_made(const std::vector<double>& r_counts, std::size_t anchors_extra = 0) {
    DelineatedRecord d;
    d.record.record_id = "hand";
    d.record.unit_voltage_mv = 0.01;
    d.record.lead_names = {"II"};
    d.record.leads = {std::vector<double>(100 * (r_counts.size() + anchors_extra) + 100, 0.0)};
    d.cycles.resize(1);
    for (std::size_t k = 0; k < r_counts.size() + anchors_extra; ++k) {
        const std::size_t r = 50 + 100 * k;
        d.anchors.push_back(r);
        if (k >= r_counts.size()) continue;
        d.record.leads[0][r] = r_counts[k];
        CycleFiducials c;
        c.lead = "II";
        c.r = r;
        c.qrs_on = r - 5;
        c.qrs_off = r + 5;
        d.cycles[0].push_back(c);
        d.qrs_bounds.push_back(QrsBounds{r - 5, r + 5});
    }
    return d;
}

}  // namespace

TEST_CASE("durations") {
    CHECK(duration_ms(0, 400, 500.0) == 800.0);
    CHECK(duration_ms(7, 7, 500.0) == 0.0);
    CHECK(duration_ms(0, 100, 250.0) == 400.0);
    CHECK_THROWS_AS(duration_ms(10, 9, 500.0), InvalidSegment);

    std::mt19937 rng(2);
    std::uniform_int_distribution<std::size_t> len(0, 5000);
    std::uniform_real_distribution<double> fs(100, 2000);
    for (int i = 0; i < 200; ++i) {
        const auto n = len(rng);
        const double f = fs(rng);
        CHECK(duration_ms(3, 3 + 2 * n, f) == doctest::Approx(2 * duration_ms(3, 3 + n, f)));
        CHECK(duration_ms(0, n, 2 * f) == doctest::Approx(duration_ms(0, n, f) / 2));
    }
}

TEST_CASE("baseline is the median between T offset and P onset") {
    const std::vector<double> sig = {1, 2, 3, 4, 100, 50, 50};
    CycleFiducials prev, cur;
    prev.t_off = 0;
    cur.p_on = 4;
    CHECK(baseline_voltage(cur, &prev, sig) == 3.0);
    CHECK(baseline_voltage(cur, nullptr, sig) == 0.0);
    prev.t_off.reset();
    CHECK(baseline_voltage(cur, &prev, sig) == 0.0);

    std::mt19937 rng(9);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> around(2001);
    for (auto& v : around) v = 7.0 + noise(rng);
    prev.t_off = 0;
    cur.p_on = 2000;
    CHECK(baseline_voltage(cur, &prev, around) == doctest::Approx(7.0).epsilon(0.02));
}

TEST_CASE("amplitudes") {
    const std::vector<double> up = {0, 100, 0}, down = {0, -50, 0}, flat = {3, 3, 3};
    CHECK(amplitude_mv(up, 0, 4.88e-3, WaveShape::upper_arch) == doctest::Approx(0.488));
    CHECK(amplitude_mv(down, 0, 4.88e-3, WaveShape::downbend) == doctest::Approx(-0.244));
    CHECK(amplitude_mv(flat, 3, 4.88e-3, WaveShape::upper_arch) == 0.0);
    CHECK_THROWS_AS(amplitude_mv(std::vector<double>{}, 0, 1, WaveShape::upper_arch), InvalidSegment);

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> v(-500, 500);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> seg(20);
        for (auto& s : seg) s = v(rng);
        const double base = v(rng), shift = v(rng);
        auto shifted = seg;
        for (auto& s : shifted) s += shift;
        for (auto shape : {WaveShape::upper_arch, WaveShape::downbend}) {
            const double a = amplitude_mv(seg, base, 4.88e-3, shape);
            CHECK(amplitude_mv(shifted, base + shift, 4.88e-3, shape) == doctest::Approx(a));
            CHECK(amplitude_mv(seg, base, 3 * 4.88e-3, shape) == doctest::Approx(3 * a));
        }
    }
}

TEST_CASE("heart rate") {
    CHECK(heart_rate_bpm(std::vector<std::size_t>{0, 250, 500, 750}, 500.0) == doctest::Approx(120.0));
    CHECK(heart_rate_bpm(std::vector<std::size_t>{0, 400, 900, 1500}, 500.0) == doctest::Approx(60.0));
    CHECK_THROWS_AS(heart_rate_bpm(std::vector<std::size_t>{10}, 500.0), NoPeaksFound);
}

TEST_CASE("P-P variability") {
    // intervals 800, 1000, 1200 ms; population std = sqrt(80000 / 3)
    CHECK(pp_interval_std_ms(std::vector<std::size_t>{0, 400, 900, 1500}, 500.0) ==
          doctest::Approx(std::sqrt(80000.0 / 3.0)));
    CHECK(pp_interval_std_ms(std::vector<std::size_t>{0, 400, 800, 1200}, 500.0) == 0.0);
    CHECK_THROWS_AS(pp_interval_std_ms(std::vector<std::size_t>{0, 400}, 500.0), InsufficientPeaks);
}

TEST_CASE("corrected QT") {
    CHECK(qt_corrected(460, 800) == doctest::Approx(0.46 / std::sqrt(0.8)));
    CHECK(qt_corrected(460, 800) == doctest::Approx(0.514).epsilon(1e-3));
    CHECK(qt_corrected(400, 1000) == doctest::Approx(0.4));
    CHECK(qt_corrected(430, 1000) == doctest::Approx(0.43));
    CHECK_THROWS_AS(qt_corrected(0, 1000), InvalidInput);
    CHECK_THROWS_AS(qt_corrected(400, -1), InvalidInput);
}

TEST_CASE("aggregation takes the median over cycles") {
    const auto m = aggregate_record(hand_made({100, 110, 500}));
    REQUIRE(m.amplitude("II", Amp::R).has_value());
    CHECK(*m.amplitude("II", Amp::R) == doctest::Approx(1.1));
    CHECK(m.cycles == 3);
    CHECK(m.lead("II")->cycles == 3);
    CHECK_FALSE(m.amplitude("II", Amp::T).has_value());
    CHECK_FALSE(m.amplitude("II", Amp::P).has_value());
    CHECK_FALSE(m.t_qt_ms.has_value());
}

TEST_CASE("a single delineated cycle passes through") {
    const auto m = aggregate_record(hand_made({123}, 1));
    CHECK(*m.amplitude("II", Amp::R) == doctest::Approx(1.23));
    CHECK(m.cycles == 1);
}

TEST_CASE("no QRS at all is an error") {
    auto d = hand_made({100, 100});
    for (auto& c : d.cycles[0]) c.qrs_on.reset();
    CHECK_THROWS_AS(aggregate_record(d), NoValidCycles);
}

TEST_CASE("pipeline measurements of a synthetic normal record") {
    const auto cycle = synth::normal_cycle();
    const auto sr = synth::generate_record(synth::repeat_cycle(cycle, 10.0));
    const auto d = delineate_record(derive_augmented_leads(sr.record));
    const auto m = aggregate_record(d);

    for (std::size_t l = 0; l < m.lead_names.size(); ++l) {
        const auto& lm = m.leads[l];
        if (lm[Amp::QRS]) CHECK(*lm[Amp::QRS] == *lm[Amp::Q] + *lm[Amp::R] + *lm[Amp::S]);
    }
    CHECK(*m.heart_rate_bpm == doctest::Approx(60000.0 / cycle.rr_ms).epsilon(0.01));
    CHECK(*m.mean_rr_ms == doctest::Approx(cycle.rr_ms).epsilon(0.01));
    REQUIRE(m.t_pr_ms.has_value());
    REQUIRE(m.t_qt_ms.has_value());
    CHECK(*m.t_pr_ms > 0);
    CHECK(*m.t_qt_ms > *m.t_pr_ms);
    CHECK(*m.qtc == doctest::Approx(qt_corrected(*m.t_qt_ms, *m.mean_rr_ms)));
    CHECK(*m.std_pp_ms < 5.0);
    // R in lead II against the generator's lead-II amplitude
    CHECK(*m.amplitude("II", Amp::R) == doctest::Approx(cycle.amplitude_mv("II", synth::Wave::R)).epsilon(0.1));

    const auto flat = m.flatten();
    CHECK(flat.size() == measurement_names().size());
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat[i].first == measurement_names()[i]);
    CHECK(m.value("t_QT_ms") == m.t_qt_ms);
    CHECK(m.value("A_R_V5_mv") == m.amplitude("V5", Amp::R));
}

TEST_CASE("missing T waves leave A_T absent") {
    auto c = synth::normal_cycle();
    c.wave(synth::Wave::T).present = false;
    const auto sr = synth::generate_record(synth::repeat_cycle(c, 10.0));
    const auto m = aggregate_record(delineate_record(derive_augmented_leads(sr.record)));
    CHECK_FALSE(m.amplitude("II", Amp::T).has_value());
    CHECK_FALSE(m.t_qt_ms.has_value());
    CHECK(m.amplitude("II", Amp::R).has_value());
}
