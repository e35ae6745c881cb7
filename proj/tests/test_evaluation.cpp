#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "ecg/errors.hpp"
#include "ecg/evaluation.hpp"
#include "ecg/pipeline.hpp"
#include "ecg/synth.hpp"

using namespace ecg;

namespace {

// Straight confusion counting, kept apart from the library code.
struct Oracle {
    double or_ = 0, of1 = 0, cr = 0, cf1 = 0;
    double of1_harmonic = 0;
};

Oracle brute_force(const BinaryMatrix& p, const BinaryMatrix& y) {
    long tp = 0, fp = 0, fn = 0;
    double rsum = 0, fsum = 0;
    int classes = 0;
    const std::size_t cols = y.empty() ? 0 : y[0].size();
    for (std::size_t k = 0; k < cols; ++k) {
        long ctp = 0, cfp = 0, cfn = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (p[i][k] && y[i][k]) ++ctp;
            if (p[i][k] && !y[i][k]) ++cfp;
            if (!p[i][k] && y[i][k]) ++cfn;
        }
        tp += ctp;
        fp += cfp;
        fn += cfn;
        if (ctp + cfn == 0) continue;
        ++classes;
        rsum += double(ctp) / double(ctp + cfn);
        // 2PR/(P+R) written over counts, so the value is rounded once
        fsum += double(2 * ctp) / double(2 * ctp + cfp + cfn);
    }
    Oracle o;
    o.or_ = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    o.of1 = tp ? double(2 * tp) / double(2 * tp + fp + fn) : 0.0;
    const double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    o.of1_harmonic = prec + o.or_ > 0 ? 2 * prec * o.or_ / (prec + o.or_) : 0.0;
    o.cr = classes ? rsum / classes : 0.0;
    o.cf1 = classes ? fsum / classes : 0.0;
    return o;
}

BinaryMatrix random_binary(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double p) {
    std::bernoulli_distribution b(p);
    BinaryMatrix m(rows, std::vector<std::uint8_t>(cols));
    for (auto& r : m)
        for (auto& v : r) v = b(rng);
    return m;
}

}  // namespace

TEST_CASE("binarisation is strict") {
    const auto b = binarize({{0.5, 0.51, 0.2}}, 0.5);
    CHECK(b == BinaryMatrix{{0, 1, 0}});
    CHECK(binarize({}, 0.5).empty());
}

TEST_CASE("metric examples") {
    const BinaryMatrix y = {{1, 0}, {0, 1}, {1, 1}};
    const auto perfect = compute_metrics(y, y);
    CHECK(perfect.or_ == 1.0);
    CHECK(perfect.of1 == 1.0);
    CHECK(perfect.cr == 1.0);
    CHECK(perfect.cf1 == 1.0);

    const auto zeros = compute_metrics(BinaryMatrix(3, {0, 0}), y);
    CHECK(zeros.or_ == 0.0);
    CHECK(zeros.cr == 0.0);
    CHECK(zeros.of1 == 0.0);

    // class A found 2/2, class B found 1/2
    const BinaryMatrix y4 = {{1, 1}, {1, 1}, {0, 0}, {0, 0}};
    const BinaryMatrix p4 = {{1, 1}, {1, 0}, {0, 0}, {0, 0}};
    const auto r = compute_metrics(p4, y4, {"A", "B"});
    CHECK(r.cr == doctest::Approx(0.75));
    CHECK(r.or_ == doctest::Approx(0.75));
    CHECK(r.per_class[1].category == "B");
    CHECK(r.per_class[1].fn == 1);

    CHECK_THROWS_AS(compute_metrics({{1, 0}}, {{1}}), ShapeMismatch);
}

TEST_CASE("metrics equal brute-force counting") {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 1000; ++t) {
        const auto y = random_binary(rng, 8, 5, 0.3), p = random_binary(rng, 8, 5, 0.4);
        const auto r = compute_metrics(p, y);
        const auto o = brute_force(p, y);
        CHECK(r.or_ == o.or_);
        CHECK(r.of1 == o.of1);
        CHECK(r.cr == o.cr);
        CHECK(r.cf1 == o.cf1);
        CHECK(r.of1 == doctest::Approx(o.of1_harmonic).epsilon(1e-12));
        std::size_t tp = 0, fp = 0, fn = 0;
        for (const auto& c : r.per_class) {
            tp += c.tp;
            fp += c.fp;
            fn += c.fn;
        }
        CHECK(tp == r.tp);
        CHECK(fp == r.fp);
        CHECK(fn == r.fn);
    }
}

TEST_CASE("metric invariances") {
    std::mt19937_64 rng(22);
    for (int t = 0; t < 100; ++t) {
        auto y = random_binary(rng, 12, 4, 0.3), p = random_binary(rng, 12, 4, 0.3);
        const auto base = compute_metrics(p, y);

        std::vector<std::size_t> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        BinaryMatrix yp, pp;
        for (auto i : perm) {
            yp.push_back(y[i]);
            pp.push_back(p[i]);
        }
        const auto shuffled = compute_metrics(pp, yp);
        CHECK(shuffled.or_ == base.or_);
        CHECK(shuffled.cr == base.cr);
        CHECK(shuffled.cf1 == base.cf1);

        for (auto& r : y) r.push_back(0);
        for (auto& r : p) r.push_back(0);
        const auto widened = compute_metrics(p, y);
        CHECK(widened.cr == base.cr);
        CHECK(widened.cf1 == base.cf1);
    }
}

TEST_CASE("mislabel report") {
    const auto catalog = synth::default_catalog();
    const auto tachy = *catalog.index_of("Sinus tachycardia");
    const auto afib = *catalog.index_of("Atrial fibrillation");

    const auto rc = synth::make_rule_case(RuleId::low_qrs_voltage, true);
    auto rec = synth::generate_record(rc.cycles).record;
    rec.gender = rc.gender;
    const auto out = analyze_record(rec, catalog).rules;

    std::vector<std::uint8_t> consistent = out.l_rule;
    auto entries = mislabel_report({"ok"}, {out}, {consistent}, catalog);
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].flags.empty());

    // unmasked categories never count
    consistent[afib] = 1;
    CHECK(mislabel_report({"ok"}, {out}, {consistent}, catalog)[0].flags.empty());

    auto corrupted = out.l_rule;
    corrupted[*catalog.index_of("Low QRS voltage")] = 0;
    corrupted[tachy] = 1;
    entries = mislabel_report({"bad"}, {out}, {corrupted}, catalog);
    REQUIRE(entries[0].flags.size() == 2);
    bool saw_low = false, saw_tachy = false;
    for (const auto& f : entries[0].flags) {
        if (f.category == "Low QRS voltage") {
            saw_low = true;
            CHECK(f.kind == Disagreement::rule_fired_unlabeled);
            CHECK(f.margin > 0);
            REQUIRE_FALSE(f.evidence.empty());
            for (const auto& c : f.evidence) {
                CHECK(c.quantity.rfind("A_QRS_", 0) == 0);
                CHECK(c.satisfied());
            }
        }
        if (f.category == "Sinus tachycardia") {
            saw_tachy = true;
            CHECK(f.kind == Disagreement::labeled_rule_silent);
            CHECK(f.evidence.at(0).quantity == "heart_rate_bpm");
            CHECK_FALSE(f.evidence.at(0).satisfied());
        }
    }
    CHECK(saw_low);
    CHECK(saw_tachy);
    CHECK(entries[0].flags[0].margin >= entries[0].flags[1].margin);

    CHECK_THROWS_AS(mislabel_report({"a", "b"}, {out}, {corrupted}, catalog), ShapeMismatch);
}
