#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "ecg/errors.hpp"
#include "ecg/signal_model.hpp"
#include "test_support.hpp"

using namespace ecg;

namespace {

EcgRecord two_lead(double i, double ii) {
    EcgRecord r;
    r.record_id = "t";
    r.lead_names = {"I", "II"};
    r.leads = {{i}, {ii}};
    return r;
}

std::string record_csv(std::size_t samples) {
    std::ostringstream s;
    s << "I,II,V1,V2,V3,V4,V5,V6\n";
    for (std::size_t n = 0; n < samples; ++n)
        s << n % 7 << "," << -static_cast<int>(n % 5) << ",1,2,3,4,5,6\n";
    return s.str();
}

}  // namespace

TEST_CASE("derived leads at one sample") {
    const auto r = derive_augmented_leads(two_lead(0.3, 0.5));
    REQUIRE(r.num_leads() == 6);
    CHECK(r.lead("III")[0] == doctest::Approx(0.2));
    CHECK(r.lead("aVR")[0] == doctest::Approx(-0.4));
    CHECK(r.lead("aVL")[0] == doctest::Approx(0.05));
    CHECK(r.lead("aVF")[0] == doctest::Approx(0.35));
    CHECK(r.lead("I")[0] == 0.3);
    CHECK(r.lead("II")[0] == 0.5);
}

TEST_CASE("derived leads of a zero sample are zero") {
    const auto r = derive_augmented_leads(two_lead(0.0, 0.0));
    for (auto name : kDerivedLeads) CHECK(r.lead(name)[0] == 0.0);
}

TEST_CASE("derivation is idempotent on a 12-lead record") {
    const auto once = derive_augmented_leads(two_lead(12, -7));
    const auto twice = derive_augmented_leads(once);
    CHECK(twice.lead_names == once.lead_names);
    CHECK(twice.leads == once.leads);
}

TEST_CASE("derivation needs leads I and II") {
    EcgRecord r;
    r.lead_names = {"I", "V1"};
    r.leads = {{1.0}, {2.0}};
    CHECK_THROWS_AS(derive_augmented_leads(r), MissingLead);
}

TEST_CASE("derived identities hold exactly on random integer columns") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> adc(-4096, 4095);
    EcgRecord r;
    r.lead_names = {"I", "II"};
    r.leads.assign(2, std::vector<double>(2000));
    for (auto& col : r.leads)
        for (auto& v : col) v = adc(rng);
    const auto d = derive_augmented_leads(r);
    const auto &i = d.lead("I"), &ii = d.lead("II");
    for (std::size_t n = 0; n < i.size(); ++n) {
        CHECK(d.lead("III")[n] + i[n] - ii[n] == 0.0);
        CHECK(d.lead("aVR")[n] + d.lead("aVL")[n] + d.lead("aVF")[n] == 0.0);
    }
}

TEST_CASE("age one-hot encoding") {
    auto a = encode_age(34);
    CHECK(a[3] == 1.0);
    CHECK(std::accumulate(a.begin(), a.end(), 0.0) == 1.0);
    CHECK(encode_age(0)[0] == 1.0);
    CHECK(encode_age(99)[9] == 1.0);
    const auto missing = encode_age(std::nullopt);
    CHECK(std::accumulate(missing.begin(), missing.end(), 0.0) == 0.0);
    CHECK_THROWS_AS(encode_age(100), OutOfRange);
    for (int age = 0; age < 100; ++age) {
        const auto v = encode_age(age);
        CHECK(std::accumulate(v.begin(), v.end(), 0.0) == 1.0);
        CHECK(v[static_cast<std::size_t>(age / 10)] == 1.0);
    }
}

TEST_CASE("gender scalar") {
    CHECK(encode_gender(Gender::male) == 1.0);
    CHECK(encode_gender(Gender::female) == 2.0);
    CHECK(encode_gender(Gender::missing) == 0.0);
}

TEST_CASE("loading a well-formed record") {
    TempDir dir;
    const auto path = dir.write("r1.csv", record_csv(5000));
    const auto rec = load_record(path, {"r1", 34, Gender::female, std::nullopt});
    CHECK(rec.num_samples() == 5000);
    CHECK(rec.num_leads() == 8);
    CHECK(rec.age_years == 34);
    CHECK(rec.gender == Gender::female);
    CHECK_FALSE(rec.labels.has_value());
    CHECK(rec.lead("I")[8] == 1.0);
    CHECK(rec.lead("II")[3] == -3.0);
}

TEST_CASE("record parse and validation errors") {
    TempDir dir;
    auto text = record_csv(1200);
    text += "1,2,3\n";
    CHECK_THROWS_AS(load_record(dir.write("short.csv", text), {"short"}), ParseError);
    CHECK_THROWS_AS(load_record(dir.write("brief.csv", record_csv(600)), {"brief"}), ValidationError);
    CHECK_THROWS_AS(load_record(dir.write("text.csv", "I,II,V1,V2,V3,V4,V5,V6\n1,x,1,1,1,1,1,1\n"), {"text"}),
                    ParseError);
    CHECK_THROWS_AS(load_record(dir.path / "absent.csv", {"absent"}), ParseError);
}

TEST_CASE("manifest with blank demographics and labels") {
    TempDir dir;
    const auto path = dir.write("manifest.csv",
                                "record_id,age,gender,labels\n"
                                "a,,,\n"
                                "b,61,MALE,Sinus tachycardia;Abnormal Q wave\n");
    const auto m = load_manifest(path);
    REQUIRE(m.size() == 2);
    CHECK_FALSE(m[0].age_years.has_value());
    CHECK(m[0].gender == Gender::missing);
    REQUIRE(m[0].labels.has_value());
    CHECK(m[0].labels->empty());
    CHECK(m[1].age_years == 61);
    CHECK(m[1].gender == Gender::male);
    CHECK(*m[1].labels == std::vector<std::string>{"Sinus tachycardia", "Abnormal Q wave"});

    CHECK_THROWS_AS(load_manifest(dir.write("dup.csv", "record_id,age,gender\na,1,MALE\na,2,MALE\n")), ParseError);
    CHECK_THROWS_AS(load_manifest(dir.write("g.csv", "record_id,age,gender\na,1,OTHER\n")), ParseError);
}

TEST_CASE("labels are encoded against the catalog") {
    TempDir dir;
    const auto cats = dir.write("categories.csv", "A\nB\nC\n");
    const auto map = dir.write("rule_map.csv", "rule_id,category_name\n3,B\n");
    const auto catalog = load_catalog(cats, map);
    CHECK(catalog.size() == 3);
    CHECK(catalog.rule_map.at(RuleId::tachycardia) == 1);

    const auto path = dir.write("r.csv", record_csv(1000));
    LoadOptions lo;
    lo.catalog = &catalog;
    const auto rec = load_record(path, {"r", std::nullopt, Gender::missing, std::vector<std::string>{"C", "A"}}, lo);
    REQUIRE(rec.labels.has_value());
    CHECK(*rec.labels == std::vector<std::uint8_t>{1, 0, 1});
    CHECK_THROWS_AS(encode_labels({"D"}, catalog), CatalogError);
}

TEST_CASE("catalog invariants") {
    LabelCatalog c;
    c.names = {"A", "A"};
    CHECK_THROWS_AS(c.validate(), CatalogError);
    c.names = {"A", "B"};
    c.rule_map = {{RuleId::tachycardia, 0}, {RuleId::bradycardia, 0}};
    CHECK_THROWS_AS(c.validate(), CatalogError);
    c.rule_map = {{RuleId::tachycardia, 2}};
    CHECK_THROWS_AS(c.validate(), CatalogError);
    c.rule_map = {{RuleId::tachycardia, 1}};
    CHECK_NOTHROW(c.validate());

    TempDir dir;
    CHECK_THROWS_AS(load_catalog(dir.write("c.csv", "A\nB\n"), dir.write("m.csv", "3,Z\n")), CatalogError);
}

TEST_CASE("record round trip through the file format") {
    TempDir dir;
    EcgRecord r;
    r.record_id = "rt";
    r.lead_names.assign(kRecordedLeads.begin(), kRecordedLeads.end());
    r.leads.assign(8, std::vector<double>(1000));
    for (std::size_t l = 0; l < 8; ++l)
        for (std::size_t n = 0; n < 1000; ++n) r.leads[l][n] = static_cast<double>(l * 10) - static_cast<double>(n % 13);
    write_record(dir.path / "rt.csv", r);
    const auto back = load_record(dir.path / "rt.csv", {"rt"});
    CHECK(back.leads == r.leads);
    CHECK(back.lead_names == r.lead_names);
}
