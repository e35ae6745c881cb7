#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "ecg/json_io.hpp"
#include "ecg/pipeline.hpp"
#include "test_support.hpp"

using namespace ecg;
using io::json;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(ECG_RULEKIT_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("rules on a tachycardia case") {
    TempDir dir;
    const auto d = dir.path.string();
    REQUIRE(run("synth --rule-case 3 --noise 0 --out " + d + "/data") == 0);
    REQUIRE(run("rules --manifest " + d + "/data/manifest.csv --out " + d + "/rules.json") == 0);
    const auto j = io::read_json(dir.path / "rules.json");
    const auto& t = j.at("rule03_fire").at("Sinus tachycardia");
    CHECK(t.at("fired") == 1);
    CHECK(t.at("evidence")[0].at("measurement") == "heart_rate_bpm");
    CHECK(t.at("evidence")[0].at("value").get<double>() > 120.0);
}

TEST_CASE("train, predict and evaluate on a small corpus") {
    TempDir dir;
    const auto d = dir.path.string();
    const auto data = "--manifest " + d + "/data/manifest.csv --catalog " + d + "/data/categories.csv";
    REQUIRE(run("synth --records 60 --seed 5 --out " + d + "/data") == 0);
    REQUIRE(run("train " + data + " --seed 3 --out " + d + "/model") == 0);
    CHECK(std::filesystem::exists(dir.path / "model" / "history.csv"));
    REQUIRE(run("predict " + data + " --model " + d + "/model/model.json --threads 1 --out " + d + "/p1") == 0);
    REQUIRE(run("predict " + data + " --model " + d + "/model/model.json --threads 3 --out " + d + "/p2") == 0);
    CHECK(slurp(dir.path / "p1" / "predictions.json") == slurp(dir.path / "p2" / "predictions.json"));
    CHECK(slurp(dir.path / "p1" / "predictions.csv") == slurp(dir.path / "p2" / "predictions.csv"));

    const auto pred = io::read_json(dir.path / "p1" / "predictions.json");
    REQUIRE(pred.at("records").size() == 60);
    for (const auto& r : pred.at("records"))
        for (const auto& [k, v] : r.at("y_hat").items()) {
            CHECK(v.get<double>() >= 0.0);
            CHECK(v.get<double>() <= 1.0);
        }

    // perfect predictions straight from the manifest labels
    const auto catalog = load_catalog(dir.path / "data" / "categories.csv", dir.path / "data" / "rule_map.csv");
    std::ofstream perfect(dir.path / "perfect.csv");
    perfect << "record_id";
    for (const auto& n : catalog.names) perfect << "," << n;
    perfect << "\n";
    for (const auto& e : load_manifest(dir.path / "data" / "manifest.csv")) {
        perfect << e.record_id;
        for (auto v : encode_labels(*e.labels, catalog)) perfect << "," << int(v);
        perfect << "\n";
    }
    perfect.close();
    REQUIRE(run("evaluate " + data + " --predictions " + d + "/perfect.csv --out " + d + "/eval.json") == 0);
    const auto ev = io::read_json(dir.path / "eval.json");
    for (auto key : {"OR", "OF1", "CR", "CF1"}) CHECK(ev.at(key).get<double>() == 1.0);
}

TEST_CASE("an empty mask passes the meta-learner through") {
    TempDir dir;
    const auto d = dir.path.string();
    REQUIRE(run("synth --records 40 --seed 8 --out " + d + "/data") == 0);
    dir.write("data/empty_map.csv", "rule_id,category_name\n");
    const auto data = "--manifest " + d + "/data/manifest.csv --catalog " + d + "/data/categories.csv --rule-map " +
                      d + "/data/empty_map.csv";
    REQUIRE(run("train " + data + " --out " + d + "/model") == 0);
    REQUIRE(run("predict " + data + " --model " + d + "/model/model.json --out " + d + "/pred") == 0);

    const auto model = io::model_from_json(io::read_json(dir.path / "model" / "model.json"));
    REQUIRE(model.meta.has_value());
    const auto catalog = load_catalog(dir.path / "data" / "categories.csv", dir.path / "data" / "empty_map.csv");
    const auto pred = io::read_json(dir.path / "pred" / "predictions.json");
    for (const auto& r : pred.at("records")) {
        const auto id = r.at("record_id").get<std::string>();
        const auto rec = load_record(dir.path / "data" / (id + ".csv"), {id, std::nullopt, Gender::missing, std::nullopt});
        ManifestEntry entry;
        for (const auto& e : load_manifest(dir.path / "data" / "manifest.csv"))
            if (e.record_id == id) entry = e;
        auto full = rec;
        full.age_years = entry.age_years;
        full.gender = entry.gender;
        const auto a = analyze_record(full, catalog);
        const auto h = model.meta->predict(meta_features(a.measurements, a.demographics));
        for (std::size_t k = 0; k < catalog.size(); ++k)
            CHECK(r.at("y_hat").at(catalog.names[k]).get<double>() == h[k]);
    }
}

TEST_CASE("a broken record fails alone") {
    TempDir dir;
    const auto d = dir.path.string();
    REQUIRE(run("synth --records 5 --seed 2 --out " + d + "/data") == 0);
    dir.write("data/rec0002.csv", "I,II\n1,2\n");
    CHECK(run("measure --manifest " + d + "/data/manifest.csv --out " + d + "/m.json") == 1);
    const auto m = io::read_json(dir.path / "m.json");
    CHECK(m.size() == 4);
    CHECK_FALSE(m.contains("rec0002"));
}

TEST_CASE("usage errors exit nonzero") {
    TempDir dir;
    CHECK(run("") != 0);
    CHECK(run("predict --manifest " + (dir.path / "none.csv").string()) != 0);
    CHECK(run("rules --threshold 2 --manifest x.csv") != 0);
    CHECK(run("bogus") != 0);
}

TEST_CASE("seed falls back to the environment") {
    TempDir dir;
    const auto d = dir.path.string();
    REQUIRE(run("synth --records 3 --seed 4 --out " + d + "/a") == 0);
    REQUIRE(::setenv("ECG_RULEKIT_SEED", "4", 1) == 0);
    REQUIRE(run("synth --records 3 --out " + d + "/b") == 0);
    ::unsetenv("ECG_RULEKIT_SEED");
    CHECK(slurp(dir.path / "a" / "rec0001.csv") == slurp(dir.path / "b" / "rec0001.csv"));
}
