#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spectrafuse/experiment.hpp"
#include "spectrafuse/plots.hpp"
#include "spectrafuse/synth.hpp"
#include "support.hpp"

using namespace spectrafuse;
using namespace spectrafuse::experiment;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string out;
    json doc;
};

Result cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + SPECTRAFUSE_CLI + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.doc = json::parse(r.out, nullptr, false);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const fs::path& p, const json& j) { write_text(p, j.dump(2)); }

json tiny_spec_json() {
    auto spec = synth::SynthSpec::table1();
    spec.patients = {{Group::Breast, 10}, {Group::Colon, 10}, {Group::Control, 10}};
    spec.availability = {{Group::Breast, {9, 9, 8}}, {Group::Colon, {10, 9, 9}}, {Group::Control, {8, 9, 7}}};
    spec.ftir.step = 16;
    spec.raman.step = 8;
    spec.effect = 1.5;
    return spec.to_json();
}

json fast_config(const fs::path& dataset, const fs::path& out) {
    return {{"dataset", dataset.string()},
            {"suite", true},
            {"gbdt", {{"n_rounds", 10}, {"max_depth", 2}}},
            {"cv", {{"k", 3}, {"seed", 5}}},
            {"learning_curve", {0.5, 1.0}},
            {"pca", true},
            {"output", out.string()}};
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = ExperimentConfig::from_json(
        {{"dataset", "data/d.json"}, {"scenario", "colon"}, {"modalities", {"EEM", "FTIR"}}, {"cv", {{"k", 5}}}},
        "/base");
    CHECK(c.dataset == fs::path("/base/data/d.json"));
    CHECK(c.scenario == Scenario::Colon);
    CHECK(c.k == 5);
    CHECK(c.seed == 42);
    CHECK(c.threshold == 0.5);
    CHECK(c.ftir_pipeline == prep1d::selected_ftir_pipeline());
    CHECK(configuration_name(c.modalities) == "FTIR+EEM");

    const auto back = ExperimentConfig::from_json(json::parse(c.to_json().dump()));
    CHECK(back.to_json() == c.to_json());

    CHECK_THROWS_AS(ExperimentConfig::from_json({{"modalities", json::array()}}), SpectraError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"modalities", {"FTIR", "FTIR"}}}), SpectraError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"cv", {{"k", 1}}}}), SpectraError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"threshold", 1.5}}), SpectraError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"modalities", {"NMR"}}}), SpectraError);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), SpectraError);
}

TEST_CASE("suite expands to fourteen cells") {
    ExperimentConfig c;
    c.suite = true;
    const auto cells = expand(c);
    REQUIRE(cells.size() == 14);
    CHECK(cells.front().name() == "breast_FTIR");
    CHECK(cells[6].name() == "breast_FTIR+Raman+EEM");
    CHECK(cells[7].name() == "colon_FTIR");
    c.suite = false;
    c.modalities = {Modality::Raman};
    CHECK(expand(c).size() == 1);
    CHECK(seven_configurations().size() == 7);
}

TEST_CASE("cv data shapes") {
    auto spec = synth::SynthSpec::from_json(tiny_spec_json());
    const auto d = synth::generate(spec);
    const Modality ftir[] = {Modality::FTIR};
    const Modality tri[] = {Modality::FTIR, Modality::Raman, Modality::EEM};
    CHECK(build_cvdata(d, Scenario::Breast, ftir, prep1d::selected_ftir_pipeline()).rows() == 20 * 3);
    CHECK(patient_level_cvdata(d, Scenario::Breast, ftir, prep1d::selected_ftir_pipeline()).rows() == 20);
    const auto t = build_cvdata(d, Scenario::Breast, tri, prep1d::selected_ftir_pipeline());
    CHECK(t.rows() == 15);
    CHECK(t.blocks.size() == 3);
    CHECK(t.blocks[2].width() == 5335);
    CHECK(dataset_hash(d) == dataset_hash(synth::generate(spec)));
    CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("synth, validate, run and plots through the binary") {
    const auto dir = testing::temp_dir("cli");
    dump(dir / "spec.json", tiny_spec_json());

    const auto s = cli("synth --config " + (dir / "spec.json").string() + " --out " + (dir / "data").string());
    REQUIRE(s.code == 0);
    CHECK(s.doc["status"] == "ok");
    CHECK(s.doc["modalities"]["FTIR"]["records"] == 90);
    CHECK(s.doc["trimodal_patients"]["breast"] == 15);
    CHECK(fs::exists(dir / "data" / "synth_spec.json"));

    const auto v = cli("validate " + (dir / "data" / "dataset.json").string());
    CHECK(v.code == 0);
    CHECK(v.doc["dataset_hash"] == s.doc["dataset_hash"]);

    dump(dir / "run.json", fast_config(dir / "data" / "dataset.json", dir / "reports"));
    const auto r = cli("run --config " + (dir / "run.json").string() + " --jobs 2");
    REQUIRE(r.code == 0);
    REQUIRE(r.doc["cells"].size() == 14);
    for (const auto& c : r.doc["cells"]) CHECK(c["ok"] == true);

    const fs::path cell = dir / "reports" / "breast_FTIR+Raman+EEM";
    const auto metrics = json::parse(slurp(cell / "metrics.json"));
    CHECK(metrics["configuration"] == "FTIR+Raman+EEM");
    CHECK(metrics["level"] == "patient");
    CHECK(metrics["n"] == 15);
    CHECK(metrics["dataset_hash"] == s.doc["dataset_hash"]);
    CHECK(fs::exists(cell / "roc_breast_FTIR+Raman+EEM.csv"));
    CHECK(fs::exists(cell / "learning_curve.csv"));
    CHECK(fs::exists(cell / "pca_EEM.csv"));
    CHECK(json::parse(slurp(dir / "reports" / "colon_FTIR" / "metrics.json"))["level"] == "replicate");

    const auto p = cli("plots " + (dir / "reports").string() + " --out " + (dir / "plots").string());
    REQUIRE(p.code == 0);
    CHECK(fs::exists(dir / "plots" / "roc_breast.svg"));
    CHECK(fs::exists(dir / "plots" / "roc_colon.svg"));
    CHECK(fs::exists(dir / "plots" / "learning_curve_breast.svg"));
    const auto svg = slurp(dir / "plots" / "roc_colon.svg");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("class=\"band\"") != std::string::npos);

    // Same seed, different job count: identical metrics.
    dump(dir / "run2.json", fast_config(dir / "data" / "dataset.json", dir / "reports2"));
    REQUIRE(cli("run --config " + (dir / "run2.json").string() + " --jobs 1").code == 0);
    for (const auto& c : r.doc["cells"]) {
        const std::string name = c["cell"];
        CHECK(slurp(dir / "reports" / name / "metrics.json") == slurp(dir / "reports2" / name / "metrics.json"));
    }

    // --threshold and --seed override the config.
    const auto t = cli("run --config " + (dir / "run.json").string() + " --out " + (dir / "reports3").string() +
                       " --threshold 0.9 --seed 6");
    REQUIRE(t.code == 0);
    const auto m3 = json::parse(slurp(dir / "reports3" / "breast_FTIR" / "metrics.json"));
    CHECK(m3["threshold"] == 0.9);
    CHECK(m3["seed"] == 6);
}

TEST_CASE("grid search honours the cache directory variable") {
    const auto dir = testing::temp_dir("cli_grid");
    auto spec = tiny_spec_json();
    spec["patients"] = {{"breast", 6}, {"colon", 6}, {"control", 6}};
    spec["availability"] = {{"breast", {{"raman", 6}, {"eem", 6}, {"all", 6}}},
                            {"colon", {{"raman", 6}, {"eem", 6}, {"all", 6}}},
                            {"control", {{"raman", 6}, {"eem", 6}, {"all", 6}}}};
    spec["ftir"]["step"] = 32;
    dump(dir / "spec.json", spec);
    REQUIRE(cli("synth --config " + (dir / "spec.json").string() + " --out " + (dir / "data").string()).code == 0);
    dump(dir / "grid.json", {{"dataset", (dir / "data" / "dataset.json").string()},
                             {"gbdt", {{"n_rounds", 5}, {"max_depth", 2}}},
                             {"cv", {{"k", 3}}}});
    const std::string env = "SPECTRAFUSE_CACHE=" + (dir / "shared_cache").string();
    const auto a = cli("grid-search --config " + (dir / "grid.json").string() + " --out " + (dir / "a").string(), env);
    REQUIRE(a.code == 0);
    CHECK(a.doc["candidates"] == 2880);
    CHECK(a.doc["evaluated"] == 2880);
    CHECK(fs::exists(dir / "shared_cache"));
    CHECK_FALSE(fs::exists(dir / "a" / "cache"));
    const auto b = cli("grid-search --config " + (dir / "grid.json").string() + " --out " + (dir / "b").string(), env);
    REQUIRE(b.code == 0);
    CHECK(b.doc["evaluated"] == 0);
    CHECK(b.doc["cache_hits"] == 2880);
    CHECK(b.doc["winner"] == a.doc["winner"]);
    CHECK(slurp(dir / "a" / "grid_results.csv") == slurp(dir / "b" / "grid_results.csv"));
    const auto winner = json::parse(slurp(dir / "a" / "winner.json"));
    CHECK(winner.contains("config"));
}

TEST_CASE("errors are reported as json with a nonzero exit") {
    const auto dir = testing::temp_dir("cli_err");
    const auto empty = cli("plots " + dir.string());
    CHECK(empty.code == 1);
    CHECK(empty.doc["status"] == "error");
    CHECK(empty.doc["command"] == "plots");
    CHECK(empty.doc["error"].get<std::string>().find("no report files") != std::string::npos);

    const auto missing = cli("run --config " + (dir / "nope.json").string());
    CHECK(missing.code == 1);
    CHECK(missing.doc["status"] == "error");

    write_text(dir / "bad.csv", "axis,intensity\n650,1\n652,2\n651,3\n");
    write_text(dir / "bad.json", R"({"modalities": {"FTIR": [{"patient_id": "P", "group": "breast", "replicate": 1, "file": "bad.csv"}]}})");
    const auto bad = cli("validate " + (dir / "bad.json").string());
    CHECK(bad.code == 1);
    CHECK(bad.doc["error"].get<std::string>().find("axis not strictly increasing") != std::string::npos);

    CHECK(cli("run").code != 0);
    CHECK(cli("run --config x.json --threshold 2").code != 0);
}
