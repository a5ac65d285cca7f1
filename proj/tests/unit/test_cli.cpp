#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "bikevol/cli/cli.hpp"
#include "bikevol/cli/config.hpp"
#include "bikevol/pipeline/features.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bikevol;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli_run(std::vector<std::string> args) {
    args.insert(args.begin(), "bikevol");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spill(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

// Small city and a cheap model so the whole chain runs in seconds.
struct Workspace {
    fs::path root;
    fs::path config;
    Workspace() {
        root = fs::temp_directory_path() / ("bikevol_cli_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        config = root / "run.json";
        spill(config, json{{"seed", 5},
                           {"synth", {{"n_long", 6}, {"n_short", 2}, {"n_days", 40}, {"n_bikes", 40}, {"extent_km", 4.0},
                                      {"n_motor_detectors", 8}, {"paired_locations", 2}}},
                           {"evaluation", {{"aadb_min_rows", 5}}},
                           {"model", {{"kind", "BaselineMean"}, {"tuning", {{"mode", "none"}}}}}}
                          .dump());
    }
    ~Workspace() { fs::remove_all(root); }
    std::string cfg() const { return config.string(); }
    std::string at(const std::string& name) const { return (root / name).string(); }
};

json single_json_line(const std::string& err) {
    REQUIRE(!err.empty());
    CHECK(err.find('\n') == err.size() - 1);
    return json::parse(err);
}

}  // namespace

TEST_CASE("exit codes and diagnostics") {
    Workspace w;
    auto r = cli_run({"no-such-command"});
    CHECK(r.code == cli::kExitConfig);
    CHECK(single_json_line(r.err)["error"] == "config_error");

    r = cli_run({"schema", "--source", "nonsense"});
    CHECK(r.code == cli::kExitConfig);
    const auto d = single_json_line(r.err);
    CHECK(d["exit_code"] == 2);
    CHECK(d["command"] == "schema");

    spill(w.at("bad.json"), R"({"seed": 1, "colour": "red"})");
    r = cli_run({"--config", w.at("bad.json"), "schema", "--source", "counts"});
    CHECK(r.code == cli::kExitConfig);
    CHECK(single_json_line(r.err)["message"].get<std::string>().find("colour") != std::string::npos);

    r = cli_run({"eval-logo", "--table", w.at("missing.csv"), "--out", w.at("o")});
    CHECK(r.code == cli::kExitConfig);

    REQUIRE(cli_run({"--config", w.cfg(), "synth", "--out", w.at("city")}).code == 0);
    const auto counts = fs::path(w.at("city")) / "counts_hourly.csv";
    auto text = slurp(counts);
    const auto second_line = text.find('\n') + 1;
    const auto comma = text.rfind(',', text.find('\n', second_line));
    text.replace(comma + 1, text.find('\n', second_line) - comma - 1, "-4");
    spill(counts, text);
    r = cli_run({"--config", w.cfg(), "features", "--bundle", w.at("city"), "--out", w.at("t.csv")});
    CHECK(r.code == cli::kExitData);
    CHECK(single_json_line(r.err)["message"].get<std::string>().find("counts_hourly.csv:2") != std::string::npos);
    CHECK(r.out.empty());
}

TEST_CASE("schema prints the file name and header") {
    const auto r = cli_run({"schema", "--source", "counts"});
    CHECK(r.code == 0);
    CHECK(r.out == "counts_hourly.csv\nstation_id,timestamp,count\n");
    CHECK(r.err.empty());
}

TEST_CASE("end-to-end chain") {
    Workspace w;
    REQUIRE(cli_run({"--config", w.cfg(), "synth", "--out", w.at("a")}).code == 0);
    REQUIRE(cli_run({"--config", w.cfg(), "synth", "--out", w.at("b")}).code == 0);
    for (const auto& e : fs::directory_iterator(w.at("a")))
        CHECK_MESSAGE(slurp(e.path()) == slurp(fs::path(w.at("b")) / e.path().filename()), e.path().filename());

    const auto meta = json::parse(slurp(fs::path(w.at("a")) / "metadata.json"));
    const auto resolved = cli::RunConfig::load(w.cfg());
    CHECK(meta["config_hash"] == resolved.hash());
    CHECK(meta["engine_version"] == cli::engine_version());
    CHECK(meta["config_hash"].get<std::string>().size() == 16);

    REQUIRE(cli_run({"--config", w.cfg(), "clean", "--bundle", w.at("a"), "--out", w.at("clean")}).code == 0);
    const auto removal = json::parse(slurp(fs::path(w.at("clean")) / "removal_report.json"));
    CHECK(removal.contains("metadata"));

    auto r = cli_run({"--config", w.cfg(), "features", "--bundle", w.at("a"), "--trips",
                      w.at("clean/trips_clean.csv"), "--out", w.at("t/table.csv")});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    r = cli_run({"--config", w.cfg(), "features", "--bundle", w.at("a"), "--out", w.at("t2/table.csv")});
    REQUIRE(r.code == 0);
    CHECK(slurp(w.at("t/table.csv")) == slurp(w.at("t2/table.csv")));

    SUBCASE("eval-logo with the mean model matches the closed form") {
        r = cli_run({"--config", w.cfg(), "--workers", "2", "eval-logo", "--table", w.at("t/table.csv"), "--out",
                     w.at("logo")});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto table = pipeline::read_feature_table(w.at("t/table.csv"), pipeline::manifest_path_for(w.at("t/table.csv")));
        std::map<std::string, oracle::StationError> expected;
        for (const auto& e : oracle::baseline_logo(table)) expected[e.station] = e;
        const auto report = json::parse(slurp(fs::path(w.at("logo")) / "logo_daily.json"));
        REQUIRE(report["stations"].size() == expected.size());
        for (const auto& s : report["stations"]) {
            const auto& e = expected.at(s["station_id"].get<std::string>());
            CHECK(s["mae"].get<double>() == doctest::Approx(e.mae).epsilon(1e-9));
            CHECK(s["smape"].get<double>() == doctest::Approx(e.smape).epsilon(1e-9));
        }
        CHECK(report["metadata"]["config_hash"] == resolved.hash());
        CHECK(fs::exists(fs::path(w.at("logo")) / "logo_aadb.csv"));

        r = cli_run({"--config", w.cfg(), "--workers", "1", "eval-logo", "--table", w.at("t/table.csv"), "--out",
                     w.at("logo1")});
        REQUIRE(r.code == 0);
        for (const auto& e : fs::directory_iterator(w.at("logo")))
            CHECK(slurp(e.path()) == slurp(fs::path(w.at("logo1")) / e.path().filename()));
    }

    SUBCASE("short-term evaluation on a full-day table is a runtime error") {
        r = cli_run({"--config", w.cfg(), "eval-short", "--table", w.at("t/table.csv"), "--out", w.at("short")});
        CHECK(r.code == cli::kExitRuntime);
        CHECK(single_json_line(r.err)["error"] == "runtime_error");
    }

    SUBCASE("train and predict-map") {
        r = cli_run({"--config", w.cfg(), "train", "--table", w.at("t/table.csv"), "--out", w.at("model.json")});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        r = cli_run({"--config", w.cfg(), "predict-map", "--bundle", w.at("a"), "--model", w.at("model.json"), "--date",
                     "2019-06-03", "--out", w.at("map.geojson")});
        REQUIRE_MESSAGE(r.code == 0, r.err);
        const auto map = json::parse(slurp(w.at("map.geojson")));
        const auto graph = json::parse(slurp(fs::path(w.at("a")) / "street_graph.geojson"));
        size_t edges = 0;
        for (const auto& f : graph["features"])
            if (f["geometry"]["type"] == "LineString") ++edges;
        CHECK(map["features"].size() == edges);
        CHECK(map["metadata"]["engine_version"] == cli::engine_version());
        const double v = map["features"][0]["properties"]["volume"].get<double>();
        for (const auto& f : map["features"]) CHECK(f["properties"]["volume"].get<double>() == v);

        r = cli_run({"--config", w.cfg(), "predict-map", "--bundle", w.at("a"), "--model", w.at("model.json"), "--date",
                     "June 3", "--out", w.at("map2.geojson")});
        CHECK(r.code != 0);
        CHECK(r.code != cli::kExitRuntime);
    }
}
