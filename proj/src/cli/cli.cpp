#include "bikevol/cli/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "bikevol/analysis/importance.hpp"
#include "bikevol/analysis/sampling.hpp"
#include "bikevol/cli/config.hpp"
#include "bikevol/core/errors.hpp"
#include "bikevol/core/geo.hpp"
#include "bikevol/core/parallel.hpp"
#include "bikevol/eval/evaluate.hpp"
#include "bikevol/ingest/io.hpp"
#include "bikevol/ingest/synthetic.hpp"
#include "bikevol/ingest/trips.hpp"
#include "bikevol/pipeline/preprocess.hpp"

namespace bikevol::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    int workers = 0;
    std::string config_path;
};

struct Context {
    RunConfig config;
    int workers = 0;
    std::ostream& out;

    json metadata(const std::string& command) const {
        return {{"config_hash", config.hash()}, {"engine_version", engine_version()}, {"command", command}};
    }
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << text;
    if (!f) throw DataError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// CSV outputs cannot embed metadata, so each output directory carries a metadata.json.
void write_dir_metadata(const fs::path& dir, const Context& ctx, const std::string& command) {
    write_json(dir / "metadata.json", ctx.metadata(command));
}

json with_metadata(json body, const Context& ctx, const std::string& command) {
    body["metadata"] = ctx.metadata(command);
    return body;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw ConfigError(std::string(what) + " '" + path + "' does not exist");
}

pipeline::FeatureTable load_table(const std::string& path) {
    require_file(path, "feature table");
    const auto manifest = pipeline::manifest_path_for(path);
    require_file(manifest, "feature manifest");
    return pipeline::read_feature_table(path, manifest);
}

std::vector<ingest::Trip> route_all(const ingest::SourceBundle& bundle, const std::vector<ingest::Trip>& trips,
                                    int workers) {
    std::vector<ingest::Trip> routed(trips.size());
    parallel_for(trips.size(), workers,
                 [&](size_t i) { routed[i] = ingest::route_trip(bundle.street_graph, trips[i]); });
    return routed;
}

std::pair<std::vector<ingest::Trip>, pipeline::RemovalReport> route_and_clean(const ingest::SourceBundle& bundle,
                                                                                const Context& ctx) {
    const auto raw = bundle.trips.empty() ? ingest::reconstruct_trips(bundle.snapshots) : bundle.trips;
    return pipeline::clean_trips(route_all(bundle, raw, ctx.workers), ctx.config.cleaning);
}

// Cleaned trips with their routes: re-routes a cleaned trip file, or cleans the bundle's own trips.
std::vector<ingest::Trip> cleaned_trips(const ingest::SourceBundle& bundle, const std::string& trips_path,
                                        const Context& ctx) {
    if (trips_path.empty()) return route_and_clean(bundle, ctx).first;
    require_file(trips_path, "trip file");
    return route_all(bundle, ingest::read_trips(trips_path), ctx.workers);
}

ingest::SourceBundle load_bundle_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("bundle directory '" + dir + "' does not exist");
    return ingest::load_bundle(dir);
}

eval::EvalOptions eval_options(const Context& ctx) {
    eval::EvalOptions o;
    o.seed = ctx.config.seed;
    o.workers = ctx.workers;
    o.aadb_min_rows = ctx.config.aadb_min_rows;
    return o;
}

void write_report(const fs::path& dir, const std::string& stem, const eval::EvaluationReport& r, const Context& ctx,
                  const std::string& command) {
    write_json(dir / (stem + ".json"), with_metadata(r.to_json(), ctx, command));
    write_text(dir / (stem + ".csv"), r.to_csv());
}

// ---- commands ----

void cmd_synth(const Context& ctx, const std::string& out_dir) {
    const auto city = ingest::generate_synthetic_city(ctx.config.seed, ctx.config.synth);
    ingest::save_bundle(city.bundle, out_dir);
    json pop = json::object(), eff = json::object();
    for (const auto& [id, v] : city.params.popularity) pop[id] = v;
    for (const auto& [id, v] : city.params.station_effect) eff[id] = v;
    write_json(fs::path(out_dir) / "generative_params.json",
               with_metadata({{"intercept", city.params.intercept},
                              {"beta_popularity", city.params.beta_popularity},
                              {"beta_temperature", city.params.beta_temperature},
                              {"beta_rain", city.params.beta_rain},
                              {"beta_weekend", city.params.beta_weekend},
                              {"beta_holiday", city.params.beta_holiday},
                              {"season_amplitude", city.params.season_amplitude},
                              {"noise_sd", city.params.noise_sd},
                              {"daytime_share", city.params.daytime_share},
                              {"popularity", pop},
                              {"station_effect", eff}},
                             ctx, "synth"));
    write_dir_metadata(out_dir, ctx, "synth");
    ctx.out << "wrote synthetic bundle to " << out_dir << "\n";
}

void cmd_clean(const Context& ctx, const std::string& bundle_dir, const std::string& out_dir) {
    const auto bundle = load_bundle_dir(bundle_dir);
    const auto [trips, report] = route_and_clean(bundle, ctx);
    fs::create_directories(out_dir);
    ingest::write_trips(trips, (fs::path(out_dir) / "trips_clean.csv").string());
    write_json(fs::path(out_dir) / "removal_report.json",
               with_metadata({{"report", report.to_json()}, {"rules", pipeline::to_json(ctx.config.cleaning)}}, ctx,
                             "clean"));
    write_dir_metadata(out_dir, ctx, "clean");
    ctx.out << "kept " << report.remaining << " of " << report.input << " trips\n";
}

void cmd_features(const Context& ctx, const std::string& bundle_dir, const std::string& trips_path,
                  const std::string& out_csv) {
    const auto bundle = load_bundle_dir(bundle_dir);
    const auto trips = cleaned_trips(bundle, trips_path, ctx);
    const auto table = pipeline::assemble(bundle, trips, ctx.config.window, ctx.config.features, ctx.workers);
    json meta = ctx.metadata("features");
    meta["features"] = pipeline::to_json(ctx.config.features);
    if (fs::path(out_csv).has_parent_path()) fs::create_directories(fs::path(out_csv).parent_path());
    pipeline::write_feature_table(table, out_csv, pipeline::manifest_path_for(out_csv), meta);
    ctx.out << "wrote " << table.rows() << " rows x " << table.cols() << " features to " << out_csv << "\n";
}

void cmd_train(const Context& ctx, const std::string& table_path, const std::string& out_path) {
    const auto table = load_table(table_path);
    const auto model = learners::fit_model(table, ctx.config.model, {}, ctx.config.seed, ctx.workers);
    write_json(out_path, with_metadata({{"window", std::string(bikevol::to_string(table.window))},
                                        {"spec", ctx.config.model.to_json()},
                                        {"model", model.to_json()},
                                        {"fit_log", pipeline::log_to_json(model.fit_log)}},
                                       ctx, "train"));
    ctx.out << "trained " << learners::to_string(ctx.config.model.kind) << " on " << model.selected.size()
            << " features\n";
}

void cmd_eval_logo(const Context& ctx, const std::string& table_path, const std::string& out_dir) {
    const auto table = load_table(table_path);
    const auto opts = eval_options(ctx);
    const auto run = eval::logo_predict(table, ctx.config.model, opts);
    for (auto scale : {eval::Scale::Daily, eval::Scale::AADB}) {
        auto r = eval::score_held_out(run.folds, scale, opts);
        r.protocol = "logo";
        r.model = std::string(learners::to_string(ctx.config.model.kind));
        r.window = table.window;
        r.excluded.insert(r.excluded.begin(), run.excluded.begin(), run.excluded.end());
        eval::aggregate(r);
        write_report(out_dir, "logo_" + std::string(eval::to_string(scale)), r, ctx, "eval-logo");
        ctx.out << "logo " << eval::to_string(scale) << ": MAE " << r.mae << ", SMAPE " << r.smape << "\n";
    }
    if (!run.tuning.is_null()) write_json(fs::path(out_dir) / "tuning.json", with_metadata(run.tuning, ctx, "eval-logo"));
    write_dir_metadata(out_dir, ctx, "eval-logo");
}

void cmd_eval_short(const Context& ctx, const std::string& table_path, const std::string& out_dir) {
    const auto table = load_table(table_path);
    const auto r = eval::shortterm_evaluate(table, ctx.config.model, eval_options(ctx));
    write_report(out_dir, "short_term", r, ctx, "eval-short");
    write_dir_metadata(out_dir, ctx, "eval-short");
    ctx.out << "short-term: MAE " << r.mae << ", SMAPE " << r.smape << "\n";
}

void cmd_importance(const Context& ctx, const std::string& table_path, const std::string& out_dir) {
    const auto table = pipeline::preprocess(load_table(table_path)).table;
    auto o = ctx.config.importance;
    o.seed = ctx.config.seed;
    o.workers = ctx.workers;
    const auto gi = analysis::grouped_permutation_importance(table, ctx.config.model, o);
    write_json(fs::path(out_dir) / "importance.json", with_metadata(gi.to_json(), ctx, "importance"));
    write_text(fs::path(out_dir) / "importance.csv", gi.to_csv());
    write_dir_metadata(out_dir, ctx, "importance");
    for (const auto& g : gi.groups) ctx.out << pipeline::to_string(g.group) << " " << g.gain << "\n";
}

void cmd_simulate(const Context& ctx, const std::string& table_path, const std::string& out_dir, bool headline) {
    const auto table = load_table(table_path);
    auto o = ctx.config.simulation;
    o.seed = ctx.config.seed;
    o.workers = ctx.workers;
    const auto curve = analysis::simulate_sampling(table, ctx.config.model, o);
    const std::string stem =
        "sampling_" + std::string(analysis::to_string(o.strategy)) + "_" + std::string(analysis::to_string(o.scenario));
    write_json(fs::path(out_dir) / (stem + ".json"), with_metadata(curve.to_json(), ctx, "simulate"));
    write_text(fs::path(out_dir) / (stem + ".csv"), curve.to_csv());
    for (const auto& p : curve.points) ctx.out << p.days << " days: " << p.mean << " +/- " << p.ci_half << "\n";
    if (headline) {
        const auto [daily, aadb] = analysis::ten_day_headline(table, ctx.config.model, ctx.config.seed, ctx.workers,
                                                              o.reps, ctx.config.aadb_min_rows);
        write_report(out_dir, "ten_day_daily", daily, ctx, "simulate");
        write_report(out_dir, "ten_day_aadb", aadb, ctx, "simulate");
        ctx.out << "ten days: daily SMAPE " << daily.smape << ", AADB SMAPE " << aadb.smape << "\n";
    }
    write_dir_metadata(out_dir, ctx, "simulate");
}

void cmd_predict_map(const Context& ctx, const std::string& bundle_dir, const std::string& model_path,
                     const std::string& trips_path, const std::string& date_text, const std::string& out_path) {
    const auto bundle = load_bundle_dir(bundle_dir);
    require_file(model_path, "model file");
    json model_json;
    {
        std::ifstream f(model_path);
        try {
            model_json = json::parse(f);
        } catch (const json::exception& e) {
            throw DataError("model file '" + model_path + "': " + e.what());
        }
    }
    if (!model_json.contains("model")) throw DataError("model file '" + model_path + "' has no model");
    const auto model = learners::FittedModel::from_json(model_json.at("model"));
    const auto window = parse_count_window(model_json.value("window", std::string("full_day")));
    const Date date = parse_date(date_text);

    std::vector<pipeline::CountingLocation> locations;
    std::vector<std::vector<pipeline::QueryRow>> rows;
    for (const auto& e : bundle.street_graph.edges) {
        locations.push_back({e.segment.id, segment_midpoint(e.segment), StationKind::LongTerm});
        rows.push_back({{date, std::numeric_limits<double>::quiet_NaN()}});
    }
    const auto trips = cleaned_trips(bundle, trips_path, ctx);
    const auto table =
        pipeline::assemble_for(bundle, trips, locations, rows, window, ctx.config.features, ctx.workers);
    auto volume = model.predict(table);

    json features = json::array();
    for (size_t i = 0; i < bundle.street_graph.edges.size(); ++i) {
        const auto& seg = bundle.street_graph.edges[i].segment;
        json coords = json::array();
        for (const auto& p : seg.polyline) coords.push_back({p.lon, p.lat});
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                            {"properties", {{"id", seg.id}, {"volume", std::max(volume[i], 0.0)}}}});
    }
    write_json(out_path, {{"type", "FeatureCollection"},
                          {"features", features},
                          {"metadata", ctx.metadata("predict-map")},
                          {"date", format_date(date)}});
    ctx.out << "wrote " << features.size() << " segments to " << out_path << "\n";
}

void cmd_schema(const Context& ctx, const std::string& source) {
    std::vector<std::string> header = ingest::source_schema(source);
    std::string line;
    for (size_t i = 0; i < header.size(); ++i) line += (i ? "," : "") + header[i];
    ctx.out << ingest::source_file(source) << "\n" << line << "\n";
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const DataError*>(&e)) return kExitData;
    return kExitRuntime;
}

std::string kind_for(int code) {
    switch (code) {
        case kExitConfig: return "config_error";
        case kExitData: return "data_error";
        default: return "runtime_error";
    }
}

void diagnose(std::ostream& err, int code, const std::string& message, const std::string& command) {
    json d = {{"error", kind_for(code)}, {"message", message}, {"exit_code", code}};
    if (!command.empty()) d["command"] = command;
    err << d.dump() << std::endl;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bicycle volume extrapolation from counting stations and crowdsourced data", "bikevol"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    Globals g;
    app.add_option("--workers", g.workers, "Worker threads (0 = all cores); results do not depend on it")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--config", g.config_path, "JSON run configuration");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Overrides the configured seed");

    std::string bundle, out_path, table, trips, model, date, source;
    bool headline = false;

    auto* synth = app.add_subcommand("synth", "Write a synthetic source bundle");
    synth->add_option("--out", out_path, "Output directory")->required();
    auto* clean = app.add_subcommand("clean", "Reconstruct, route and clean trips");
    clean->add_option("--bundle", bundle, "Bundle directory")->required();
    clean->add_option("--out", out_path, "Output directory")->required();
    auto* features = app.add_subcommand("features", "Assemble the feature table");
    features->add_option("--bundle", bundle, "Bundle directory")->required();
    features->add_option("--trips", trips, "Cleaned trips (default: clean the bundle's trips)");
    features->add_option("--out", out_path, "Feature CSV path")->required();
    auto* train = app.add_subcommand("train", "Fit a model on a feature table");
    train->add_option("--table", table, "Feature CSV")->required();
    train->add_option("--out", out_path, "Model JSON path")->required();
    auto* logo = app.add_subcommand("eval-logo", "Leave-one-station-out evaluation");
    logo->add_option("--table", table, "Feature CSV")->required();
    logo->add_option("--out", out_path, "Output directory")->required();
    auto* shortterm = app.add_subcommand("eval-short", "Short-term station evaluation");
    shortterm->add_option("--table", table, "Daytime feature CSV")->required();
    shortterm->add_option("--out", out_path, "Output directory")->required();
    auto* importance = app.add_subcommand("importance", "Grouped permutation importance");
    importance->add_option("--table", table, "Feature CSV")->required();
    importance->add_option("--out", out_path, "Output directory")->required();
    auto* simulate = app.add_subcommand("simulate", "Sample-count collection simulator");
    simulate->add_option("--table", table, "Feature CSV")->required();
    simulate->add_option("--out", out_path, "Output directory")->required();
    simulate->add_flag("--headline", headline, "Also run the ten-day one-day-strategy reports");
    auto* map = app.add_subcommand("predict-map", "Predict daily volume for every street segment");
    map->add_option("--bundle", bundle, "Bundle directory")->required();
    map->add_option("--model", model, "Model JSON from train")->required();
    map->add_option("--trips", trips, "Cleaned trips (default: clean the bundle's trips)");
    map->add_option("--date", date, "Date, YYYY-MM-DD")->required();
    map->add_option("--out", out_path, "GeoJSON path")->required();
    auto* schema = app.add_subcommand("schema", "Print the CSV column contract of a source");
    schema->add_option("--source", source, "Source name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        diagnose(err, kExitConfig, e.what(), "");
        return kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        Context ctx{g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path), g.workers, out};
        if (*seed_opt) ctx.config.seed = seed_value;
        set_default_workers(g.workers);

        if (*synth) cmd_synth(ctx, out_path);
        if (*clean) cmd_clean(ctx, bundle, out_path);
        if (*features) cmd_features(ctx, bundle, trips, out_path);
        if (*train) cmd_train(ctx, table, out_path);
        if (*logo) cmd_eval_logo(ctx, table, out_path);
        if (*shortterm) cmd_eval_short(ctx, table, out_path);
        if (*importance) cmd_importance(ctx, table, out_path);
        if (*simulate) cmd_simulate(ctx, table, out_path, headline);
        if (*map) cmd_predict_map(ctx, bundle, model, trips, date, out_path);
        if (*schema) cmd_schema(ctx, source);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        diagnose(err, code, e.what(), command);
        return code;
    }
    return kExitOk;
}

}  // namespace bikevol::cli
