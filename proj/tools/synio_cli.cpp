// Batch front end for the synergy pipeline. Human-readable progress goes to
// stderr; machine-readable results only ever land in the artifact directory.
// Exit codes: 0 success, 1 stage failure (partial artifacts flagged with a
// FAILED marker), 2 configuration or validation problem.
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synio/common.hpp"
#include "synio/pipeline.hpp"

namespace {

using synio::pipe::PipelineConfig;
using synio::pipe::Stage;

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    bool overwrite = false;
    int threads = 0;
    int shuffles = 0;
    int null_samples = 0;
    int bins = 0;
    int k = 0;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out, "artifact directory (overrides paths.output)");
    cmd->add_option("--seed", args.seed, "master seed override");
    cmd->add_flag("--overwrite", args.overwrite, "replace existing stage outputs");
    cmd->add_option("--threads", args.threads, "worker threads, 0 uses every core")->check(CLI::Range(0, 4096));
    cmd->add_option("--shuffles", args.shuffles, "surrogate shuffles per input pair")->check(CLI::PositiveNumber);
    cmd->add_option("--null-samples", args.null_samples, "null networks per backbone")->check(CLI::PositiveNumber);
    cmd->add_option("--bins", args.bins, "scatter bin count")->check(CLI::Range(2, 1000000));
    cmd->add_option("--k", args.k, "clusters per industry")->check(CLI::Range(2, 1000000));
}

PipelineConfig load_config(const CLI::App* cmd, const CommonArgs& args) {
    auto config = PipelineConfig::from_json_file(args.config_path);
    if (cmd->count("--out")) config.paths.output = args.out;
    if (cmd->count("--seed")) config.seed = args.seed;
    if (args.overwrite) config.overwrite = true;
    if (cmd->count("--threads")) config.threads = args.threads;
    if (cmd->count("--shuffles")) config.synergy.shuffles = args.shuffles;
    if (cmd->count("--null-samples")) config.network.null_samples = args.null_samples;
    if (cmd->count("--bins")) config.regression.bins = args.bins;
    if (cmd->count("--k")) config.clustering.k = args.k;
    return config;
}

void check_overwrite(const PipelineConfig& config, const std::vector<Stage>& stages) {
    for (Stage stage : stages) {
        const auto dir = config.paths.output / synio::pipe::stage_name(stage);
        if (std::filesystem::exists(dir) && !config.overwrite)
            throw synio::ValidationError("output directory " + dir.string() + " already exists (pass --overwrite)");
    }
}

void clear_failed_marker(const PipelineConfig& config) {
    std::error_code ec;
    std::filesystem::remove(config.paths.output / "FAILED", ec);
}

void write_failed_marker(const PipelineConfig& config, const std::string& message) {
    std::error_code ec;
    std::filesystem::create_directories(config.paths.output, ec);
    if (ec) return;
    try {
        synio::write_text_file(config.paths.output / "FAILED", message + "\n");
    } catch (...) {
        // the marker is best-effort; the exit code already says it failed
    }
}

void log_stage(Stage stage, const synio::pipe::StageResult& result, double seconds) {
    const char* name = synio::pipe::stage_name(stage);
    for (const auto& warning : result.warnings) std::fprintf(stderr, "[synio] %s: warning: %s\n", name, warning.c_str());
    std::fprintf(stderr, "[synio] stage %s complete (%.1fs)\n", name, seconds);
}

int run_one_stage(const CLI::App* cmd, const CommonArgs& args, Stage stage) {
    PipelineConfig config;
    try {
        config = load_config(cmd, args);
        synio::pipe::validate_stage_inputs(config, stage);
        check_overwrite(config, {stage});
    } catch (const synio::Error& err) {
        std::fprintf(stderr, "synio: %s\n", err.what());
        return 2;
    }
    clear_failed_marker(config);
    try {
        const auto start = std::chrono::steady_clock::now();
        const auto result = synio::pipe::run_stage(config, stage);
        log_stage(stage, result, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        return 0;
    } catch (const std::exception& err) {
        const std::string message = "stage " + std::string(synio::pipe::stage_name(stage)) + " failed: " + err.what();
        std::fprintf(stderr, "synio: %s\n", message.c_str());
        write_failed_marker(config, message);
        return 1;
    }
}

int run_full_pipeline(const CLI::App* cmd, const CommonArgs& args) {
    PipelineConfig config;
    try {
        config = load_config(cmd, args);
        synio::pipe::validate_stage_inputs(config, Stage::ingest);
        synio::pipe::validate_stage_inputs(config, Stage::complexity);
        check_overwrite(config, {Stage::ingest, Stage::cluster, Stage::synergy, Stage::network, Stage::complexity,
                                 Stage::regress});
    } catch (const synio::Error& err) {
        std::fprintf(stderr, "synio: %s\n", err.what());
        return 2;
    }
    clear_failed_marker(config);
    try {
        synio::pipe::run_pipeline(config, log_stage);
        std::fprintf(stderr, "[synio] pipeline complete: %s\n", config.paths.output.string().c_str());
        return 0;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "synio: %s\n", err.what());
        write_failed_marker(config, err.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synergy estimation over input-output time series"};
    app.set_version_flag("--version", "synio 0.1.0");
    app.require_subcommand(1);

    const std::pair<const char*, Stage> stage_commands[] = {
        {"ingest", Stage::ingest},         {"cluster", Stage::cluster}, {"synergy", Stage::synergy},
        {"network", Stage::network},       {"complexity", Stage::complexity}, {"regress", Stage::regress},
    };
    const char* stage_help[] = {
        "parse transactions and demand into flow and fluctuation tables",
        "cluster countries per industry by production technology",
        "estimate pairwise input synergy per industry and cluster",
        "build synergy networks, backbones, and null-model tests",
        "compute export-based fitness and complexity indices",
        "regress complexity on synergy with clustered errors",
    };
    std::map<std::string, CLI::App*> subs;
    CommonArgs args;
    for (std::size_t i = 0; i < std::size(stage_commands); ++i) {
        auto* cmd = app.add_subcommand(stage_commands[i].first, stage_help[i]);
        add_common_options(cmd, args);
        subs[stage_commands[i].first] = cmd;
    }
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage in order");
    add_common_options(pipeline_cmd, args);

    synio::pipe::WorldSpec world;
    std::string world_out;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic world with planted synergy structure");
    synth_cmd->add_option("--countries", world.countries, "country count")->check(CLI::Range(2, 100000));
    synth_cmd->add_option("--industries", world.industries, "industry count")->check(CLI::Range(2, 10000));
    synth_cmd->add_option("--years", world.years, "year count")->check(CLI::Range(3, 10000));
    synth_cmd->add_option("--tiers", world.tiers, "development tiers")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--first-year", world.first_year, "first calendar year");
    synth_cmd->add_option("--tau", world.tau, "per-year log-fluctuation scale")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--seed", world.seed, "generator seed");
    synth_cmd->add_option("--out", world_out, "directory for the generated files")->required();

    auto* genepy_cmd = app.add_subcommand("genepy", "reserved for the exploration-exploitation index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (genepy_cmd->parsed()) {
        std::fprintf(stderr, "synio: genepy is not implemented\n");
        return 2;
    }
    if (synth_cmd->parsed()) {
        world.output = world_out;
        try {
            synio::pipe::generate_world(world);
            std::fprintf(stderr, "[synio] world written to %s\n", world.output.string().c_str());
            return 0;
        } catch (const synio::ValidationError& err) {
            std::fprintf(stderr, "synio: %s\n", err.what());
            return 2;
        } catch (const std::exception& err) {
            std::fprintf(stderr, "synio: %s\n", err.what());
            return 1;
        }
    }
    if (pipeline_cmd->parsed()) return run_full_pipeline(pipeline_cmd, args);
    for (const auto& [name, stage] : stage_commands)
        if (subs[name]->parsed()) return run_one_stage(subs[name], args, stage);
    return 2;
}
