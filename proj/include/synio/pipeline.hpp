#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "synio/common.hpp"
#include "synio/ecx.hpp"
#include "synio/gpid.hpp"
#include "synio/iotensor.hpp"
#include "synio/regress.hpp"
#include "synio/synnet.hpp"
#include "synio/techclust.hpp"

namespace synio::pipe {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PathsConfig {
    std::filesystem::path transactions;
    std::filesystem::path final_demand;
    std::filesystem::path countries;
    std::filesystem::path industries;
    std::filesystem::path sectors;         // optional: mixing tests and sector dummies
    std::filesystem::path indicators;      // optional: clustering and regression controls
    std::filesystem::path trade;
    std::filesystem::path product_mapping;
    std::filesystem::path output;
};

struct PeriodConfig {
    int first_year = 0;
    int last_year = 0;
    bool set() const { return last_year >= first_year && first_year != 0; }
};

struct ClusteringConfig {
    int k = 4;
    int min_size = -1;  // -1 derives floor(0.8 * n/k)
    int max_size = -1;  // -1 derives ceil(1.2 * n/k)
    int restarts = 25;
    double indicator_weight = 0.5;
};

struct SynergyConfig {
    int shuffles = 100;
    std::size_t min_sample = io::kDefaultMinPoolRows;
};

struct NetworkConfig {
    net::BackboneOptions backbone;
    int null_samples = 100;
    net::NodeDistribution distribution = net::NodeDistribution::strength;
};

struct ComplexityConfig {
    double rca_threshold = 1.0;
    cx::FcOptions fc;
};

struct ModelSpec {
    std::string name;
    // Column names; the token "@sector_dummies" expands to the sector dummy
    // columns present in the observation table.
    std::vector<std::string> regressors;
};

struct RegressionConfig {
    std::string dependent = "efi_q";
    std::string cluster_column = "country";
    int bins = 30;
    double floor_value = 1e-9;
    std::vector<ModelSpec> models;  // empty: built-in model family
};

struct PipelineConfig {
    PathsConfig paths;
    PeriodConfig period;
    ClusteringConfig clustering;
    SynergyConfig synergy;
    NetworkConfig network;
    ComplexityConfig complexity;
    RegressionConfig regression;
    std::uint64_t seed = 1;
    bool overwrite = false;
    int threads = 0;  // 0: hardware concurrency

    /// Relative paths in the file resolve against the file's directory.
    static PipelineConfig from_json_file(const std::filesystem::path& file);
    /// Full config with every default filled in, as written to manifests.
    std::string echo_json() const;
};

enum class Stage { ingest, cluster, synergy, network, complexity, regress };

const char* stage_name(Stage stage);

/// Checks that every input path the stage reads exists. Output handling
/// (existence, overwrite) is checked when the stage runs.
void validate_stage_inputs(const PipelineConfig& config, Stage stage);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct StageResult {
    std::vector<std::string> warnings;
};

StageResult run_ingest(const PipelineConfig& config);
StageResult run_cluster(const PipelineConfig& config);
StageResult run_synergy(const PipelineConfig& config);
StageResult run_network(const PipelineConfig& config);
StageResult run_complexity(const PipelineConfig& config);
StageResult run_regress(const PipelineConfig& config);

using StageCallback = std::function<void(Stage, const StageResult&, double seconds)>;

/// All stages in order; writes manifest.json and timings.json at the root of
/// the artifact directory. Timings live in their own file so reruns from the
/// same inputs and seed are byte-identical everywhere else. on_stage fires
/// after each stage completes.
void run_pipeline(const PipelineConfig& config, const StageCallback& on_stage = {});

StageResult run_stage(const PipelineConfig& config, Stage stage);

// ---------------------------------------------------------------------------
// Artifact readers (canonical stage outputs)
// ---------------------------------------------------------------------------

std::vector<io::FlowSeries> read_flow_table(std::istream& in);
std::vector<io::FluctuationSeries> read_fluctuation_table(std::istream& in);

/// industry -> country -> cluster id.
std::map<std::string, std::map<std::string, int>> read_assignments(std::istream& in);

struct ScoreRow {
    std::string industry;
    int cluster = 0;
    std::string input_i;
    std::string input_j;
    std::size_t rows = 0;
    bool below_minimum = false;
    pid::PIDResult result;
    std::string status;  // ok | insufficient | degenerate

    bool ok() const { return status == "ok"; }
};

std::vector<ScoreRow> read_score_table(std::istream& in);

// ---------------------------------------------------------------------------
// Synthetic world generator
// ---------------------------------------------------------------------------

/// Planted-structure world: countries in development tiers, half the
/// industries with genuinely synergistic input couplings and half with purely
/// redundant ones, and exports nested so higher tiers competitively export
/// higher-requirement industries. Writes a complete input file set plus a
/// ready-to-run config.json and the ground truth (planted.csv).
struct WorldSpec {
    int countries = 40;
    int industries = 8;
    int years = 30;
    int tiers = 4;
    int first_year = 1990;
    double tau = 0.12;  // per-year log-fluctuation scale
    std::uint64_t seed = 2024;
    std::filesystem::path output;
};

void generate_world(const WorldSpec& spec);

}  // namespace synio::pipe
