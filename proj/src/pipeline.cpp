#include "synio/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "synio/stats.hpp"

namespace synio::pipe {

namespace {

using nlohmann::ordered_json;

constexpr const char* kToolVersion = "synio 0.1.0";

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) throw ValidationError("config: unknown key '" + key + "' in " + where);
    }
}

std::filesystem::path resolve_path(const std::string& value, const std::filesystem::path& base) {
    std::filesystem::path p(value);
    return p.is_absolute() ? p : base / p;
}

net::BackboneFilter parse_filter(const std::string& name) {
    if (name == "noise_corrected") return net::BackboneFilter::noise_corrected;
    if (name == "disparity") return net::BackboneFilter::disparity;
    throw ValidationError("config: unknown backbone filter '" + name + "'");
}

net::NodeDistribution parse_distribution(const std::string& name) {
    if (name == "strength") return net::NodeDistribution::strength;
    if (name == "uniform") return net::NodeDistribution::uniform;
    throw ValidationError("config: unknown node distribution '" + name + "'");
}

std::vector<ModelSpec> default_model_family() {
    return {
        {"model_1", {"log_synergy"}},
        {"model_2", {"log_synergy", "log_gdp_pc"}},
        {"model_3", {"log_synergy", "log_gdp_pc", "@sector_dummies"}},
        {"model_4", {"log_synergy", "log_gdp_pc", "@sector_dummies", "log_total_output"}},
        {"model_5", {"log_synergy", "log_gdp_pc", "@sector_dummies", "log_total_output", "energy_ratio"}},
    };
}

ordered_json config_echo(const PipelineConfig& c) {
    ordered_json paths;
    paths["transactions"] = c.paths.transactions.string();
    paths["final_demand"] = c.paths.final_demand.string();
    paths["countries"] = c.paths.countries.string();
    paths["industries"] = c.paths.industries.string();
    paths["sectors"] = c.paths.sectors.string();
    paths["indicators"] = c.paths.indicators.string();
    paths["trade"] = c.paths.trade.string();
    paths["product_mapping"] = c.paths.product_mapping.string();
    paths["output"] = c.paths.output.string();

    ordered_json doc;
    doc["paths"] = std::move(paths);
    doc["period"] = {{"first_year", c.period.first_year}, {"last_year", c.period.last_year}};
    doc["clustering"] = {{"k", c.clustering.k},
                         {"min_size", c.clustering.min_size},
                         {"max_size", c.clustering.max_size},
                         {"restarts", c.clustering.restarts},
                         {"indicator_weight", c.clustering.indicator_weight}};
    doc["synergy"] = {{"shuffles", c.synergy.shuffles}, {"min_sample", c.synergy.min_sample}};
    doc["network"] = {
        {"filter", c.network.backbone.filter == net::BackboneFilter::noise_corrected ? "noise_corrected" : "disparity"},
        {"delta", c.network.backbone.delta},
        {"alpha", c.network.backbone.alpha},
        {"null_samples", c.network.null_samples},
        {"node_distribution", c.network.distribution == net::NodeDistribution::strength ? "strength" : "uniform"}};
    doc["complexity"] = {{"rca_threshold", c.complexity.rca_threshold},
                         {"max_iterations", c.complexity.fc.max_iterations},
                         {"tolerance", c.complexity.fc.tolerance}};
    ordered_json models = ordered_json::array();
    const auto family = c.regression.models.empty() ? default_model_family() : c.regression.models;
    for (const auto& m : family) models.push_back({{"name", m.name}, {"regressors", m.regressors}});
    doc["regression"] = {{"dependent", c.regression.dependent},
                         {"cluster_column", c.regression.cluster_column},
                         {"bins", c.regression.bins},
                         {"floor", c.regression.floor_value},
                         {"models", std::move(models)}};
    doc["seed"] = c.seed;
    doc["overwrite"] = c.overwrite;
    doc["threads"] = c.threads;
    return doc;
}

}  // namespace

PipelineConfig PipelineConfig::from_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IngestError("config: cannot open " + file.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config: " + file.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config: top level must be an object");
    reject_unknown_keys(doc, {"paths", "period", "clustering", "synergy", "network", "complexity", "regression",
                              "seed", "overwrite", "threads"},
                        "top level");

    PipelineConfig c;
    const auto base = file.has_parent_path() ? file.parent_path() : std::filesystem::path(".");
    try {
        if (doc.contains("paths")) {
            const auto& p = doc["paths"];
            reject_unknown_keys(p,
                                {"transactions", "final_demand", "countries", "industries", "sectors", "indicators",
                                 "trade", "product_mapping", "output"},
                                "paths");
            auto get = [&](const char* key) -> std::filesystem::path {
                return p.contains(key) ? resolve_path(p[key].get<std::string>(), base) : std::filesystem::path();
            };
            c.paths.transactions = get("transactions");
            c.paths.final_demand = get("final_demand");
            c.paths.countries = get("countries");
            c.paths.industries = get("industries");
            c.paths.sectors = get("sectors");
            c.paths.indicators = get("indicators");
            c.paths.trade = get("trade");
            c.paths.product_mapping = get("product_mapping");
            c.paths.output = get("output");
        }
        if (doc.contains("period")) {
            const auto& p = doc["period"];
            reject_unknown_keys(p, {"first_year", "last_year"}, "period");
            if (p.contains("first_year")) c.period.first_year = p["first_year"].get<int>();
            if (p.contains("last_year")) c.period.last_year = p["last_year"].get<int>();
        }
        if (doc.contains("clustering")) {
            const auto& p = doc["clustering"];
            reject_unknown_keys(p, {"k", "min_size", "max_size", "restarts", "indicator_weight"}, "clustering");
            if (p.contains("k")) c.clustering.k = p["k"].get<int>();
            if (p.contains("min_size")) c.clustering.min_size = p["min_size"].get<int>();
            if (p.contains("max_size")) c.clustering.max_size = p["max_size"].get<int>();
            if (p.contains("restarts")) c.clustering.restarts = p["restarts"].get<int>();
            if (p.contains("indicator_weight")) c.clustering.indicator_weight = p["indicator_weight"].get<double>();
        }
        if (doc.contains("synergy")) {
            const auto& p = doc["synergy"];
            reject_unknown_keys(p, {"shuffles", "min_sample"}, "synergy");
            if (p.contains("shuffles")) c.synergy.shuffles = p["shuffles"].get<int>();
            if (p.contains("min_sample")) c.synergy.min_sample = p["min_sample"].get<std::size_t>();
        }
        if (doc.contains("network")) {
            const auto& p = doc["network"];
            reject_unknown_keys(p, {"filter", "delta", "alpha", "null_samples", "node_distribution"}, "network");
            if (p.contains("filter")) c.network.backbone.filter = parse_filter(p["filter"].get<std::string>());
            if (p.contains("delta")) c.network.backbone.delta = p["delta"].get<double>();
            if (p.contains("alpha")) c.network.backbone.alpha = p["alpha"].get<double>();
            if (p.contains("null_samples")) c.network.null_samples = p["null_samples"].get<int>();
            if (p.contains("node_distribution"))
                c.network.distribution = parse_distribution(p["node_distribution"].get<std::string>());
        }
        if (doc.contains("complexity")) {
            const auto& p = doc["complexity"];
            reject_unknown_keys(p, {"rca_threshold", "max_iterations", "tolerance"}, "complexity");
            if (p.contains("rca_threshold")) c.complexity.rca_threshold = p["rca_threshold"].get<double>();
            if (p.contains("max_iterations")) c.complexity.fc.max_iterations = p["max_iterations"].get<int>();
            if (p.contains("tolerance")) c.complexity.fc.tolerance = p["tolerance"].get<double>();
        }
        if (doc.contains("regression")) {
            const auto& p = doc["regression"];
            reject_unknown_keys(p, {"dependent", "cluster_column", "bins", "floor", "models"}, "regression");
            if (p.contains("dependent")) c.regression.dependent = p["dependent"].get<std::string>();
            if (p.contains("cluster_column")) c.regression.cluster_column = p["cluster_column"].get<std::string>();
            if (p.contains("bins")) c.regression.bins = p["bins"].get<int>();
            if (p.contains("floor")) c.regression.floor_value = p["floor"].get<double>();
            if (p.contains("models")) {
                for (const auto& m : p["models"]) {
                    reject_unknown_keys(m, {"name", "regressors"}, "regression.models");
                    ModelSpec spec;
                    spec.name = m.at("name").get<std::string>();
                    for (const auto& r : m.at("regressors")) spec.regressors.push_back(r.get<std::string>());
                    c.regression.models.push_back(std::move(spec));
                }
            }
        }
        if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("overwrite")) c.overwrite = doc["overwrite"].get<bool>();
        if (doc.contains("threads")) c.threads = doc["threads"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config: " + std::string(e.what()));
    }

    if (c.paths.output.empty()) throw ValidationError("config: paths.output is required");
    if (c.period.first_year != 0 || c.period.last_year != 0) {
        if (c.period.last_year < c.period.first_year) throw ValidationError("config: period is reversed");
    }
    if (c.clustering.k < 2) throw ValidationError("config: clustering.k must be at least 2");
    if (c.clustering.restarts < 1) throw ValidationError("config: clustering.restarts must be positive");
    if (c.synergy.shuffles < 1) throw ValidationError("config: synergy.shuffles must be positive");
    if (c.network.null_samples < 1) throw ValidationError("config: network.null_samples must be positive");
    if (!(c.network.backbone.delta >= 0.0)) throw ValidationError("config: network.delta must be nonnegative");
    if (!(c.network.backbone.alpha > 0.0 && c.network.backbone.alpha < 1.0))
        throw ValidationError("config: network.alpha must lie in (0, 1)");
    if (!(c.complexity.rca_threshold > 0.0)) throw ValidationError("config: complexity.rca_threshold must be positive");
    if (c.complexity.fc.max_iterations < 1) throw ValidationError("config: complexity.max_iterations must be positive");
    if (!(c.complexity.fc.tolerance > 0.0)) throw ValidationError("config: complexity.tolerance must be positive");
    if (c.regression.bins < 2) throw ValidationError("config: regression.bins must be at least 2");
    if (!(c.regression.floor_value > 0.0)) throw ValidationError("config: regression.floor must be positive");
    if (c.threads < 0) throw ValidationError("config: threads must be nonnegative");
    return c;
}

std::string PipelineConfig::echo_json() const { return config_echo(*this).dump(2) + "\n"; }

const char* stage_name(Stage stage) {
    switch (stage) {
        case Stage::ingest: return "ingest";
        case Stage::cluster: return "cluster";
        case Stage::synergy: return "synergy";
        case Stage::network: return "network";
        case Stage::complexity: return "complexity";
        case Stage::regress: return "regress";
    }
    return "?";
}

namespace {

void require_file(const std::filesystem::path& p, const std::string& label) {
    if (p.empty()) throw ValidationError("config: missing path for " + label);
    if (!std::filesystem::exists(p)) throw ValidationError(label + " not found: " + p.string());
}

void require_optional(const std::filesystem::path& p, const std::string& label) {
    if (!p.empty() && !std::filesystem::exists(p)) throw ValidationError(label + " not found: " + p.string());
}

void require_artifact(const PipelineConfig& c, const char* stage, const char* file) {
    const auto p = c.paths.output / stage / file;
    if (!std::filesystem::exists(p))
        throw ValidationError(std::string(file) + " from the " + stage + " stage not found: " + p.string() +
                              " (run that stage first)");
}

}  // namespace

void validate_stage_inputs(const PipelineConfig& c, Stage stage) {
    require_file(c.paths.countries, "country registry");
    require_file(c.paths.industries, "industry registry");
    require_optional(c.paths.sectors, "sector map");
    require_optional(c.paths.indicators, "indicator table");
    switch (stage) {
        case Stage::ingest:
            require_file(c.paths.transactions, "transaction file");
            require_file(c.paths.final_demand, "final demand file");
            break;
        case Stage::cluster:
            require_artifact(c, "ingest", "flows.csv");
            break;
        case Stage::synergy:
            require_artifact(c, "ingest", "fluctuations.csv");
            require_artifact(c, "cluster", "assignments.csv");
            break;
        case Stage::network:
            require_artifact(c, "synergy", "scores.csv");
            break;
        case Stage::complexity:
            require_file(c.paths.trade, "trade file");
            require_file(c.paths.product_mapping, "product mapping");
            break;
        case Stage::regress:
            require_artifact(c, "ingest", "flows.csv");
            require_artifact(c, "cluster", "assignments.csv");
            require_artifact(c, "synergy", "scores.csv");
            require_artifact(c, "complexity", "scores.csv");
            break;
    }
}

namespace {

// ---------------------------------------------------------------------------
// Shared stage plumbing
// ---------------------------------------------------------------------------

Registry load_registry(const PipelineConfig& c) {
    return Registry::load(c.paths.countries, c.paths.industries, c.paths.sectors);
}

std::optional<io::YearSpan> configured_period(const PipelineConfig& c) {
    if (!c.period.set()) return std::nullopt;
    return io::YearSpan{c.period.first_year, c.period.last_year};
}

std::filesystem::path prepare_stage_dir(const PipelineConfig& c, Stage stage) {
    const auto dir = c.paths.output / stage_name(stage);
    if (std::filesystem::exists(dir)) {
        if (!c.overwrite)
            throw ValidationError("output directory " + dir.string() + " already exists (enable overwrite)");
        std::filesystem::remove_all(dir);
    }
    std::filesystem::create_directories(dir);
    return dir;
}

void write_stage_sidecar(const std::filesystem::path& dir, Stage stage, const PipelineConfig& c,
                         const std::vector<std::string>& warnings) {
    ordered_json doc;
    doc["stage"] = stage_name(stage);
    doc["version"] = kToolVersion;
    doc["warnings"] = warnings;
    doc["config"] = config_echo(c);
    write_text_file(dir / "stage.json", doc.dump(2) + "\n");
}

std::ifstream open_input(const std::filesystem::path& p, const std::string& label) {
    std::ifstream in(p);
    if (!in) throw IngestError("cannot open " + label + ": " + p.string());
    return in;
}

ordered_json report_to_json(const io::ParseReport& report) {
    ordered_json doc;
    doc["rows_read"] = report.rows_read;
    doc["rows_accepted"] = report.rows_accepted;
    doc["rows_out_of_period"] = report.rows_out_of_period;
    doc["rows_rejected"] = report.rows_rejected();
    ordered_json issues = ordered_json::array();
    const std::size_t cap = 100;
    for (std::size_t i = 0; i < report.issues.size() && i < cap; ++i)
        issues.push_back({{"line", report.issues[i].line}, {"message", report.issues[i].message}});
    doc["issues"] = std::move(issues);
    doc["issues_truncated"] = report.issues.size() > cap;
    return doc;
}

std::string sanitize_code(const std::string& code) {
    std::string out = code;
    for (char& ch : out) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '-' || ch == '_';
        if (!ok) ch = '_';
    }
    return out;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Artifact readers
// ---------------------------------------------------------------------------

namespace {

struct CanonicalLine {
    std::string country, industry, input;
    int year = 0;
    double value = 0.0;
    bool valid = true;
};

std::vector<CanonicalLine> read_canonical_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IngestError("series table: empty input");
    if (split_delimited(line, ',') != std::vector<std::string>{"country", "industry", "input_industry", "year",
                                                               "value", "valid"})
        throw IngestError("series table: unexpected header");
    std::vector<CanonicalLine> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_delimited(line, ',');
        if (cells.size() != 6) throw IngestError("series table line " + std::to_string(lineno) + ": need 6 fields");
        CanonicalLine row;
        row.country = cells[0];
        row.industry = cells[1];
        row.input = cells[2];
        bool ok = false;
        row.year = static_cast<int>(parse_long(cells[3], &ok));
        if (!ok) throw IngestError("series table line " + std::to_string(lineno) + ": bad year");
        row.value = parse_double(cells[4], &ok);
        if (!ok) throw IngestError("series table line " + std::to_string(lineno) + ": bad value");
        row.valid = cells[5] == "1";
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<io::FlowSeries> read_flow_table(std::istream& in) {
    std::vector<io::FlowSeries> out;
    for (auto& row : read_canonical_table(in)) {
        const bool fresh = out.empty() || out.back().country != row.country || out.back().industry != row.industry ||
                           out.back().input_industry.value_or("") != row.input;
        if (fresh) {
            io::FlowSeries s;
            s.country = row.country;
            s.industry = row.industry;
            if (!row.input.empty()) s.input_industry = row.input;
            s.first_year = row.year;
            out.push_back(std::move(s));
        } else if (row.year != out.back().year_of(out.back().values.size())) {
            throw IngestError("series table: non-contiguous years for " + row.country + "/" + row.industry);
        }
        out.back().values.push_back(row.value);
    }
    return out;
}

std::vector<io::FluctuationSeries> read_fluctuation_table(std::istream& in) {
    std::vector<io::FluctuationSeries> out;
    for (auto& row : read_canonical_table(in)) {
        const bool fresh = out.empty() || out.back().country != row.country || out.back().industry != row.industry ||
                           out.back().input_industry.value_or("") != row.input;
        if (fresh) {
            io::FluctuationSeries s;
            s.country = row.country;
            s.industry = row.industry;
            if (!row.input.empty()) s.input_industry = row.input;
            s.first_year = row.year;
            out.push_back(std::move(s));
        } else if (row.year != out.back().year_of(out.back().values.size())) {
            throw IngestError("series table: non-contiguous years for " + row.country + "/" + row.industry);
        }
        out.back().values.push_back(row.value);
        out.back().valid.push_back(row.valid);
    }
    return out;
}

std::map<std::string, std::map<std::string, int>> read_assignments(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IngestError("assignments: empty input");
    if (split_delimited(line, ',') != std::vector<std::string>{"industry", "country", "cluster"})
        throw IngestError("assignments: unexpected header");
    std::map<std::string, std::map<std::string, int>> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_delimited(line, ',');
        if (cells.size() != 3) throw IngestError("assignments line " + std::to_string(lineno) + ": need 3 fields");
        bool ok = false;
        const int cluster = static_cast<int>(parse_long(cells[2], &ok));
        if (!ok || cluster < 0) throw IngestError("assignments line " + std::to_string(lineno) + ": bad cluster id");
        out[cells[0]][cells[1]] = cluster;
    }
    return out;
}

namespace {

std::string score_table_header() {
    std::string header = "industry,cluster,input_i,input_j,rows,below_minimum";
    for (const auto& name : pid::pid_field_names()) header += "," + name;
    header += ",surrogates_used,status";
    return header;
}

}  // namespace

std::vector<ScoreRow> read_score_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IngestError("score table: empty input");
    if (line != score_table_header()) throw IngestError("score table: unexpected header");
    const std::size_t fields = split_delimited(score_table_header(), ',').size();
    std::vector<ScoreRow> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_delimited(line, ',');
        if (cells.size() != fields) throw IngestError("score table line " + std::to_string(lineno) + ": field count");
        ScoreRow row;
        row.industry = cells[0];
        bool ok = false;
        row.cluster = static_cast<int>(parse_long(cells[1], &ok));
        if (!ok) throw IngestError("score table line " + std::to_string(lineno) + ": bad cluster");
        row.input_i = cells[2];
        row.input_j = cells[3];
        row.rows = static_cast<std::size_t>(parse_long(cells[4], &ok));
        if (!ok) throw IngestError("score table line " + std::to_string(lineno) + ": bad row count");
        row.below_minimum = cells[5] == "1";
        std::vector<double> values(pid::pid_field_names().size(), 0.0);
        for (std::size_t k = 0; k < values.size(); ++k) {
            values[k] = parse_double(cells[6 + k], &ok);
            if (!ok) throw IngestError("score table line " + std::to_string(lineno) + ": bad numeric field");
        }
        row.result.mi_joint = values[0];
        row.result.mi_x1 = values[1];
        row.result.mi_x2 = values[2];
        row.result.redundancy = values[3];
        row.result.unique_x1 = values[4];
        row.result.unique_x2 = values[5];
        row.result.synergy_raw = values[6];
        row.result.synergy_bias = values[7];
        row.result.synergy_corrected = values[8];
        row.result.surrogates_used = static_cast<int>(parse_long(cells[6 + values.size()], &ok));
        if (!ok) throw IngestError("score table line " + std::to_string(lineno) + ": bad surrogate count");
        row.status = cells[7 + values.size()];
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage: ingest
// ---------------------------------------------------------------------------

StageResult run_ingest(const PipelineConfig& config) {
    validate_stage_inputs(config, Stage::ingest);
    StageResult result;
    const Registry registry = load_registry(config);
    io::ParseOptions options;
    options.period = configured_period(config);

    auto tin = open_input(config.paths.transactions, "transaction file");
    auto transactions = io::parse_transactions_with_header(tin, registry, options);
    auto fin = open_input(config.paths.final_demand, "final demand file");
    auto demand = io::parse_final_demand_with_header(fin, registry, options);

    if (transactions.table.empty() && demand.table.empty())
        throw ValidationError("ingest: no usable records in the configured period");
    if (transactions.table.span().length() < 2)
        throw ValidationError("ingest: need at least two years of data for fluctuations");

    if (transactions.report.rows_rejected() > 0)
        result.warnings.push_back("transactions: " + std::to_string(transactions.report.rows_rejected()) +
                                  " rows rejected");
    if (transactions.report.rows_out_of_period > 0)
        result.warnings.push_back("transactions: " + std::to_string(transactions.report.rows_out_of_period) +
                                  " rows outside the configured period");
    if (demand.report.rows_rejected() > 0)
        result.warnings.push_back("final demand: " + std::to_string(demand.report.rows_rejected()) + " rows rejected");
    if (demand.report.rows_out_of_period > 0)
        result.warnings.push_back("final demand: " + std::to_string(demand.report.rows_out_of_period) +
                                  " rows outside the configured period");

    std::vector<io::FlowSeries> flows;
    std::vector<io::FluctuationSeries> fluctuations;
    for (const auto& country : registry.countries) {
        for (const auto& industry : registry.industries) {
            auto output = io::total_output(transactions.table, demand.table, industry, country);
            fluctuations.push_back(io::log_fluctuations(output));
            flows.push_back(std::move(output));
            for (const auto& input : registry.industries) {
                auto inflow = io::total_input_inflow(transactions.table, input, industry, country);
                fluctuations.push_back(io::log_fluctuations(inflow));
                flows.push_back(std::move(inflow));
            }
        }
    }

    const auto dir = prepare_stage_dir(config, Stage::ingest);
    write_text_file(dir / "flows.csv", io::flow_table_to_delimited(flows));
    write_text_file(dir / "fluctuations.csv", io::fluctuation_table_to_delimited(fluctuations));

    ordered_json report;
    report["transactions"] = report_to_json(transactions.report);
    report["final_demand"] = report_to_json(demand.report);
    const auto span = transactions.table.span();
    report["span"] = {{"first_year", span.first}, {"last_year", span.last}};
    write_text_file(dir / "report.json", report.dump(2) + "\n");
    write_stage_sidecar(dir, Stage::ingest, config, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Stage: cluster
// ---------------------------------------------------------------------------

StageResult run_cluster(const PipelineConfig& config) {
    validate_stage_inputs(config, Stage::cluster);
    StageResult result;
    const Registry registry = load_registry(config);

    auto fin = open_input(config.paths.output / "ingest" / "flows.csv", "flow table");
    const auto flows = read_flow_table(fin);
    std::map<std::tuple<std::string, std::string, std::string>, const io::FlowSeries*> flow_of;
    for (const auto& s : flows) flow_of[{s.country, s.industry, s.input_industry.value_or("")}] = &s;

    std::map<std::string, std::map<std::string, double>> indicator_means;
    if (!config.paths.indicators.empty()) {
        auto iin = open_input(config.paths.indicators, "indicator table");
        auto loaded = clust::IndicatorTable::load(iin, registry);
        if (loaded.report.rows_rejected() > 0)
            result.warnings.push_back("indicators: " + std::to_string(loaded.report.rows_rejected()) +
                                      " rows rejected");
        indicator_means = loaded.table.averaged(configured_period(config));
    }

    clust::FeatureOptions feature_options;
    feature_options.indicator_weight = config.clustering.indicator_weight;
    feature_options.indicator_span = configured_period(config);

    std::string assignment_rows;
    ordered_json details;
    for (const auto& industry : registry.industries) {
        std::vector<clust::MarginalProductFeature> features;
        for (const auto& country : registry.countries) {
            const auto* output = flow_of.at({country, industry, ""});
            for (const auto& input : registry.industries) {
                const auto* inflow = flow_of.at({country, industry, input});
                features.push_back(clust::median_log_mp(clust::marginal_product_series(*inflow, *output)));
                features.back().country = country;
                features.back().industry = industry;
                features.back().input_industry = input;
            }
        }
        const auto matrix = clust::build_feature_matrix(features, indicator_means, feature_options);
        if (!matrix.dropped_columns.empty())
            result.warnings.push_back(industry + ": " + std::to_string(matrix.dropped_columns.size()) +
                                      " feature columns dropped");

        clust::KmeansOptions options;
        options.k = config.clustering.k;
        options.min_size = config.clustering.min_size;
        options.max_size = config.clustering.max_size;
        options.restarts = config.clustering.restarts;
        options.seed = derive_seed(config.seed, "cluster", industry);
        auto assignment = clust::constrained_kmeans(matrix, options);
        assignment.industry = industry;
        if (!assignment.converged) result.warnings.push_back(industry + ": clustering hit the iteration cap");

        for (const auto& [country, label] : assignment.labels)
            assignment_rows += industry + "," + country + "," + std::to_string(label) + "\n";
        details[industry] = nlohmann::json::parse(clust::assignment_sidecar_json(assignment, options, matrix));
    }

    const auto dir = prepare_stage_dir(config, Stage::cluster);
    write_text_file(dir / "assignments.csv", "industry,country,cluster\n" + assignment_rows);
    write_text_file(dir / "details.json", details.dump(2) + "\n");
    write_stage_sidecar(dir, Stage::cluster, config, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Stage: synergy
// ---------------------------------------------------------------------------

namespace {

struct SynergyTask {
    std::string industry;
    int cluster = 0;
    std::string input_i;
    std::string input_j;
    const std::vector<std::string>* members = nullptr;
};

struct SynergyOutcome {
    std::size_t rows = 0;
    bool below_minimum = false;
    pid::PIDResult result;
    std::string status;
};

}  // namespace

StageResult run_synergy(const PipelineConfig& config) {
    validate_stage_inputs(config, Stage::synergy);
    StageResult result;
    const Registry registry = load_registry(config);

    io::FluctuationStore store;
    {
        auto fin = open_input(config.paths.output / "ingest" / "fluctuations.csv", "fluctuation table");
        for (auto& s : read_fluctuation_table(fin)) store.add(std::move(s));
    }
    std::map<std::string, std::map<std::string, int>> assignments;
    {
        auto ain = open_input(config.paths.output / "cluster" / "assignments.csv", "assignment table");
        assignments = read_assignments(ain);
    }

    // industry -> cluster id -> sorted members.
    std::map<std::string, std::map<int, std::vector<std::string>>> members_of;
    for (const auto& [industry, labels] : assignments)
        for (const auto& [country, cluster] : labels) members_of[industry][cluster].push_back(country);

    std::vector<SynergyTask> tasks;
    for (const auto& industry : registry.industries) {
        auto it = members_of.find(industry);
        if (it == members_of.end()) {
            result.warnings.push_back(industry + ": no cluster assignment, skipped");
            continue;
        }
        for (const auto& [cluster, members] : it->second) {
            for (std::size_t a = 0; a < registry.industries.size(); ++a) {
                for (std::size_t b = a + 1; b < registry.industries.size(); ++b) {
                    tasks.push_back(
                        {industry, cluster, registry.industries[a], registry.industries[b], &members});
                }
            }
        }
    }

    std::vector<SynergyOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (std::size_t t = next.fetch_add(1); t < tasks.size(); t = next.fetch_add(1)) {
            try {
                const auto& task = tasks[t];
                auto sample = io::pool_cluster_samples(store, *task.members, task.industry,
                                                      {task.input_i, task.input_j}, config.synergy.min_sample);
                auto& out = outcomes[t];
                out.rows = sample.rows();
                out.below_minimum = sample.below_minimum;
                if (sample.rows() < 2) {
                    out.status = "insufficient";
                    continue;
                }
                const auto key = task.industry + "|" + std::to_string(task.cluster) + "|" + task.input_i + "|" +
                                 task.input_j;
                try {
                    out.result = pid::synergy_score(sample, config.synergy.shuffles,
                                                    derive_seed(config.seed, "synergy", key));
                    out.status = "ok";
                } catch (const DegenerateInputError&) {
                    out.status = "degenerate";
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    unsigned thread_count = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                               : std::max(1u, std::thread::hardware_concurrency());
    thread_count = std::min<unsigned>(thread_count, std::max<std::size_t>(tasks.size(), 1));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < thread_count; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::size_t ok_count = 0, insufficient = 0, degenerate = 0, below = 0;
    std::string body;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        const auto& out = outcomes[t];
        if (out.status == "ok") ++ok_count;
        if (out.status == "insufficient") ++insufficient;
        if (out.status == "degenerate") ++degenerate;
        if (out.below_minimum) ++below;
        body += task.industry + "," + std::to_string(task.cluster) + "," + task.input_i + "," + task.input_j + "," +
                std::to_string(out.rows) + "," + (out.below_minimum ? "1" : "0");
        for (double v : pid::pid_field_values(out.result)) body += "," + format_double(v);
        body += "," + std::to_string(out.result.surrogates_used) + "," + out.status + "\n";
    }
    if (insufficient > 0) result.warnings.push_back(std::to_string(insufficient) + " pairs had too few pooled rows");
    if (degenerate > 0) result.warnings.push_back(std::to_string(degenerate) + " pairs were degenerate");
    if (below > 0) result.warnings.push_back(std::to_string(below) + " pooled samples below the minimum size");

    const auto dir = prepare_stage_dir(config, Stage::synergy);
    write_text_file(dir / "scores.csv", score_table_header() + "\n" + body);
    ordered_json report;
    report["tasks"] = tasks.size();
    report["ok"] = ok_count;
    report["insufficient"] = insufficient;
    report["degenerate"] = degenerate;
    report["below_minimum"] = below;
    write_text_file(dir / "report.json", report.dump(2) + "\n");
    write_stage_sidecar(dir, Stage::synergy, config, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Stage: network
// ---------------------------------------------------------------------------

StageResult run_network(const PipelineConfig& config) {
    validate_stage_inputs(config, Stage::network);
    StageResult result;
    const Registry registry = load_registry(config);

    std::vector<ScoreRow> scores;
    {
        auto sin = open_input(config.paths.output / "synergy" / "scores.csv", "score table");
        scores = read_score_table(sin);
    }
    std::map<std::pair<std::string, int>, std::map<std::pair<std::string, std::string>, pid::PIDResult>> grouped;
    for (const auto& row : scores) {
        if (!row.ok()) continue;
        grouped[{row.industry, row.cluster}][{row.input_i, row.input_j}] = row.result;
    }
    if (grouped.empty()) throw ValidationError("network: no usable synergy scores");

    const auto dir = prepare_stage_dir(config, Stage::network);
    ordered_json summary = ordered_json::array();
    std::vector<net::MixingProbabilities> empirical;
    std::vector<net::MixingProbabilities> null_probs;
    const bool have_sectors = !registry.sector_of.empty();
    std::size_t empty_backbones = 0, zero_networks = 0;

    for (const auto& [key, pair_scores] : grouped) {
        const auto& [industry, cluster] = key;
        net::BuildReport build_report;
        auto network =
            net::build_synergy_network(pair_scores, registry.industries, industry, cluster, &build_report);
        const std::string base = sanitize_code(industry) + "_c" + std::to_string(cluster);
        write_text_file(dir / (base + "_edges.csv"), net::network_to_edge_list(network));

        ordered_json entry;
        entry["industry"] = industry;
        entry["cluster"] = cluster;
        entry["missing_pairs"] = build_report.missing_pairs;

        if (network.weights.maxCoeff() <= 0.0) {
            ++zero_networks;
            entry["status"] = "all_zero";
            summary.push_back(std::move(entry));
            continue;
        }
        auto backbone = net::extract_backbone(network, config.network.backbone);
        const auto stats = net::compute_stats(network, backbone, config.network.distribution);
        write_text_file(dir / (base + "_backbone.csv"), net::backbone_to_edge_list(backbone));
        write_text_file(dir / (base + "_stats.csv"), net::stats_to_delimited(stats));

        ordered_json header = nlohmann::json::parse(net::network_header_json(industry, cluster, registry.industries));
        header.update(nlohmann::json::parse(net::stats_header_json(stats)));
        header["backbone_edges"] = backbone.edge_count();
        write_text_file(dir / (base + "_header.json"), header.dump(2) + "\n");

        entry["status"] = "ok";
        entry["backbone_edges"] = backbone.edge_count();
        entry["spectral_radius"] = stats.spectral_radius;
        entry["network_variance_defined"] = stats.variance_defined;
        if (stats.backbone_empty) ++empty_backbones;

        if (have_sectors && backbone.edge_count() > 0) {
            auto mixing = net::sector_mixing(backbone, registry.sector_of);
            if (mixing.defined) empirical.push_back(std::move(mixing));
            const auto ensemble = net::null_ensemble(backbone, config.network.null_samples,
                                                     derive_seed(config.seed, "null", sanitize_code(industry) + "|" +
                                                                                          std::to_string(cluster)));
            entry["swap_limited"] = ensemble.empty() ? false : ensemble.front().swap_limited;
            for (const auto& sample : ensemble) {
                auto sample_mixing = net::sector_mixing(sample, registry.sector_of);
                if (sample_mixing.defined) null_probs.push_back(std::move(sample_mixing));
            }
        }
        summary.push_back(std::move(entry));
    }

    if (zero_networks > 0) result.warnings.push_back(std::to_string(zero_networks) + " all-zero networks (no backbone)");
    if (empty_backbones > 0)
        result.warnings.push_back(std::to_string(empty_backbones) + " backbones kept no edges at the filter level");
    if (!have_sectors) result.warnings.push_back("no sector map configured; mixing tests skipped");

    if (have_sectors && empirical.size() >= 2 && null_probs.size() >= 2) {
        const auto mixing = net::mixing_ttest(empirical, null_probs);
        write_text_file(dir / "mixing.csv", net::mixing_summary_to_delimited(mixing));
    } else if (have_sectors) {
        result.warnings.push_back("too few nonempty backbones for mixing tests");
    }

    ordered_json doc;
    doc["networks"] = std::move(summary);
    doc["empirical_mixing_networks"] = empirical.size();
    doc["null_mixing_samples"] = null_probs.size();
    write_text_file(dir / "summary.json", doc.dump(2) + "\n");
    write_stage_sidecar(dir, Stage::network, config, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Stage: complexity
// ---------------------------------------------------------------------------

namespace {

/// Drops the duplicated header of subsequent score tables so the bodies
/// concatenate into one file.
void append_score_body(std::string& target, const std::string& table) {
    const auto pos = table.find('\n');
    if (target.empty())
        target = table;
    else if (pos != std::string::npos)
        target += table.substr(pos + 1);
}

}  // namespace

StageResult run_complexity(const PipelineConfig& config) {
    validate_stage_inputs(config, Stage::complexity);
    StageResult result;
    const Registry registry = load_registry(config);

    cx::ProductMapping mapping;
    {
        auto min = open_input(config.paths.product_mapping, "product mapping");
        mapping = cx::load_product_mapping(min, registry);
    }
    cx::TradeParseResult trade;
    {
        auto tin = open_input(config.paths.trade, "trade file");
        trade = cx::parse_trade_rows(tin, registry, configured_period(config));
    }
    if (trade.report.rows_rejected() > 0)
        result.warnings.push_back("trade: " + std::to_string(trade.report.rows_rejected()) + " rows rejected");

    cx::AggregateReport aggregate_report;
    const auto exports = cx::aggregate_exports(trade.rows, mapping, registry, &aggregate_report);
    if (aggregate_report.unmapped_rows > 0)
        result.warnings.push_back("trade: " + std::to_string(aggregate_report.unmapped_rows) +
                                  " rows with unmapped products");
    if (exports.empty()) throw ValidationError("complexity: no export data in the configured period");

    std::vector<cx::ComplexityScores> per_year;
    ordered_json year_diag;
    for (const auto& matrix : exports) {
        const std::string label = std::to_string(matrix.year);
        ordered_json diag;
        cx::RcaReport rca_report;
        cx::RcaMatrix rca;
        try {
            rca = cx::rca_binarize(matrix, config.complexity.rca_threshold, &rca_report);
        } catch (const ValidationError& err) {
            diag["status"] = "skipped";
            diag["reason"] = err.what();
            year_diag[label] = std::move(diag);
            result.warnings.push_back(label + ": no comparative-advantage matrix (" + err.what() + ")");
            continue;
        }
        diag["dropped_countries"] = rca_report.dropped_countries;
        diag["dropped_industries"] = rca_report.dropped_industries;

        auto scores = cx::fitness_complexity(rca, config.complexity.fc);
        diag["fc_converged"] = scores.fc_converged;
        diag["fc_iterations"] = scores.fc_iterations;
        diag["fc_residual"] = scores.fc_residual;
        if (!scores.fc_converged)
            result.warnings.push_back(label + ": fitness-complexity stopped before the tolerance");
        try {
            auto eci = cx::eci_pci(rca);
            scores.eci_style = std::move(eci.eci_style);
            diag["eci"] = "ok";
        } catch (const Error& err) {
            diag["eci"] = err.what();
            result.warnings.push_back(label + ": industry eigen scores unavailable (" + std::string(err.what()) + ")");
        }
        diag["status"] = "ok";
        year_diag[label] = std::move(diag);
        per_year.push_back(std::move(scores));
    }
    if (per_year.empty()) throw ValidationError("complexity: every year was degenerate");

    cx::AverageReport average_report;
    const auto averaged = cx::intertemporal_average(per_year, &average_report);
    if (!average_report.excluded_industries.empty())
        result.warnings.push_back(std::to_string(average_report.excluded_industries.size()) +
                                  " industries excluded from the inter-temporal average");

    std::string scores_csv;
    for (const auto& scores : per_year) append_score_body(scores_csv, cx::scores_to_delimited(scores));
    append_score_body(scores_csv, cx::scores_to_delimited(averaged));

    const auto dir = prepare_stage_dir(config, Stage::complexity);
    write_text_file(dir / "scores.csv", scores_csv);
    ordered_json doc;
    doc["trade"] = report_to_json(trade.report);
    doc["unmapped_products"] = std::vector<std::string>(aggregate_report.unmapped_products.begin(),
                                                        aggregate_report.unmapped_products.end());
    doc["years"] = std::move(year_diag);
    doc["average"] = nlohmann::json::parse(cx::scores_diagnostics_json(averaged));
    doc["average"]["excluded_countries"] = average_report.excluded_countries;
    doc["average"]["excluded_industries"] = average_report.excluded_industries;
    write_text_file(dir / "diagnostics.json", doc.dump(2) + "\n");
    write_stage_sidecar(dir, Stage::complexity, config, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Stage: regress
// ---------------------------------------------------------------------------

namespace {

/// Averaged industry scores out of the complexity stage output.
std::map<std::string, double> read_averaged_index(std::istream& in, const std::string& index_name) {
    std::string line;
    if (!std::getline(in, line)) throw IngestError("complexity scores: empty input");
    if (split_delimited(line, ',') != std::vector<std::string>{"year", "level", "code", "index", "value"})
        throw IngestError("complexity scores: unexpected header");
    std::map<std::string, double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_delimited(line, ',');
        if (cells.size() != 5) throw IngestError("complexity scores: field count");
        if (cells[0] != "averaged" || cells[1] != "industry" || cells[3] != index_name) continue;
        bool ok = false;
        const double v = parse_double(cells[4], &ok);
        if (!ok) throw IngestError("complexity scores: bad value");
        out[cells[2]] = v;
    }
    return out;
}

reg::ObservationTable filter_rows(const reg::ObservationTable& table, const std::vector<std::size_t>& keep) {
    reg::ObservationTable out;
    out.rows = keep.size();
    out.columns = table.columns;
    for (const auto& [name, cells] : table.text) {
        auto& target = out.text[name];
        target.reserve(keep.size());
        for (std::size_t r : keep) target.push_back(cells[r]);
    }
    for (const auto& [name, cells] : table.numeric) {
        auto& target = out.numeric[name];
        target.reserve(keep.size());
        for (std::size_t r : keep) target.push_back(cells[r]);
    }
    return out;
}

}  // namespace

StageResult run_regress(const PipelineConfig& config) {
    validate_stage_inputs(config, Stage::regress);
    StageResult result;
    const Registry registry = load_registry(config);

    std::vector<ScoreRow> scores;
    {
        auto sin = open_input(config.paths.output / "synergy" / "scores.csv", "score table");
        scores = read_score_table(sin);
    }
    std::map<std::string, std::map<std::string, int>> assignments;
    {
        auto ain = open_input(config.paths.output / "cluster" / "assignments.csv", "assignment table");
        assignments = read_assignments(ain);
    }
    std::map<std::string, double> efi_q, eci;
    {
        auto cin1 = open_input(config.paths.output / "complexity" / "scores.csv", "complexity scores");
        efi_q = read_averaged_index(cin1, "efi_q");
        auto cin2 = open_input(config.paths.output / "complexity" / "scores.csv", "complexity scores");
        eci = read_averaged_index(cin2, "eci");
    }

    // Mean output level per (country, industry), for the log output control.
    std::map<std::pair<std::string, std::string>, double> mean_output;
    {
        auto fin = open_input(config.paths.output / "ingest" / "flows.csv", "flow table");
        for (const auto& s : read_flow_table(fin)) {
            if (s.input_industry.has_value() || s.values.empty()) continue;
            double sum = 0.0;
            for (double v : s.values) sum += v;
            mean_output[{s.country, s.industry}] = sum / static_cast<double>(s.values.size());
        }
    }

    std::map<std::string, double> log_gdp_pc, energy_ratio;
    if (!config.paths.indicators.empty()) {
        auto iin = open_input(config.paths.indicators, "indicator table");
        auto loaded = clust::IndicatorTable::load(iin, registry);
        auto means = loaded.table.averaged(configured_period(config));
        if (auto it = means.find("gni_pc"); it != means.end()) {
            for (const auto& [country, v] : it->second)
                if (v > 0.0) log_gdp_pc[country] = std::log(v);
        }
        if (auto it = means.find("energy_ratio"); it != means.end()) energy_ratio = it->second;
    }

    const auto sectors = [&] {
        std::vector<std::string> names;
        for (const auto& [industry, sector] : registry.sector_of) {
            (void)industry;
            if (std::find(names.begin(), names.end(), sector) == names.end()) names.push_back(sector);
        }
        std::sort(names.begin(), names.end());
        return names;
    }();
    std::vector<std::string> dummy_columns;  // first sector is the baseline
    for (std::size_t s = 1; s < sectors.size(); ++s) dummy_columns.push_back("sec_" + sectors[s]);

    // One observation per (country, industry, input pair): technologies are
    // estimated per cluster and expanded to the cluster's member countries.
    struct Observation {
        std::string country, industry, input_i, input_j;
        int cluster = 0;
        double synergy = 0.0;
    };
    std::vector<Observation> observations;
    std::size_t no_assignment = 0;
    for (const auto& row : scores) {
        if (!row.ok()) continue;
        auto ind_it = assignments.find(row.industry);
        if (ind_it == assignments.end()) {
            ++no_assignment;
            continue;
        }
        for (const auto& [country, cluster] : ind_it->second) {
            if (cluster != row.cluster) continue;
            observations.push_back({country, row.industry, row.input_i, row.input_j, row.cluster,
                                    row.result.synergy_corrected});
        }
    }
    if (no_assignment > 0) result.warnings.push_back(std::to_string(no_assignment) + " scores had no cluster assignment");
    if (observations.empty()) throw ValidationError("regress: no usable observations");
    result.warnings.push_back("observations keyed by (country, industry, input pair); cluster technologies expanded "
                              "to member countries");

    std::vector<double> synergy_column;
    synergy_column.reserve(observations.size());
    for (const auto& obs : observations) synergy_column.push_back(obs.synergy);
    const auto logged = reg::log_synergy(synergy_column, config.regression.floor_value);
    if (logged.floored > 0)
        result.warnings.push_back(std::to_string(logged.floored) + " synergy values floored before the log transform");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    reg::ObservationTable table;
    auto add_text = [&](const std::string& name) -> std::vector<std::string>& {
        table.columns.push_back(name);
        return table.text[name];
    };
    auto add_numeric = [&](const std::string& name) -> std::vector<double>& {
        table.columns.push_back(name);
        table.text[name] = {};
        return table.numeric[name];
    };
    auto& col_country = add_text("country");
    auto& col_industry = add_text("industry");
    auto& col_cluster = add_text("cluster");
    auto& col_input_i = add_text("input_i");
    auto& col_input_j = add_text("input_j");
    auto& col_synergy = add_numeric("synergy");
    auto& col_log_synergy = add_numeric("log_synergy");
    auto& col_efi = add_numeric("efi_q");
    auto& col_eci = add_numeric("eci");
    std::vector<double>* col_gdp = log_gdp_pc.empty() ? nullptr : &add_numeric("log_gdp_pc");
    std::vector<std::vector<double>*> col_dummies;
    if (!registry.sector_of.empty())
        for (const auto& name : dummy_columns) col_dummies.push_back(&add_numeric(name));
    auto& col_output = add_numeric("log_total_output");
    std::vector<double>* col_energy = energy_ratio.empty() ? nullptr : &add_numeric("energy_ratio");

    std::size_t missing_dependent = 0;
    for (std::size_t r = 0; r < observations.size(); ++r) {
        const auto& obs = observations[r];
        col_country.push_back(obs.country);
        col_industry.push_back(obs.industry);
        col_cluster.push_back(std::to_string(obs.cluster));
        col_input_i.push_back(obs.input_i);
        col_input_j.push_back(obs.input_j);
        col_synergy.push_back(obs.synergy);
        col_log_synergy.push_back(logged.values[r]);
        if (auto it = efi_q.find(obs.industry); it != efi_q.end()) {
            col_efi.push_back(it->second);
        } else {
            col_efi.push_back(nan);
            ++missing_dependent;
        }
        if (auto it = eci.find(obs.industry); it != eci.end())
            col_eci.push_back(it->second);
        else
            col_eci.push_back(nan);
        if (col_gdp != nullptr) {
            auto it = log_gdp_pc.find(obs.country);
            col_gdp->push_back(it != log_gdp_pc.end() ? it->second : nan);
        }
        if (!col_dummies.empty()) {
            const auto sec_it = registry.sector_of.find(obs.industry);
            for (std::size_t d = 0; d < col_dummies.size(); ++d) {
                const bool match = sec_it != registry.sector_of.end() && "sec_" + sec_it->second == dummy_columns[d];
                col_dummies[d]->push_back(sec_it == registry.sector_of.end() ? nan : (match ? 1.0 : 0.0));
            }
        }
        if (auto it = mean_output.find({obs.country, obs.industry}); it != mean_output.end() && it->second > 0.0)
            col_output.push_back(std::log(it->second));
        else
            col_output.push_back(nan);
        if (col_energy != nullptr) {
            auto it = energy_ratio.find(obs.country);
            col_energy->push_back(it != energy_ratio.end() ? it->second : nan);
        }
    }
    table.rows = observations.size();
    for (const auto& name : table.columns) {
        if (!table.numeric.count(name)) continue;
        auto& text = table.text[name];
        text.reserve(table.rows);
        for (double v : table.numeric[name]) text.push_back(std::isfinite(v) ? format_double(v) : "");
    }
    if (missing_dependent > 0)
        result.warnings.push_back(std::to_string(missing_dependent) + " observations lack an averaged industry score");

    auto models = config.regression.models.empty() ? default_model_family() : config.regression.models;
    std::vector<std::string> model_names;
    std::vector<reg::RegressionResult> fitted;
    reg::ObservationTable model1_table;
    bool have_model1 = false;
    for (const auto& model : models) {
        std::vector<std::string> regressors;
        bool usable = true;
        for (const auto& name : model.regressors) {
            if (name == "@sector_dummies") {
                if (dummy_columns.empty() || registry.sector_of.empty()) {
                    result.warnings.push_back(model.name + " skipped: no sector dummy columns");
                    usable = false;
                    break;
                }
                for (const auto& d : dummy_columns) regressors.push_back(d);
            } else if (!table.has_numeric(name)) {
                result.warnings.push_back(model.name + " skipped: missing column " + name);
                usable = false;
                break;
            } else {
                regressors.push_back(name);
            }
        }
        if (!usable) continue;
        if (!table.has_numeric(config.regression.dependent)) {
            result.warnings.push_back(model.name + " skipped: missing dependent " + config.regression.dependent);
            continue;
        }

        std::vector<std::size_t> keep;
        for (std::size_t r = 0; r < table.rows; ++r) {
            bool complete = std::isfinite(table.numeric.at(config.regression.dependent)[r]);
            for (const auto& name : regressors) complete = complete && std::isfinite(table.numeric.at(name)[r]);
            if (complete) keep.push_back(r);
        }
        if (keep.size() <= regressors.size() + 2) {
            result.warnings.push_back(model.name + " skipped: only " + std::to_string(keep.size()) +
                                      " complete observations");
            continue;
        }
        auto subset = filter_rows(table, keep);
        reg::RegressionSpec spec;
        spec.dependent = config.regression.dependent;
        spec.regressors = regressors;
        spec.cluster_column = config.regression.cluster_column;
        try {
            fitted.push_back(reg::ols_cluster(subset, spec));
            model_names.push_back(model.name);
            if (!have_model1) {
                model1_table = std::move(subset);
                have_model1 = true;
            }
        } catch (const Error& err) {
            result.warnings.push_back(model.name + " skipped: " + err.what());
        }
    }

    const auto dir = prepare_stage_dir(config, Stage::regress);
    {
        std::string obs_csv;
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            obs_csv += (c > 0 ? "," : "") + table.columns[c];
        obs_csv += "\n";
        for (std::size_t r = 0; r < table.rows; ++r) {
            for (std::size_t c = 0; c < table.columns.size(); ++c) {
                if (c > 0) obs_csv += ",";
                obs_csv += table.text.at(table.columns[c])[r];
            }
            obs_csv += "\n";
        }
        write_text_file(dir / "observations.csv", obs_csv);
    }
    write_text_file(dir / "table.csv", reg::regression_table_to_delimited(model_names, fitted));
    write_text_file(dir / "models.json", reg::regression_results_to_json(model_names, fitted));
    if (fitted.empty()) result.warnings.push_back("no regression model could be estimated");

    if (have_model1) {
        const auto& xs = model1_table.numeric.at("log_synergy");
        const auto& ys = model1_table.numeric.at(config.regression.dependent);
        const int bins = std::min<int>(config.regression.bins, static_cast<int>(xs.size()));
        try {
            if (bins >= 2) {
                if (bins < config.regression.bins)
                    result.warnings.push_back("binned scatter reduced to " + std::to_string(bins) + " bins");
                write_text_file(dir / "scatter_model_1.csv",
                                reg::binned_scatter_to_delimited(reg::binned_scatter(xs, ys, bins)));
            } else {
                result.warnings.push_back("too few observations for a binned scatter");
            }
        } catch (const DegenerateInputError& err) {
            result.warnings.push_back(std::string("binned scatter skipped: ") + err.what());
        }
    }
    write_stage_sidecar(dir, Stage::regress, config, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

StageResult run_stage(const PipelineConfig& config, Stage stage) {
    switch (stage) {
        case Stage::ingest: return run_ingest(config);
        case Stage::cluster: return run_cluster(config);
        case Stage::synergy: return run_synergy(config);
        case Stage::network: return run_network(config);
        case Stage::complexity: return run_complexity(config);
        case Stage::regress: return run_regress(config);
    }
    throw ValidationError("unknown stage");
}

void run_pipeline(const PipelineConfig& config, const StageCallback& on_stage) {
    validate_stage_inputs(config, Stage::ingest);
    validate_stage_inputs(config, Stage::complexity);
    std::filesystem::create_directories(config.paths.output);

    const Stage order[] = {Stage::ingest,     Stage::cluster,    Stage::synergy,
                           Stage::network,    Stage::complexity, Stage::regress};
    ordered_json warnings;
    ordered_json timings;
    double total = 0.0;
    for (Stage stage : order) {
        const auto start = std::chrono::steady_clock::now();
        StageResult stage_result;
        try {
            stage_result = run_stage(config, stage);
        } catch (const Error& err) {
            throw Error("stage " + std::string(stage_name(stage)) + " failed: " + err.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        warnings[stage_name(stage)] = stage_result.warnings;
        timings[stage_name(stage)] = seconds;
        total += seconds;
        if (on_stage) on_stage(stage, stage_result, seconds);
    }

    ordered_json manifest;
    manifest["tool"] = "synio";
    manifest["version"] = kToolVersion;
    manifest["command"] = "pipeline";
    manifest["config"] = config_echo(config);
    ordered_json inputs;
    const std::pair<const char*, const std::filesystem::path*> files[] = {
        {"transactions", &config.paths.transactions}, {"final_demand", &config.paths.final_demand},
        {"countries", &config.paths.countries},       {"industries", &config.paths.industries},
        {"sectors", &config.paths.sectors},           {"indicators", &config.paths.indicators},
        {"trade", &config.paths.trade},               {"product_mapping", &config.paths.product_mapping},
    };
    for (const auto& [label, path] : files) {
        if (path->empty() || !std::filesystem::exists(*path)) continue;
        inputs[label] = {{"path", path->string()}, {"fnv1a64", hex64(fnv1a64_file(*path))}};
    }
    manifest["inputs"] = std::move(inputs);
    manifest["warnings"] = std::move(warnings);
    write_text_file(config.paths.output / "manifest.json", manifest.dump(2) + "\n");

    ordered_json timing_doc;
    timing_doc["stages"] = std::move(timings);
    timing_doc["total"] = total;
    write_text_file(config.paths.output / "timings.json", timing_doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Synthetic world generator
// ---------------------------------------------------------------------------

namespace {

std::string zero_padded(int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", std::min(width, 9), value);
    return buf;
}

}  // namespace

void generate_world(const WorldSpec& spec) {
    if (spec.countries < 2) throw ValidationError("world: need at least 2 countries");
    if (spec.industries < 2) throw ValidationError("world: need at least 2 industries");
    if (spec.years < 3) throw ValidationError("world: need at least 3 years");
    if (spec.tiers < 1 || spec.tiers > spec.countries) throw ValidationError("world: invalid tier count");
    if (!(spec.tau > 0.0)) throw ValidationError("world: tau must be positive");
    if (spec.output.empty()) throw ValidationError("world: output directory required");
    std::filesystem::create_directories(spec.output);

    const int nc = spec.countries;
    const int np = spec.industries;
    const int ny = spec.years;
    const int width = std::max(2, static_cast<int>(std::to_string(nc - 1).size()));
    auto country_code = [&](int c) { return "C" + zero_padded(c, width); };
    auto industry_code = [&](int p) { return "I" + std::to_string(p); };
    auto product_code = [&](int p) { return "P" + std::to_string(p); };
    auto tier_of = [&](int c) { return c * spec.tiers / nc; };
    auto requirement_of = [&](int p) { return p * spec.tiers / np; };
    auto synergistic = [&](int p) { return 2 * requirement_of(p) >= spec.tiers; };
    static const char* kSectors[] = {"primary", "secondary", "tertiary", "other"};

    {
        std::string countries = "country\n";
        for (int c = 0; c < nc; ++c) countries += country_code(c) + "\n";
        write_text_file(spec.output / "countries.csv", countries);
        std::string industries = "industry\n";
        for (int p = 0; p < np; ++p) industries += industry_code(p) + "\n";
        write_text_file(spec.output / "industries.csv", industries);
        std::string sectors = "industry,sector\n";
        for (int p = 0; p < np; ++p)
            sectors += industry_code(p) + "," + kSectors[std::min(requirement_of(p), 3)] + "\n";
        write_text_file(spec.output / "sectors.csv", sectors);
        std::string mapping = "product,industry\n";
        for (int p = 0; p < np; ++p) mapping += product_code(p) + "," + industry_code(p) + "\n";
        write_text_file(spec.output / "product_map.csv", mapping);
        std::string planted = "industry,requirement,synergistic\n";
        for (int p = 0; p < np; ++p)
            planted += industry_code(p) + "," + std::to_string(requirement_of(p)) + "," +
                       (synergistic(p) ? "1" : "0") + "\n";
        write_text_file(spec.output / "planted.csv", planted);
    }

    // Production: flows evolve multiplicatively with N(0, tau^2) input
    // log-fluctuations. Synergistic industries couple the output fluctuation
    // to the sum of all input fluctuations (information about the output
    // requires joint knowledge of inputs); redundant industries follow a
    // single main input. Final demand absorbs the slack so total output
    // tracks the planted fluctuation series exactly.
    std::ostringstream transactions;
    transactions << "year,source_country,source_industry,dest_country,dest_industry,value\n";
    std::ostringstream final_demand;
    final_demand << "year,source_country,source_industry,demand_country,value\n";

    for (int c = 0; c < nc; ++c) {
        const std::string cc = country_code(c);
        Rng size_rng(derive_seed(spec.seed, "country-scale", cc));
        const double scale = std::pow(4.0, tier_of(c)) * std::exp(0.2 * size_rng.next_normal());

        // sales[g][t]: intermediate sales of industry g at this country.
        std::vector<std::vector<double>> sales(np, std::vector<double>(ny, 0.0));
        std::vector<std::vector<double>> output(np, std::vector<double>(ny, 0.0));

        for (int j = 0; j < np; ++j) {
            Rng tech(derive_seed(spec.seed, "technology", cc + ":" + industry_code(j)));
            std::vector<double> level(np);
            for (int i = 0; i < np; ++i) level[i] = scale * std::exp(0.5 * tech.next_normal());
            double y_level = 0.0;
            for (int i = 0; i < np; ++i) y_level += level[i];
            y_level *= 50.0;

            for (int t = 0; t < ny; ++t) {
                if (t > 0) {
                    double y_shock;
                    if (synergistic(j)) {
                        y_shock = 0.25 * spec.tau * tech.next_normal();
                    } else {
                        y_shock = 0.5 * spec.tau * tech.next_normal();
                    }
                    for (int i = 0; i < np; ++i) {
                        const double x_shock = spec.tau * tech.next_normal();
                        level[i] *= std::exp(x_shock);
                        if (synergistic(j))
                            y_shock += x_shock;
                        else if (i == 0)
                            y_shock += x_shock;
                    }
                    y_level *= std::exp(y_shock);
                }
                const int year = spec.first_year + t;
                for (int i = 0; i < np; ++i) {
                    transactions << year << ',' << cc << ',' << industry_code(i) << ',' << cc << ','
                                 << industry_code(j) << ',' << format_double(level[i]) << '\n';
                    sales[i][t] += level[i];
                }
                output[j][t] = y_level;
            }
        }
        for (int g = 0; g < np; ++g) {
            for (int t = 0; t < ny; ++t) {
                double demand_value = output[g][t] - sales[g][t];
                if (demand_value <= 0.0) demand_value = 0.01 * output[g][t];
                final_demand << spec.first_year + t << ',' << cc << ',' << industry_code(g) << ',' << cc << ','
                             << format_double(demand_value) << '\n';
            }
        }
    }
    write_text_file(spec.output / "transactions.csv", transactions.str());
    write_text_file(spec.output / "final_demand.csv", final_demand.str());

    // Development indicators: tier-separated levels with mild noise.
    {
        std::ostringstream indicators;
        indicators << "country,year,indicator,value\n";
        for (int c = 0; c < nc; ++c) {
            const std::string cc = country_code(c);
            Rng rng(derive_seed(spec.seed, "indicators", cc));
            const double tier = tier_of(c);
            for (int t = 0; t < ny; ++t) {
                const int year = spec.first_year + t;
                indicators << cc << ',' << year << ",gni_pc,"
                           << format_double(1000.0 * std::pow(4.0, tier) * std::exp(0.1 * rng.next_normal())) << '\n';
                indicators << cc << ',' << year << ",labor_efficiency,"
                           << format_double((1.0 + tier) * std::exp(0.1 * rng.next_normal())) << '\n';
                indicators << cc << ',' << year << ",infrastructure,"
                           << format_double((1.0 + tier) * std::exp(0.1 * rng.next_normal())) << '\n';
                indicators << cc << ',' << year << ",energy_ratio,"
                           << format_double(0.1 * std::exp(0.2 * rng.next_normal())) << '\n';
            }
        }
        write_text_file(spec.output / "indicators.csv", indicators.str());
    }

    // Exports nested by development: a country exports an industry
    // competitively only when its tier reaches the industry's requirement.
    {
        std::ostringstream trade;
        trade << "year,exporter,product,value\n";
        for (int c = 0; c < nc; ++c) {
            const std::string cc = country_code(c);
            Rng rng(derive_seed(spec.seed, "trade", cc));
            for (int t = 0; t < ny; ++t) {
                const int year = spec.first_year + t;
                for (int p = 0; p < np; ++p) {
                    const double base = tier_of(c) >= requirement_of(p) ? 1.0 : 0.02;
                    trade << year << ',' << cc << ',' << product_code(p) << ','
                          << format_double(base * 1e6 * std::exp(0.3 * rng.next_normal())) << '\n';
                }
            }
        }
        write_text_file(spec.output / "trade.csv", trade.str());
    }

    ordered_json config;
    config["paths"] = {{"transactions", "transactions.csv"},
                       {"final_demand", "final_demand.csv"},
                       {"countries", "countries.csv"},
                       {"industries", "industries.csv"},
                       {"sectors", "sectors.csv"},
                       {"indicators", "indicators.csv"},
                       {"trade", "trade.csv"},
                       {"product_mapping", "product_map.csv"},
                       {"output", "out"}};
    config["period"] = {{"first_year", spec.first_year}, {"last_year", spec.first_year + ny - 1}};
    config["clustering"] = {{"k", std::max(2, std::min(spec.tiers, nc / 2))}};
    config["seed"] = spec.seed;
    write_text_file(spec.output / "config.json", config.dump(2) + "\n");
}

}  // namespace pipe
