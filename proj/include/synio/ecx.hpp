#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synio/common.hpp"
#include "synio/iotensor.hpp"

namespace synio::cx {

/// Country-by-industry export values for one year, products already
/// aggregated to industries. Nonnegative throughout.
struct ExportMatrix {
    int year = 0;
    std::vector<std::string> countries;
    std::vector<std::string> industries;
    Eigen::MatrixXd values;
};

/// Binary comparative-advantage matrix derived from an ExportMatrix.
struct RcaMatrix {
    int year = 0;
    std::vector<std::string> countries;
    std::vector<std::string> industries;
    Eigen::MatrixXi m;
};

/// Per-year (or averaged) complexity indices. Maps are empty for indices the
/// producing operation does not compute.
struct ComplexityScores {
    std::string year_label;                 // "1995", ..., or "averaged"
    std::map<std::string, double> fitness;  // per country, mean 1
    std::map<std::string, double> q_score;  // per industry, mean 1
    std::map<std::string, double> eci_style;  // per industry, mean 0 / variance 1
    bool fc_converged = true;
    int fc_iterations = 0;
    double fc_residual = 0.0;
};

// ---------------------------------------------------------------------------
// Trade ingestion
// ---------------------------------------------------------------------------

struct TradeRow {
    int year = 0;
    std::string country;
    std::string product;
    double value = 0.0;
};

/// Product code -> industry code. Industries are validated against the
/// registry; conflicting duplicate rows are an error.
using ProductMapping = std::map<std::string, std::string>;

ProductMapping load_product_mapping(std::istream& in, const Registry& registry);

struct TradeParseResult {
    std::vector<TradeRow> rows;
    io::ParseReport report;
};

/// Delimited rows (year, exporter, product, value). Unknown exporters and
/// negative values are row-level rejections.
TradeParseResult parse_trade_rows(std::istream& in, const Registry& registry,
                                  const std::optional<io::YearSpan>& period = std::nullopt);

struct AggregateReport {
    std::size_t unmapped_rows = 0;
    std::set<std::string> unmapped_products;
};

/// One matrix per year present in the rows (zeros when nothing mapped), over
/// the full registry country/industry grid. Unmapped products are reported,
/// not fatal.
std::vector<ExportMatrix> aggregate_exports(const std::vector<TradeRow>& rows, const ProductMapping& mapping,
                                            const Registry& registry, AggregateReport* report = nullptr);

// ---------------------------------------------------------------------------
// Complexity indices
// ---------------------------------------------------------------------------

struct RcaReport {
    std::vector<std::string> dropped_countries;
    std::vector<std::string> dropped_industries;
};

/// Balassa rule: RCA = (share of industry in country exports) / (share of
/// industry in world exports); M = 1 iff RCA >= threshold. Zero country or
/// industry totals give RCA 0. All-zero rows/columns of M are dropped.
RcaMatrix rca_binarize(const ExportMatrix& exports, double threshold = 1.0, RcaReport* report = nullptr);

struct FcOptions {
    int max_iterations = 1000;
    double tolerance = 1e-10;
};

/// Coupled fitness-complexity recursion from all ones, each vector normalized
/// to mean 1 per iteration; the complexity update uses the same iteration's
/// fitness. Stops when the max relative change drops below tolerance; returns
/// the last iterate with a flag otherwise.
ComplexityScores fitness_complexity(const RcaMatrix& m, const FcOptions& options = {});

/// Industry-side eigen complexity: second eigenvector of the industry
/// transition matrix (computed through its symmetric conjugate), standardized
/// to mean 0 / variance 1, sign anchored to correlate negatively with
/// ubiquity. Degenerate spectra are an error.
ComplexityScores eci_pci(const RcaMatrix& m);

struct AverageReport {
    std::vector<std::string> excluded_countries;
    std::vector<std::string> excluded_industries;
};

/// Arithmetic mean per code over the years that score it, restricted to codes
/// present in every such year (exclusions reported). Convergence flags are
/// conjoined.
ComplexityScores intertemporal_average(const std::vector<ComplexityScores>& per_year,
                                       AverageReport* report = nullptr);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Rows: year,level,code,index,value with level in {country, industry} and
/// index in {fitness, efi_q, eci}.
std::string scores_to_delimited(const ComplexityScores& scores);
std::string scores_diagnostics_json(const ComplexityScores& scores);

}  // namespace synio::cx
