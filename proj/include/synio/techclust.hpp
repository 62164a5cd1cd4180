#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synio/iotensor.hpp"

namespace synio::clust {

/// Year-over-year marginal products dY/dX for one (country, industry, input).
struct MpSeries {
    std::string country;
    std::string industry;
    std::string input_industry;
    int first_year = 0;  // later year of the first pair
    std::vector<double> values;
    std::vector<bool> defined;  // false where the input change is zero

    std::size_t defined_count() const;
};

enum class MpLogTransform {
    symmetric_log1p,  // sgn(m) * ln(1 + |m|): defined for all reals
    plain_log,        // ln(m): feature goes missing when the median is <= 0
};

struct MarginalProductFeature {
    std::string country;
    std::string industry;
    std::string input_industry;
    double mp_median = 0.0;
    double mp_log = 0.0;
    int valid_years = 0;
    bool missing = true;
};

/// MP per consecutive year pair over the aligned span of the two series.
/// Pairs with zero input change are marked undefined.
MpSeries marginal_product_series(const io::FlowSeries& input_flow, const io::FlowSeries& output_flow);

/// Median over defined values plus the log feature. All values undefined
/// yields a missing feature, not an error.
MarginalProductFeature median_log_mp(const MpSeries& series,
                                     MpLogTransform transform = MpLogTransform::symmetric_log1p);

// ---------------------------------------------------------------------------
// Development indicators
// ---------------------------------------------------------------------------

/// Long-format (country, year, indicator, value) records.
class IndicatorTable {
  public:
    struct LoadResult;
    /// Header line: country,year,indicator,value (any order, comma or tab).
    static LoadResult load(std::istream& stream, const Registry& registry);

    void add(const std::string& country, int year, const std::string& indicator, double value);
    std::vector<std::string> indicator_names() const;
    /// Per-indicator country means over the available years, optionally
    /// restricted to a span. Countries with no usable years are absent.
    std::map<std::string, std::map<std::string, double>> averaged(
        std::optional<io::YearSpan> span = std::nullopt) const;

  private:
    // indicator -> country -> year -> value
    std::map<std::string, std::map<std::string, std::map<int, double>>> data_;
};

struct IndicatorTable::LoadResult {
    IndicatorTable table;
    io::ParseReport report;
};

// ---------------------------------------------------------------------------
// Feature matrix
// ---------------------------------------------------------------------------

struct FeatureOptions {
    /// Multiplier applied to standardized indicator columns so the MP columns
    /// stay the leading features.
    double indicator_weight = 0.5;
    std::optional<io::YearSpan> indicator_span;  // averaging window
};

struct FeatureMatrix {
    std::vector<std::string> countries;     // row order (sorted codes)
    std::vector<std::string> feature_names;  // "mp:<input>" then "ind:<name>"
    Eigen::MatrixXd values;                  // standardized, indicator-weighted
    std::vector<std::vector<bool>> imputed;  // true where the column median filled a gap
    std::vector<std::string> dropped_columns;  // all-missing or zero-variance

    int row_of(const std::string& country) const;
};

/// Columns are standardized to mean 0, unit sample variance; missing entries
/// are imputed with the column median (mask recorded); all-missing and
/// constant columns are dropped with a warning entry.
FeatureMatrix build_feature_matrix(const std::vector<MarginalProductFeature>& features,
                                   const std::map<std::string, std::map<std::string, double>>& indicator_means,
                                   const FeatureOptions& options = {});

// ---------------------------------------------------------------------------
// Balanced clustering
// ---------------------------------------------------------------------------

/// Least-cost point-to-cluster assignment under cluster size bounds
/// (min-cost-flow formulation of the k-means assignment step). cost is
/// points-by-clusters; returns one cluster id per point.
std::vector<int> bounded_assignment(const Eigen::MatrixXd& cost, int min_size, int max_size);

struct KmeansOptions {
    int k = 4;
    int min_size = -1;  // -1 derives floor(0.8 * n/k)
    int max_size = -1;  // -1 derives ceil(1.2 * n/k)
    std::uint64_t seed = 0;
    int restarts = 25;
    int max_iterations = 100;
};

struct ClusterAssignment {
    std::string industry;
    int k = 0;
    int min_size = 0;
    int max_size = 0;
    std::map<std::string, int> labels;  // country -> cluster id in [0, k)
    std::vector<int> sizes;
    double objective = 0.0;  // within-cluster sum of squares of the winner
    bool converged = true;
    int iterations = 0;
    std::vector<double> objective_trace;  // winning restart, per accepted iteration

    std::vector<std::string> members(int cluster) const;
};

/// Lloyd iterations with the bounded assignment step; best of
/// options.restarts seeded initializations by objective value. Cluster ids
/// are canonicalized by each cluster's first member in row order.
ClusterAssignment constrained_kmeans(const FeatureMatrix& features, const KmeansOptions& options);

std::string assignment_to_delimited(const ClusterAssignment& assignment);
std::string assignment_sidecar_json(const ClusterAssignment& assignment, const KmeansOptions& options_used,
                                    const FeatureMatrix& features);

}  // namespace synio::clust
