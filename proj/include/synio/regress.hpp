#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "synio/common.hpp"

namespace synio::reg {

// ---------------------------------------------------------------------------
// Observation tables
// ---------------------------------------------------------------------------

/// Rectangular analysis table. Every column keeps its raw text cells; columns
/// whose non-empty cells all parse as numbers additionally get a numeric view
/// (empty cells become NaN there).
struct ObservationTable {
    std::size_t rows = 0;
    std::vector<std::string> columns;  // header order
    std::map<std::string, std::vector<std::string>> text;
    std::map<std::string, std::vector<double>> numeric;

    bool has_column(const std::string& name) const { return text.count(name) > 0; }
    bool has_numeric(const std::string& name) const { return numeric.count(name) > 0; }
};

/// Reads a delimited table with a header line. Ragged rows abort the load.
ObservationTable read_observation_table(std::istream& in);

// ---------------------------------------------------------------------------
// Cluster-robust least squares
// ---------------------------------------------------------------------------

struct RegressionSpec {
    std::string dependent;
    std::vector<std::string> regressors;  // order is the reporting order
    std::string cluster_column;
    bool intercept = true;
};

struct CoefficientResult {
    std::string name;
    double coefficient = 0.0;
    double std_error = 0.0;
    double t_value = 0.0;
    double p_value = 1.0;
    std::string stars;
};

struct RegressionResult {
    std::vector<CoefficientResult> coefficients;  // intercept first when fitted
    double r_squared = 0.0;
    double adjusted_r_squared = 0.0;
    std::size_t observations = 0;
    std::size_t clusters = 0;
};

/// Ordinary least squares with cluster-robust (sandwich) standard errors.
/// The small-sample factor is G/(G-1) * (n-1)/(n-k); with every observation
/// its own cluster this reduces exactly to HC1. Inference uses a t
/// distribution with G-1 degrees of freedom.
///
/// Preconditions: all referenced columns exist and are finite, n > k, at
/// least two distinct clusters, and the design matrix has full column rank
/// (the error names the redundant columns otherwise).
RegressionResult ols_cluster(const ObservationTable& data, const RegressionSpec& spec);

// ---------------------------------------------------------------------------
// Synergy transform
// ---------------------------------------------------------------------------

struct LogSynergyResult {
    std::vector<double> values;
    std::size_t floored = 0;  // inputs at or below the floor
};

/// Natural log of max(value, floor). Non-positive synergies (possible after
/// bias correction) are floored rather than dropped so the estimation sample
/// is unchanged; the count of floored entries is reported.
LogSynergyResult log_synergy(const std::vector<double>& values, double floor_value = 1e-9);

// ---------------------------------------------------------------------------
// Binned scatter
// ---------------------------------------------------------------------------

struct BinnedScatter {
    std::vector<double> edges;  // bins + 1 values spanning the observed x range
    std::vector<double> mean_x;
    std::vector<double> mean_y;
    std::vector<std::size_t> counts;
    // Straight line fitted on the unbinned points, not on the bin means.
    double slope = 0.0;
    double intercept = 0.0;
};

/// Equal-count bins over x (quantile split; ties broken by input order).
/// Requires 2 <= bins <= n and non-constant x.
BinnedScatter binned_scatter(const std::vector<double>& x, const std::vector<double>& y, int bins = 30);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Publication-style table: one row per non-intercept regressor, one column
/// per model, cells "coef stars (se)". Footer rows carry observations,
/// cluster counts and adjusted R^2. Models omitting a regressor leave the
/// cell empty.
std::string regression_table_to_delimited(const std::vector<std::string>& model_names,
                                          const std::vector<RegressionResult>& models);

/// Full-precision dump of every model, intercept included.
std::string regression_results_to_json(const std::vector<std::string>& model_names,
                                       const std::vector<RegressionResult>& models);

std::string binned_scatter_to_delimited(const BinnedScatter& scatter);

}  // namespace synio::reg
