#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace synio::pid {

/// Aligned (X1, X2, Y) observation columns pooled over a country cluster.
/// Produced by the ingestion layer, consumed by the estimators below.
struct PooledSample {
    std::string industry;
    std::pair<std::string, std::string> input_pair;
    std::vector<double> x1;
    std::vector<double> x2;
    std::vector<double> y;
    std::vector<std::pair<std::string, int>> provenance;  // (country, year) per row
    bool below_minimum = false;                           // fewer rows than the configured floor

    std::size_t rows() const { return y.size(); }
};

/// Covariance of the stacked [X1, X2, Y] columns (or any small variable set).
struct CovarianceSummary {
    Eigen::MatrixXd matrix;
    std::size_t sample_count = 0;  // 0 marks an analytic (population) covariance
};

enum class Unit { nats, bits };

struct PIDResult {
    double mi_joint = 0.0;
    double mi_x1 = 0.0;
    double mi_x2 = 0.0;
    double redundancy = 0.0;
    double unique_x1 = 0.0;
    double unique_x2 = 0.0;
    double synergy_raw = 0.0;
    double synergy_bias = 0.0;
    double synergy_corrected = 0.0;
    Unit unit = Unit::nats;
    int surrogates_used = 0;  // surviving shuffles behind synergy_bias
};

/// Relationships tighter than this many nats are treated as deterministic.
inline constexpr double kMiCapNats = 30.0;

/// Unbiased (n-1) sample covariance of the three columns.
CovarianceSummary covariance_matrix(const PooledSample& sample);

/// Same, for an arbitrary observations-by-variables matrix.
CovarianceSummary covariance_of(const Eigen::MatrixXd& columns);

/// I(X; Y) in nats from the covariance via the conditional-covariance
/// determinant ratio. Index sets select rows/columns of the covariance and
/// must be disjoint.
double gaussian_mutual_information(const CovarianceSummary& cov, const std::vector<int>& x_indices,
                                   const std::vector<int>& y_indices, double mi_cap = kMiCapNats);

/// Minimum-mutual-information decomposition over the fixed layout
/// [X1, X2, Y] = indices [0, 1, 2]. Bias fields are zero; synergy_corrected
/// equals synergy_raw.
PIDResult pid_mmi(const CovarianceSummary& cov);

/// Full estimate with shuffle bias correction: the X1 and X2 columns are
/// independently permuted (Y fixed) per surrogate, and the mean surrogate
/// synergy is subtracted from the raw score. Individual degenerate surrogates
/// are skipped; the call fails only if the original sample or every surrogate
/// is degenerate.
PIDResult synergy_score(const PooledSample& sample, int shuffles, std::uint64_t seed);

/// All information fields divided by ln 2. Fails if already in bits.
PIDResult to_bits(const PIDResult& result);

// ---------------------------------------------------------------------------
// Synthetic linear-Gaussian systems (test oracles and planted worlds)
// ---------------------------------------------------------------------------

enum class SynthKind {
    sum_with_noise,       // X1, X2 iid standard normal; Y = a1*X1 + a2*X2 + noise
    redundant_duplicate,  // X2 copies X1 exactly; Y = a1*X1 + a2*X2 + noise
    independent,          // X1, X2 standard normal; Y = noise only
    linear_map,           // coefficients (a1, a2, rho): corr(X1, X2) = rho
};

struct SynthSpec {
    SynthKind kind = SynthKind::sum_with_noise;
    std::vector<double> coefficients = {1.0, 1.0};
    double noise_variance = 1.0;
    std::size_t sample_count = 200;
    std::uint64_t seed = 0;
};

struct SynthSystem {
    PooledSample sample;
    CovarianceSummary analytic;  // exact population covariance of the generator
};

SynthSystem generate_synthetic_system(const SynthSpec& spec);

/// Flat JSON record of all fields (unit flag explicit).
std::string pid_to_json(const PIDResult& result);

/// Column names / values for delimited output, in a fixed order.
const std::vector<std::string>& pid_field_names();
std::vector<double> pid_field_values(const PIDResult& result);

}  // namespace synio::pid
