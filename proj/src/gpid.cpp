#include "synio/gpid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "synio/common.hpp"

namespace synio::pid {

namespace {

Eigen::MatrixXd columns_to_matrix(const PooledSample& sample) {
    if (sample.x1.size() != sample.y.size() || sample.x2.size() != sample.y.size())
        throw ValidationError("pooled sample columns have unequal length");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(sample.rows()), 3);
    for (std::size_t r = 0; r < sample.rows(); ++r) {
        m(static_cast<Eigen::Index>(r), 0) = sample.x1[r];
        m(static_cast<Eigen::Index>(r), 1) = sample.x2[r];
        m(static_cast<Eigen::Index>(r), 2) = sample.y[r];
    }
    return m;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
    return out;
}

}  // namespace

CovarianceSummary covariance_of(const Eigen::MatrixXd& columns) {
    if (columns.rows() < 2) throw ValidationError("covariance needs at least 2 rows");
    if (!columns.allFinite()) throw ValidationError("covariance input contains non-finite values");
    Eigen::RowVectorXd means = columns.colwise().mean();
    Eigen::MatrixXd centered = columns.rowwise() - means;
    CovarianceSummary cov;
    cov.matrix = (centered.transpose() * centered) / static_cast<double>(columns.rows() - 1);
    cov.sample_count = static_cast<std::size_t>(columns.rows());
    return cov;
}

CovarianceSummary covariance_matrix(const PooledSample& sample) {
    return covariance_of(columns_to_matrix(sample));
}

double gaussian_mutual_information(const CovarianceSummary& cov, const std::vector<int>& x_indices,
                                   const std::vector<int>& y_indices, double mi_cap) {
    if (x_indices.empty() || y_indices.empty())
        throw ValidationError("mutual information needs nonempty index sets");
    for (int i : x_indices)
        if (std::find(y_indices.begin(), y_indices.end(), i) != y_indices.end())
            throw ValidationError("mutual information index sets overlap");
    const Eigen::MatrixXd& m = cov.matrix;
    for (int i : x_indices)
        if (i < 0 || i >= m.rows()) throw ValidationError("mutual information index out of range");
    for (int i : y_indices)
        if (i < 0 || i >= m.rows()) throw ValidationError("mutual information index out of range");

    Eigen::MatrixXd sxx = submatrix(m, x_indices, x_indices);
    Eigen::MatrixXd syy = submatrix(m, y_indices, y_indices);
    Eigen::MatrixXd sxy = submatrix(m, x_indices, y_indices);

    double det_y = syy.determinant();
    if (!(det_y > 0.0)) throw DegenerateInputError("conditioning block (Y) of the covariance is singular");
    double det_x = sxx.determinant();
    if (!(det_x > 0.0)) throw DegenerateInputError("source block (X) of the covariance is singular");

    // Conditional covariance of X given Y.
    Eigen::MatrixXd cond = sxx - sxy * syy.llt().solve(sxy.transpose());
    double det_cond = cond.determinant();
    if (!(det_cond > 0.0))
        throw DeterministicRelationshipError("conditional covariance collapsed: variables deterministically related");

    double mi = 0.5 * std::log(det_x / det_cond);
    if (mi > mi_cap)
        throw DeterministicRelationshipError("mutual information exceeds cap: near-deterministic relationship");
    if (mi < 0.0) {
        if (mi < -1e-12) throw DegenerateInputError("mutual information computed negative beyond tolerance");
        mi = 0.0;
    }
    return mi;
}

PIDResult pid_mmi(const CovarianceSummary& cov) {
    if (cov.matrix.rows() != 3 || cov.matrix.cols() != 3)
        throw ValidationError("decomposition expects a 3x3 covariance over [X1, X2, Y]");
    PIDResult r;
    r.mi_x1 = gaussian_mutual_information(cov, {0}, {2});
    r.mi_x2 = gaussian_mutual_information(cov, {1}, {2});
    r.mi_joint = gaussian_mutual_information(cov, {0, 1}, {2});
    r.redundancy = std::min(r.mi_x1, r.mi_x2);
    r.unique_x1 = r.mi_x1 - r.redundancy;
    r.unique_x2 = r.mi_x2 - r.redundancy;
    r.synergy_raw = r.mi_joint - std::max(r.mi_x1, r.mi_x2);
    r.synergy_bias = 0.0;
    r.synergy_corrected = r.synergy_raw;
    r.unit = Unit::nats;
    return r;
}

PIDResult synergy_score(const PooledSample& sample, int shuffles, std::uint64_t seed) {
    if (shuffles < 1) throw ValidationError("synergy bias correction needs shuffles >= 1");
    Eigen::MatrixXd cols = columns_to_matrix(sample);
    PIDResult r = pid_mmi(covariance_of(cols));  // original-sample failures propagate

    std::size_t n = sample.rows();
    std::vector<std::size_t> perm1(n), perm2(n);
    Eigen::MatrixXd surrogate = cols;
    double bias_sum = 0.0;
    int used = 0;
    for (int s = 0; s < shuffles; ++s) {
        Rng rng(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(s)));
        std::iota(perm1.begin(), perm1.end(), std::size_t{0});
        std::iota(perm2.begin(), perm2.end(), std::size_t{0});
        shuffle_indices(perm1, rng);
        shuffle_indices(perm2, rng);
        for (std::size_t i = 0; i < n; ++i) {
            surrogate(static_cast<Eigen::Index>(i), 0) = cols(static_cast<Eigen::Index>(perm1[i]), 0);
            surrogate(static_cast<Eigen::Index>(i), 1) = cols(static_cast<Eigen::Index>(perm2[i]), 1);
        }
        try {
            bias_sum += pid_mmi(covariance_of(surrogate)).synergy_raw;
            ++used;
        } catch (const DegenerateInputError&) {
            // A pathological permutation; skip it.
        }
    }
    if (used == 0) throw DegenerateInputError("all shuffle surrogates were degenerate");
    r.synergy_bias = bias_sum / static_cast<double>(used);
    r.synergy_corrected = r.synergy_raw - r.synergy_bias;
    r.surrogates_used = used;
    return r;
}

PIDResult to_bits(const PIDResult& result) {
    if (result.unit == Unit::bits) throw ValidationError("result is already in bits");
    constexpr double ln2 = 0.69314718055994530942;
    PIDResult r = result;
    r.mi_joint /= ln2;
    r.mi_x1 /= ln2;
    r.mi_x2 /= ln2;
    r.redundancy /= ln2;
    r.unique_x1 /= ln2;
    r.unique_x2 /= ln2;
    r.synergy_raw /= ln2;
    r.synergy_bias /= ln2;
    r.synergy_corrected /= ln2;
    r.unit = Unit::bits;
    return r;
}

SynthSystem generate_synthetic_system(const SynthSpec& spec) {
    if (!(spec.noise_variance > 0.0)) throw ValidationError("synthetic system needs noise_variance > 0");
    if (spec.sample_count < 2) throw ValidationError("synthetic system needs sample_count >= 2");
    double a1 = spec.coefficients.size() > 0 ? spec.coefficients[0] : 0.0;
    double a2 = spec.coefficients.size() > 1 ? spec.coefficients[1] : 0.0;
    double rho = 0.0;
    if (spec.kind == SynthKind::linear_map) {
        if (spec.coefficients.size() < 3)
            throw ValidationError("linear_map needs coefficients (a1, a2, input correlation)");
        rho = spec.coefficients[2];
        if (!(std::fabs(rho) <= 1.0)) throw ValidationError("input correlation must lie in [-1, 1]");
    }

    SynthSystem out;
    out.sample.industry = "synthetic";
    out.sample.input_pair = {"x1", "x2"};
    out.sample.x1.resize(spec.sample_count);
    out.sample.x2.resize(spec.sample_count);
    out.sample.y.resize(spec.sample_count);

    Rng rng(spec.seed);
    double noise_sd = std::sqrt(spec.noise_variance);
    for (std::size_t i = 0; i < spec.sample_count; ++i) {
        double z1 = rng.next_normal();
        double z2 = rng.next_normal();
        double eps = rng.next_normal() * noise_sd;
        double x1 = z1, x2 = 0.0, y = 0.0;
        switch (spec.kind) {
            case SynthKind::sum_with_noise:
                x2 = z2;
                y = a1 * x1 + a2 * x2 + eps;
                break;
            case SynthKind::redundant_duplicate:
                x2 = x1;
                y = a1 * x1 + a2 * x2 + eps;
                break;
            case SynthKind::independent:
                x2 = z2;
                y = eps;
                break;
            case SynthKind::linear_map:
                x2 = rho * z1 + std::sqrt(1.0 - rho * rho) * z2;
                y = a1 * x1 + a2 * x2 + eps;
                break;
        }
        out.sample.x1[i] = x1;
        out.sample.x2[i] = x2;
        out.sample.y[i] = y;
    }

    Eigen::Matrix3d pop = Eigen::Matrix3d::Zero();
    switch (spec.kind) {
        case SynthKind::sum_with_noise:
            pop << 1, 0, a1, 0, 1, a2, a1, a2, a1 * a1 + a2 * a2 + spec.noise_variance;
            break;
        case SynthKind::redundant_duplicate: {
            double c = a1 + a2;
            pop << 1, 1, c, 1, 1, c, c, c, c * c + spec.noise_variance;
            break;
        }
        case SynthKind::independent:
            pop << 1, 0, 0, 0, 1, 0, 0, 0, spec.noise_variance;
            break;
        case SynthKind::linear_map: {
            double c1 = a1 + a2 * rho;
            double c2 = a1 * rho + a2;
            pop << 1, rho, c1, rho, 1, c2, c1, c2,
                a1 * a1 + a2 * a2 + 2 * a1 * a2 * rho + spec.noise_variance;
            break;
        }
    }
    out.analytic.matrix = pop;
    out.analytic.sample_count = 0;
    return out;
}

const std::vector<std::string>& pid_field_names() {
    static const std::vector<std::string> names = {
        "mi_joint",  "mi_x1",        "mi_x2",        "redundancy",        "unique_x1", "unique_x2",
        "synergy_raw", "synergy_bias", "synergy_corrected"};
    return names;
}

std::vector<double> pid_field_values(const PIDResult& r) {
    return {r.mi_joint,  r.mi_x1,        r.mi_x2,        r.redundancy,        r.unique_x1, r.unique_x2,
            r.synergy_raw, r.synergy_bias, r.synergy_corrected};
}

std::string pid_to_json(const PIDResult& r) {
    nlohmann::json j;
    const auto& names = pid_field_names();
    auto values = pid_field_values(r);
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
    j["unit"] = r.unit == Unit::nats ? "nats" : "bits";
    j["surrogates_used"] = r.surrogates_used;
    return j.dump();
}

}  // namespace synio::pid
